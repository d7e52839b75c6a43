//! Lists whose odd entries sum to at most `w(w-2)/2`: one hole vertex joins
//! `K_W`, the rest of the hole is handled by `K_{U',W}`, and when the even
//! entries do not fill `K_{U',W}` exactly, two cycles are stitched across.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::lists::LengthList;
use crate::base::pieces::{leave_path_decomp, PathLeave};
use crate::error::{Error, Result};
use crate::search::{decompose_graph, Exact, Spec};
use crate::state::{Frame, State};
use crate::subsolvers::{self, SolverBudget};

/// How the even entries were split between the two parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FewOddSplit {
    /// Entries decomposing `K_{W + one hole vertex}` (plus the stitched ones).
    pub m0: Vec<usize>,
    /// Entries decomposing `K_{U',W}`.
    pub m1: Vec<usize>,
    pub t: usize,
}

/// Greedy split of the even entries: the largest that still fit into
/// `(u-1)w`, drawn from the well-behaved prefix.
pub fn few_odd_split(u: usize, w: usize, lengths: &[usize]) -> FewOddSplit {
    let all = LengthList::new(lengths.to_vec());
    let evens: Vec<usize> = all.entries().iter().copied().filter(|x| x % 2 == 0).collect();
    let mut s = evens.len();
    while s >= 2 && evens[s - 1] > 3 * evens[s - 2] {
        s -= 1;
    }
    let cap = (u - 1) * w;
    let mut pool: Vec<usize> = evens[..s].to_vec();
    let mut m1 = Vec::new();
    let mut sum = 0;
    while let Some(p) = pool.iter().rposition(|&x| sum + x <= cap) {
        sum += pool[p];
        m1.push(pool.remove(p));
    }
    m1.sort_unstable();
    let m0 = all.without(&m1).entries().to_vec();
    FewOddSplit { m0, m1, t: cap - sum }
}

fn hyp(s: &str) -> Error {
    Error::HypothesisViolated(s.into())
}

/// The stitched pair: lengths taken out of each side and the four path lengths.
struct Stitch {
    m0x: Vec<usize>,
    m1x: Vec<usize>,
    /// Path on the bipartite side that pairs with `p`.
    b: usize,
    b_dag: usize,
    p: usize,
    p_dag: usize,
}

fn choose_stitch(split: &FewOddSplit) -> Result<Stitch> {
    let t = split.t;
    let r = || split.m1.first().copied().ok_or_else(|| hyp("bipartite side is empty"));
    if let Some(&q) = split.m0.iter().rev().find(|&&q| q >= t + 3) {
        let r = r()?;
        return Ok(Stitch { m0x: vec![q], m1x: vec![r], b: t + 2, b_dag: r - 2, p: q - t - 2, p_dag: 2 });
    }
    if t >= 4 {
        if split.m0.iter().filter(|&&x| x == t + 2).count() < 2 {
            return Err(hyp("need two entries equal to t + 2"));
        }
        return Ok(Stitch { m0x: vec![t + 2, t + 2], m1x: vec![], b: 2, b_dag: t - 2, p: t, p_dag: 4 });
    }
    if split.m0.iter().filter(|&&x| x == 4).count() < 2 {
        return Err(hyp("need two 4s"));
    }
    let r = r()?;
    Ok(Stitch { m0x: vec![4, 4], m1x: vec![r], b: 4, b_dag: r - 2, p: 4, p_dag: 2 })
}

/// Bipartite side with a two-path leave: returns the packing and the `b`-
/// and `b_dag`-paths, local ids.
fn bipartite_side(u: usize, w: usize, m1: &[usize], st: &Stitch, budget: &SolverBudget) -> Result<(PathLeave, Vec<usize>, Vec<usize>)> {
    let mut lens = LengthList::new(m1.to_vec()).without(&st.m1x).entries().to_vec();
    if st.b >= 4 && st.b_dag >= 4 {
        lens.push(st.b);
        lens.push(st.b_dag);
        let n = lens.len();
        let pl = leave_path_decomp(u - 1, w, &lens, n - 2, Some(n - 1), budget)?;
        let (b, bd) = (pl.first.clone(), pl.second.clone());
        return Ok((pl, b, bd));
    }
    // one of the paths has length 2: split a single cycle
    lens.push(st.b + st.b_dag);
    let n = lens.len();
    let pl = leave_path_decomp(u - 1, w, &lens, n - 1, None, budget)?;
    let (long, two) = (pl.first.clone(), pl.second.clone());
    if st.b == 2 {
        Ok((pl, two, long))
    } else {
        Ok((pl, long, two))
    }
}

/// Maps `K_{w+1}` vertices to host ids so that the removed cycle's two arcs
/// meet the bipartite paths only at their ends.
fn place_cycle(u: usize, w: usize, cyc: &[usize], p: usize, ends: (usize, usize), avoid_p: &[usize], avoid_pd: &[usize], mid: Option<usize>, rng: &mut ChaCha8Rng) -> Option<Vec<usize>> {
    let n = w + 1;
    let mut sigma = vec![usize::MAX; n];
    // host targets: W then the joining hole vertex 0
    let mut free: Vec<usize> = (u..u + w).chain([0]).collect();
    let put = |sigma: &mut Vec<usize>, free: &mut Vec<usize>, v: usize, target: usize| -> bool {
        match free.iter().position(|&x| x == target) {
            Some(i) if sigma[v] == usize::MAX => {
                free.swap_remove(i);
                sigma[v] = target;
                true
            }
            _ => false,
        }
    };
    let len = cyc.len();
    if !put(&mut sigma, &mut free, cyc[0], ends.0) || !put(&mut sigma, &mut free, cyc[p], ends.1) {
        return None;
    }
    if let Some(z) = mid {
        if !put(&mut sigma, &mut free, cyc[2], z) {
            return None;
        }
    }
    free.shuffle(rng);
    // inner vertices of P avoid the b-path; prefer spending the b_dag-path's vertices there
    for &v in &cyc[1..p] {
        if sigma[v] != usize::MAX {
            continue;
        }
        let pick = free
            .iter()
            .position(|x| !avoid_p.contains(x) && avoid_pd.contains(x))
            .or_else(|| free.iter().position(|x| !avoid_p.contains(x)))?;
        sigma[v] = free.swap_remove(pick);
    }
    for &v in &cyc[p + 1..len] {
        let pick = free.iter().position(|x| !avoid_pd.contains(x))?;
        sigma[v] = free.swap_remove(pick);
    }
    for v in 0..n {
        if sigma[v] == usize::MAX {
            sigma[v] = free.pop()?;
        }
    }
    Some(sigma)
}

/// Decomposition of `K_{u+w} - K_u` for lists with few odd entries, as host
/// ids. Lengths must be at most `min(u, w)`.
pub(crate) fn few_odd_general_in(u: usize, w: usize, lengths: &[usize], budget: &SolverBudget, tr: &mut Vec<String>) -> Result<State> {
    let all = LengthList::new(lengths.to_vec());
    if u < 5 || u % 2 == 0 || w < 4 || w % 2 == 1 {
        return Err(hyp("few-odd route needs u >= 5 odd and w >= 4 even"));
    }
    if all.min().map_or(true, |x| x < 3) || all.max().unwrap() > u.min(w) {
        return Err(hyp("entries must lie in 3..=min(u, w)"));
    }
    if 2 * all.odd_sum() > w * (w - 2) {
        return Err(hyp("odd entries sum to more than w(w-2)/2"));
    }
    let split = few_odd_split(u, w, lengths);
    tr.push(format!("few-odd split: M0 = {:?}, M1 = {:?}, t = {}", split.m0, split.m1, split.t));
    let frame = Frame::host(u, w);
    let mut st = State::new(frame);
    let bip = |i: usize| if i < u - 1 { i + 1 } else { u + i - (u - 1) };
    let push_bip = |st: &mut State, c: &[usize]| -> Result<()> {
        let ids: Vec<u8> = c.iter().map(|&v| bip(v) as u8).collect();
        if !st.try_push(ids) {
            return Err(Error::InternalInvariantBreach("bipartite cycle overlaps".into()));
        }
        Ok(())
    };
    if split.t == 0 {
        let p0 = subsolvers::solve_complete(w + 1, &split.m0, budget)?;
        let p1 = subsolvers::solve_bipartite(u - 1, w, &split.m1, budget)?;
        let joined = |i: usize| if i < w { u + i } else { 0 };
        for c in &p0 {
            if !st.try_push(c.iter().map(|&v| joined(v) as u8).collect()) {
                return Err(Error::InternalInvariantBreach("complete-graph cycle overlaps".into()));
            }
        }
        for c in &p1 {
            push_bip(&mut st, c)?;
        }
        tr.push("few-odd: direct union".into());
        return Ok(st);
    }
    let sti = choose_stitch(&split)?;
    tr.push(format!("few-odd: stitch {:?} + {:?} with t = {}", sti.m0x, sti.m1x, split.t));
    let (pl, b_path, bd_path) = bipartite_side(u, w, &split.m1, &sti, budget)?;
    for c in &pl.cycles {
        push_bip(&mut st, c)?;
    }
    let b_host: Vec<usize> = b_path.iter().map(|&v| bip(v)).collect();
    let bd_host: Vec<usize> = bd_path.iter().map(|&v| bip(v)).collect();
    let ends = (b_host[0], *b_host.last().unwrap());
    let ends_d = (bd_host[0], *bd_host.last().unwrap());
    if !(ends == ends_d || ends == (ends_d.1, ends_d.0)) {
        return Err(Error::InternalInvariantBreach("the two paths do not share their ends".into()));
    }
    let outer = |p: &[usize]| -> Vec<usize> { p.iter().copied().filter(|&v| v >= u && v != ends.0 && v != ends.1).collect() };
    let (avoid_p, avoid_pd) = (outer(&b_host), outer(&bd_host));
    let mid = if sti.m0x == [4, 4] {
        match avoid_p.as_slice() {
            [z] => Some(*z),
            _ => return Err(Error::InternalInvariantBreach("4-path should meet W in three vertices".into())),
        }
    } else {
        None
    };
    let mut m0_lens = LengthList::new(split.m0.clone()).without(&sti.m0x).entries().to_vec();
    let arc = sti.p + sti.p_dag;
    m0_lens.push(arc);
    let mut want: Vec<Spec> = sti.m0x.iter().chain(&sti.m1x).map(|&l| Spec::any(l)).collect();
    want.sort();
    for attempt in 0..budget.max_restarts.max(1) {
        let sub = SolverBudget { seed: budget.seed ^ (attempt as u64 + 1).wrapping_mul(0x5851_f42d), ..*budget };
        let mut p0 = subsolvers::solve_complete(w + 1, &m0_lens, &sub)?;
        let pos = p0.iter().position(|c| c.len() == arc).expect("solver keeps the lengths");
        let cyc = p0.swap_remove(pos);
        let mut rng = ChaCha8Rng::seed_from_u64(sub.seed);
        for _ in 0..64 {
            let Some(sigma) = place_cycle(u, w, &cyc, sti.p, ends, &avoid_p, &avoid_pd, mid, &mut rng) else { continue };
            let mut trial = st.clone();
            let ok = p0.iter().all(|c| trial.try_push(c.iter().map(|&v| sigma[v] as u8).collect()));
            if !ok {
                return Err(Error::InternalInvariantBreach("relabelled cycles overlap".into()));
            }
            if let Exact::Found(cs) = decompose_graph(&trial.leave, &frame, &want, 200_000) {
                for c in cs {
                    trial.push(c);
                }
                tr.push(format!("few-odd: stitched after {} relabellings", attempt + 1));
                return Ok(trial);
            }
        }
    }
    Err(Error::SearchExhausted("no relabelling stitches the two sides".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_fills_bipartite_side() {
        // (5,10): 95 edges, K_{4,10} has 40
        let m: Vec<usize> = [vec![4; 15], vec![5; 7]].concat();
        let s = few_odd_split(5, 10, &m);
        assert_eq!(s.t, 0);
        assert_eq!(s.m1, vec![4; 10]);
    }

    #[test]
    fn stitched_route_builds() {
        // K_{6,10} takes 6^9 and one 4, leaving a gap of 2
        let m: Vec<usize> = [vec![6; 9], vec![4; 6], vec![7; 3], vec![5; 2], vec![3; 2]].concat();
        assert_eq!(m.iter().sum::<usize>(), 115);
        let s = few_odd_split(7, 10, &m);
        assert_eq!(s.t, 2, "{:?}", s);
        let mut tr = Vec::new();
        let st = few_odd_general_in(7, 10, &m, &SolverBudget::seeded(3), &mut tr).unwrap();
        assert!(st.is_consistent());
        assert_eq!(st.leave.edge_count(), 0);
        let mut want = m.clone();
        want.sort_unstable();
        assert_eq!(st.length_multiset(), want);
    }
}
