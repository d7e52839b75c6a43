//! Base decompositions: the host split into a complete graph part and
//! complete bipartite parts, glued so that every cycle of the small lengths
//! `3^a 4^b 5^c 6^d k` carries at most one pure edge.

pub mod pieces;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::merging::rearrange_deg4_in;
use crate::model::{Cycle, HostGraph, build_host, verify_decomposition, Certificate};
use crate::search::{assign_visits, decompose_graph, fill, Exact, Spec};
use crate::state::{cycle_pure, Frame};
use crate::subsolvers::{self, Cycles, SolverBudget};

pub use pieces::companion_length;
use pieces::{efloor, tag, Tagged};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaseVariant {
    /// One hole vertex joins the complete graph on `W`; few odd lengths.
    FewCrossOdds,
    /// Many odd lengths and a long entry `m >= 7`.
    ManyLarge,
    /// Many odd lengths, all entries of the refinement short.
    ManySmall,
}

/// Parameters of a base decomposition: the list `N` kept whole, the small
/// counts, and the `(m, t, k)` triple tying one entry of `N` to `K_{U,W}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseRequest {
    pub n: Vec<usize>,
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub d: usize,
    pub t: usize,
    pub k: usize,
    pub m: usize,
    pub variant: BaseVariant,
}

fn binom2(x: usize) -> usize {
    x * x.saturating_sub(1) / 2
}

impl BaseRequest {
    /// Small lengths `3^a 4^b 5^c 6^d (k)` in nondecreasing order.
    pub fn small_lengths(&self) -> Vec<usize> {
        let mut v = Vec::new();
        for (len, count) in [(3, self.a), (4, self.b), (5, self.c), (6, self.d)] {
            v.extend(std::iter::repeat(len).take(count));
        }
        if self.k > 0 {
            v.push(self.k);
        }
        v.sort_unstable();
        v
    }

    /// All lengths of the finished decomposition.
    pub fn lengths(&self) -> Vec<usize> {
        let mut v = self.n.clone();
        v.extend(self.small_lengths());
        v.sort_unstable();
        v
    }

    /// Checks the variant's hypotheses exactly.
    pub fn check(&self, u: usize, w: usize) -> Result<()> {
        let bad = |s: &str| Err(Error::HypothesisViolated(s.into()));
        let BaseRequest { a, b, c, d, t, k, m, .. } = *self;
        let sum_n: usize = self.n.iter().sum();
        let in_n = |x: usize| self.n.contains(&x);
        let lmax = u.min(w);
        if self.n.iter().any(|&l| l < 3 || l > lmax) {
            return bad("an entry of N lies outside 3..=min(u, w)");
        }
        if u % 2 == 0 || w % 2 == 1 || t % 2 == 1 {
            return bad("u must be odd, w and t even");
        }
        if k != companion_length(t) && self.variant != BaseVariant::ManySmall {
            return bad("k must be the companion length of t");
        }
        match self.variant {
            BaseVariant::FewCrossOdds => {
                if u < 5 || w < 8 || t + 2 > w {
                    return bad("need u >= 5, w >= 8 and t <= w - 2");
                }
                if sum_n + a + c != binom2(w + 1) + t {
                    return bad("sum(N) - t + a + c must equal C(w+1, 2)");
                }
                if 2 * a + 4 * b + 4 * c + 6 * d + k + t != (u - 1) * w {
                    return bad("2a + 4b + 4c + 6d + k + t must equal (u-1)w");
                }
                if u == 5 && d > 0 {
                    return bad("d must be 0 when u = 5");
                }
                if t > 0 && !(in_n(m) && m >= t + 2) {
                    return bad("t > 0 needs an entry m >= t + 2 in N");
                }
                if t == 0 && m != 0 {
                    return bad("m must be 0 when t = 0");
                }
                let wide = a + c >= 6 && a + 2 * c <= w && b >= 1;
                let three = a + c == 3 && (m, t) != (w, 2) && (a, c, t, u, w) != (0, 3, 6, 9, 8);
                if !wide && !three {
                    return bad("a + c must be 3, or at least 6 with a + 2c <= w and b >= 1");
                }
            }
            BaseVariant::ManyLarge => {
                if u < 7 || w < 8 || t < 2 || t + 2 > w {
                    return bad("need u >= 7, w >= 8 and t in 2..=w-2");
                }
                if sum_n + a + c != binom2(w) + t {
                    return bad("sum(N) - t + a + c must equal C(w, 2)");
                }
                if 2 * a + 4 * b + 4 * c + 6 * d + k + t != u * w {
                    return bad("2a + 4b + 4c + 6d + k + t must equal uw");
                }
                if a < w / 2 + 1 || b < 1 || c > 1 {
                    return bad("need a >= w/2 + 1, b >= 1 and c <= 1");
                }
                if !in_n(m) || m < (t + 2).max(7) {
                    return bad("need an entry m >= max(t + 2, 7) in N");
                }
                if 2 * (a + 2 * c) > 3 * w + 6 && u * w < (a + c) * efloor(m) {
                    return bad("uw < (a + c) efloor(m)");
                }
                if (m, t) == (w, 2) || (a >= w / 2 + 4 && ((m, t) == (w - 1, 2) || (m, t) == (w, 4))) {
                    return bad("(m, t) is one of the excluded pairs");
                }
            }
            BaseVariant::ManySmall => {
                if u < 5 || w < 10 || ![0, 2, 4].contains(&t) || k != 0 {
                    return bad("need u >= 5, w >= 10, t in {0, 2, 4} and k = 0");
                }
                if sum_n + a + c != binom2(w) + t {
                    return bad("sum(N) - t + a + c must equal C(w, 2)");
                }
                if 2 * a + 4 * b + 4 * c + 6 * d + t != u * w {
                    return bad("2a + 4b + 4c + 6d + t must equal uw");
                }
                if u == 5 && d > 0 {
                    return bad("d must be 0 when u = 5");
                }
                let many3 = 2 * a >= w && 2 * (a + c) >= w + 6;
                let many5 = 4 * c >= 3 * w && 4 * (a + c) >= 3 * w + 16;
                if !many3 && !many5 {
                    return bad("too few 3- and 5-cycles");
                }
                if b + d <= 2 && t > 0 && !(a <= 4 || (w / 2..=w / 2 + 3).contains(&a)) {
                    return bad("a outside the allowed set when b + d <= 2");
                }
                if t > 0 && !(in_n(m) && [(4, 2), (5, 2), (6, 2), (6, 4)].contains(&(m, t))) {
                    return bad("(m, t) must be (4,2), (5,2), (6,2) or (6,4)");
                }
                if t == 0 && m != 0 {
                    return bad("m must be 0 when t = 0");
                }
            }
        }
        Ok(())
    }
}

/// A verified base decomposition. `tagged[i]` marks the cycles of the
/// small lengths; each has at most one pure edge.
#[derive(Debug, Clone)]
pub struct BaseDecomposition {
    pub host: HostGraph,
    pub cycles: Vec<Cycle>,
    pub tagged: Vec<bool>,
    pub trace: Vec<String>,
    /// The explicit construction failed and a typed search produced it.
    pub used_fallback: bool,
}

impl BaseDecomposition {
    pub fn certificate(&self, lengths: &[usize]) -> Certificate {
        verify_decomposition(&self.host, &self.cycles, lengths)
    }

    pub fn tagged_cycles(&self) -> impl Iterator<Item = &Cycle> {
        self.cycles.iter().zip(&self.tagged).filter(|(_, &t)| t).map(|(c, _)| c)
    }
}

/// Builds an `(N, 3^a, 4^b, 5^c, 6^d, k)`-decomposition of `K_{u+w} - K_u`.
pub fn base_decompose(u: usize, w: usize, req: &BaseRequest, seed: u64) -> Result<BaseDecomposition> {
    let host = build_host(u, w)?;
    let (tg, trace, used_fallback) = build_tagged(u, w, req, seed)?;
    let cycles: Vec<Cycle> = tg.st.cycles.iter().map(|c| Cycle::from_ids(&host, c)).collect();
    let tagged = tg.tags.iter().map(|&t| t & tag::SMALL != 0).collect();
    let out = BaseDecomposition { host, cycles, tagged, trace, used_fallback };
    if !out.certificate(&req.lengths()).passed() {
        return Err(Error::InternalInvariantBreach("base decomposition failed verification".into()));
    }
    Ok(out)
}

/// Explicit construction with a typed-search fallback; returns the tagged
/// state, the trace and whether the fallback ran.
pub(crate) fn build_tagged(u: usize, w: usize, req: &BaseRequest, seed: u64) -> Result<(Tagged, Vec<String>, bool)> {
    req.check(u, w)?;
    let mut tr = Vec::new();
    let built = match req.variant {
        BaseVariant::FewCrossOdds => few_cross_odds(u, w, req, seed, &mut tr),
        BaseVariant::ManyLarge => many_large(u, w, req, seed, &mut tr),
        BaseVariant::ManySmall => many_small(u, w, req, seed, &mut tr),
    };
    let explicit = built.and_then(|tg| {
        audit(&tg, req)?;
        Ok(tg)
    });
    match explicit {
        Ok(tg) => Ok((tg, tr, false)),
        Err(e @ Error::HypothesisViolated(_)) => Err(e),
        Err(e) => {
            tr.push(format!("explicit construction stopped ({}); typed search", e));
            let tg = typed_fallback(u, w, req, seed)?;
            audit(&tg, req)?;
            Ok((tg, tr, true))
        }
    }
}

/// Lengths, leave and tags of a finished build.
fn audit(tg: &Tagged, req: &BaseRequest) -> Result<()> {
    if tg.st.leave.edge_count() != 0 || !tg.st.is_consistent() {
        return Err(Error::InternalInvariantBreach("build left edges uncovered".into()));
    }
    let mut lens = tg.st.length_multiset();
    lens.sort_unstable();
    if lens != req.lengths() {
        return Err(Error::InternalInvariantBreach(format!("built lengths {:?} differ from the request", lens)));
    }
    let mut small: Vec<usize> = Vec::new();
    for (i, c) in tg.st.cycles.iter().enumerate() {
        if tg.tags[i] & tag::SMALL != 0 {
            if cycle_pure(&tg.st.frame, c) > 1 {
                return Err(Error::InternalInvariantBreach("a tagged cycle has two pure edges".into()));
            }
            small.push(c.len());
        }
    }
    small.sort_unstable();
    if small != req.small_lengths() {
        return Err(Error::InternalInvariantBreach(format!("tagged lengths {:?} differ from the small list", small)));
    }
    Ok(())
}

fn typed_fallback(u: usize, w: usize, req: &BaseRequest, seed: u64) -> Result<Tagged> {
    let frame = Frame::host(u, w);
    let small = req.small_lengths();
    let small_visits: usize = small.iter().map(|&l| (l - l % 2) / 2).sum();
    let visits = (u * w / 2).checked_sub(small_visits).ok_or_else(|| Error::Infeasible("small cycles need too many hole visits".into()))?;
    for attempt in 0..16u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xba5e ^ attempt.wrapping_mul(0x9e37_79b9));
        let Some(mut specs) = assign_visits(&req.n, visits, u, w, &mut rng) else {
            return Err(Error::SearchExhausted("no visit split for N".into()));
        };
        specs.extend(small.iter().map(|&l| Spec::exact(l, l % 2)));
        let mut st = crate::state::State::new(frame);
        if !(fill(&mut st, &specs, &mut rng, 40_000) && st.leave.edge_count() == 0) {
            continue;
        }
        let mut tg = Tagged { tags: vec![0; st.cycles.len()], st };
        let mut want = small.clone();
        for i in 0..tg.tags.len() {
            let c = &tg.st.cycles[i];
            if let Some(p) = want.iter().position(|&l| l == c.len()) {
                if cycle_pure(&frame, c) == c.len() % 2 {
                    want.swap_remove(p);
                    tg.tags[i] = tag::SMALL;
                }
            }
        }
        if want.is_empty() {
            return Ok(tg);
        }
    }
    Err(Error::SearchExhausted("typed search for the base decomposition ran out".into()))
}

// ---------------------------------------------------------------------------
// shared assembly

/// Maps local ids of a piece on `K_{U',W}` (plus the extra vertex) to host ids.
struct PieceMap {
    umap: Vec<usize>,
    u: usize,
    w: usize,
    alpha: Option<usize>,
}

impl PieceMap {
    fn get(&self, i: usize) -> usize {
        let p = self.umap.len();
        if i < p {
            self.umap[i]
        } else if i < p + self.w {
            self.u + i - p
        } else {
            self.alpha.expect("piece used the extra vertex")
        }
    }

    fn cycle(&self, c: &[usize]) -> Vec<u8> {
        c.iter().map(|&v| self.get(v) as u8).collect()
    }
}

fn remove_one(list: &[usize], x: usize) -> Vec<usize> {
    let mut v = list.to_vec();
    if x > 0 {
        if let Some(p) = v.iter().position(|&y| y == x) {
            v.remove(p);
        }
    }
    v
}

/// Pulls cycles of the wanted lengths out of a decomposition; the rest stay.
fn take_lengths(cycles: &mut Cycles, wanted: &[usize]) -> Result<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    for &l in wanted {
        if l == 0 {
            out.push(Vec::new());
            continue;
        }
        let p = cycles.iter().position(|c| c.len() == l).ok_or_else(|| Error::InternalInvariantBreach(format!("no {}-cycle to reserve", l)))?;
        out.push(cycles.swap_remove(p));
    }
    Ok(out)
}

fn j_of(b: usize, b2: usize) -> usize {
    if b >= b2 {
        0
    } else {
        (b2 - b).div_ceil(3)
    }
}

/// The third stage: `(3^a3, 4^b3, 5^c3, 6^d3, k, m)` on `K_{U3,W}` plus the
/// closing cycle. Returns the assembled cycles in local ids.
#[allow(clippy::too_many_arguments)]
fn third_stage(p3: usize, w: usize, a3: usize, b3: usize, c3: usize, d3: usize, k: usize, m: usize, t: usize, closing: &[usize], budget: &SolverBudget, tr: &mut Vec<String>) -> Result<pieces::Assembled> {
    if 2 * a3 + 4 * b3 + 4 * c3 + 6 * d3 + k + t != p3 * w {
        return Err(Error::InternalInvariantBreach("third-stage edge count".into()));
    }
    if t <= 4 {
        tr.push("third stage: bipartite graph plus one cycle".into());
        pieces::bipartite_and_one_cycle(p3, w, a3, b3, c3, d3, m, t, closing, budget)
    } else {
        tr.push("third stage: two-path leave and rosette".into());
        let mut m46 = vec![4; b3];
        m46.extend(std::iter::repeat(6).take(d3));
        let pl = pieces::leave_many_path_decomp(p3, w, 2 * a3 + 4 * c3, t, &m46, budget)?;
        let ros = pieces::rosette_from_paths(&pl.first, &pl.second, a3, c3)?;
        pieces::paths_and_cycle_to_decomp(p3, w, &pl.cycles, &ros, a3, c3, m, t, closing)
    }
}

/// Pushes the third stage; the `m`-cycle stays untagged.
fn push_third(tg: &mut Tagged, map: &PieceMap, asm: &pieces::Assembled) -> Result<()> {
    for (i, c) in asm.cycles.iter().enumerate() {
        let t = if asm.m_cycle == Some(i) { 0 } else { tag::SMALL | tag::STAGE3 };
        tg.push(map.cycle(c), t)?;
    }
    Ok(())
}

/// Offers `3j` 4-cycles (second-stage ones first, then one third-stage one)
/// and converts them into `2j` 6-cycles.
fn convert_fours(tg: &mut Tagged, second: &[usize], j: usize, rng: &mut ChaCha8Rng, tr: &mut Vec<String>) -> Result<()> {
    if j == 0 {
        return Ok(());
    }
    let fours2: Vec<usize> = tg.with(tag::SMALL | tag::OFFER).into_iter().filter(|&i| tg.st.cycles[i].len() == 4).collect();
    let mut pick: Vec<usize> = fours2.iter().copied().take(3 * j).collect();
    let mut s = second.to_vec();
    if pick.len() < 3 * j {
        let third = (0..tg.tags.len())
            .find(|&i| tg.tags[i] & tag::STAGE3 != 0 && tg.st.cycles[i].len() == 4)
            .ok_or_else(|| Error::InternalInvariantBreach("no third-stage 4-cycle to offer".into()))?;
        pick.push(third);
        s.extend(tg.st.cycles[third].iter().map(|&v| v as usize).filter(|&v| !tg.st.frame.high(v)));
    }
    if pick.len() != 3 * j {
        return Err(Error::InternalInvariantBreach("too few 4-cycles to convert".into()));
    }
    // drop the offer mark from the ones not used
    for i in 0..tg.tags.len() {
        if !pick.contains(&i) {
            tg.tags[i] &= !tag::OFFER;
        }
    }
    for &i in &pick {
        tg.tags[i] |= tag::OFFER;
    }
    if s.len() < 4 {
        let third_any: Vec<usize> = (0..tg.st.frame.split).filter(|v| !s.contains(v)).collect();
        s.extend(third_any.into_iter().take(4 - s.len()));
    }
    let s4 = [s[0], s[1], s[2], s[3]];
    tr.push(format!("converting {} 4-cycles into {} 6-cycles", 3 * j, 2 * j));
    pieces::fours_to_sixes_in(tg, s4, j, tag::SMALL, rng)?;
    for t in tg.tags.iter_mut() {
        *t &= !tag::OFFER;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// few odd lengths crossing the hole

fn few_cross_odds(u: usize, w: usize, req: &BaseRequest, seed: u64, tr: &mut Vec<String>) -> Result<Tagged> {
    let BaseRequest { a, b, c, d, t, k, m, .. } = *req;
    let budget = SolverBudget { max_restarts: 32, max_moves_per_restart: 40_000, ..SolverBudget::seeded(seed) };
    let rows: &[(usize, usize)] = if a + c == 3 {
        &[(a, c)]
    } else if t > 0 {
        if a % 2 == 0 {
            &[(0, 1), (2, 0)]
        } else {
            &[(1, 0)]
        }
    } else if a % 2 == 0 {
        &[(0, 0)]
    } else {
        &[(3, 0), (1, 2)]
    };
    let (a3, c3) = *rows.iter().find(|&&(x, y)| x <= a && y <= c).ok_or_else(|| Error::InternalInvariantBreach("no (a3, c3) row fits".into()))?;
    let (a2, c2) = (a - a3, c - c3);
    tr.push(format!("split (a3, c3) = ({}, {})", a3, c3));
    let star = a2 + c2;
    let dagger = m + a3 + c3 - t;
    // first stage: K_{W + U1}, W at 0..w and the hole vertex at w
    let mut lens = remove_one(&req.n, m);
    lens.extend([star, dagger].into_iter().filter(|&l| l > 0));
    let mut p1 = subsolvers::solve_complete(w + 1, &lens, &budget)?;
    let mut res = take_lengths(&mut p1, &[star, dagger])?;
    let avoid: Vec<usize> = if t == 0 { res.concat() } else { res[0].clone() };
    let nu = (0..=w).rev().find(|v| !avoid.contains(v)).ok_or_else(|| Error::InternalInvariantBreach("no vertex off the reserved cycles".into()))?;
    let swap = |v: usize| if v == nu { w } else if v == w { nu } else { v };
    for cy in p1.iter_mut().chain(res.iter_mut()) {
        for v in cy.iter_mut() {
            *v = swap(*v);
        }
    }
    let (c_star, c_dagger) = (res[0].clone(), res[1].clone());
    let mut tg = Tagged::new(Frame::host(u, w));
    let top = PieceMap { umap: vec![], u, w, alpha: Some(0) };
    for cy in &p1 {
        tg.push(top.cycle(cy), 0)?;
    }
    // second stage: U2 = {1, 2}
    let (u2, b2) = if star > 0 {
        let b2 = (2 * w - 2 * a2 - 4 * c2) / 4;
        let packed = pieces::pack_3s5s(w, a2, c2, &[c_star])?;
        let map = PieceMap { umap: vec![1, 2], u, w, alpha: None };
        for cy in &packed.cycles {
            tg.push(map.cycle(cy), tag::SMALL)?;
        }
        for cy in &packed.leave_fours {
            tg.push(map.cycle(cy), tag::SMALL | tag::OFFER)?;
        }
        (2, b2)
    } else {
        (0, 0)
    };
    let j = j_of(b, b2);
    let p3 = u - 1 - u2;
    let (b3, d3) = (b + 3 * j - b2, d.checked_sub(2 * j).ok_or_else(|| Error::InternalInvariantBreach("d < 2j".into()))?);
    if 2 * a3 + 4 * b3 + 4 * c3 + 6 * d3 + k + t != p3 * w {
        return Err(Error::InternalInvariantBreach("third-stage identity fails".into()));
    }
    let asm = third_stage(p3, w, a3, b3, c3, d3, k, m, t, &c_dagger, &budget, tr)?;
    let map = PieceMap { umap: (1 + u2..u).collect(), u, w, alpha: Some(0) };
    push_third(&mut tg, &map, &asm)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x46);
    convert_fours(&mut tg, &(1..1 + u2).collect::<Vec<_>>(), j, &mut rng, tr)?;
    Ok(tg)
}

// ---------------------------------------------------------------------------
// many odd lengths, one long entry

fn many_large(u: usize, w: usize, req: &BaseRequest, seed: u64, tr: &mut Vec<String>) -> Result<Tagged> {
    let BaseRequest { a, b, c, d, t, k, m, .. } = *req;
    let budget = SolverBudget { max_restarts: 32, max_moves_per_restart: 40_000, ..SolverBudget::seeded(seed) };
    let rows: &[(usize, usize)] = if (a - w / 2) % 2 == 0 { &[(0, 1), (2, 0), (2, 1), (4, 0)] } else { &[(1, 0), (1, 1), (3, 0)] };
    let (a3, c3) = *rows
        .iter()
        .find(|&&(x, y)| x + w / 2 <= a && y <= c && ((a - w / 2 - x) + 2 * (c - y)) % w != 2)
        .ok_or_else(|| Error::InternalInvariantBreach("no (a3, c3) row fits".into()))?;
    let (a2, c2) = (a - w / 2 - a3, c - c3);
    tr.push(format!("split (a3, c3) = ({}, {})", a3, c3));
    let (n, b2, wl) = if a2 + c2 > 0 { pieces::choose_lengths(a2, c2, w)? } else { (0, 0, vec![]) };
    let dagger = m + a3 + c3 - t;
    let mut lens = remove_one(&req.n, m);
    lens.push(dagger);
    lens.extend(&wl);
    let (mut p0, factor) = subsolvers::solve_complete_minus_i(w, &lens, &budget)?;
    let mut wanted = vec![dagger];
    wanted.extend(&wl);
    let res = take_lengths(&mut p0, &wanted)?;
    let mut tg = Tagged::new(Frame::host(u, w));
    let top = PieceMap { umap: vec![], u, w, alpha: None };
    for cy in &p0 {
        tg.push(top.cycle(cy), 0)?;
    }
    for &(x, y) in &factor {
        tg.push(vec![0, (u + x) as u8, (u + y) as u8], tag::SMALL)?;
    }
    let u2: Vec<usize> = (1..1 + 2 * n).collect();
    if n > 0 {
        let packed = pieces::pack_3s5s(w, a2, c2, &res[1..])?;
        let map = PieceMap { umap: u2.clone(), u, w, alpha: None };
        for cy in &packed.cycles {
            tg.push(map.cycle(cy), tag::SMALL)?;
        }
        for cy in &packed.leave_fours {
            // the leave copy of K_{2,2b} sits on the first pair
            tg.push(map.cycle(cy), tag::SMALL | tag::OFFER)?;
        }
    }
    let j = j_of(b, b2);
    let p3 = u - 1 - 2 * n;
    let (b3, d3) = (b + 3 * j - b2, d.checked_sub(2 * j).ok_or_else(|| Error::InternalInvariantBreach("d < 2j".into()))?);
    let asm = third_stage(p3, w, a3, b3, c3, d3, k, m, t, &res[0], &budget, tr)?;
    let map = PieceMap { umap: (1 + 2 * n..u).collect(), u, w, alpha: None };
    push_third(&mut tg, &map, &asm)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x47);
    convert_fours(&mut tg, &u2[..u2.len().min(2)], j, &mut rng, tr)?;
    Ok(tg)
}

// ---------------------------------------------------------------------------
// many odd lengths, short refinement

fn many_small(u: usize, w: usize, req: &BaseRequest, seed: u64, tr: &mut Vec<String>) -> Result<Tagged> {
    let BaseRequest { a, b, c, d, t, m, .. } = *req;
    let budget = SolverBudget { max_restarts: 32, max_moves_per_restart: 40_000, ..SolverBudget::seeded(seed) };
    let w2 = w % 4 == 2;
    let (a1, c1, n1) = if 2 * a >= w {
        (w / 2, 0, 1)
    } else if !w2 {
        (0, 3 * w / 4, 3)
    } else if a >= 1 {
        (1, (3 * w - 2) / 4, 3)
    } else {
        (0, (3 * w - 2) / 4, 3)
    };
    let neg = || Error::InternalInvariantBreach("negative split parameter".into());
    let (ap, cp, b3, d3) = if a == 0 && w2 {
        if d % 2 == 0 {
            (1, c.checked_sub(c1 + 2).ok_or_else(neg)?, b + 1, d)
        } else {
            (0, c.checked_sub(c1 + 1).ok_or_else(neg)?, b + 2, d - 1)
        }
    } else {
        (a - a1, c.checked_sub(c1).ok_or_else(neg)?, b, d)
    };
    let rho = 2 * ap + 4 * cp + t;
    let rest = u - n1;
    let n2 = if (u, n1) == (5, 3) || rho <= 8 {
        0
    } else if rest >= 4 && rho <= (rest - 4) * w + 8 {
        (0..=rest).step_by(2).find(|&x| x * w <= rho && rho - x * w <= 2 * w + 8 && rho - x * w >= 10).ok_or_else(|| Error::InternalInvariantBreach("no size for U2".into()))?
    } else {
        rest.saturating_sub(4)
    };
    let rho3 = rho - n2 * w;
    let a2 = efloor(ap).min(n2 * w / 2);
    let c2 = (n2 * w - 2 * a2) / 4;
    let (a3, c3) = (ap - a2, cp.checked_sub(c2).ok_or_else(neg)?);
    let p3 = u - n1 - n2;
    tr.push(format!("hole split {} + {} + {}, rho3 = {}", n1, n2, p3, rho3));
    let bounds1 = rho3 <= 2 * w && !((rho3 + 4 == 2 * w || rho3 + 2 == 2 * w) && t == 2) && !(rho3 == 2 * w && t != 0);
    let single = p3 == 2 || bounds1;
    let plan2 = if single { None } else { Some(pieces::small_t_leave2_plan(p3, w, a3, b3, c3, d3, m, t)?) };
    let dag: Vec<usize> = match &plan2 {
        None => vec![a3 + c3 + m - t],
        Some(p) => vec![p.l1, p.l2],
    };
    let star = if 2 * a >= w { 0 } else { w.div_ceil(4) };
    let (n, wl) = if n2 > 0 {
        let (n, bb, wl) = pieces::choose_lengths(a2, c2, w)?;
        if bb != 0 || 2 * n != n2 {
            return Err(Error::InternalInvariantBreach("second-stage lengths leave a remainder".into()));
        }
        (n, wl)
    } else {
        (0, vec![])
    };
    let mut lens = remove_one(&req.n, m);
    let mut wanted = vec![star];
    wanted.extend(&wl);
    wanted.extend(&dag);
    lens.extend(wanted.iter().copied().filter(|&l| l > 0));
    let (mut p0, factor) = subsolvers::solve_complete_minus_i(w, &lens, &budget)?;
    let res = take_lengths(&mut p0, &wanted)?;
    let c_star = res[0].clone();
    let c_list = &res[1..1 + n];
    let c_dag = &res[1 + n..];
    let mut tg = Tagged::new(Frame::host(u, w));
    let top = PieceMap { umap: vec![], u, w, alpha: None };
    for cy in &p0 {
        tg.push(top.cycle(cy), 0)?;
    }
    // second stage
    if n > 0 {
        let packed = pieces::pack_3s5s(w, a2, c2, c_list)?;
        let map = PieceMap { umap: (n1..n1 + n2).collect(), u, w, alpha: None };
        for cy in packed.cycles.iter().chain(&packed.leave_fours) {
            tg.push(map.cycle(cy), tag::SMALL)?;
        }
    }
    // third stage
    let map3 = PieceMap { umap: (n1 + n2..u).collect(), u, w, alpha: None };
    let third_start = tg.tags.len();
    let mut leave3: Cycles = Vec::new();
    match &plan2 {
        None => {
            let asm = pieces::small_t_leave(p3, w, a3, b3, c3, d3, m, t, &c_dag[0], &budget)?;
            push_third(&mut tg, &map3, &asm)?;
        }
        Some(_) => {
            let r = pieces::small_t_leave2(p3, w, a3, b3, c3, d3, m, t, &c_dag[0], &c_dag[1], &budget)?;
            tr.push(format!("two-pair builder case {}", r.plan.case));
            // small_t_leave2 works in K_{p3+w} - K_{p3}; same local ids as a piece
            for (i, cy) in r.cycles.iter().enumerate() {
                let tt = if r.m_cycle == Some(i) { 0 } else { tag::SMALL | tag::STAGE3 };
                tg.push(map3.cycle(cy), tt)?;
            }
            leave3 = r.leave.iter().map(|cy| cy.iter().map(|&v| map3.get(v)).collect()).collect();
        }
    }
    // which leave shape we are in
    let case = if a == 0 && w2 {
        if d % 2 == 0 {
            1
        } else {
            2
        }
    } else if !leave3.is_empty() {
        if leave3.iter().any(|c| c.len() == 5) {
            4
        } else {
            3
        }
    } else {
        5
    };
    if case == 1 || case == 2 {
        let pick = |tg: &Tagged, len: usize, not: &[usize]| {
            (third_start..tg.tags.len()).find(|&i| tg.st.cycles[i].len() == len && tg.tags[i] & tag::STAGE3 != 0 && !not.contains(&i))
        };
        let first = pick(&tg, if case == 1 { 3 } else { 4 }, &[]).ok_or_else(|| Error::InternalInvariantBreach("no cycle to lift out".into()))?;
        let second = pick(&tg, 4, &[first]).ok_or_else(|| Error::InternalInvariantBreach("no 4-cycle to lift out".into()))?;
        let (hi, lo) = (first.max(second), first.min(second));
        for i in [hi, lo] {
            leave3.push(tg.remove(i).0.iter().map(|&v| v as usize).collect());
        }
    }
    // first stage on U1
    if 2 * a >= w {
        for &(x, y) in &factor {
            tg.push(vec![0, (u + x) as u8, (u + y) as u8], tag::SMALL)?;
        }
    } else {
        let mut g: Vec<(usize, usize)> = factor.clone();
        for i in 0..c_star.len() {
            g.push((c_star[i], c_star[(i + 1) % c_star.len()]));
        }
        let ab = if a == 0 && w2 {
            // meet the third-stage leave at a vertex of degree 2 there
            let mut deg = vec![0usize; w];
            for cy in &leave3 {
                for &v in cy {
                    if v >= u {
                        deg[v - u] += 1;
                    }
                }
            }
            let x = (0..w).filter(|&x| deg[x] == 1).chain((0..w).filter(|&x| deg[x] > 1)).next().ok_or_else(|| Error::InternalInvariantBreach("third-stage leave misses W".into()))?;
            *factor.iter().find(|&&(p, q)| p == x || q == x).unwrap()
        } else {
            factor[0]
        };
        let five = pieces::one_factor_5cycles(w, &g, ab)?;
        let map = |v: usize| if v < 3 { v } else { u + v - 3 };
        for cy in &five.cycles {
            tg.push(cy.iter().map(|&v| map(v) as u8).collect(), tag::SMALL)?;
        }
        // the leftover triangle joins the packing only when a >= 1
        if let (Some(l), true) = (five.leave, a >= 1) {
            tg.push(l.iter().map(|&v| map(v) as u8).collect(), tag::SMALL)?;
        }
    }
    if case <= 4 {
        let (mm, mp, mu) = match case {
            1 => (5, 5, 2),
            2 | 3 => (5, 6, 1),
            _ => (3, 6, 1),
        };
        tr.push(format!("leave case {}: rearranging into ({}, {})", case, mm, mp));
        if tg.st.leave.edge_count() != mm + mp {
            return Err(Error::InternalInvariantBreach(format!("leave has {} edges, expected {}", tg.st.leave.edge_count(), mm + mp)));
        }
        rearrange_deg4_in(&mut tg.st, mm, mp, mu, seed, tr)?;
        let specs = [Spec::light(mm), Spec::light(mp)];
        match decompose_graph(&tg.st.leave, &tg.st.frame, &specs, 400_000) {
            Exact::Found(cs) => {
                for cy in cs {
                    tg.push(cy, tag::SMALL)?;
                }
            }
            _ => return Err(Error::InternalInvariantBreach("rearranged leave does not split".into())),
        }
    }
    Ok(tg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn few_request() -> BaseRequest {
        // u = 9, w = 10: C(11,2) = 55. (u-1)w = 80.
        // a = 6, c = 0, b = 17, d = 0, t = 0 -> 12 + 68 = 80; sum N = 49.
        BaseRequest { n: vec![7, 7, 7, 7, 7, 7, 7], a: 6, b: 17, c: 0, d: 0, t: 0, k: 0, m: 0, variant: BaseVariant::FewCrossOdds }
    }

    #[test]
    fn request_predicates() {
        assert!(few_request().check(9, 10).is_ok());
        let mut r = few_request();
        r.b = 16;
        assert!(r.check(9, 10).is_err());
    }

    fn run(u: usize, w: usize, r: &BaseRequest) {
        let out = base_decompose(u, w, r, 7).unwrap_or_else(|e| panic!("{:?}: {}", r, e));
        assert!(!out.used_fallback, "{:?}", out.trace);
        assert!(out.certificate(&r.lengths()).passed());
        let pure: Vec<usize> = out.tagged_cycles().map(|c| c.pure_count()).collect();
        assert_eq!(pure.len(), r.small_lengths().len());
        assert!(pure.iter().all(|&p| p <= 1));
    }

    #[test]
    fn few_cross_odds_at_9_10() {
        run(9, 10, &few_request());
    }

    #[test]
    fn many_small_two_pair_short_of_fours() {
        // two-pair case 7 with b = 0, d odd: pair two holds only 3j - 1 4-cycles
        let r = BaseRequest { n: vec![3, 3, 3], a: 36, b: 0, c: 0, d: 3, t: 0, k: 0, m: 0, variant: BaseVariant::ManySmall };
        r.check(9, 10).unwrap();
        run(9, 10, &r);
    }

    #[test]
    fn many_large_at_9_10() {
        // C(10,2) = 45, uw = 90. a = 6, c = 0, t = 2, m = 9.
        // sum N = 45 + 2 - 6 = 41 = 9 + 8 + 8 + 8 + 8. 12 + 4b + 6d + 2 = 90 -> b = 19.
        let r = BaseRequest { n: vec![8, 8, 8, 8, 9], a: 6, b: 19, c: 0, d: 0, t: 2, k: 0, m: 9, variant: BaseVariant::ManyLarge };
        r.check(9, 10).unwrap();
        run(9, 10, &r);
    }

    #[test]
    fn many_small_at_9_10() {
        // a = 5 >= w/2, a + c >= 8: c = 3. t = 0. sum N = 45 - 8 = 37.
        // 10 + 12 + 4b + 6d = 90 -> 4b + 6d = 68: b = 17.
        let r = BaseRequest { n: vec![9, 9, 9, 5, 5], a: 5, b: 17, c: 3, d: 0, t: 0, k: 0, m: 0, variant: BaseVariant::ManySmall };
        r.check(9, 10).unwrap();
        run(9, 10, &r);
    }
}

#[cfg(test)]
mod stress {
    use super::*;
    use crate::generate::random_base_request;

    #[test]
    #[ignore]
    fn sweep() {
        let mut fails = 0;
        let mut fallbacks = 0;
        for (u, w) in [(9, 10), (11, 12), (7, 10), (5, 10), (13, 14), (9, 12)] {
            for v in [BaseVariant::FewCrossOdds, BaseVariant::ManyLarge, BaseVariant::ManySmall] {
                let mut found = 0;
                for seed in 0..200u64 {
                    let Some(r) = random_base_request(u, w, v, seed, 2000) else { continue };
                    found += 1;
                    let t = std::time::Instant::now();
                    match base_decompose(u, w, &r, seed) {
                        Ok(out) => {
                            if out.used_fallback {
                                fallbacks += 1;
                                println!("FALLBACK ({},{}) {:?} {:?} {:?}", u, w, v, r, out.trace.last());
                            }
                        }
                        Err(e) => {
                            fails += 1;
                            println!("FAIL ({},{}) {:?} {:?}: {}", u, w, v, r, e);
                        }
                    }
                    let el = t.elapsed().as_secs_f64();
                    if el > 2.0 {
                        println!("SLOW {:.1}s ({},{}) {:?}", el, u, w, r);
                    }
                    if found >= 30 {
                        break;
                    }
                }
                println!("({},{}) {:?}: {} requests", u, w, v, found);
            }
        }
        println!("fails {} fallbacks {}", fails, fallbacks);
        assert_eq!(fails, 0);
    }
}
