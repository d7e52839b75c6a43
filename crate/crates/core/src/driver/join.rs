//! Merging refinement entries back into the entries they refine.

use crate::base::pieces::{tag, Tagged};
use crate::error::{Error, Result};
use crate::merging::{general_joining_in, MergeRequest};
use crate::model::{Cycle, HostGraph};
use crate::search::{decompose_graph, Exact, Spec};
use crate::state::{cycle_pure, State};

/// Index of a tagged cycle of length `len`, skipping `used`.
fn tagged_of(tg: &Tagged, len: usize, used: &[usize]) -> Option<usize> {
    tg.with(tag::SMALL).into_iter().find(|i| tg.st.cycles[*i].len() == len && !used.contains(i))
}

/// One merge: which group loses two parts, and the partner length `h`.
struct Step {
    case: u8,
    group: usize,
    h: usize,
}

fn next_step(groups: &[Vec<usize>], z: &[usize]) -> Option<Step> {
    let multi: Vec<usize> = (0..groups.len()).filter(|&i| groups[i].len() >= 2).collect();
    match multi.as_slice() {
        [] => None,
        [i] => {
            let q = z.len() - 1;
            let j = if *i != q { q } else { q - 1 };
            Some(Step { case: 1, group: *i, h: z[j] })
        }
        _ => {
            let (i, r) = groups
                .iter()
                .enumerate()
                .flat_map(|(i, g)| g.iter().map(move |&x| (i, x)))
                .max_by_key(|&(i, x)| (x, i))
                .unwrap();
            let j = *multi.iter().find(|&&j| j != i).unwrap();
            Some(Step { case: 2, group: j, h: r })
        }
    }
}

/// Merges until every group is a single entry. `groups[i]` refines `z[i]`
/// and `z` is nondecreasing; the tagged cycles realise the groups.
pub(crate) fn join_in(tg: &mut Tagged, groups: &mut [Vec<usize>], z: &[usize], seed: u64, tr: &mut Vec<String>) -> Result<()> {
    let frame = tg.st.frame;
    let (u, w) = (frame.split, frame.n - frame.split);
    let mut round = 0u64;
    while let Some(step) = next_step(groups, z) {
        round += 1;
        let g = &mut groups[step.group];
        g.sort_unstable();
        let (m1, m2) = (g[0], g[1]);
        let mut picked = Vec::new();
        for len in [step.h, m1, m2] {
            let i = tagged_of(tg, len, &picked).ok_or_else(|| Error::InternalInvariantBreach(format!("no tagged {}-cycle left", len)))?;
            picked.push(i);
        }
        let mu: usize = picked.iter().map(|&i| cycle_pure(&frame, &tg.st.cycles[i])).sum();
        let req = MergeRequest { h: step.h, m1, m2, mu };
        req.check(u, w).map_err(|e| Error::InternalInvariantBreach(format!("merge outside its hypotheses: {}", e)))?;
        tr.push(format!("join case {}: h={} m1={} m2={} mu={}", step.case, step.h, m1, m2, mu));
        let mut order = picked.clone();
        order.sort_unstable_by(|a, b| b.cmp(a));
        for i in order {
            tg.remove(i);
        }
        general_joining_in(&mut tg.st, req, seed ^ round, tr)?;
        let specs = [Spec::light(step.h), Spec::light(m1 + m2)];
        let Exact::Found(cs) = decompose_graph(&tg.st.leave, &frame, &specs, 400_000) else {
            return Err(Error::InternalInvariantBreach("merged leave does not split as promised".into()));
        };
        for c in cs {
            tg.push(c, tag::SMALL)?;
        }
        g.drain(..2);
        g.push(m1 + m2);
    }
    Ok(())
}

/// Packing-level form: `tagged[i]` marks the refinement cycles of
/// `cycles`, `groups[i]` the refinement of `z[i]`. Returns the cycles of the
/// joined decomposition and the merge trace.
pub fn join_em_all(host: &HostGraph, cycles: &[Cycle], tagged: &[bool], z: &[usize], groups: &[Vec<usize>], seed: u64) -> Result<(Vec<Cycle>, Vec<String>)> {
    if tagged.len() != cycles.len() || groups.len() != z.len() {
        return Err(Error::HypothesisViolated("tags or groups do not line up".into()));
    }
    if z.windows(2).any(|p| p[0] > p[1]) {
        return Err(Error::HypothesisViolated("Z must be nondecreasing".into()));
    }
    let (u, w) = (host.u(), host.w());
    if let [.., x, y] = z {
        if *y > u.min(w).min(3 * x) {
            return Err(Error::HypothesisViolated("largest entry of Z exceeds min(u, w, 3 * next)".into()));
        }
    }
    let mut st = State::new(host.frame());
    let mut tags = Vec::new();
    for (c, &t) in cycles.iter().zip(tagged) {
        if !c.is_valid_in(host) || !st.try_push(c.ids(host)) {
            return Err(Error::InvalidPacking(format!("{} does not fit", c)));
        }
        if t && cycle_pure(&st.frame, st.cycles.last().unwrap()) > 1 {
            return Err(Error::HypothesisViolated(format!("tagged cycle {} has two pure edges", c)));
        }
        tags.push(if t { tag::SMALL } else { 0 });
    }
    let mut want: Vec<usize> = groups.iter().flatten().copied().collect();
    let mut have: Vec<usize> = (0..cycles.len()).filter(|&i| tagged[i]).map(|i| cycles[i].len()).collect();
    want.sort_unstable();
    have.sort_unstable();
    if want != have {
        return Err(Error::HypothesisViolated("tagged lengths differ from the refinement".into()));
    }
    let mut tg = Tagged { st, tags };
    let mut groups = groups.to_vec();
    let mut tr = Vec::new();
    join_in(&mut tg, &mut groups, z, seed, &mut tr)?;
    Ok((tg.st.cycles.iter().map(|c| Cycle::from_ids(host, c)).collect(), tr))
}
