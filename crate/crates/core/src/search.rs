//! Cycle enumeration in small graphs, exact leave decomposition, and the
//! switch-driven searches built on them.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::state::{Bits, Frame, State};

/// A wanted cycle: its length and, optionally, its exact number of pure edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct Spec {
    pub len: usize,
    pub pure: Option<usize>,
}

impl Spec {
    pub fn any(len: usize) -> Spec {
        Spec { len, pure: None }
    }

    /// At most one pure edge; parity then pins the count.
    pub fn light(len: usize) -> Spec {
        Spec { len, pure: Some(len % 2) }
    }

    pub fn exact(len: usize, pure: usize) -> Spec {
        Spec { len, pure: Some(pure) }
    }

}

/// Outcome of a bounded exhaustive search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Exact<T> {
    Found(T),
    Impossible,
    Unknown,
}

struct Walker<'a> {
    g: &'a Bits,
    frame: &'a Frame,
    spec: Spec,
    path: Vec<u8>,
    used: u64,
    pure: usize,
    nodes: usize,
    limit: usize,
}

impl<'a> Walker<'a> {
    fn pure_ok_final(&self, extra: usize) -> bool {
        self.spec.pure.map_or(true, |p| self.pure + extra == p)
    }

    /// Extends the current path; `visit` returns true to stop.
    fn go(&mut self, rng: &mut Option<&mut ChaCha8Rng>, visit: &mut dyn FnMut(&[u8]) -> bool) -> Option<bool> {
        self.nodes += 1;
        if self.nodes > self.limit {
            return None;
        }
        let start = self.path[0] as usize;
        let last = *self.path.last().unwrap() as usize;
        let depth = self.path.len();
        if depth == self.spec.len {
            if self.g.has(last, start) {
                let e = self.frame.pure(last, start) as usize;
                if self.pure_ok_final(e) && visit(&self.path) {
                    return Some(true);
                }
            }
            return Some(false);
        }
        let remaining = self.spec.len - depth + 1;
        if let Some(p) = self.spec.pure {
            if self.pure > p || p - self.pure > remaining {
                return Some(false);
            }
        }
        let mut cand = self.g.adj[last] & !self.used;
        if depth + 1 == self.spec.len {
            cand &= self.g.adj[start];
        }
        let mut order: Vec<u8> = Vec::with_capacity(cand.count_ones() as usize);
        while cand != 0 {
            order.push(cand.trailing_zeros() as u8);
            cand &= cand - 1;
        }
        if let Some(r) = rng.as_deref_mut() {
            order.shuffle(r);
        }
        for y in order {
            let p = self.frame.pure(last, y as usize) as usize;
            self.path.push(y);
            self.used |= 1 << y;
            self.pure += p;
            let r = self.go(rng, visit);
            self.pure -= p;
            self.used &= !(1 << y);
            self.path.pop();
            match r {
                Some(false) => {}
                other => return other,
            }
        }
        Some(false)
    }
}

/// Enumerates cycles of the given spec that use the edge `x y`, in the
/// orientation starting `x, y`. Returns `None` when the node limit is hit.
pub(crate) fn cycles_through(
    g: &Bits,
    frame: &Frame,
    x: usize,
    y: usize,
    spec: Spec,
    limit: usize,
    rng: Option<&mut ChaCha8Rng>,
    visit: &mut dyn FnMut(&[u8]) -> bool,
) -> Option<bool> {
    if !g.has(x, y) || spec.len < 3 {
        return Some(false);
    }
    let mut w = Walker {
        g,
        frame,
        spec,
        path: vec![x as u8, y as u8],
        used: 1 << x | 1 << y,
        pure: frame.pure(x, y) as usize,
        nodes: 0,
        limit,
    };
    let mut rng = rng;
    let r = w.go(&mut rng, visit);
    NODES.with(|n| n.set(n.get() + w.nodes));
    r
}

thread_local! {
    static NODES: std::cell::Cell<usize> = const { std::cell::Cell::new(0) };
}

fn take_nodes() -> usize {
    NODES.with(|n| n.replace(0))
}

/// A random cycle of the spec through a random vertex, if one is found quickly.
pub(crate) fn find_cycle(g: &Bits, frame: &Frame, spec: Spec, rng: &mut ChaCha8Rng, limit: usize) -> Option<Vec<u8>> {
    let mut starts: Vec<usize> = (0..g.adj.len()).filter(|&v| g.degree(v) >= 2).collect();
    if starts.len() < spec.len {
        return None;
    }
    starts.shuffle(rng);
    let per = (limit / starts.len().max(1)).max(64);
    for &x in starts.iter().take(6) {
        let mut nb: Vec<usize> = bits_list(g.adj[x]);
        nb.shuffle(rng);
        let y = nb[0];
        let mut found = None;
        let mut visit = |c: &[u8]| {
            found = Some(c.to_vec());
            true
        };
        let _ = cycles_through(g, frame, x, y, spec, per, Some(rng), &mut visit);
        if found.is_some() {
            return found;
        }
    }
    None
}

pub(crate) fn bits_list(mut m: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(m.count_ones() as usize);
    while m != 0 {
        out.push(m.trailing_zeros() as usize);
        m &= m - 1;
    }
    out
}

/// Decides whether `g` splits into edge-disjoint cycles matching `specs`.
pub(crate) fn decompose_graph(g: &Bits, frame: &Frame, specs: &[Spec], limit: usize) -> Exact<Vec<Vec<u8>>> {
    let total: usize = specs.iter().map(|s| s.len).sum();
    if total != g.edge_count() || !g.is_even() {
        return Exact::Impossible;
    }
    let pure_need: Option<usize> = specs.iter().map(|s| s.pure).sum();
    if let Some(p) = pure_need {
        if p != g.pure_count(frame) {
            return Exact::Impossible;
        }
    }
    // each component must carry a sub-multiset summing to its size; cheap test
    // for the common case of few large targets
    let comps = g.components();
    if comps.len() > specs.len() {
        return Exact::Impossible;
    }
    let mut kinds: Vec<(Spec, usize)> = Vec::new();
    for s in specs {
        match kinds.iter_mut().find(|(k, _)| k == s) {
            Some(e) => e.1 += 1,
            None => kinds.push((*s, 1)),
        }
    }
    kinds.sort_by(|a, b| b.0.len.cmp(&a.0.len));
    let mut work = g.clone();
    let mut out = Vec::new();
    let mut budget = limit;
    take_nodes();
    match rec(&mut work, frame, &mut kinds, &mut out, &mut budget) {
        Some(true) => Exact::Found(out),
        Some(false) => Exact::Impossible,
        None => Exact::Unknown,
    }
}

fn rec(g: &mut Bits, frame: &Frame, kinds: &mut Vec<(Spec, usize)>, out: &mut Vec<Vec<u8>>, budget: &mut usize) -> Option<bool> {
    let sup = g.support();
    if sup == 0 {
        return Some(kinds.iter().all(|k| k.1 == 0));
    }
    // most constrained vertex: least degree
    let x = bits_list(sup).into_iter().min_by_key(|&v| g.degree(v)).unwrap();
    let y = g.adj[x].trailing_zeros() as usize;
    for ki in 0..kinds.len() {
        if kinds[ki].1 == 0 {
            continue;
        }
        let spec = kinds[ki].0;
        let mut found: Vec<Vec<u8>> = Vec::new();
        let snapshot = g.clone();
        let r = cycles_through(&snapshot, frame, x, y, spec, *budget, None, &mut |c: &[u8]| {
            // the first step is pinned to x -> y, so each cycle shows up once
            found.push(c.to_vec());
            false
        });
        let cost = take_nodes() + 1;
        if r.is_none() || *budget < cost {
            return None;
        }
        *budget -= cost;
        for c in found {
            for (a, b) in crate::state::cycle_edges(&c) {
                g.toggle(a, b);
            }
            kinds[ki].1 -= 1;
            out.push(c.clone());
            let r = rec(g, frame, kinds, out, budget);
            if r == Some(true) {
                return r;
            }
            out.pop();
            kinds[ki].1 += 1;
            for (a, b) in crate::state::cycle_edges(&c) {
                g.toggle(a, b);
            }
            r?;
        }
    }
    Some(false)
}

/// Draws a random switch that changes the leave. `pool` restricts alpha.
pub(crate) fn random_switch(st: &State, rng: &mut ChaCha8Rng, pool: u64) -> Option<crate::state::SwitchPlan> {
    let frame = st.frame;
    let cand = bits_list(pool & st.leave.support());
    if cand.is_empty() {
        return None;
    }
    for _ in 0..64 {
        let a = *cand.choose(rng).unwrap();
        let b = loop {
            let b = rng.gen_range(0..frame.n);
            if frame.twins(a, b) {
                break b;
            }
        };
        let d = st.switch_set(a, b);
        if d == 0 {
            continue;
        }
        let ds = bits_list(d);
        let x = *ds.choose(rng).unwrap();
        if let Some(p) = st.plan_switch(a, b, x) {
            return Some(p);
        }
    }
    None
}

/// Every distinct switch available from the current state (one origin per pair).
pub(crate) fn all_switches(st: &State, pool: u64) -> Vec<crate::state::SwitchPlan> {
    let frame = st.frame;
    let mut out = Vec::new();
    for a in bits_list(pool & st.leave.support()) {
        for b in 0..frame.n {
            if !frame.twins(a, b) || (b < a && st.leave.degree(b) > 0 && pool >> b & 1 == 1) {
                continue;
            }
            let mut d = st.switch_set(a, b);
            while d != 0 {
                let x = d.trailing_zeros() as usize;
                d &= d - 1;
                if let Some(p) = st.plan_switch(a, b, x) {
                    d &= !(1 << p.terminus);
                    out.push(p);
                }
            }
        }
    }
    out
}

fn has_twin_in(frame: &Frame) -> bool {
    frame.split >= 2 || frame.n - frame.split >= 2
}

/// Randomised switching until the leave splits into `specs`; the packing is
/// modified in place and the new cycles are appended on success.
///
/// Alternates exhaustive one-step lookahead with random moves, up to
/// `budget` switches.
pub(crate) fn reshape(st: &mut State, specs: &[Spec], rng: &mut ChaCha8Rng, budget: usize) -> bool {
    if let Exact::Found(cs) = decompose_graph(&st.leave, &st.frame, specs, 200_000) {
        for c in cs {
            st.push(c);
        }
        return true;
    }
    if !has_twin_in(&st.frame) {
        return false;
    }
    let all = if st.frame.n == 64 { u64::MAX } else { (1u64 << st.frame.n) - 1 };
    let comps_target = specs.len();
    for step in 0..budget {
        let plans = all_switches(st, all);
        if plans.is_empty() {
            return false;
        }
        let mut best: Vec<usize> = Vec::new();
        let mut best_score = usize::MAX;
        for (i, p) in plans.iter().enumerate() {
            let l = st.preview(p);
            let comps = l.components().len();
            if comps <= comps_target {
                if let Exact::Found(_) = decompose_graph(&l, &st.frame, specs, 20_000) {
                    st.apply(p);
                    if let Exact::Found(cs) = decompose_graph(&st.leave, &st.frame, specs, 200_000) {
                        for c in cs {
                            st.push(c);
                        }
                        return true;
                    }
                }
            }
            let score = comps.saturating_sub(comps_target) * 4 + excess(&l);
            if score < best_score {
                best_score = score;
                best.clear();
            }
            if score == best_score {
                best.push(i);
            }
        }
        let pick = if rng.gen_bool(0.5) || step % 7 == 6 { rng.gen_range(0..plans.len()) } else { *best.choose(rng).unwrap() };
        st.apply(&plans[pick]);
    }
    false
}

/// Sum over vertices of `(deg - 2) / 2`, the deficiency of a leave.
pub(crate) fn excess(g: &Bits) -> usize {
    g.adj.iter().map(|a| (a.count_ones() as usize).saturating_sub(2) / 2).sum()
}

/// Gives every length an exact pure-edge count so that the totals match the
/// frame. Switches never change a cycle's pure count, so a packing with the
/// wrong totals could never be completed.
pub(crate) fn assign_types(frame: &Frame, lens: &[usize], rng: &mut ChaCha8Rng) -> Option<Vec<Spec>> {
    let low = frame.split;
    let high = frame.n - frame.split;
    if low == 0 || !frame.high_self || frame.low_self {
        return Some(lens.iter().map(|&l| Spec::any(l)).collect());
    }
    // cross edges come in pairs through hole vertices: count hole visits
    let total: usize = lens.iter().sum();
    if total != frame.edge_count() || low * high % 2 == 1 {
        return None;
    }
    assign_visits(lens, low * high / 2, low, high, rng)
}

/// Spreads `visits_total` hole visits over cycles of the given lengths.
pub(crate) fn assign_visits(lens: &[usize], visits_total: usize, low: usize, high: usize, rng: &mut ChaCha8Rng) -> Option<Vec<Spec>> {
    let total: usize = lens.iter().sum();
    if total == 0 {
        return if visits_total == 0 { Some(Vec::new()) } else { None };
    }
    let bounds: Vec<(usize, usize)> = lens
        .iter()
        .map(|&l| {
            let lo = l.saturating_sub(high);
            let hi = (l / 2).min(low);
            (lo, hi)
        })
        .collect();
    if bounds.iter().any(|&(lo, hi)| lo > hi) {
        return None;
    }
    let lo_sum: usize = bounds.iter().map(|b| b.0).sum();
    let hi_sum: usize = bounds.iter().map(|b| b.1).sum();
    if visits_total < lo_sum || visits_total > hi_sum {
        return None;
    }
    let ratio = visits_total as f64 / total as f64;
    let mut v: Vec<usize> = lens
        .iter()
        .zip(&bounds)
        .map(|(&l, &(lo, hi))| {
            let x = l as f64 * ratio + rng.gen_range(-0.5..0.5);
            (x.round().max(0.0) as usize).clamp(lo, hi)
        })
        .collect();
    let mut sum: usize = v.iter().sum();
    let mut idx: Vec<usize> = (0..lens.len()).collect();
    while sum != visits_total {
        idx.shuffle(rng);
        let mut moved = false;
        for &i in &idx {
            if sum < visits_total && v[i] < bounds[i].1 {
                v[i] += 1;
                sum += 1;
                moved = true;
            } else if sum > visits_total && v[i] > bounds[i].0 {
                v[i] -= 1;
                sum -= 1;
                moved = true;
            }
            if sum == visits_total {
                break;
            }
        }
        if !moved {
            return None;
        }
    }
    Some(lens.iter().zip(v).map(|(&l, k)| Spec::exact(l, l - 2 * k)).collect())
}

/// Packs `specs` into the leave of `st`: greedy placement, then random
/// switches to expose missing cycles, finishing with an exact split.
pub(crate) fn fill(st: &mut State, specs: &[Spec], rng: &mut ChaCha8Rng, budget: usize) -> bool {
    fill_around(st, specs, rng, budget, 0)
}

/// As [`fill`], but the first `pinned` cycles are never rewritten.
pub(crate) fn fill_around(st: &mut State, specs: &[Spec], rng: &mut ChaCha8Rng, budget: usize, pinned: usize) -> bool {
    let mut remaining: Vec<Spec> = specs.to_vec();
    remaining.sort_by(|a, b| b.len.cmp(&a.len).then(b.pure.cmp(&a.pure)));
    let mut left = Vec::new();
    for s in remaining {
        match find_cycle(&st.leave, &st.frame, s, rng, 4000) {
            Some(c) => {
                st.push(c);
            }
            None => left.push(s),
        }
    }
    let all = if st.frame.n == 64 { u64::MAX } else { (1u64 << st.frame.n) - 1 };
    let mut steps = 0usize;
    while !left.is_empty() {
        if left.len() <= 4 {
            if let Exact::Found(cs) = decompose_graph(&st.leave, &st.frame, &left, 5_000) {
                for c in cs {
                    st.push(c);
                }
                return true;
            }
        }
        let mut progressed = false;
        let order: Vec<usize> = (0..left.len()).collect();
        for &i in order.iter() {
            if left.len() == 1 {
                break;
            }
            if let Some(c) = find_cycle(&st.leave, &st.frame, left[i], rng, 400) {
                st.push(c);
                left.remove(i);
                progressed = true;
                break;
            }
        }
        if progressed {
            continue;
        }
        if steps >= budget || !has_twin_in(&st.frame) {
            return false;
        }
        match random_switch(st, rng, all) {
            Some(p) if !p.touches_below(pinned) => st.apply(&p),
            Some(_) => {}
            None => return false,
        }
        steps += 1;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn triangle_decomposition_of_k7() {
        let f = Frame::complete(7);
        let st = State::new(f);
        match decompose_graph(&st.leave, &f, &vec![Spec::any(3); 7], 1_000_000) {
            Exact::Found(cs) => assert_eq!(cs.len(), 7),
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn k5_splits_and_rejects_overlong() {
        let f = Frame::complete(5);
        let st = State::new(f);
        assert!(matches!(decompose_graph(&st.leave, &f, &[Spec::any(5), Spec::any(5)], 100_000), Exact::Found(_)));
        assert_eq!(decompose_graph(&st.leave, &f, &[Spec::any(4), Spec::any(6)], 100_000), Exact::Impossible);
    }

    #[test]
    fn fill_small_host() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut st = State::new(Frame::host(5, 10));
        let specs: Vec<Spec> = std::iter::once(3).chain(std::iter::repeat(4).take(23)).map(Spec::any).collect();
        assert!(fill(&mut st, &specs, &mut rng, 20_000));
        assert!(st.is_consistent());
        assert_eq!(st.leave.edge_count(), 0);
    }
}

#[cfg(test)]
mod perf {
    use super::*;
    use rand::SeedableRng;
    use std::time::Instant;

    fn run(frame: Frame, specs: Vec<Spec>, seed: u64) -> (bool, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut st = State::new(frame);
        let t = Instant::now();
        let lens: Vec<usize> = specs.iter().map(|s| s.len).collect();
        let specs = assign_types(&frame, &lens, &mut rng).unwrap();
        let ok = fill(&mut st, &specs, &mut rng, 200_000);
        (ok && st.leave.edge_count() == 0, t.elapsed().as_secs_f64())
    }

    #[test]
    #[ignore]
    fn perf_fill() {
        let cases: Vec<(&str, Frame, Vec<usize>)> = vec![
            ("K15 3^35", Frame::complete(15), vec![3; 35]),
            ("K15 5^21", Frame::complete(15), vec![5; 21]),
            ("K15 15^7", Frame::complete(15), vec![15; 7]),
            ("K12,14 4^42", Frame::bipartite(12, 14), vec![4; 42]),
            ("K12,14 12^14", Frame::bipartite(12, 14), vec![12; 14]),
            ("host13,14 mix", Frame::host(13, 14), {
                let mut v = vec![13; 10]; v.extend(vec![3; 20]); v.extend(vec![4; 8]); v.extend(vec![5; 3]); v.push(6); v.extend(vec![10; 3]);
                v }),
            ("host13,14 3s", Frame::host(13, 14), { let mut v = vec![3; 87]; v.push(12); v }),
            ("host5,10 3,4^23", Frame::host(5, 10), { let mut v = vec![4; 23]; v.push(3); v }),
        ];
        for (name, f, lens) in cases {
            let total: usize = lens.iter().sum();
            for seed in 0..3 {
                let (ok, t) = run(f, lens.iter().map(|&l| Spec::any(l)).collect(), seed);
                println!("{name} sum={total} edges={} seed={seed} ok={ok} t={t:.3}", f.edge_count());
            }
        }
    }
}
