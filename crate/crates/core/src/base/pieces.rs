//! Builders on a complete bipartite graph `K_{U',W}` together with a few
//! cycles on `W`.
//!
//! Local ids: `0..p` is `U'`, `p..p+q` is `W`, and `p+q` is the extra
//! vertex a closing cycle may pass through. Cycles on `W` passed in are
//! given by positions `0..q` in `W`, with `q` standing for the extra vertex.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::search::{bits_list, decompose_graph, random_switch, Exact, Spec};
use crate::state::{cycle_edges, Bits, Frame, State};
use crate::subsolvers::{self, Cycles, SolverBudget};
use crate::switching::equalise_in;

/// Smallest even integer that is at least `x / y`.
pub(crate) fn eceil_div(x: usize, y: usize) -> usize {
    let c = x.div_ceil(y);
    c + c % 2
}

/// Greatest even integer at most `x`.
pub(crate) fn efloor(x: usize) -> usize {
    x - x % 2
}

/// The extra even length that keeps the longest path cycle in proportion:
/// `eceil((t+2)/3)` for `t >= 12`, else 0.
pub fn companion_length(t: usize) -> usize {
    if t >= 12 {
        eceil_div(t + 2, 3)
    } else {
        0
    }
}

fn hyp(msg: impl Into<String>) -> Error {
    Error::HypothesisViolated(msg.into())
}

fn infeasible(msg: impl Into<String>) -> Error {
    Error::Infeasible(msg.into())
}

fn mismatch(msg: impl Into<String>) -> Error {
    Error::StructureMismatch(msg.into())
}

pub(crate) fn to_u8(c: &[usize]) -> Vec<u8> {
    c.iter().map(|&v| v as u8).collect()
}

pub(crate) fn to_usize(c: &[u8]) -> Vec<usize> {
    c.iter().map(|&v| v as usize).collect()
}

pub(crate) fn state_of(frame: Frame, cycles: &Cycles) -> Result<State> {
    let mut st = State::new(frame);
    for c in cycles {
        if !st.try_push(to_u8(c)) {
            return Err(Error::InternalInvariantBreach("cycles overlap".into()));
        }
    }
    Ok(st)
}

fn cycles_of(st: &State) -> Cycles {
    st.cycles.iter().map(|c| to_usize(c)).collect()
}

/// Checks that `cycles` are simple and partition exactly the edge set `want`.
pub(crate) fn partition_ok(n: usize, cycles: &Cycles, want: &Bits) -> bool {
    let mut cover = Bits::empty(n);
    for c in cycles {
        if c.len() < 3 || c.iter().any(|&v| v >= n) {
            return false;
        }
        let mut seen = 0u64;
        for &v in c {
            if seen >> v & 1 == 1 {
                return false;
            }
            seen |= 1 << v;
        }
        for (x, y) in cycle_edges(&to_u8(c)) {
            if cover.has(x, y) || !want.has(x, y) {
                return false;
            }
            cover.toggle(x, y);
        }
    }
    cover.edge_count() == want.edge_count()
}

/// Edge set of `K_{p,q}` in local ids, plus the given cycles on `W`.
fn bipartite_plus(p: usize, q: usize, extra: &[&[usize]]) -> Bits {
    let mut g = Bits::empty(p + q + 1);
    for x in 0..p {
        for y in p..p + q {
            g.set(x, y, true);
        }
    }
    for c in extra {
        for i in 0..c.len() {
            let (x, y) = (c[i] + p, c[(i + 1) % c.len()] + p);
            g.set(x, y, true);
        }
    }
    g
}

fn simple_cycle_on(c: &[usize], bound: usize) -> bool {
    let mut s = c.to_vec();
    s.sort_unstable();
    s.dedup();
    s.len() == c.len() && c.iter().all(|&v| v <= bound)
}

// ---------------------------------------------------------------------------
// two-path leaves

/// A packing of `K_{p,q}` whose leave is the union of two paths with the
/// same end vertices, both in `W`.
#[derive(Debug, Clone)]
pub struct PathLeave {
    pub cycles: Cycles,
    pub first: Vec<usize>,
    pub second: Vec<usize>,
}

fn path_list_check(p: usize, q: usize, lengths: &[usize]) -> Result<Vec<usize>> {
    if p == 0 || q == 0 || p % 2 == 1 || q % 2 == 1 {
        return Err(infeasible("both sides must be nonempty and even"));
    }
    if lengths.len() < 2 || lengths.iter().any(|&l| l < 4 || l % 2 == 1) {
        return Err(infeasible("lengths must be even and at least 4, two or more of them"));
    }
    let mut s = lengths.to_vec();
    s.sort_unstable();
    if s.iter().sum::<usize>() != p * q {
        return Err(infeasible("lengths must sum to |U'||W|"));
    }
    let k = s.len();
    if s[k - 1] > 3 * s[k - 2] {
        return Err(infeasible("longest length exceeds three times the next"));
    }
    let cap = if p == q { 2 * p } else { 2 * p.min(q) + 2 };
    if s[k - 2] + s[k - 1] > cap {
        return Err(infeasible("two longest lengths too long for the smaller side"));
    }
    Ok(s)
}

/// Packing of `K_{p,q}` with all `lengths` but `lengths[i]` (and
/// `lengths[j]`), whose leave splits into an `m_i`-path and an `m_j`-path
/// (or, without `j`, an `(m_i - 2)`-path and a 2-path) ending in `W`.
pub fn leave_path_decomp(p: usize, q: usize, lengths: &[usize], i: usize, j: Option<usize>, budget: &SolverBudget) -> Result<PathLeave> {
    path_list_check(p, q, lengths)?;
    if i >= lengths.len() || j.is_some_and(|j| j >= lengths.len() || j == i) {
        return Err(hyp("path indices out of range or equal"));
    }
    let frame = Frame::bipartite(p, q);
    let all = subsolvers::solve_bipartite(p, q, lengths, budget)?;
    let mut st = state_of(frame, &all)?;
    let take = |st: &mut State, len: usize| -> Result<Vec<usize>> {
        let pos = st.cycles.iter().position(|c| c.len() == len).ok_or_else(|| Error::InternalInvariantBreach("length missing".into()))?;
        Ok(to_usize(&st.remove(pos)))
    };
    let ci = take(&mut st, lengths[i])?;
    let Some(j) = j else {
        // the removed cycle splits at two outer vertices two steps apart
        let s = ci.iter().position(|&v| v >= p).expect("bipartite cycle meets W");
        let mut c = ci.clone();
        c.rotate_left(s);
        let two = vec![c[0], c[1], c[2]];
        let mut rest: Vec<usize> = c[2..].to_vec();
        rest.push(c[0]);
        return Ok(PathLeave { cycles: cycles_of(&st), first: rest, second: two });
    };
    take(&mut st, lengths[j])?;
    let mut rng = budget.rng(0);
    for _ in 0..budget.max_moves_per_restart {
        if let Some((a, b)) = two_paths_split(&st.leave, &frame, lengths[i]) {
            return Ok(PathLeave { cycles: cycles_of(&st), first: a, second: b });
        }
        path_move(&mut st, &mut rng);
    }
    Err(Error::SearchExhausted("no two-path split of the leave".into()))
}

/// One step toward a leave with a two-path split: join disjoint cycles
/// through a hole-side switch, even out heavy vertices, or move at random.
fn path_move(st: &mut State, rng: &mut ChaCha8Rng) {
    let g = &st.leave;
    let comps = g.components();
    let sup = g.support();
    let heavy: Vec<usize> = bits_list(sup).into_iter().filter(|&v| g.degree(v) >= 4).collect();
    if comps.len() >= 2 && heavy.is_empty() && rng.gen_bool(0.8) {
        let lows = |m: u64| bits_list(m).into_iter().filter(|&v| !st.frame.high(v)).collect::<Vec<_>>();
        let (xs, ys) = (lows(comps[0]), lows(comps[1]));
        if let (Some(&x), Some(&y)) = (xs.first(), ys.first()) {
            for o in bits_list(g.adj[x] | g.adj[y]) {
                if let Some(plan) = st.plan_switch(x, y, o) {
                    st.apply(&plan);
                    return;
                }
            }
        }
    }
    if heavy.len() >= 2 && rng.gen_bool(0.5) {
        let y = *heavy.choose(rng).unwrap();
        let zs: Vec<usize> = (0..st.frame.n).filter(|&z| z != y && st.frame.twins(y, z) && st.leave.degree(z) + 2 <= st.leave.degree(y)).collect();
        if let Some(&z) = zs.choose(rng) {
            if equalise_in(st, y, z).is_some() {
                return;
            }
        }
    }
    let all = (1u64 << st.frame.n) - 1;
    if let Some(plan) = random_switch(st, rng, all) {
        st.apply(&plan);
    }
}

/// Splits an even graph into a path of length `la` and a second path with
/// the same ends, both ends on the high side.
pub(crate) fn two_paths_split(g: &Bits, frame: &Frame, la: usize) -> Option<(Vec<usize>, Vec<usize>)> {
    let total = g.edge_count();
    if la == 0 || la >= total {
        return None;
    }
    let mut budget = 200_000usize;
    for s in bits_list(g.support()) {
        if !frame.high(s) {
            continue;
        }
        let mut rest = g.clone();
        let mut path = vec![s];
        if let Some(r) = grow(&mut rest, frame, &mut path, la, &mut budget) {
            return Some(r);
        }
        if budget == 0 {
            return None;
        }
    }
    None
}

fn grow(rest: &mut Bits, frame: &Frame, path: &mut Vec<usize>, la: usize, budget: &mut usize) -> Option<(Vec<usize>, Vec<usize>)> {
    if *budget == 0 {
        return None;
    }
    *budget -= 1;
    let v = *path.last().unwrap();
    if path.len() == la + 1 {
        if !frame.high(v) || v == path[0] {
            return None;
        }
        return as_path(rest, path[0], v).map(|b| (path.clone(), b));
    }
    for x in bits_list(rest.adj[v]) {
        if path.contains(&x) {
            continue;
        }
        rest.toggle(v, x);
        path.push(x);
        if let Some(r) = grow(rest, frame, path, la, budget) {
            return Some(r);
        }
        path.pop();
        rest.toggle(v, x);
    }
    None
}

/// The vertex sequence of `g` if `g` is exactly a path from `s` to `t`.
pub(crate) fn as_path(g: &Bits, s: usize, t: usize) -> Option<Vec<usize>> {
    if s == t || g.degree(s) != 1 || g.degree(t) != 1 {
        return None;
    }
    for v in bits_list(g.support()) {
        if v != s && v != t && g.degree(v) != 2 {
            return None;
        }
    }
    let mut out = vec![s];
    let mut prev = usize::MAX;
    let mut cur = s;
    while cur != t {
        let next = bits_list(g.adj[cur]).into_iter().find(|&x| x != prev)?;
        prev = cur;
        cur = next;
        out.push(cur);
        if out.len() > g.edge_count() + 1 {
            return None;
        }
    }
    (out.len() == g.edge_count() + 1).then_some(out)
}

/// Packing of `K_{p,q}` with lengths `m46` plus the companion length of
/// `t`, whose leave splits into an `ell`-path and a `t`-path ending in `W`.
pub fn leave_many_path_decomp(p: usize, q: usize, ell: usize, t: usize, m46: &[usize], budget: &SolverBudget) -> Result<PathLeave> {
    if p % 2 == 1 || q % 2 == 1 || q < 8 {
        return Err(infeasible("sides must be even with |W| >= 8"));
    }
    if ell % 2 == 1 || !(2..=12).contains(&ell) {
        return Err(infeasible("ell must be even in 2..=12"));
    }
    if t % 2 == 1 || t < 6 || t + 2 > q {
        return Err(infeasible("t must be even in 6..=|W|-2"));
    }
    if m46.iter().any(|&x| x != 4 && x != 6) {
        return Err(infeasible("packed lengths must be 4 or 6"));
    }
    let k = companion_length(t);
    if m46.iter().sum::<usize>() + k + ell + t != p * q {
        return Err(infeasible("lengths must sum to |U'||W|"));
    }
    if (k + 2).max(ell).max(8) + t > 2 * p + 2 || (ell, t, p, q) == (12, 6, 8, 8) {
        return Err(infeasible("path lengths too long for U'"));
    }
    let mut list: Vec<usize> = m46.to_vec();
    if k > 0 {
        list.push(k);
    }
    if ell >= 4 {
        list.push(ell);
        list.push(t);
        let n = list.len();
        leave_path_decomp(p, q, &list, n - 2, Some(n - 1), budget)
    } else {
        list.push(t + 2);
        let n = list.len();
        let pl = leave_path_decomp(p, q, &list, n - 1, None, budget)?;
        // report the 2-path first, like the ell-path in the general case
        Ok(PathLeave { cycles: pl.cycles, first: pl.second, second: pl.first })
    }
}

// ---------------------------------------------------------------------------
// rosettes and the closing cycle

/// Paths `P_1..P_{a+c}` chained through `x_0, ..., x_{a+c}` in `W`, and
/// `P_0` from `x_{a+c}` back to `x_0` (a single vertex when trivial).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rosette {
    pub p0: Vec<usize>,
    pub paths: Vec<Vec<usize>>,
}

impl Rosette {
    fn xs(&self) -> Vec<usize> {
        let mut out = vec![self.paths[0][0]];
        out.extend(self.paths.iter().map(|p| *p.last().unwrap()));
        out
    }
}

/// Lengths of the chained paths: `a` 2-paths then `c` 4-paths.
fn piece_lengths(a: usize, c: usize) -> Vec<usize> {
    std::iter::repeat(2).take(a).chain(std::iter::repeat(4).take(c)).collect()
}

/// Cuts a closed Euler trail of a connected even graph, started in `W`,
/// into `a` 2-paths, `c` 4-paths and a final `t`-path.
pub(crate) fn rosette_from_trail(g: &Bits, frame: &Frame, a: usize, c: usize, t: usize) -> Result<Rosette> {
    if g.components().len() != 1 || !g.is_even() {
        return Err(mismatch("leave must be connected and even"));
    }
    if g.edge_count() != 2 * a + 4 * c + t || a + c == 0 {
        return Err(mismatch("leave size differs from 2a + 4c + t"));
    }
    let start = bits_list(g.support()).into_iter().find(|&v| frame.high(v)).ok_or_else(|| mismatch("leave misses W"))?;
    let trail = euler_trail(g, start);
    let mut paths = Vec::new();
    let mut at = 0;
    for len in piece_lengths(a, c) {
        paths.push(trail[at..=at + len].to_vec());
        at += len;
    }
    let p0 = trail[at..].to_vec();
    let r = Rosette { p0, paths };
    for p in r.paths.iter().chain(std::iter::once(&r.p0)) {
        if !simple_cycle_on(p, usize::MAX) && p.len() > 1 {
            return Err(mismatch("a trail piece repeats a vertex"));
        }
    }
    if r.xs().iter().any(|&x| !frame.high(x)) {
        return Err(mismatch("a path end lies outside W"));
    }
    Ok(r)
}

fn euler_trail(g: &Bits, start: usize) -> Vec<usize> {
    let mut rest = g.clone();
    let mut stack = vec![start];
    let mut out = Vec::new();
    while let Some(&v) = stack.last() {
        if rest.adj[v] != 0 {
            let x = rest.adj[v].trailing_zeros() as usize;
            rest.toggle(v, x);
            stack.push(x);
        } else {
            out.push(stack.pop().unwrap());
        }
    }
    out.reverse();
    out
}

/// Rosette from an `ell`-path (cut into `a` 2-paths and `c` 4-paths) and a
/// second path with the same ends.
pub(crate) fn rosette_from_paths(first: &[usize], second: &[usize], a: usize, c: usize) -> Result<Rosette> {
    if first.len() != 2 * a + 4 * c + 1 {
        return Err(mismatch("first path length differs from 2a + 4c"));
    }
    let (s, e) = (first[0], *first.last().unwrap());
    let mut p0 = second.to_vec();
    if p0[0] == s {
        p0.reverse();
    }
    if p0[0] != e || *p0.last().unwrap() != s {
        return Err(mismatch("paths do not share their ends"));
    }
    let mut paths = Vec::new();
    let mut at = 0;
    for len in piece_lengths(a, c) {
        paths.push(first[at..=at + len].to_vec());
        at += len;
    }
    Ok(Rosette { p0, paths })
}

/// Output of the closing step: all cycles in local ids.
#[derive(Debug, Clone)]
pub struct Assembled {
    pub cycles: Cycles,
    /// Index of the cycle that uses `m - t` edges of the closing cycle.
    pub m_cycle: Option<usize>,
    /// Some 5-cycle has a vertex of `W` off the closing cycle.
    pub special_five: bool,
}

/// Closes a rosette leave with the cycle `closing` on `W` (plus the extra
/// vertex): each `P_i` plus the edge `x_{i-1} x_i` becomes a 3- or 5-cycle,
/// and `P_0` plus the rest of the closing cycle becomes the `m`-cycle. The
/// packing is relabelled on `W` so that the chain lands on `closing`.
#[allow(clippy::too_many_arguments)]
pub fn paths_and_cycle_to_decomp(p: usize, q: usize, packing: &Cycles, rosette: &Rosette, a: usize, c: usize, m: usize, t: usize, closing: &[usize]) -> Result<Assembled> {
    let r = a + c;
    let big_l = (r + m).checked_sub(t).ok_or_else(|| mismatch("t exceeds a + c + m"))?;
    if (m, t) == (0, 0) {
        if r < 3 || r > q {
            return Err(mismatch("a + c must lie in 3..=|W| when m = t = 0"));
        }
    } else if t < 2 || t % 2 == 1 || t + 2 > efloor(m) || r == 0 || r + m > q + t / 2 + 1 {
        return Err(mismatch("(m, t) and a + c outside the allowed ranges"));
    }
    if closing.len() != big_l || !simple_cycle_on(closing, q) || (t == 0 && closing.contains(&q)) {
        return Err(mismatch("closing cycle has the wrong length or vertices"));
    }
    if rosette.paths.len() != r {
        return Err(mismatch("rosette has the wrong number of paths"));
    }
    let mut lens: Vec<usize> = rosette.paths.iter().map(|x| x.len() - 1).collect();
    lens.sort_unstable();
    if lens != piece_lengths(a, c) || rosette.p0.len() != t + 1 {
        return Err(mismatch("rosette path lengths differ from (2^a, 4^c, t)"));
    }
    let xs = rosette.xs();
    for i in 1..r {
        if rosette.paths[i][0] != xs[i] {
            return Err(mismatch("rosette paths are not chained"));
        }
    }
    if rosette.p0[0] != xs[r] || *rosette.p0.last().unwrap() != xs[0] || (t == 0 && xs[r] != xs[0]) {
        return Err(mismatch("P_0 does not close the chain"));
    }
    let in_w = |v: usize| v >= p && v < p + q;
    if xs.iter().any(|&x| !in_w(x)) {
        return Err(mismatch("chain vertices must lie in W"));
    }
    {
        let mut d = xs[..r].to_vec();
        d.sort_unstable();
        d.dedup();
        if d.len() != r {
            return Err(mismatch("chain vertices repeat"));
        }
    }
    // window of r+1 consecutive closing vertices avoiding the extra vertex
    let shift = if t == 0 {
        0
    } else {
        (0..big_l).find(|&s| (0..=r).all(|i| closing[(s + i) % big_l] != q)).ok_or_else(|| mismatch("no window on the closing cycle"))?
    };
    let mut sigma: Vec<Option<usize>> = vec![None; q];
    let mut used = vec![false; q + 1];
    for (i, &x) in xs.iter().enumerate().take(if t == 0 { r } else { r + 1 }) {
        let target = closing[(shift + i) % big_l];
        sigma[x - p] = Some(target);
        used[target] = true;
    }
    let on_c: Vec<bool> = (0..=q).map(|v| closing.contains(&v)).collect();
    let mut outside: Vec<usize> = (0..q).filter(|&v| !on_c[v] && !used[v]).collect();
    outside.reverse();
    for &v in rosette.p0.iter().skip(1).take(rosette.p0.len().saturating_sub(2)) {
        if in_w(v) && sigma[v - p].is_none() {
            let target = outside.pop().ok_or_else(|| mismatch("no room off the closing cycle for P_0"))?;
            sigma[v - p] = Some(target);
            used[target] = true;
        }
    }
    if c >= 1 {
        let already = rosette.paths.iter().any(|path| path.len() == 5 && sigma[path[2] - p].is_some_and(|s| !on_c[s]));
        if !already {
            if let Some(path) = rosette.paths.iter().find(|path| path.len() == 5 && sigma[path[2] - p].is_none()) {
                if let Some(target) = outside.pop() {
                    sigma[path[2] - p] = Some(target);
                    used[target] = true;
                }
            }
        }
    }
    let mut free: Vec<usize> = (0..q).filter(|&v| !used[v]).collect();
    free.reverse();
    for s in sigma.iter_mut() {
        if s.is_none() {
            *s = Some(free.pop().expect("bijection on W"));
        }
    }
    let map = |v: usize| if in_w(v) { p + sigma[v - p].unwrap() } else { v };
    let mut out: Cycles = packing.iter().map(|cy| cy.iter().map(|&v| map(v)).collect()).collect();
    let lift = |v: usize| v + p;
    for path in &rosette.paths {
        out.push(path.iter().map(|&v| map(v)).collect());
    }
    let mut m_cycle = None;
    if t > 0 {
        let mut cy: Vec<usize> = rosette.p0.iter().map(|&v| map(v)).collect();
        // back along the closing cycle from x_0 to x_{a+c}, interior only
        for s in 1..big_l - r {
            cy.push(lift(closing[(shift + big_l - s) % big_l]));
        }
        m_cycle = Some(out.len());
        out.push(cy);
    }
    let want = bipartite_plus(p, q, &[closing]);
    if !partition_ok(p + q + 1, &out, &want) {
        return Err(Error::InternalInvariantBreach("closing step produced an invalid decomposition".into()));
    }
    let special_five = out.iter().any(|cy| cy.len() == 5 && cy.iter().any(|&v| in_w(v) && !on_c[v - p]));
    Ok(Assembled { cycles: out, m_cycle, special_five })
}

// ---------------------------------------------------------------------------
// bipartite graph plus one cycle

/// `(3^a, 4^b, 5^c, 6^d, m)`-decomposition of `K_{p,q}` plus `closing`,
/// where the `m`-cycle uses `m - t` edges of `closing`.
#[allow(clippy::too_many_arguments)]
pub fn bipartite_and_one_cycle(p: usize, q: usize, a: usize, b: usize, c: usize, d: usize, m: usize, t: usize, closing: &[usize], budget: &SolverBudget) -> Result<Assembled> {
    if p < 2 || q < 4 || p % 2 == 1 || q % 2 == 1 {
        return Err(infeasible("need |U'| >= 2 and |W| >= 4, both even"));
    }
    if d > 0 && p == 2 {
        return Err(infeasible("no 6-cycles when |U'| = 2"));
    }
    if ![0, 2, 4].contains(&t) || 2 * a + 4 * b + 4 * c + 6 * d + t != p * q {
        return Err(infeasible("2a + 4b + 4c + 6d + t must equal |U'||W| with t in {0,2,4}"));
    }
    if 2 * a + 4 * c + t > 2 * q {
        return Err(infeasible("2a + 4c + t exceeds 2|W|"));
    }
    let r = a + c;
    let ok_iv = if (m, t) == (0, 0) { r == 0 || (3..=q).contains(&r) } else { t > 0 && m >= t + 2 && m <= q && r >= 1 && r + m <= q + t / 2 + 1 };
    if !ok_iv {
        return Err(infeasible("(m, t, a + c) outside the allowed ranges"));
    }
    if (a, c, m, t) == (0, 0, 0, 0) {
        let cycles = subsolvers::solve_bipartite_46(p, q, b, d, budget)?;
        return Ok(Assembled { cycles, m_cycle: None, special_five: false });
    }
    let extra = 2 * a + 4 * c + t;
    let (e4, e6) = if extra % 4 == 0 { (extra / 4, 0) } else { ((extra - 6) / 4, 1) };
    let frame = Frame::bipartite(p, q);
    let mut last = Error::SearchExhausted("leave massaging ran out of budget".into());
    for attempt in 0..budget.max_restarts {
        let seeded = SolverBudget { seed: budget.seed.wrapping_add(attempt as u64 * 7919), ..*budget };
        let all = subsolvers::solve_bipartite_46(p, q, b + e4, d + e6, &seeded)?;
        let mut st = state_of(frame, &all)?;
        let mut rng = seeded.rng(1);
        carve(&mut st, &[(4, e4), (6, e6)], &mut rng);
        if !massage(&mut st, &mut rng, budget.max_moves_per_restart) {
            continue;
        }
        let ros = match rosette_from_trail(&st.leave, &frame, a, c, t) {
            Ok(r) => r,
            Err(e) => {
                last = e;
                continue;
            }
        };
        return paths_and_cycle_to_decomp(p, q, &cycles_of(&st), &ros, a, c, m, t, closing);
    }
    Err(last)
}

/// Removes cycles of the given lengths, preferring ones that touch the
/// leave so far so that it stays connected.
fn carve(st: &mut State, wanted: &[(usize, usize)], rng: &mut ChaCha8Rng) {
    for &(len, count) in wanted {
        for _ in 0..count {
            let sup = st.leave.support();
            let cands: Vec<usize> = (0..st.cycles.len()).filter(|&i| st.cycles[i].len() == len).collect();
            let touching: Vec<usize> = cands.iter().copied().filter(|&i| st.cycles[i].iter().any(|&v| sup >> v & 1 == 1)).collect();
            let pick = if touching.is_empty() { *cands.choose(rng).expect("length present") } else { *touching.choose(rng).unwrap() };
            st.remove(pick);
        }
    }
}

/// Switches until the leave is connected and every `W` vertex on it has
/// degree 2.
fn massage(st: &mut State, rng: &mut ChaCha8Rng, budget: usize) -> bool {
    for _ in 0..budget {
        let g = &st.leave;
        let sup = g.support();
        if let Some(y) = bits_list(sup).into_iter().find(|&v| st.frame.high(v) && g.degree(v) >= 4) {
            let dy = g.degree(y);
            let mut zs: Vec<usize> = (st.frame.split..st.frame.n).filter(|&z| z != y && g.degree(z) + 2 <= dy).collect();
            zs.sort_by_key(|&z| g.degree(z));
            let lowest = zs.first().map(|&z| g.degree(z));
            zs.retain(|&z| Some(g.degree(z)) == lowest);
            if let Some(&z) = zs.choose(rng) {
                if equalise_in(st, y, z).is_some() {
                    continue;
                }
            }
            random_step(st, rng);
            continue;
        }
        let comps = g.components();
        if comps.len() <= 1 {
            return true;
        }
        let big = *comps.iter().max_by_key(|m| m.count_ones()).unwrap();
        let low = |m: u64| bits_list(m).into_iter().filter(|&v| !st.frame.high(v)).collect::<Vec<_>>();
        let y1s = low(big);
        let others: Vec<usize> = comps.iter().filter(|&&m| m != big).flat_map(|&m| low(m)).collect();
        let size = big.count_ones();
        let mut done = false;
        'outer: for &y1 in &y1s {
            for &y2 in &others {
                for o in bits_list(g.adj[y2]) {
                    if let Some(plan) = st.plan_switch(y1, y2, o) {
                        let after = st.preview(&plan);
                        if after.components().iter().any(|m| m.count_ones() > size) {
                            st.apply(&plan);
                            done = true;
                            break 'outer;
                        }
                    }
                }
            }
        }
        if !done {
            random_step(st, rng);
        }
    }
    false
}

fn random_step(st: &mut State, rng: &mut ChaCha8Rng) {
    let all = (1u64 << st.frame.n) - 1;
    if let Some(plan) = random_switch(st, rng, all) {
        st.apply(&plan);
    }
}

// ---------------------------------------------------------------------------
// 3- and 5-cycles with one edge on W each

/// Number of cycle pairs `n`, the leave parameter `b`, and lengths of the
/// cycles on `W` for a `(3^a, 5^c)`-packing with one `W`-edge per cycle.
pub fn choose_lengths(a: usize, c: usize, w: usize) -> Result<(usize, usize, Vec<usize>)> {
    if w < 6 || w % 2 == 1 || a % 2 == 1 || (a, c) == (0, 0) {
        return Err(infeasible("need even w >= 6, even a and (a, c) != (0, 0)"));
    }
    let s = a + 2 * c;
    if s % w == 2 {
        return Err(infeasible("a + 2c is 2 mod w"));
    }
    if a == 0 && c % (w / 2) == 2 {
        return Err(infeasible("c is 2 mod w/2 with a = 0"));
    }
    let n = s.div_ceil(w);
    let b = (n * w - s) / 2;
    let first = if a >= w - 2 * b { w - 2 * b } else { (w - 2 * b + a) / 2 };
    let mut rest = a + c - first;
    let mut lens = vec![first];
    let others = n - 1;
    // start every other cycle at w/2 and hand out what is left, at most w each
    let mut more = vec![w / 2; others];
    rest -= w / 2 * others;
    for l in more.iter_mut() {
        let add = rest.min(w / 2);
        *l += add;
        rest -= add;
    }
    debug_assert_eq!(rest, 0);
    lens.extend(more);
    Ok((n, b, lens))
}

/// A `(3^a, 5^c)`-packing with one `W`-edge per cycle.
#[derive(Debug, Clone)]
pub struct Packed3s5s {
    pub cycles: Cycles,
    /// The leave, a copy of `K_{2,2b}` on the first pair, as `b` 4-cycles.
    pub leave_fours: Cycles,
}

/// Packs `3^a 5^c` into `K_{2n,w}` plus the cycles `on_w` (edge-disjoint
/// cycles on `W`, positions `0..w`), each cycle using one edge of `on_w`.
/// The pair `{2i, 2i+1}` serves `on_w[i]`.
pub fn pack_3s5s(w: usize, a: usize, c: usize, on_w: &[Vec<usize>]) -> Result<Packed3s5s> {
    if w < 6 || w % 2 == 1 || a % 2 == 1 || (a, c) == (0, 0) {
        return Err(infeasible("need even w >= 6, even a and (a, c) != (0, 0)"));
    }
    let s = a + 2 * c;
    let n = s.div_ceil(w);
    let b = (n * w - s) / 2;
    if on_w.len() != n {
        return Err(infeasible(format!("expected {} cycles on W", n)));
    }
    for (i, cy) in on_w.iter().enumerate() {
        let l = cy.len();
        let ok = if i == 0 { l >= 3 && 2 * l >= w - 2 * b && l <= w - 2 * b } else { 2 * l >= w && l <= w };
        if !ok || !simple_cycle_on(cy, w - 1) {
            return Err(infeasible(format!("cycle {} has a length outside its window", i)));
        }
    }
    if on_w.iter().map(|x| x.len()).sum::<usize>() != a + c {
        return Err(infeasible("cycle lengths must sum to a + c"));
    }
    let p = 2 * n;
    let mut cycles = Cycles::new();
    let mut spare = Vec::new();
    for (i, cy) in on_w.iter().enumerate() {
        let l = cy.len();
        let on: Vec<bool> = (0..w).map(|v| cy.contains(&v)).collect();
        let mut off: Vec<usize> = (0..w).filter(|&v| !on[v]).collect();
        let size = if i == 0 { w - 2 * b } else { w };
        let fives = size - l;
        if i == 0 {
            spare = off.split_off(fives);
        }
        let pair = [2 * i, 2 * i + 1];
        let mut side = 0usize;
        for k in 0..l {
            let (x, y) = (cy[k] + p, cy[(k + 1) % l] + p);
            if k < fives {
                let e = off[k] + p;
                cycles.push(vec![pair[side], x, y, pair[1 - side], e]);
            } else {
                cycles.push(vec![pair[side], x, y]);
                side = 1 - side;
            }
        }
        if side != 0 {
            return Err(Error::InternalInvariantBreach("odd number of triangles on a cycle".into()));
        }
    }
    let leave_fours: Cycles = spare.chunks(2).map(|ch| vec![0, ch[0] + p, 1, ch[1] + p]).collect();
    let refs: Vec<&[usize]> = on_w.iter().map(|x| x.as_slice()).collect();
    let want = bipartite_plus(p, w, &refs);
    let mut all = cycles.clone();
    all.extend(leave_fours.iter().cloned());
    if !partition_ok(p + w + 1, &all, &want) {
        return Err(Error::InternalInvariantBreach("3s/5s packing failed verification".into()));
    }
    Ok(Packed3s5s { cycles, leave_fours })
}

// ---------------------------------------------------------------------------
// 5-cycles through a graph of degrees 1 and 3

/// 5-cycles through `p_1, p_2, p_3` (local 0, 1, 2) and `W` (local
/// `3..3+w`), one edge of `g` each. When `w` is 2 mod 4 the leave is the
/// triangle `(p_3, alpha, beta)`, returned separately.
#[derive(Debug, Clone)]
pub struct FiveCycles {
    pub cycles: Cycles,
    pub leave: Option<Vec<usize>>,
    /// Colour class sizes of the auxiliary colouring.
    pub class_sizes: [usize; 3],
}

pub fn one_factor_5cycles(w: usize, g: &[(usize, usize)], alpha_beta: (usize, usize)) -> Result<FiveCycles> {
    if w % 2 == 1 || w < 4 {
        return Err(hyp("|W| must be even and at least 4"));
    }
    let mut deg = vec![0usize; w];
    let mut seen = std::collections::BTreeSet::new();
    for &(x, y) in g {
        if x >= w || y >= w || x == y || !seen.insert((x.min(y), x.max(y))) {
            return Err(hyp("G must be a simple graph on W"));
        }
        deg[x] += 1;
        deg[y] += 1;
    }
    if g.len() != (3 * w).div_ceil(4) || deg.iter().any(|&d| d != 1 && d != 3) {
        return Err(hyp("G needs ceil(3w/4) edges and degrees 1 or 3"));
    }
    let (al, be) = alpha_beta;
    let ab = g.iter().position(|&(x, y)| (x, y) == (al, be) || (y, x) == (al, be)).ok_or_else(|| hyp("alpha beta must be an edge of G"))?;
    let odd = w % 4 == 2;
    // subdivide every edge but alpha beta (kept whole when w = 2 mod 4)
    let mut h_edges = Vec::new();
    let mut sub_of = Vec::new();
    for (i, &(y, z)) in g.iter().enumerate() {
        if odd && i == ab {
            continue;
        }
        let s = w + sub_of.len();
        sub_of.push((y, z));
        h_edges.push((y, s));
        h_edges.push((z, s));
    }
    if odd {
        h_edges.push((al, be));
    }
    let nh = w + sub_of.len();
    let mut colour = subsolvers::equalized_coloring(nh, &h_edges, 3)?;
    if odd {
        let cab = *colour.last().unwrap();
        for c in colour.iter_mut() {
            if *c == cab {
                *c = 2;
            } else if *c == 2 {
                *c = cab;
            }
        }
    }
    let mut class_sizes = [0usize; 3];
    for &c in &colour {
        class_sizes[c] += 1;
    }
    let mut at = vec![0u8; nh];
    for (e, &(x, y)) in h_edges.iter().enumerate() {
        at[x] |= 1 << colour[e];
        at[y] |= 1 << colour[e];
    }
    let mut f_targets: [Vec<usize>; 3] = Default::default();
    for x in 0..w {
        if deg[x] == 1 && at[x].count_ones() == 1 {
            f_targets[at[x].trailing_zeros() as usize].push(x);
        }
    }
    let mut cycles = Cycles::new();
    for (k, &(y, z)) in sub_of.iter().enumerate() {
        let s = w + k;
        let cy = colour[2 * k];
        let cz = colour[2 * k + 1];
        let missing = (0..3).find(|&i| at[s] >> i & 1 == 0).ok_or_else(|| Error::InternalInvariantBreach("subdivision vertex sees all colours".into()))?;
        let f = f_targets[missing].pop().ok_or_else(|| Error::InternalInvariantBreach("colour classes out of balance".into()))?;
        cycles.push(vec![cy, 3 + y, 3 + z, cz, 3 + f]);
    }
    if f_targets.iter().any(|v| !v.is_empty()) {
        return Err(Error::InternalInvariantBreach("unmatched degree-1 vertices".into()));
    }
    let leave = odd.then(|| vec![2, 3 + al, 3 + be]);
    let mut want = Bits::empty(3 + w);
    for x in 0..3 {
        for y in 0..w {
            want.set(x, 3 + y, true);
        }
    }
    for &(x, y) in g {
        want.set(3 + x, 3 + y, true);
    }
    let mut all = cycles.clone();
    all.extend(leave.iter().cloned());
    if !partition_ok(3 + w, &all, &want) {
        return Err(Error::InternalInvariantBreach("5-cycle packing failed verification".into()));
    }
    Ok(FiveCycles { cycles, leave, class_sizes })
}

// ---------------------------------------------------------------------------
// 4-cycles to 6-cycles

/// Tag bits carried alongside cycles during assembly.
pub(crate) mod tag {
    /// A cycle of the small refinement lengths; at most one pure edge.
    pub const SMALL: u8 = 1;
    /// A 4-cycle offered for conversion into 6-cycles.
    pub const OFFER: u8 = 2;
    /// Built by the third (bipartite) stage.
    pub const STAGE3: u8 = 4;
}

/// A packing whose cycles carry tag bits through removals and switches.
#[derive(Debug, Clone)]
pub(crate) struct Tagged {
    pub st: State,
    pub tags: Vec<u8>,
}

impl Tagged {
    pub fn new(frame: Frame) -> Tagged {
        Tagged { st: State::new(frame), tags: Vec::new() }
    }

    pub fn push(&mut self, c: Vec<u8>, t: u8) -> Result<usize> {
        if !self.st.fits(&c) {
            return Err(Error::InternalInvariantBreach(format!("cycle {:?} does not fit", c)));
        }
        self.tags.push(t);
        Ok(self.st.push(c))
    }

    pub fn remove(&mut self, i: usize) -> (Vec<u8>, u8) {
        let c = self.st.remove(i);
        let t = self.tags.swap_remove(i);
        (c, t)
    }

    pub fn with(&self, bits: u8) -> Vec<usize> {
        (0..self.tags.len()).filter(|&i| self.tags[i] & bits == bits).collect()
    }
}

/// Converts `3j` 4-cycles tagged [`tag::OFFER`], each meeting `s` in two
/// vertices, into `2j` 6-cycles using only switches on vertices of `s`.
/// The new 6-cycles get `new_tag`.
pub(crate) fn fours_to_sixes_in(tg: &mut Tagged, s: [usize; 4], j: usize, new_tag: u8, rng: &mut ChaCha8Rng) -> Result<()> {
    for i in 0..4 {
        for k in i + 1..4 {
            if !tg.st.frame.twins(s[i], s[k]) || tg.st.frame.adjacent(s[i], s[k]) {
                return Err(hyp("S must be pairwise twin and nonadjacent"));
            }
        }
    }
    let smask: u64 = s.iter().map(|&v| 1u64 << v).sum();
    let offered = tg.with(tag::OFFER);
    if offered.len() < 3 * j || offered.iter().any(|&i| tg.st.cycles[i].len() != 4 || tg.st.cycles[i].iter().filter(|&&v| smask >> v & 1 == 1).count() != 2) {
        return Err(hyp("need 3j offered 4-cycles meeting S in two vertices"));
    }
    // edges already uncovered stay put: no switch at S can touch them
    let background = tg.st.leave.clone();
    if s.iter().any(|&v| background.degree(v) > 0) {
        return Err(hyp("S must be covered before the conversion"));
    }
    for _ in 0..j {
        let mut pick = tg.with(tag::OFFER);
        pick.truncate(3);
        pick.sort_unstable_by(|a, b| b.cmp(a));
        for &i in &pick {
            tg.remove(i);
        }
        let mut ok = false;
        for _ in 0..2000 {
            let g = without(&tg.st.leave, &background);
            if let Exact::Found(cs) = decompose_graph(&g, &tg.st.frame, &[Spec::any(6), Spec::any(6)], 50_000) {
                for cy in cs {
                    tg.push(cy, new_tag)?;
                }
                ok = true;
                break;
            }
            sixes_step(&mut tg.st, &background, &s, rng);
        }
        if !ok {
            return Err(Error::SearchExhausted("4-cycle conversion did not reach two 6-cycles".into()));
        }
    }
    Ok(())
}

fn without(g: &Bits, h: &Bits) -> Bits {
    let mut out = g.clone();
    for (a, b) in out.adj.iter_mut().zip(&h.adj) {
        *a &= !b;
    }
    out
}

fn sixes_step(st: &mut State, background: &Bits, s: &[usize; 4], rng: &mut ChaCha8Rng) {
    let g = without(&st.leave, background);
    let deg = |v: usize| g.degree(v);
    if let Some(&y) = s.iter().find(|&&v| deg(v) >= 6) {
        if let Some(&z) = s.iter().filter(|&&z| deg(z) + 2 <= deg(y)).min_by_key(|&&z| deg(z)) {
            if equalise_in(st, y, z).is_some() {
                return;
            }
        }
    } else if g.components().len() == 1 {
        // a 6-path between two S vertices with a spare neighbour of x0 and x2
        if let Some((x0, x1, x6)) = six_path(&g, s) {
            if let Some(plan) = st.plan_switch(x0, x6, x1) {
                st.apply(&plan);
                return;
            }
        }
    } else if let (Some(&x), Some(&y)) = (s.iter().find(|&&v| deg(v) == 4), s.iter().find(|&&v| deg(v) == 2)) {
        for o in bits_list(g.adj[x] & !g.adj[y]) {
            if let Some(plan) = st.plan_switch(x, y, o) {
                st.apply(&plan);
                return;
            }
        }
    }
    // fall back to a random switch inside S
    let a = s[rng.gen_range(0..4)];
    let b = s[rng.gen_range(0..4)];
    if a != b {
        let cands = bits_list(st.switch_set(a, b));
        if let Some(&o) = cands.choose(rng) {
            if let Some(plan) = st.plan_switch(a, b, o) {
                st.apply(&plan);
            }
        }
    }
}

fn six_path(g: &Bits, s: &[usize; 4]) -> Option<(usize, usize, usize)> {
    fn go(g: &Bits, path: &mut Vec<usize>, s: &[usize; 4]) -> Option<(usize, usize, usize)> {
        if path.len() == 7 {
            let (x0, x2, x6) = (path[0], path[2], path[6]);
            if !s.contains(&x6) {
                return None;
            }
            let ys = g.adj[x0] & g.adj[x2];
            let on: u64 = path.iter().map(|&v| 1u64 << v).sum();
            return (ys & !on != 0).then_some((x0, path[1], x6));
        }
        let v = *path.last().unwrap();
        for x in bits_list(g.adj[v]) {
            if path.contains(&x) {
                continue;
            }
            path.push(x);
            if let Some(r) = go(g, path, s) {
                return Some(r);
            }
            path.pop();
        }
        None
    }
    for &x0 in s {
        if g.degree(x0) == 0 {
            continue;
        }
        let mut path = vec![x0];
        if let Some(r) = go(g, &mut path, s) {
            return Some(r);
        }
    }
    None
}

/// Public form: converts `3j` 4-cycles (given by index) of a decomposition
/// of `K_{p+q} - K_p` (local ids, hole `0..p`) into `2j` 6-cycles using
/// switches on `s`.
pub fn fours_to_sixes(p: usize, q: usize, cycles: &Cycles, designated: &[usize], s: [usize; 4], j: usize, seed: u64) -> Result<Cycles> {
    if j == 0 {
        return Ok(cycles.clone());
    }
    if designated.len() < 3 * j || designated.iter().any(|&i| i >= cycles.len()) {
        return Err(hyp("need 3j designated 4-cycles"));
    }
    let mut tg = Tagged::new(Frame::host(p, q));
    for (i, c) in cycles.iter().enumerate() {
        let t = if designated.contains(&i) { tag::OFFER } else { 0 };
        tg.push(to_u8(c), t)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    fours_to_sixes_in(&mut tg, s, j, 0, &mut rng)?;
    Ok(cycles_of(&tg.st))
}

// ---------------------------------------------------------------------------
// small-t leaves

const SMALL_T: [(usize, usize); 5] = [(0, 0), (4, 2), (5, 2), (6, 2), (6, 4)];

/// Decomposition of `K_{p,q}` plus `closing` for small `t`; a checked
/// front end to [`bipartite_and_one_cycle`].
#[allow(clippy::too_many_arguments)]
pub fn small_t_leave(p: usize, q: usize, a: usize, b: usize, c: usize, d: usize, m: usize, t: usize, closing: &[usize], budget: &SolverBudget) -> Result<Assembled> {
    small_t_check(p, q, a, b, c, d, m, t)?;
    bipartite_and_one_cycle(p, q, a, b, c, d, m, t, closing, budget)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn small_t_check(p: usize, q: usize, a: usize, b: usize, c: usize, d: usize, m: usize, t: usize) -> Result<()> {
    if p < 2 || q < 6 || p % 2 == 1 || q % 2 == 1 || !SMALL_T.contains(&(m, t)) {
        return Err(infeasible("sides or (m, t) outside the small-t setting"));
    }
    if d > 0 && p == 2 {
        return Err(infeasible("no 6-cycles when |U'| = 2"));
    }
    let rho = 2 * a + 4 * c + t;
    if rho + 4 * b + 6 * d != p * q {
        return Err(infeasible("rho + 4b + 6d must equal |U'||W|"));
    }
    if rho != 0 && (rho < 4 || rho > 2 * q || rho % 2 == 1) {
        return Err(infeasible("rho outside {0} and 4..=2|W|"));
    }
    if rho == 4 && t != 2 {
        return Err(infeasible("t must be 2 when rho = 4"));
    }
    if (rho == 6 || rho == 8) && t == 0 && [(0, 2), (1, 1)].contains(&(a, c)) {
        return Err(infeasible("(a, c) excluded for rho in {6, 8} with t = 0"));
    }
    if t > 0 {
        for i in 0..=2 {
            if rho + 2 * i == 2 * q && m > c + t + i + 1 {
                return Err(infeasible("m too long for a nearly full rho"));
            }
        }
    }
    Ok(())
}

/// Parameters of the two-pair split for larger `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmallLeave2Plan {
    pub case: u8,
    pub delta: usize,
    pub a1: usize,
    pub b1: usize,
    pub c1: usize,
    pub a2: usize,
    pub b2: usize,
    pub c2: usize,
    pub d2: usize,
    /// Lengths of the two cycles on `W`.
    pub l1: usize,
    pub l2: usize,
}

#[allow(clippy::too_many_arguments)]
pub fn small_t_leave2_plan(p: usize, q: usize, a: usize, b: usize, c: usize, d: usize, m: usize, t: usize) -> Result<SmallLeave2Plan> {
    let w = q;
    if p < 4 || w < 10 || p % 2 == 1 || w % 2 == 1 || !SMALL_T.contains(&(m, t)) {
        return Err(infeasible("sides or (m, t) outside the two-pair setting"));
    }
    let rho = 2 * a + 4 * c + t;
    if rho + 4 * b + 6 * d != p * w {
        return Err(infeasible("rho + 4b + 6d must equal |U'||W|"));
    }
    if rho + 4 < 2 * w || rho > 4 * w || ((rho + 4 == 2 * w || rho + 2 == 2 * w) && t != 2) || (rho == 2 * w && t == 0) {
        return Err(infeasible("rho outside 2|W|-4..=4|W| or t wrong at the low end"));
    }
    if rho + 6 >= 4 * w && t > 0 && c < 3 {
        return Err(infeasible("c must be at least 3 when rho is nearly 4|W|"));
    }
    let delta = d % 2;
    if (rho + 2 * delta) % 4 != 0 {
        return Err(infeasible("rho + 2 delta must be 0 mod 4"));
    }
    let e = |x: i64| -> Result<usize> { usize::try_from(x).map_err(|_| Error::InternalInvariantBreach("negative split parameter".into())) };
    let (ai, bi, ci, di, wi, dl) = (a as i64, b as i64, c as i64, d as i64, w as i64, delta as i64);
    let case = if p >= 6 {
        if rho >= 2 * w + 8 && (rho != 2 * w + 8 || t > 0) {
            1
        } else if b >= 2 {
            2
        } else {
            3
        }
    } else if c >= 1 {
        if rho >= 2 * w + 8 && (!(rho == 2 * w + 8 || rho == 2 * w + 10) || t > 0) {
            4
        } else {
            5
        }
    } else if rho >= 2 * w + 8 {
        6
    } else {
        7
    };
    let fl = |x: i64| x - x.rem_euclid(2);
    let (a1, b1, c1, a2, b2, c2, d2): (i64, i64, i64, i64, i64, i64, i64) = match case {
        1 => {
            let a1 = fl(ai).min(wi);
            let c1 = (wi - a1) / 2;
            (a1, 0, c1, ai - a1, bi, ci - c1, di)
        }
        2 | 3 => {
            let a1 = fl(ai).min(wi - 4);
            let c1 = (wi - a1) / 2 - 2;
            if case == 2 {
                (a1, 2, c1, ai - a1, bi - 2, ci - c1, di)
            } else {
                (a1, 2, c1, ai - a1, bi + 1, ci - c1, di - 2)
            }
        }
        4 => {
            let a1 = fl(ai + dl).min(wi);
            let c1 = (wi - a1) / 2;
            (a1, 0, c1, ai + dl - a1, bi + 3 * (di - dl) / 2 + 2 * dl, ci - dl - c1, 0)
        }
        5 => {
            let a1 = (wi - 4 - 2 * ci + 2 * dl).max(0);
            let c1 = (wi - a1) / 2 - 2;
            (a1, 2, c1, ai + dl - a1, bi + 3 * (di - dl) / 2 + 2 * dl - 2, ci - dl - c1, 0)
        }
        6 => {
            let a1 = wi - 2 * dl;
            (a1, dl, 0, ai - dl - a1, bi + 3 * (di - dl) / 2, dl, 0)
        }
        _ => {
            let a1 = wi - 4;
            (a1, 2, 0, ai - dl - a1, bi + 3 * (di - dl) / 2 + dl - 2, dl, 0)
        }
    };
    let plan = SmallLeave2Plan {
        case,
        delta,
        a1: e(a1)?,
        b1: e(b1)?,
        c1: e(c1)?,
        a2: e(a2)?,
        b2: e(b2)?,
        c2: e(c2)?,
        d2: e(d2)?,
        l1: e(a1 + c1)?,
        l2: e(a2 + c2 + m as i64 - t as i64)?,
    };
    if !(3..=w).contains(&plan.l1) || !(3..=w).contains(&plan.l2) {
        return Err(Error::InternalInvariantBreach("split cycle lengths out of range".into()));
    }
    Ok(plan)
}

/// Result of the two-pair builder, in the local ids of `K_{p+q} - K_p`.
#[derive(Debug, Clone)]
pub struct SmallLeave2 {
    pub plan: SmallLeave2Plan,
    pub cycles: Cycles,
    /// Cycles taken out again; their union is the leave.
    pub leave: Cycles,
    pub m_cycle: Option<usize>,
}

/// `(3^a, 4^b, 5^c, 6^d, m)`-packing of `K_{p,q}` plus two cycles on `W`,
/// whose leave is empty or one of the small shapes of the case table.
#[allow(clippy::too_many_arguments)]
pub fn small_t_leave2(p: usize, q: usize, a: usize, b: usize, c: usize, d: usize, m: usize, t: usize, c1: &[usize], c2: &[usize], budget: &SolverBudget) -> Result<SmallLeave2> {
    let plan = small_t_leave2_plan(p, q, a, b, c, d, m, t)?;
    if c1.len() != plan.l1 || c2.len() != plan.l2 {
        return Err(infeasible("closing cycles must have the planned lengths"));
    }
    let first = small_t_leave(2, q, plan.a1, plan.b1, plan.c1, 0, 0, 0, c1, budget)?;
    let mut second = small_t_leave(p - 2, q, plan.a2, plan.b2, plan.c2, plan.d2, m, t, c2, budget)?;
    let in_w = |v: usize, pp: usize| v >= pp && v < pp + q;
    let w_part = |cy: &[usize], pp: usize| cy.iter().filter(|&&v| in_w(v, pp)).map(|&v| v - pp).collect::<Vec<_>>();
    let delta_shared = plan.case >= 6 && plan.delta == 1;
    if delta_shared {
        // relabel the second pair by a symmetry of c2 so that its 5-cycle
        // meets the first pair's 4-cycle in W
        let x_w: Vec<usize> = first.cycles.iter().filter(|cy| cy.len() == 4).flat_map(|cy| w_part(cy, 2)).collect();
        let y = second.cycles.iter().position(|cy| cy.len() == 5).ok_or_else(|| Error::InternalInvariantBreach("no 5-cycle".into()))?;
        let perm = sharing_perm(q, c2, &w_part(&second.cycles[y], p - 2), &x_w).ok_or_else(|| mismatch("cannot make the 4- and 5-cycle meet"))?;
        let pp = p - 2;
        for cy in second.cycles.iter_mut() {
            for v in cy.iter_mut() {
                if in_w(*v, pp) {
                    *v = pp + perm[*v - pp];
                }
            }
        }
    }
    // assemble in K_{p+q} - K_p: pair one is 0,1, pair two is 2..p
    let mut tg = Tagged::new(Frame::host(p, q));
    let lift1 = |v: usize| if v < 2 { v } else { v - 2 + p };
    let lift2 = |v: usize| if v < p - 2 { v + 2 } else { v - (p - 2) + p };
    const FIRST: u8 = 8;
    let mut m_index = None;
    for cy in &first.cycles {
        tg.push(cy.iter().map(|&v| lift1(v) as u8).collect(), FIRST)?;
    }
    for (i, cy) in second.cycles.iter().enumerate() {
        let k = tg.push(cy.iter().map(|&v| lift2(v) as u8).collect(), 0)?;
        if second.m_cycle == Some(i) {
            m_index = Some(k);
        }
    }
    const M_TAG: u8 = 16;
    if let Some(k) = m_index {
        tg.tags[k] |= M_TAG;
    }
    let mut rng = budget.rng(11);
    let offer = |tg: &mut Tagged, idx: &[usize]| {
        for &i in idx {
            tg.tags[i] |= tag::OFFER;
        }
    };
    let fours = |tg: &Tagged, first_pair: Option<bool>| -> Vec<usize> {
        (0..tg.tags.len())
            .filter(|&i| tg.st.cycles[i].len() == 4 && tg.tags[i] & M_TAG == 0)
            .filter(|&i| match first_pair {
                Some(f) => (tg.tags[i] & FIRST != 0) == f,
                None => true,
            })
            .collect()
    };
    let mut leave = Cycles::new();
    match plan.case {
        1 | 2 => {}
        3 => {
            let mut pick = fours(&tg, Some(true));
            pick.truncate(2);
            let other = *fours(&tg, Some(false)).first().ok_or_else(|| Error::InternalInvariantBreach("no 4-cycle in pair two".into()))?;
            let lows: Vec<usize> = tg.st.cycles[other].iter().map(|&v| v as usize).filter(|&v| v < p).collect();
            pick.push(other);
            offer(&mut tg, &pick);
            fours_to_sixes_in(&mut tg, [0, 1, lows[0], lows[1]], 1, 0, &mut rng)?;
        }
        _ => {
            let j = (d - plan.delta) / 2;
            let pool = if plan.case >= 6 {
                // pair two first; in case 7 it can run one short, and pair
                // one tops up, keeping back a 4-cycle that meets the 5-cycle
                let mut pool = fours(&tg, Some(false));
                let fives: Vec<u64> = (0..tg.tags.len())
                    .filter(|&i| tg.st.cycles[i].len() == 5 && tg.tags[i] & M_TAG == 0)
                    .map(|i| tg.st.cycles[i].iter().filter(|&&v| v as usize >= p).map(|&v| 1u64 << v).sum())
                    .collect();
                let mut first_fours = fours(&tg, Some(true));
                if plan.delta == 1 {
                    let meets = |i: usize| {
                        let xs: u64 = tg.st.cycles[i].iter().map(|&v| 1u64 << v).sum();
                        fives.iter().any(|f| f & xs != 0)
                    };
                    if let Some(keep) = first_fours.iter().position(|&i| meets(i)) {
                        first_fours.remove(keep);
                    }
                }
                pool.extend(first_fours);
                pool
            } else {
                fours(&tg, None)
            };
            let pick: Vec<usize> = pool.into_iter().take(3 * j).collect();
            offer(&mut tg, &pick);
            fours_to_sixes_in(&mut tg, [0, 1, 2, 3], j, 0, &mut rng)?;
            if plan.delta == 1 {
                let mut take: Vec<usize> = if plan.case <= 5 {
                    let tri = (0..tg.tags.len()).find(|&i| tg.st.cycles[i].len() == 3 && tg.tags[i] & M_TAG == 0).ok_or_else(|| Error::InternalInvariantBreach("no 3-cycle".into()))?;
                    let mut f = fours(&tg, None);
                    f.truncate(2);
                    let mut v = vec![tri];
                    v.extend(f);
                    v
                } else {
                    let meet = fours(&tg, Some(true)).into_iter().find_map(|x| {
                        let xs: u64 = tg.st.cycles[x].iter().map(|&v| 1u64 << v).sum();
                        (0..tg.tags.len())
                            .find(|&i| tg.st.cycles[i].len() == 5 && tg.tags[i] & M_TAG == 0 && tg.st.cycles[i].iter().any(|&v| v as usize >= p && xs >> v & 1 == 1))
                            .map(|y| vec![x, y])
                    });
                    meet.ok_or_else(|| mismatch("5-cycle does not meet the 4-cycle"))?
                };
                take.sort_unstable_by(|a, b| b.cmp(a));
                for i in take {
                    leave.push(to_usize(&tg.remove(i).0));
                }
            }
        }
    }
    let m_cycle = (0..tg.tags.len()).find(|&i| tg.tags[i] & M_TAG != 0);
    let cycles = cycles_of(&tg.st);
    let mut want = Bits::empty(p + q);
    for x in 0..p {
        for y in p..p + q {
            want.set(x, y, true);
        }
    }
    for cy in [c1, c2] {
        for i in 0..cy.len() {
            want.set(cy[i] + p, cy[(i + 1) % cy.len()] + p, true);
        }
    }
    let mut all = cycles.clone();
    all.extend(leave.iter().cloned());
    if !partition_ok(p + q, &all, &want) {
        return Err(Error::InternalInvariantBreach("two-pair packing failed verification".into()));
    }
    Ok(SmallLeave2 { plan, cycles, leave, m_cycle })
}

/// A permutation of `0..q` fixing the cycle `c` as a graph and moving some
/// vertex of `y` into `x`.
fn sharing_perm(q: usize, c: &[usize], y: &[usize], x: &[usize]) -> Option<Vec<usize>> {
    let l = c.len();
    let off: Vec<usize> = (0..q).filter(|v| !c.contains(v)).collect();
    for flip in [false, true] {
        for r in 0..l {
            let mut perm: Vec<usize> = (0..q).collect();
            for i in 0..l {
                let j = if flip { (r + l - i) % l } else { (r + i) % l };
                perm[c[i]] = c[j];
            }
            if y.iter().any(|&v| x.contains(&perm[v])) {
                return Some(perm);
            }
            // a vertex of y off the cycle can be swapped with one of x off it
            if let Some(&yv) = y.iter().find(|&&v| !c.contains(&v)) {
                if let Some(&xv) = x.iter().find(|&&v| !c.contains(&v)) {
                    let _ = &off;
                    perm.swap(yv, xv);
                    return Some(perm);
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn companion_lengths() {
        assert_eq!(companion_length(10), 0);
        assert_eq!(companion_length(12), 6);
        assert_eq!(companion_length(14), 6);
        assert_eq!(companion_length(16), 6);
        assert_eq!(companion_length(18), 8);
    }

    #[test]
    fn first_length_follows_a() {
        // a >= w - 2b
        let (n, b, l) = choose_lengths(8, 1, 10).unwrap();
        assert_eq!((n, b), (1, 0));
        assert_eq!(l, vec![9]);
        // a < w - 2b
        let (n, b, l) = choose_lengths(2, 4, 10).unwrap();
        assert_eq!((n, b), (1, 0));
        assert_eq!(l, vec![6]);
        assert!(choose_lengths(0, 1, 10).is_err());
    }

    #[test]
    fn pack_3s5s_at_w10() {
        let (n, b, lens) = choose_lengths(4, 8, 10).unwrap();
        assert_eq!(n, 2);
        assert_eq!(lens.iter().sum::<usize>(), 12);
        // two edge-disjoint cycles on 10 vertices
        let c1: Vec<usize> = (0..lens[0]).collect();
        let c2: Vec<usize> = (0..lens[1]).map(|i| (2 * i) % 10 + if 2 * i >= 10 { 1 } else { 0 }).collect();
        let r = pack_3s5s(10, 4, 8, &[c1, c2]);
        let r = match r {
            Ok(r) => r,
            Err(_) => {
                // fall back to a layout that is certainly edge-disjoint
                let c2: Vec<usize> = vec![0, 2, 4, 6, 8, 1, 3, 5, 7, 9][..lens[1]].to_vec();
                pack_3s5s(10, 4, 8, &[(0..lens[0]).collect(), c2]).unwrap()
            }
        };
        assert_eq!(r.leave_fours.len(), b);
        let threes = r.cycles.iter().filter(|c| c.len() == 3).count();
        let fives = r.cycles.iter().filter(|c| c.len() == 5).count();
        assert_eq!((threes, fives), (4, 8));
    }

    #[test]
    fn five_cycles_class_sizes() {
        for w in [12usize, 14] {
            // perfect matching plus a cycle on the first ceil(w/4) even vertices
            let mut g: Vec<(usize, usize)> = (0..w / 2).map(|i| (2 * i, 2 * i + 1)).collect();
            let k = w.div_ceil(4);
            let star: Vec<usize> = (0..k).map(|i| 2 * i).collect();
            for i in 0..k {
                g.push((star[i], star[(i + 1) % k]));
            }
            let r = one_factor_5cycles(w, &g, (0, 1)).unwrap();
            assert_eq!(r.cycles.len(), 3 * w / 4);
            assert_eq!(r.class_sizes, [w / 2; 3]);
            assert_eq!(r.leave.is_some(), w % 4 == 2);
        }
    }

    #[test]
    fn bipartite_plus_cycle_small() {
        // K_{4,6} plus a triangle: a = 3, t = 0
        let b = (24 - 6) / 4;
        let _ = b;
        let r = bipartite_and_one_cycle(4, 6, 3, 3, 0, 1, 0, 0, &[0, 1, 2], &SolverBudget::seeded(3)).unwrap();
        let mut lens: Vec<usize> = r.cycles.iter().map(|c| c.len()).collect();
        lens.sort_unstable();
        assert_eq!(lens, vec![3, 3, 3, 4, 4, 4, 6]);
    }

    #[test]
    fn bipartite_plus_cycle_with_m() {
        // t = 2, m = 4, a = 1: closing cycle has a + c + m - t = 3 vertices,
        // one of them the extra vertex
        let r = bipartite_and_one_cycle(4, 6, 1, 5, 0, 0, 4, 2, &[0, 1, 6], &SolverBudget::seeded(5)).unwrap();
        let m = r.m_cycle.unwrap();
        assert_eq!(r.cycles[m].len(), 4);
        assert!(r.cycles[m].contains(&10));
    }

    #[test]
    fn two_path_leave() {
        let pl = leave_path_decomp(6, 6, &[4, 4, 4, 6, 6, 6, 6], 5, Some(6), &SolverBudget::seeded(1)).unwrap();
        assert_eq!(pl.first.len(), 7);
        assert_eq!(pl.second.len(), 7);
        assert_eq!(pl.first[0], pl.second[0]);
        assert_eq!(pl.first.last(), pl.second.last());
        let pl = leave_path_decomp(4, 6, &[4, 4, 4, 4, 4, 4], 3, None, &SolverBudget::seeded(1)).unwrap();
        assert_eq!(pl.first.len() + pl.second.len(), 4 + 2);
    }

    #[test]
    fn many_path_leave() {
        let pl = leave_many_path_decomp(8, 8, 6, 6, &[4; 13], &SolverBudget::seeded(2)).unwrap();
        assert_eq!(pl.first.len(), 7);
        assert_eq!(pl.second.len(), 7);
        assert_eq!(pl.cycles.len(), 13);
    }

    #[test]
    fn excluded_quadruple() {
        let mut m46 = vec![4; 10];
        m46.push(6);
        assert!(matches!(leave_many_path_decomp(8, 8, 12, 6, &m46, &SolverBudget::default()), Err(Error::Infeasible(_))));
    }

    #[test]
    fn split_plan_cases() {
        // |U'| = 6 and rho = 2w + 12 picks the first row
        let w = 10;
        let p = small_t_leave2_plan(6, w, 3, 7, 6, 0, 4, 2).unwrap();
        assert_eq!(p.case, 1);
        assert_eq!((p.a1, p.c1, p.a2, p.b2, p.c2), (2, 4, 1, 7, 2));
        assert_eq!((p.l1, p.l2), (6, 5));
        // rho below 2w - 4
        assert!(small_t_leave2_plan(4, w, 1, 8, 1, 0, 0, 0).is_err());
    }
}
