//! Turning a leave made of an h-cycle and two more cycles into an h-cycle
//! plus one merged cycle, by switching.
//!
//! Each step works on the current leave shape (recomputed after every
//! switch) rather than on remembered labels, and every public operation ends
//! with an exact check of the promised leave decomposition. When a step's
//! expected witness is missing, a seeded randomised switch walk takes over;
//! if that also fails the caller gets `SearchExhausted`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{LeaveView, Packing, Part, Vertex};
use crate::search::{bits_list, decompose_graph, reshape, Exact, Spec};
use crate::state::{Frame, State};
use crate::switching::{classify_structure, component_count, deficiency_of, equalise_in, pick_apart_in, Component};

/// Switches per fallback attempt.
pub const FALLBACK_SWITCHES: usize = 10_000;
/// Seeded fallback attempts before giving up.
pub const FALLBACK_ATTEMPTS: u64 = 8;

/// Merge `m1` and `m2` next to an `h`-cycle; `mu` is the leave's pure-edge count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MergeRequest {
    pub h: usize,
    pub m1: usize,
    pub m2: usize,
    pub mu: usize,
}

impl MergeRequest {
    pub fn check(&self, u: usize, w: usize) -> Result<()> {
        let MergeRequest { h, m1, m2, mu } = *self;
        let bad = |s: String| Err(Error::HypothesisViolated(s));
        if mu > 2 {
            return bad(format!("mu = {}", mu));
        }
        if h < 3 || m1 < 3 || m2 < 3 {
            return bad("cycle lengths below 3".into());
        }
        if m1 + m2 > 3 * h {
            return bad(format!("m1 + m2 = {} exceeds 3h = {}", m1 + m2, 3 * h));
        }
        let total = h + m1 + m2;
        let cap = if mu == 0 { 2 * (u + 1).min(w + 1) } else { (2 * u + 3).min(2 * w + 1).min(u + w) };
        if total > cap {
            return bad(format!("h + m1 + m2 = {} exceeds {}", total, cap));
        }
        if total % 2 != mu % 2 {
            return bad("h + m1 + m2 has the wrong parity".into());
        }
        if mu == 2 && h % 2 == 0 {
            return bad("h must be odd when the leave has two pure edges".into());
        }
        if mu > 0 && (u < 5 || u % 2 == 0 || w % 2 == 1) {
            return bad(format!("host ({}, {}) outside u >= 5 odd, w even", u, w));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// leave shapes in vertex ids

#[derive(Debug, Clone)]
pub(crate) enum Shape {
    Cycle(Vec<usize>),
    Chain { cycles: Vec<Vec<usize>>, links: Vec<usize>, good: bool },
    Ring { cycles: Vec<Vec<usize>>, links: Vec<usize>, good: bool },
    Other,
}

pub(crate) fn vert(frame: &Frame, id: usize) -> Vertex {
    if id < frame.split {
        Vertex::hole(id)
    } else {
        Vertex::outer(id - frame.split)
    }
}

pub(crate) fn vid(frame: &Frame, v: &Vertex) -> usize {
    match v.part {
        Part::Hole => v.index,
        Part::Outer => frame.split + v.index,
    }
}

pub(crate) fn leave_view(st: &State) -> LeaveView {
    let f = st.frame;
    let mut edges = Vec::new();
    for x in 0..f.n {
        for y in bits_list(st.leave.adj[x]) {
            if x < y {
                edges.push((vert(&f, x), vert(&f, y)));
            }
        }
    }
    LeaveView::from_edges(edges)
}

pub(crate) fn shapes(st: &State) -> Result<Vec<Shape>> {
    let f = st.frame;
    let ids = |c: &crate::model::Cycle| c.vertices().iter().map(|v| vid(&f, v)).collect::<Vec<_>>();
    let report = classify_structure(&leave_view(st))?;
    Ok(report
        .components
        .iter()
        .map(|c| match c {
            Component::Cycle(c) => Shape::Cycle(ids(c)),
            Component::Chain { cycles, links, good } => Shape::Chain {
                cycles: cycles.iter().map(ids).collect(),
                links: links.iter().map(|v| vid(&f, v)).collect(),
                good: *good,
            },
            Component::Ring { cycles, links, good } => Shape::Ring {
                cycles: cycles.iter().map(ids).collect(),
                links: links.iter().map(|v| vid(&f, v)).collect(),
                good: *good,
            },
            Component::Other { .. } => Shape::Other,
        })
        .collect())
}

fn rot(c: &[usize], v: usize) -> Vec<usize> {
    let p = c.iter().position(|&x| x == v).expect("vertex on cycle");
    c[p..].iter().chain(c[..p].iter()).copied().collect()
}

fn pure_in(f: &Frame, c: &[usize]) -> usize {
    let l = c.len();
    (0..l).filter(|&i| f.pure(c[i], c[(i + 1) % l])).count()
}

/// Neighbours of `x` on cycle `c`.
fn around(c: &[usize], x: usize) -> [usize; 2] {
    let l = c.len();
    let p = c.iter().position(|&v| v == x).expect("vertex on cycle");
    [c[(p + l - 1) % l], c[(p + 1) % l]]
}

/// Whether the leave splits into cycles with these lengths, each carrying at
/// most one pure edge.
pub(crate) fn splits(st: &State, lens: &[usize]) -> bool {
    let specs: Vec<Spec> = lens.iter().map(|&l| Spec::light(l)).collect();
    matches!(decompose_graph(&st.leave, &st.frame, &specs, 400_000), Exact::Found(_))
}

fn switch(st: &mut State, a: usize, b: usize, origin: usize) -> std::result::Result<usize, String> {
    match st.plan_switch(a, b, origin) {
        Some(p) => {
            st.apply(&p);
            Ok(p.terminus)
        }
        None => Err(format!("no ({},{})-switch from {}", a, b, origin)),
    }
}

/// Least vertex of the part of `like` missing from the leave.
fn absent_twin(st: &State, like: usize) -> Option<usize> {
    let sup = st.leave.support();
    (0..st.frame.n).find(|&y| y != like && st.frame.twins(like, y) && sup >> y & 1 == 0)
}

type Step = std::result::Result<(), String>;

/// Random switch walk toward a leave that splits into `lens`.
pub(crate) fn walk(st: &mut State, lens: &[usize], seed: u64, tr: &mut Vec<String>) -> Result<()> {
    let specs: Vec<Spec> = lens.iter().map(|&l| Spec::light(l)).collect();
    for attempt in 0..FALLBACK_ATTEMPTS {
        let mut trial = st.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let before = trial.cycles.len();
        if reshape(&mut trial, &specs, &mut rng, FALLBACK_SWITCHES) {
            while trial.cycles.len() > before {
                let last = trial.cycles.len() - 1;
                trial.remove(last);
            }
            tr.push(format!("walk attempt {}", attempt + 1));
            *st = trial;
            return Ok(());
        }
    }
    Err(Error::SearchExhausted(format!("switch walk toward {:?} ran out of budget", lens)))
}

/// Runs an explicit procedure; falls back to the walk if it stops short.
fn guarded(st: &mut State, lens: &[usize], seed: u64, tr: &mut Vec<String>, f: impl FnOnce(&mut State, &mut Vec<String>) -> Step) -> Result<()> {
    let mut work = st.clone();
    match f(&mut work, tr) {
        Ok(()) if splits(&work, lens) => {
            *st = work;
            Ok(())
        }
        Ok(()) => {
            tr.push("explicit steps missed the target; walking".into());
            *st = work;
            walk(st, lens, seed, tr)
        }
        Err(why) => {
            tr.push(format!("explicit steps stopped ({}); walking", why));
            *st = work;
            walk(st, lens, seed, tr)
        }
    }
}

// ---------------------------------------------------------------------------
// 2-chains with one pure edge

struct TwoChain {
    /// The cycle with the pure edge, rotated to start at the link.
    odd: Vec<usize>,
    even: Vec<usize>,
    link: usize,
}

fn two_chain(st: &State) -> std::result::Result<TwoChain, String> {
    let sh = shapes(st).map_err(|e| e.to_string())?;
    match sh.as_slice() {
        [Shape::Chain { cycles, links, .. }] if cycles.len() == 2 => {
            let f = st.frame;
            let (a, b) = if pure_in(&f, &cycles[0]) > 0 { (0, 1) } else { (1, 0) };
            Ok(TwoChain { odd: rot(&cycles[a], links[0]), even: rot(&cycles[b], links[0]), link: links[0] })
        }
        _ => Err("leave is not a 2-chain".into()),
    }
}

/// The labelling `x_0..x_{p-1}` of the pure-edge cycle with the smaller
/// pure-edge index `r`.
fn orient(f: &Frame, odd: &[usize]) -> (Vec<usize>, usize) {
    let p = odd.len();
    let r = (0..p).find(|&i| f.pure(odd[i], odd[(i + 1) % p])).expect("pure edge");
    let rev: Vec<usize> = std::iter::once(odd[0]).chain(odd[1..].iter().rev().copied()).collect();
    let rr = p - 1 - r;
    if rr < r {
        (rev, rr)
    } else {
        (odd.to_vec(), r)
    }
}

/// One round of shortening the pure-edge cycle by two, or finishing.
fn path_round(st: &mut State, m: usize, x: &[usize], even: &[usize], tr: &mut Vec<String>) -> Step {
    let y1 = even[1];
    let t = switch(st, y1, x[m - 1], x[0])?;
    if t != x[m - 2] {
        tr.push("path: first switch closed the m-cycle".into());
        return Ok(());
    }
    let t = switch(st, x[m], x[m - 2], x[m - 1])?;
    if t != x[m - 3] {
        tr.push("path: second switch closed the m-cycle".into());
    } else {
        tr.push("path: chain shortened by two".into());
    }
    Ok(())
}

/// Leave is a 2-chain with one pure edge; end with an `m`-cycle and the rest.
pub(crate) fn two_chain_in(st: &mut State, m: usize, tr: &mut Vec<String>) -> Step {
    let total = st.leave.edge_count();
    let f = st.frame;
    for _ in 0..4 * total + 8 {
        if splits(st, &[m, total - m]) {
            return Ok(());
        }
        let ch = two_chain(st)?;
        let p = ch.odd.len();
        let (x, r) = orient(&f, &ch.odd);
        if p < m {
            return Err("pure-edge cycle shorter than m".into());
        }
        if p == m {
            return Err("already split but not detected".into());
        }
        if r + 3 <= m {
            path_round(st, m, &x, &ch.even, tr)?;
        } else {
            // move the pure edge two places toward the link
            if r < 2 {
                return Err("pure edge next to the link".into());
            }
            switch(st, x[0], x[2], x[3])?;
            tr.push("2-chain: pure edge moved toward link".into());
        }
    }
    Err("2-chain rounds did not terminate".into())
}

// ---------------------------------------------------------------------------
// good s-chains: paths and the path-shortening step

/// Whether `p` is a simple path in the leave and the remaining edges form a
/// simple path with the same ends.
fn path_split_ok(st: &State, p: &[usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut g = st.leave.clone();
    let mut seen = 0u64;
    for &v in p {
        if seen >> v & 1 == 1 {
            return false;
        }
        seen |= 1 << v;
    }
    for w in p.windows(2) {
        if !g.has(w[0], w[1]) {
            return false;
        }
        g.toggle(w[0], w[1]);
    }
    complement_path(&g, p[0], *p.last().unwrap()).is_some()
}

/// The simple path formed by `g` from `a` to `b`, if `g` is exactly that.
fn complement_path(g: &crate::state::Bits, a: usize, b: usize) -> Option<Vec<usize>> {
    if g.degree(a) != 1 || g.degree(b) != 1 {
        return None;
    }
    let mut path = vec![a];
    let mut prev = usize::MAX;
    let mut cur = a;
    while cur != b {
        let nb: Vec<usize> = bits_list(g.adj[cur]).into_iter().filter(|&v| v != prev).collect();
        if (cur != a && g.degree(cur) != 2) || nb.len() != 1 {
            return None;
        }
        prev = cur;
        cur = nb[0];
        path.push(cur);
    }
    if path.len() - 1 != g.edge_count() {
        return None;
    }
    Some(path)
}

fn other_path(st: &State, p: &[usize]) -> Vec<usize> {
    let mut g = st.leave.clone();
    for w in p.windows(2) {
        g.toggle(w[0], w[1]);
    }
    complement_path(&g, p[0], *p.last().unwrap()).expect("checked split")
}

/// Shortens `p` by two while keeping the leave a good chain with a
/// two-path decomposition. `r` bounds the initial pure-free prefix used.
pub(crate) fn reduce_path_in(st: &mut State, p: Vec<usize>, r: usize, tr: &mut Vec<String>) -> std::result::Result<Vec<usize>, String> {
    let f = st.frame;
    let mut p = p;
    let mut r = r;
    for _ in 0..p.len() + 2 {
        let deg = |st: &State, v: usize| st.leave.degree(v);
        let ok = |st: &State, p: &[usize], r: usize| {
            r >= 2
                && r + 1 < p.len()
                && (0..r).all(|i| !f.pure(p[i], p[i + 1]))
                && deg(st, p[r - 1]) == 2
                && deg(st, p[r]) == 2
        };
        if !ok(st, &p, r) {
            return Err(format!("prefix of length {} does not qualify", r));
        }
        // shortest qualifying prefix
        r = (2..=r).find(|&q| ok(st, &p, q)).unwrap();
        if r == 2 {
            tr.push("reduce: trimmed two edges".into());
            return Ok(p[2..].to_vec());
        }
        let t = switch(st, p[r], p[r - 2], p[r - 3])?;
        if t != p[r + 1] {
            let mut q: Vec<usize> = p[..r - 2].to_vec();
            q.extend_from_slice(&p[r..]);
            tr.push("reduce: switch cut two edges".into());
            return Ok(q);
        }
        let mut q: Vec<usize> = p[..r - 2].to_vec();
        q.extend_from_slice(&[p[r], p[r - 1], p[r - 2]]);
        q.extend_from_slice(&p[r + 1..]);
        p = q;
        r -= 1;
        tr.push("reduce: prefix shortened".into());
    }
    Err("path shortening did not terminate".into())
}

/// All decompositions of a connected even leave into two simple paths with
/// outer end vertices, as the first path.
fn path_splits(st: &State, limit: usize) -> Vec<Vec<usize>> {
    let f = st.frame;
    let g = &st.leave;
    let mut out = Vec::new();
    let mut nodes = 0usize;
    let starts: Vec<usize> = bits_list(g.support()).into_iter().filter(|&v| f.high(v)).collect();
    fn dfs(
        g: &crate::state::Bits,
        f: &Frame,
        path: &mut Vec<usize>,
        used: u64,
        out: &mut Vec<Vec<usize>>,
        nodes: &mut usize,
        limit: usize,
        st: &State,
    ) {
        *nodes += 1;
        if *nodes > limit || out.len() > 64 {
            return;
        }
        let last = *path.last().unwrap();
        if path.len() >= 2 && f.high(last) && last > path[0] && path_split_ok(st, path) {
            out.push(path.clone());
        }
        for y in bits_list(g.adj[last] & !used) {
            path.push(y);
            dfs(g, f, path, used | 1 << y, out, nodes, limit, st);
            path.pop();
        }
    }
    for s in starts {
        let mut path = vec![s];
        dfs(g, &f, &mut path, 1 << s, &mut out, &mut nodes, limit, st);
    }
    out
}

/// Edges of `p` inside each cycle of the chain.
fn per_cycle(cycles: &[Vec<usize>], p: &[usize]) -> Vec<usize> {
    let on = |c: &[usize], a: usize, b: usize| {
        let l = c.len();
        (0..l).any(|i| (c[i] == a && c[(i + 1) % l] == b) || (c[i] == b && c[(i + 1) % l] == a))
    };
    cycles.iter().map(|c| p.windows(2).filter(|w| on(c, w[0], w[1])).count()).collect()
}

/// Leave a good chain split into an `m`-path and an `m2`-path with twin ends.
/// Returns the two paths, the first of length `m` or `m2`.
pub(crate) fn two_paths_in(st: &mut State, m: usize, m2: usize, tr: &mut Vec<String>) -> std::result::Result<(Vec<usize>, Vec<usize>), String> {
    let f = st.frame;
    let splits0 = path_splits(st, 200_000);
    // choose P and m* with matching parity and |P| >= m*
    let mut pick = None;
    'outer: for h in &splits0 {
        let rest = other_path(st, h);
        for p in [h.clone(), rest] {
            let len = p.len() - 1;
            for ms in [m, m2] {
                if len >= ms && (len - ms) % 2 == 0 {
                    pick = Some((p, ms));
                    break 'outer;
                }
            }
        }
    }
    let (mut p, ms) = pick.ok_or("no two-path decomposition with outer ends")?;
    for _ in 0..p.len() + 2 {
        let len = p.len() - 1;
        if len == ms {
            let q = other_path(st, &p);
            return Ok((p, q));
        }
        let cycles = match shapes(st).map_err(|e| e.to_string())?.as_slice() {
            [Shape::Chain { cycles, .. }] => cycles.clone(),
            _ => return Err("leave stopped being a chain".into()),
        };
        let counts = per_cycle(&cycles, &p);
        if counts.iter().all(|&c| c <= 2) {
            if len != ms + 2 {
                return Err("end trim does not reach the target length".into());
            }
            let q = p[1..p.len() - 1].to_vec();
            tr.push("two paths: trimmed ends into the hole".into());
            if !path_split_ok(st, &q) {
                return Err("trimmed path does not split the leave".into());
            }
            let rest = other_path(st, &q);
            return Ok((q, rest));
        }
        // a qualifying prefix from either end
        let mut done = false;
        for rev in [false, true] {
            let mut cand = p.clone();
            if rev {
                cand.reverse();
            }
            let n = cand.len();
            let r = (2..n - 1).take_while(|&r| !f.pure(cand[r - 1], cand[r])).find(|&r| {
                !f.pure(cand[0], cand[1]) && st.leave.degree(cand[r - 1]) == 2 && st.leave.degree(cand[r]) == 2
            });
            if let Some(r) = r {
                let mut trial = st.clone();
                if let Ok(q) = reduce_path_in(&mut trial, cand, r, tr) {
                    if path_split_ok(&trial, &q) {
                        *st = trial;
                        p = q;
                        done = true;
                        break;
                    }
                }
            }
        }
        if !done {
            return Err("no shortening prefix".into());
        }
    }
    Err("two-path rounds did not terminate".into())
}

// ---------------------------------------------------------------------------
// good chains and rings with one pure edge

/// Leave is a good chain or ring with one pure edge; end with an `m`-cycle
/// and an `m2`-cycle.
pub(crate) fn two_cycles_in(st: &mut State, m: usize, m2: usize, tr: &mut Vec<String>) -> Step {
    let f = st.frame;
    let odd = if m % 2 == 1 { m } else { m2 };
    for _ in 0..4 * (m + m2) {
        if splits(st, &[m, m2]) {
            return Ok(());
        }
        let sh = shapes(st).map_err(|e| e.to_string())?;
        match sh.as_slice() {
            [Shape::Chain { cycles, .. }] if cycles.len() == 2 => {
                tr.push("2-chain".into());
                return two_chain_in(st, odd, tr);
            }
            [Shape::Ring { cycles, links, .. }] if cycles.len() == 2 => {
                let want_hole = m == 3 || m2 == 3;
                let x = links
                    .iter()
                    .copied()
                    .filter(|&x| absent_twin(st, x).is_some())
                    .min_by_key(|&x| (want_hole && f.high(x), x))
                    .ok_or("no absent twin for a 2-ring link")?;
                let y = absent_twin(st, x).unwrap();
                let o = bits_list(st.switch_set(x, y))[0];
                switch(st, x, y, o)?;
                tr.push("2-ring opened into a 2-chain".into());
            }
            [Shape::Ring { cycles, links, .. }] => {
                let s = cycles.len();
                let ai = cycles.iter().position(|c| pure_in(&f, c) > 0).ok_or("ring without pure edge")?;
                let a_links = [links[(ai + s - 1) % s], links[ai]];
                let x = a_links
                    .iter()
                    .copied()
                    .filter(|&x| s % 2 == 1 || !f.high(x))
                    .find(|&x| absent_twin(st, x).is_some())
                    .ok_or("no ring link with an absent twin")?;
                let y = absent_twin(st, x).unwrap();
                let o = around(&cycles[ai], x)[0];
                switch(st, x, y, o)?;
                tr.push(format!("{}-ring switched at a link", s));
            }
            [Shape::Chain { cycles, .. }] => {
                let s = cycles.len();
                let (pm, _) = two_paths_in(st, m, m2, tr)?;
                let mut done = false;
                for path in [pm.clone(), pm.iter().rev().copied().collect::<Vec<_>>()] {
                    let (a, b, o) = (path[0], *path.last().unwrap(), path[1]);
                    if f.twins(a, b) && st.plan_switch(a, b, o).is_some() {
                        switch(st, a, b, o)?;
                        done = true;
                        break;
                    }
                }
                if !done {
                    let q = other_path(st, &pm);
                    let (a, b, o) = (q[0], *q.last().unwrap(), q[1]);
                    switch(st, a, b, o)?;
                }
                tr.push(format!("{}-chain closed along a path", s));
            }
            _ => return Err("leave is not a chain or ring".into()),
        }
    }
    Err("chain rounds did not terminate".into())
}

/// Leave has one good chain and otherwise cycles; end with an `m`-cycle
/// and an `m2`-cycle.
pub(crate) fn degree4_in(st: &mut State, m: usize, m2: usize, mu: usize, tr: &mut Vec<String>) -> Step {
    let f = st.frame;
    for _ in 0..8 * (m + m2) {
        if splits(st, &[m, m2]) {
            return Ok(());
        }
        let sh = shapes(st).map_err(|e| e.to_string())?;
        if sh.len() == 1 {
            if mu == 1 {
                return two_cycles_in(st, m, m2, tr);
            }
            return Err("single component with two pure edges".into());
        }
        let hi = sh.iter().position(|s| matches!(s, Shape::Chain { .. })).ok_or("no chain component")?;
        let (hcycles, hlinks, good) = match &sh[hi] {
            Shape::Chain { cycles, links, good } => (cycles.clone(), links.clone(), *good),
            _ => unreachable!(),
        };
        let h_pure: usize = hcycles.iter().map(|c| pure_in(&f, c)).sum();
        let cyc: Vec<&Vec<usize>> = sh
            .iter()
            .filter_map(|s| match s {
                Shape::Cycle(c) => Some(c),
                _ => None,
            })
            .collect();
        if cyc.len() + 1 != sh.len() {
            return Err("more than one non-cycle component".into());
        }
        let c: Vec<usize> = if h_pure == 0 {
            cyc.iter().find(|c| pure_in(&f, c) > 0).copied().unwrap_or(cyc[0]).clone()
        } else {
            cyc[0].clone()
        };
        let t = hcycles.len();
        let (mut h1, mut ht) = (0, t - 1);
        if pure_in(&f, &hcycles[h1]) == 0 && pure_in(&f, &hcycles[ht]) > 0 {
            std::mem::swap(&mut h1, &mut ht);
        }
        let link_of = |i: usize| if i == 0 { hlinks[0] } else { hlinks[t - 2] };
        let h1_pure = pure_in(&f, &hcycles[h1]) > 0;
        if t >= 3 && !good {
            // a 3-chain whose pure end is fine but whose other link is outer
            let y1 = link_of(ht);
            let y2 = absent_twin(st, y1).ok_or("no absent twin for the far link")?;
            let o = around(&hcycles[ht], y1)[0];
            switch(st, y1, y2, o)?;
            tr.push("degree-4: far link moved off the chain".into());
            continue;
        }
        if t >= 3 || (h1_pure && f.high(link_of(h1))) {
            let want_high = t % 2 == 1;
            let links: Vec<usize> = hlinks.clone();
            let x = hcycles[ht].iter().copied().find(|&v| !links.contains(&v) && f.high(v) == want_high);
            let y = c.iter().copied().find(|&v| f.high(v) == want_high);
            let (x, y) = match (x, y) {
                (Some(x), Some(y)) => (x, y),
                _ => return Err("no end-cycle / cycle pair of the needed part".into()),
            };
            let o = around(&hcycles[ht], x)[0];
            switch(st, x, y, o)?;
            tr.push("degree-4 case 1: cycle absorbed".into());
        } else if h_pure == 0 {
            let x1 = c.iter().copied().find(|&v| f.high(v)).ok_or("cycle without outer vertex")?;
            let pick = [h1, ht].iter().copied().find_map(|i| {
                hcycles[i].iter().copied().find(|&v| f.high(v) && !hlinks.contains(&v)).map(|v| (i, v))
            });
            let (i, x2) = pick.ok_or("no outer non-link vertex on an end cycle")?;
            let o = around(&hcycles[i], x2)[0];
            switch(st, x1, x2, o)?;
            tr.push("degree-4 case 2".into());
        } else {
            // pure end cycle with a hole link
            let x = link_of(h1);
            let y = c.iter().copied().find(|&v| !f.high(v)).ok_or("cycle without hole vertex")?;
            let o = around(&hcycles[ht], x)[0];
            switch(st, x, y, o)?;
            tr.push("degree-4 case 3".into());
        }
    }
    Err("degree-4 rounds did not terminate".into())
}

// ---------------------------------------------------------------------------
// joining

fn leave_check(st: &State, lens: &[usize], mu: usize) -> Result<()> {
    let e: usize = lens.iter().sum();
    if st.leave.edge_count() != e {
        return Err(Error::HypothesisViolated(format!("leave has {} edges, expected {}", st.leave.edge_count(), e)));
    }
    if st.leave.pure_count(&st.frame) != mu {
        return Err(Error::HypothesisViolated(format!("leave has {} pure edges, expected {}", st.leave.pure_count(&st.frame), mu)));
    }
    Ok(())
}

fn find_triple(st: &State, req: &MergeRequest) -> Option<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let lens = [req.h, req.m1, req.m2];
    // the h-cycle must carry at most one pure edge; the others are free
    let mut specs: Vec<Spec> = vec![Spec::light(req.h)];
    for &l in &lens[1..] {
        specs.push(Spec::any(l));
    }
    let mut best = None;
    // pure edges go where parity demands; try the light split first
    for s in [vec![Spec::light(lens[0]), Spec::light(lens[1]), Spec::light(lens[2])], specs] {
        if let Exact::Found(cs) = decompose_graph(&st.leave, &st.frame, &s, 400_000) {
            best = Some(cs);
            break;
        }
    }
    let cs = best?;
    let mut hs = None;
    let mut rest = Vec::new();
    for c in cs {
        if hs.is_none() && c.len() == req.h && pure_in(&st.frame, &c.iter().map(|&v| v as usize).collect::<Vec<_>>()) <= 1 {
            hs = Some(c);
        } else {
            rest.push(c);
        }
    }
    let to = |c: &Vec<u8>| c.iter().map(|&v| v as usize).collect::<Vec<usize>>();
    let h = hs?;
    Some((to(&h), to(&rest[0]), to(&rest[1])))
}

fn general_in(st: &mut State, req: &MergeRequest, tr: &mut Vec<String>, depth: usize) -> Step {
    let f = st.frame;
    let target = [req.h, req.m1 + req.m2];
    if splits(st, &target) {
        tr.push("already merged".into());
        return Ok(());
    }
    let (hc, c1, c2) = find_triple(st, req).ok_or("leave has no h, m1, m2 decomposition")?;
    let k = component_count(st);
    let d = deficiency_of(st);
    let sup = st.leave.support();
    let w_heavy = bits_list(sup).into_iter().any(|v| f.high(v) && st.leave.degree(v) >= 4);
    if k == 3 {
        tr.push("case 1".into());
        let x = c1.iter().copied().find(|&v| f.high(v)).ok_or("no outer vertex on C1")?;
        let y = c2.iter().copied().find(|&v| f.high(v)).ok_or("no outer vertex on C2")?;
        let o = around(&c1, x)[0];
        switch(st, x, y, o)?;
        if splits(st, &target) {
            return Ok(());
        }
        return degree4_in(st, req.h, req.m1 + req.m2, req.mu, tr);
    }
    if req.h == 3 && !w_heavy {
        let shared = c1.iter().any(|v| c2.contains(v));
        // park the triangle in the packing while the others are reshaped
        let idx = st.push(hc.iter().map(|&v| v as u8).collect());
        if !shared {
            tr.push("case 4a".into());
            let x = c1.iter().copied().find(|&v| f.high(v)).ok_or("no outer vertex on C1")?;
            let y = c2.iter().copied().find(|&v| f.high(v)).ok_or("no outer vertex on C2")?;
            let o = around(&c1, x)[0];
            switch(st, x, y, o)?;
            unpark(st, idx);
            if splits(st, &target) {
                return Ok(());
            }
            pick_apart_in(st).map_err(|e| e.to_string())?;
            return degree4_in(st, req.h, req.m1 + req.m2, req.mu, tr);
        }
        tr.push("case 4b".into());
        for _ in 0..2 {
            let sup = st.leave.support();
            let y = bits_list(sup).into_iter().find(|&v| st.leave.degree(v) >= 4);
            let Some(y) = y else { break };
            let z = absent_twin(st, y).ok_or("no absent twin to equalise into")?;
            equalise_in(st, y, z).ok_or("equalising switch missing")?;
        }
        unpark(st, idx);
        if depth > 2 {
            return Err("case 4b did not settle".into());
        }
        return general_in(st, req, tr, depth + 1);
    }
    if k == 1 && d == req.m1 + req.m2 {
        tr.push("case 3".into());
        let x = bits_list(sup)
            .into_iter()
            .filter(|&v| st.leave.degree(v) >= 4)
            .find(|&v| absent_twin(st, v).is_some())
            .ok_or("no heavy vertex with an absent twin")?;
        let y = absent_twin(st, x).unwrap();
        let o = bits_list(st.switch_set(x, y))[0];
        switch(st, x, y, o)?;
    } else {
        tr.push(if req.h <= req.m1 + req.m2 { "case 2a" } else { "case 2b" }.into());
    }
    pick_apart_in(st).map_err(|e| e.to_string())?;
    degree4_in(st, req.h, req.m1 + req.m2, req.mu, tr)
}

/// Removes the parked cycle, whichever shape the switches gave it.
fn unpark(st: &mut State, idx: usize) {
    st.remove(idx);
}

fn bipartite_in(st: &mut State, h: usize, m: usize, m2: usize, tr: &mut Vec<String>) -> Step {
    if splits(st, &[h, m + m2]) {
        tr.push("already merged".into());
        return Ok(());
    }
    // the leave has no pure edges, so every switch toggles cross edges only
    let k = component_count(st);
    if k == 3 {
        let req = MergeRequest { h, m1: m, m2, mu: 0 };
        let (_, c1, c2) = find_triple(st, &req).ok_or("no h, m, m' decomposition")?;
        let x = c1[0];
        if let Some(y) = c2.iter().copied().find(|&v| st.frame.twins(x, v)) {
            switch(st, x, y, around(&c1, x)[0])?;
            tr.push("bipartite: two cycles linked".into());
        }
    }
    Err("bipartite shaping continues by walk".into())
}

// ---------------------------------------------------------------------------
// public operations

fn finish(host: &crate::model::HostGraph, st: &State, lens: &[usize]) -> Result<Packing> {
    if !st.is_consistent() {
        return Err(Error::InternalInvariantBreach("repacking lost consistency".into()));
    }
    if !splits(st, lens) {
        return Err(Error::InternalInvariantBreach(format!("leave does not split into {:?}", lens)));
    }
    Ok(Packing::from_state(host.clone(), st))
}

/// Repacks so the leave splits into an `h`-cycle and an `(m1+m2)`-cycle,
/// each with at most one pure edge. Returns the case tags taken.
pub fn general_joining_traced(packing: &Packing, req: MergeRequest, seed: u64) -> Result<(Packing, Vec<String>)> {
    let host = packing.host();
    req.check(host.u(), host.w())?;
    let mut st = packing.to_state();
    leave_check(&st, &[req.h, req.m1, req.m2], req.mu)?;
    if find_triple(&st, &req).is_none() && !splits(&st, &[req.h, req.m1 + req.m2]) {
        return Err(Error::HypothesisViolated("leave has no h, m1, m2 cycle decomposition".into()));
    }
    let mut tr = Vec::new();
    general_joining_in(&mut st, req, seed, &mut tr)?;
    Ok((finish(host, &st, &[req.h, req.m1 + req.m2])?, tr))
}

pub fn general_joining(packing: &Packing, req: MergeRequest) -> Result<Packing> {
    general_joining_traced(packing, req, 0).map(|r| r.0)
}

pub fn bipartite_joining(packing: &Packing, h: usize, m: usize, m_prime: usize) -> Result<Packing> {
    let host = packing.host();
    let (u, w) = (host.u(), host.w());
    if m + m_prime > 3 * h || m + m_prime + h > 2 * (u + 1).min(w + 1) {
        return Err(Error::HypothesisViolated("bipartite joining bounds".into()));
    }
    let mut st = packing.to_state();
    leave_check(&st, &[h, m, m_prime], 0)?;
    let mut tr = Vec::new();
    let target = [h, m + m_prime];
    guarded(&mut st, &target, 0, &mut tr, |s, t| bipartite_in(s, h, m, m_prime, t))?;
    finish(host, &st, &target)
}

fn one_pure_chain(st: &State) -> Result<TwoChain> {
    if st.leave.pure_count(&st.frame) != 1 {
        return Err(Error::StructureMismatch("leave must have exactly one pure edge".into()));
    }
    two_chain(st).map_err(Error::StructureMismatch)
}

/// Leave is a `(p, q)`-chain whose pure edge sits at position `r` of the
/// `p`-cycle (counted from the link); split it into an `m`-cycle and the rest.
pub fn path_to_cycles(packing: &Packing, m: usize, p: usize, q: usize, r: usize) -> Result<Packing> {
    let host = packing.host();
    let st0 = packing.to_state();
    let ch = one_pure_chain(&st0)?;
    if ch.odd.len() != p || ch.even.len() != q {
        return Err(Error::StructureMismatch(format!("chain is ({}, {}), not ({}, {})", ch.odd.len(), ch.even.len(), p, q)));
    }
    let (_, r0) = orient(&st0.frame, &ch.odd);
    if r0 > r {
        return Err(Error::StructureMismatch(format!("pure edge is at position {}, not {}", r0, r)));
    }
    if m % 2 == 0 || m < 3 || p + q < m + 3 {
        return Err(Error::HypothesisViolated("m must be odd with m, p+q-m >= 3".into()));
    }
    if !(p <= m || (p >= m + 2 && r0 + 3 <= m)) {
        return Err(Error::HypothesisViolated("pure edge too far from the link".into()));
    }
    let mut st = st0;
    let target = [m, p + q - m];
    let mut tr = Vec::new();
    guarded(&mut st, &target, 0, &mut tr, |s, t| two_chain_in(s, m, t))?;
    finish(host, &st, &target)
}

/// Leave is a 2-chain with one pure edge; split it into an `m`-cycle and the rest.
pub fn two_chain_to_cycles(packing: &Packing, m: usize) -> Result<Packing> {
    let host = packing.host();
    let mut st = packing.to_state();
    if m % 2 == 0 {
        return Err(Error::HypothesisViolated("m must be odd".into()));
    }
    let e = st.leave.edge_count();
    if e % 2 == 0 {
        return Err(Error::StructureMismatch("a leave with one pure edge has odd size".into()));
    }
    let ch = one_pure_chain(&st)?;
    if m < 3 || e < m + 3 {
        return Err(Error::HypothesisViolated("m and the remainder must be at least 3".into()));
    }
    if m == 3 && !st.frame.high(ch.link) {
        return Err(Error::HypothesisViolated("link must be outer when m = 3".into()));
    }
    let target = [m, e - m];
    let mut tr = Vec::new();
    guarded(&mut st, &target, 0, &mut tr, |s, t| two_chain_in(s, m, t))?;
    finish(host, &st, &target)
}

fn ids_of(st: &State, vs: &[Vertex]) -> Vec<usize> {
    vs.iter().map(|v| vid(&st.frame, v)).collect()
}

fn verts_of(st: &State, ids: &[usize]) -> Vec<Vertex> {
    ids.iter().map(|&i| vert(&st.frame, i)).collect()
}

fn good_chain_one_pure(st: &State) -> Result<usize> {
    if st.leave.pure_count(&st.frame) != 1 {
        return Err(Error::StructureMismatch("leave must have exactly one pure edge".into()));
    }
    match shapes(st)?.as_slice() {
        [Shape::Chain { cycles, good: true, .. }] => Ok(cycles.len()),
        _ => Err(Error::StructureMismatch("leave is not a good chain".into())),
    }
}

/// Shortens the path `path` of a two-path decomposition of a good chain by
/// two, using the pure-free prefix of length `r`.
pub fn reduce_path_length(packing: &Packing, path: &[Vertex], r: usize) -> Result<(Packing, Vec<Vertex>)> {
    let host = packing.host();
    let mut st = packing.to_state();
    good_chain_one_pure(&st)?;
    let p = ids_of(&st, path);
    if !path_split_ok(&st, &p) || !st.frame.high(p[0]) || !st.frame.high(*p.last().unwrap()) {
        return Err(Error::StructureMismatch("path does not split the leave with outer ends".into()));
    }
    if p.len() < 5 {
        return Err(Error::StructureMismatch("path shorter than 4".into()));
    }
    let mut tr = Vec::new();
    let q = reduce_path_in(&mut st, p, r, &mut tr).map_err(Error::StructureMismatch)?;
    if !path_split_ok(&st, &q) || good_chain_one_pure(&st).is_err() {
        return Err(Error::InternalInvariantBreach("shortened path lost the chain shape".into()));
    }
    let out = verts_of(&st, &q);
    Ok((Packing::from_state(host.clone(), &st), out))
}

/// Leave is a good chain with one pure edge and `m + m'` edges; repack so
/// it splits into an `m`-path and an `m'`-path whose end vertices are twins.
pub fn two_paths(packing: &Packing, m: usize, m_prime: usize) -> Result<(Packing, Vec<Vertex>, Vec<Vertex>)> {
    let host = packing.host();
    let mut st = packing.to_state();
    let s = good_chain_one_pure(&st)?;
    if (m + m_prime) % 2 == 0 || st.leave.edge_count() != m + m_prime {
        return Err(Error::StructureMismatch("leave size must be the odd total m + m'".into()));
    }
    if m.min(m_prime) < s.max(3) {
        return Err(Error::HypothesisViolated(format!("{}-chain cannot split into paths of {} and {}", s, m, m_prime)));
    }
    let mut tr = Vec::new();
    let (a, b) = two_paths_in(&mut st, m, m_prime, &mut tr).map_err(Error::SearchExhausted)?;
    Ok((Packing::from_state(host.clone(), &st), verts_of(&st, &a), verts_of(&st, &b)))
}

/// Leave is a good chain or ring with one pure edge; split it into an
/// `m`-cycle and an `m'`-cycle.
pub fn chain_or_ring_to_two_cycles(packing: &Packing, m: usize, m_prime: usize) -> Result<Packing> {
    let host = packing.host();
    let (u, w) = (host.u(), host.w());
    let mut st = packing.to_state();
    if st.leave.pure_count(&st.frame) != 1 {
        return Err(Error::StructureMismatch("leave must have exactly one pure edge".into()));
    }
    let s = match shapes(&st)?.as_slice() {
        [Shape::Chain { cycles, good: true, links }] => {
            if cycles.len() == 2 && (m == 3 || m_prime == 3) && !st.frame.high(links[0]) {
                return Err(Error::HypothesisViolated("2-chain with a hole link cannot give a 3-cycle".into()));
            }
            cycles.len()
        }
        [Shape::Ring { cycles, good: true, .. }] => cycles.len(),
        _ => return Err(Error::StructureMismatch("leave is not a good chain or ring".into())),
    };
    let e = m + m_prime;
    if st.leave.edge_count() != e || e % 2 == 0 {
        return Err(Error::StructureMismatch("leave size must be the odd total m + m'".into()));
    }
    if m.min(m_prime) < s.max(3) || e > (2 * u + 3).min(2 * w + 1).min(u + w) || ((m == 3 || m_prime == 3) && e > 2 * u + 1) {
        return Err(Error::HypothesisViolated("lengths outside the chain bounds".into()));
    }
    let mut tr = Vec::new();
    guarded(&mut st, &[m, m_prime], 0, &mut tr, |s, t| two_cycles_in(s, m, m_prime, t))?;
    finish(host, &st, &[m, m_prime])
}

/// Leave has `mu` pure edges and is one good chain plus cycles; split it
/// into an `m`-cycle and an `m'`-cycle.
pub fn degree4_merge(packing: &Packing, m: usize, m_prime: usize, mu: usize) -> Result<Packing> {
    let host = packing.host();
    let mut st = packing.to_state();
    if !(1..=2).contains(&mu) || st.leave.pure_count(&st.frame) != mu {
        return Err(Error::StructureMismatch(format!("leave must have exactly {} pure edges", mu)));
    }
    if st.leave.edge_count() != m + m_prime {
        return Err(Error::StructureMismatch("leave size differs from m + m'".into()));
    }
    let sh = shapes(&st)?;
    let chains = sh.iter().filter(|s| matches!(s, Shape::Chain { .. })).count();
    let cycles = sh.iter().filter(|s| matches!(s, Shape::Cycle(_))).count();
    if chains != 1 || chains + cycles != sh.len() {
        return Err(Error::StructureMismatch("leave is not one chain plus cycles".into()));
    }
    let mut tr = Vec::new();
    guarded(&mut st, &[m, m_prime], 0, &mut tr, |s, t| degree4_in(s, m, m_prime, mu, t))?;
    finish(host, &st, &[m, m_prime])
}

/// Leave has `mu` pure edges and some vertex of degree at least 4; split it
/// into an `m`-cycle and an `m'`-cycle.
pub fn rearrange_deg4(packing: &Packing, m: usize, m_prime: usize, mu: usize) -> Result<Packing> {
    let host = packing.host();
    let (u, w) = (host.u(), host.w());
    let mut st = packing.to_state();
    let e = m + m_prime;
    let bad = |s: &str| Err(Error::HypothesisViolated(s.into()));
    if !(1..=2).contains(&mu) || st.leave.pure_count(&st.frame) != mu || st.leave.edge_count() != e {
        return bad("leave size or pure count");
    }
    let floor = (e / 4 + mu).max(3);
    if m.min(m_prime) < floor || e > (2 * u + 4).min(2 * w + 1).min(u + w) {
        return bad("lengths outside the bounds");
    }
    let three = m == 3 || m_prime == 3;
    if three && e > 2 * (u + 1) {
        return bad("too long for a 3-cycle");
    }
    let sup = st.leave.support();
    let heavy: Vec<usize> = bits_list(sup).into_iter().filter(|&v| st.leave.degree(v) >= 4).collect();
    if heavy.is_empty() || (three && !heavy.iter().any(|&v| st.frame.high(v))) {
        return bad("no suitable vertex of degree at least 4");
    }
    let mut tr = Vec::new();
    rearrange_deg4_in(&mut st, m, m_prime, mu, 0, &mut tr)?;
    finish(host, &st, &[m, m_prime])
}

/// State-level form of [`rearrange_deg4`]; hypotheses are the caller's.
/// Cycle indices are preserved, so tags kept alongside stay valid.
pub(crate) fn rearrange_deg4_in(st: &mut State, m: usize, m_prime: usize, mu: usize, seed: u64, tr: &mut Vec<String>) -> Result<()> {
    guarded(st, &[m, m_prime], seed, tr, |s, t| {
        pick_apart_in(s).map_err(|e| e.to_string())?;
        degree4_in(s, m, m_prime, mu, t)
    })
}

/// State-level form of [`general_joining_traced`] with the same index
/// guarantee as [`rearrange_deg4_in`].
pub(crate) fn general_joining_in(st: &mut State, req: MergeRequest, seed: u64, tr: &mut Vec<String>) -> Result<()> {
    let target = [req.h, req.m1 + req.m2];
    if req.mu == 0 {
        tr.push("bipartite joining".into());
        guarded(st, &target, seed, tr, |s, t| bipartite_in(s, req.h, req.m1, req.m2, t))
    } else {
        guarded(st, &target, seed, tr, |s, t| general_in(s, &req, t, 0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::packing_with_leave;
    use crate::model::{build_host, Cycle};

    fn cyc(s: &str) -> Cycle {
        Cycle::new(s.split_whitespace().map(|t| t.parse().unwrap()).collect())
    }

    fn setup(u: usize, w: usize, leave: &[&str]) -> Packing {
        let host = build_host(u, w).unwrap();
        let cs: Vec<Cycle> = leave.iter().map(|s| cyc(s)).collect();
        packing_with_leave(&host, &cs, 7).unwrap()
    }

    fn leave_splits(p: &Packing, lens: &[usize]) -> bool {
        splits(&p.to_state(), lens)
    }

    #[test]
    fn joins_three_disjoint_cycles() {
        let p = setup(9, 10, &["W0 W1 U0 W2 U1", "U2 W3 U3 W4", "U4 W5 U5 W6 U6 W7"]);
        let req = MergeRequest { h: 5, m1: 4, m2: 6, mu: 1 };
        let (q, tags) = general_joining_traced(&p, req, 1).unwrap();
        assert!(leave_splits(&q, &[5, 10]), "{:?}", tags);
        assert_eq!(q.cycles().len(), p.cycles().len());
    }

    #[test]
    fn joins_overlapping_cycles() {
        let p = setup(9, 10, &["W0 W1 U0 W2 U1", "U0 W3 U2 W4", "U3 W3 U4 W5 U5 W6"]);
        let req = MergeRequest { h: 5, m1: 4, m2: 6, mu: 1 };
        let q = general_joining(&p, req).unwrap();
        assert!(leave_splits(&q, &[5, 10]));
    }

    #[test]
    fn joins_without_pure_edges() {
        let p = setup(9, 10, &["U0 W0 U1 W1", "U2 W2 U3 W3", "U4 W4 U5 W5 U6 W6"]);
        let q = bipartite_joining(&p, 4, 4, 6).unwrap();
        assert!(leave_splits(&q, &[4, 10]));
    }

    #[test]
    fn two_chain_gives_triangle() {
        let p = setup(9, 10, &["W0 W1 U0 W2 U1", "W2 U2 W3 U3"]);
        let q = two_chain_to_cycles(&p, 3).unwrap();
        assert!(leave_splits(&q, &[3, 6]));
        let q = two_chain_to_cycles(&p, 5).unwrap();
        assert!(leave_splits(&q, &[5, 4]));
    }

    #[test]
    fn two_chain_with_hole_link_rejects_triangle() {
        let p = setup(9, 10, &["U0 W0 W1 U1 W2", "U0 W3 U2 W4"]);
        assert!(matches!(two_chain_to_cycles(&p, 3), Err(Error::HypothesisViolated(_))));
        assert!(matches!(two_chain_to_cycles(&p, 4), Err(Error::HypothesisViolated(_))));
    }

    #[test]
    fn three_chain_splits() {
        // W0 and U1 are the links; the pure edge sits in the first cycle
        let p = setup(9, 10, &["W0 W1 U0", "W0 U1 W2 U2", "U1 W3 U3 W4"]);
        let q = chain_or_ring_to_two_cycles(&p, 5, 6).unwrap();
        assert!(leave_splits(&q, &[5, 6]));
    }

    #[test]
    fn paths_of_a_good_chain() {
        let p = setup(9, 10, &["W0 W1 U0", "W0 U1 W2 U2", "U1 W3 U3 W4"]);
        let (q, a, b) = two_paths(&p, 5, 6).unwrap();
        let mut lens = [a.len() - 1, b.len() - 1];
        lens.sort();
        assert_eq!(lens, [5, 6]);
        assert_eq!(a[0], b[0]);
        assert_eq!(a.last(), b.last());
        assert_eq!(q.leave().edge_count(), 11);
    }

    #[test]
    fn heavy_vertex_rearranged() {
        // U0 has degree 4 in the leave
        let p = setup(9, 10, &["W0 W1 U0 W2 U1", "U0 W3 U2 W4 U3 W5"]);
        let q = rearrange_deg4(&p, 5, 6, 1).unwrap();
        assert!(leave_splits(&q, &[5, 6]));
    }

    #[test]
    fn request_bounds() {
        let ok = MergeRequest { h: 5, m1: 4, m2: 6, mu: 1 };
        assert!(ok.check(9, 10).is_ok());
        assert!(MergeRequest { h: 3, m1: 4, m2: 6, mu: 1 }.check(9, 10).is_err());
        assert!(MergeRequest { h: 5, m1: 4, m2: 6, mu: 2 }.check(9, 10).is_err());
        assert!(MergeRequest { h: 9, m1: 4, m2: 6, mu: 1 }.check(9, 10).is_ok());
        assert!(MergeRequest { h: 9, m1: 6, m2: 6, mu: 1 }.check(9, 10).is_err());
    }
}
