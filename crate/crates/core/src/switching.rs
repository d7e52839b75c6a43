//! Twin switches and the leave-shaping moves built on them.
//!
//! An (alpha, beta)-switch exchanges the roles of two twin vertices along a
//! chain of cycle segments. It never changes cycle lengths, and the leave
//! changes in exactly four edges.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{Cycle, HostGraph, LeaveView, Packing, Part, Vertex};
use crate::state::State;

/// Result of one switch.
#[derive(Debug, Clone)]
pub struct SwitchOutcome {
    pub packing_after: Packing,
    pub terminus: Vertex,
    /// The pairing of the switchable vertices before the switch.
    pub pair_partition: Vec<(Vertex, Vertex)>,
}

fn twin_ids(host: &HostGraph, a: &Vertex, b: &Vertex) -> Result<(usize, usize)> {
    if !host.contains(a) || !host.contains(b) || a == b || !a.is_twin(b) {
        return Err(Error::NotTwin(a.to_string(), b.to_string()));
    }
    Ok((host.id(a), host.id(b)))
}

/// Pairs `(origin, terminus)` over the switchable set, least origin first.
pub(crate) fn pairs_in(st: &State, a: usize, b: usize) -> Vec<(usize, usize)> {
    let mut left = st.switch_set(a, b);
    let mut out = Vec::new();
    while left != 0 {
        let x = left.trailing_zeros() as usize;
        let y = st.terminus(a, b, x).expect("member of the switch set");
        debug_assert!(left >> y & 1 == 1 && x != y, "terminus outside the switch set");
        left &= !(1 << x) & !(1 << y);
        out.push((x.min(y), x.max(y)));
    }
    out
}

/// Partition of the vertices adjacent in the leave to exactly one of
/// `alpha`, `beta` into origin/terminus pairs.
pub fn switch_pairs(packing: &Packing, alpha: Vertex, beta: Vertex) -> Result<Vec<(Vertex, Vertex)>> {
    let host = packing.host();
    let (a, b) = twin_ids(host, &alpha, &beta)?;
    let st = packing.to_state();
    Ok(pairs_in(&st, a, b).into_iter().map(|(x, y)| (host.vertex(x), host.vertex(y))).collect())
}

pub fn perform_switch(packing: &Packing, alpha: Vertex, beta: Vertex, origin: Vertex) -> Result<SwitchOutcome> {
    let host = packing.host();
    let (a, b) = twin_ids(host, &alpha, &beta)?;
    if !host.contains(&origin) {
        return Err(Error::InvalidOrigin(origin.to_string()));
    }
    let mut st = packing.to_state();
    let pairs = pairs_in(&st, a, b);
    let plan = st.plan_switch(a, b, host.id(&origin)).ok_or_else(|| Error::InvalidOrigin(origin.to_string()))?;
    st.apply(&plan);
    if !st.is_consistent() {
        return Err(Error::InternalInvariantBreach("switch broke the packing".into()));
    }
    Ok(SwitchOutcome {
        packing_after: Packing::from_state(host.clone(), &st),
        terminus: host.vertex(plan.terminus),
        pair_partition: pairs.into_iter().map(|(x, y)| (host.vertex(x), host.vertex(y))).collect(),
    })
}

/// Moves two units of degree from `y` to `z` in place. `None` if no switch
/// has both ends among the leave neighbours of `y` that `z` lacks.
pub(crate) fn equalise_in(st: &mut State, y: usize, z: usize) -> Option<(usize, usize)> {
    let only_y = st.leave.adj[y] & !st.leave.adj[z] & !(1 << y) & !(1 << z);
    for (x, t) in pairs_in(st, y, z) {
        if only_y >> x & 1 == 1 && only_y >> t & 1 == 1 {
            let plan = st.plan_switch(y, z, x).expect("paired origin");
            st.apply(&plan);
            return Some((x, t));
        }
    }
    None
}

pub fn equalise_one_step(packing: &Packing, y: Vertex, z: Vertex) -> Result<Packing> {
    let host = packing.host();
    let (a, b) = twin_ids(host, &y, &z)?;
    let mut st = packing.to_state();
    if st.leave.degree(a) <= st.leave.degree(b) {
        return Err(Error::DegreeNotGreater);
    }
    equalise_in(&mut st, a, b).ok_or_else(|| Error::InternalInvariantBreach("no equalising switch".into()))?;
    Ok(Packing::from_state(host.clone(), &st))
}

/// Which absent-vertex guarantee to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsolateMode {
    /// A hole vertex missing from the leave, given a hole vertex of degree ≥ 4.
    I,
    /// A vertex of the given part missing from the leave.
    II(Part),
    /// Twins `x`, `y` with `deg(x) ≥ 4` and `y` missing from the leave.
    III,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Witness {
    Vertex(Vertex),
    Pair(Vertex, Vertex),
}

pub fn find_absent_twin(host: &HostGraph, leave: &LeaveView, mode: IsolateMode) -> Result<Witness> {
    let (u, w) = (host.u(), host.w());
    let e = leave.edge_count();
    let mu = leave.pure_count;
    if !(1..=2).contains(&mu) {
        return Err(Error::BoundViolated(format!("leave has {} pure edges", mu)));
    }
    let verts = leave.vertices();
    let deg: BTreeMap<Vertex, usize> = verts.iter().map(|v| (*v, leave.degree(v))).collect();
    if deg.values().any(|d| d % 2 == 1) {
        return Err(Error::BoundViolated("leave has a vertex of odd degree".into()));
    }
    let heavy = |part: Option<Part>| {
        let ds: Vec<usize> = deg.iter().filter(|(v, _)| part.map_or(true, |p| v.part == p)).map(|(_, &d)| d).collect();
        ds.iter().filter(|&&d| d >= 4).count() >= 2 || ds.iter().any(|&d| d >= 6)
    };
    let absent = |part: Part| {
        let size = if part == Part::Hole { u } else { w };
        (0..size).map(|i| Vertex { part, index: i }).find(|v| !deg.contains_key(v))
    };
    let none = || Error::NoWitness(format!("{:?} on a leave of size {}", mode, e));
    match mode {
        IsolateMode::I => {
            if e > 2 * (u + 1) {
                return Err(Error::BoundViolated(format!("{} edges exceed 2(u+1)", e)));
            }
            if !deg.iter().any(|(v, &d)| v.part == Part::Hole && d >= 4) {
                return Err(Error::BoundViolated("no hole vertex of degree at least 4".into()));
            }
            absent(Part::Hole).map(Witness::Vertex).ok_or_else(none)
        }
        IsolateMode::II(s) => {
            if e > (2 * (u + 2)).min(2 * w + 1) {
                return Err(Error::BoundViolated(format!("{} edges exceed min(2(u+2), 2w+1)", e)));
            }
            if !heavy(Some(s)) {
                return Err(Error::BoundViolated("part lacks two degree-4 or one degree-6 vertex".into()));
            }
            absent(s).map(Witness::Vertex).ok_or_else(none)
        }
        IsolateMode::III => {
            if e > (2 * (u + 2)).min(2 * w + 1).min(u + w) {
                return Err(Error::BoundViolated(format!("{} edges exceed min(2(u+2), 2w+1, u+w)", e)));
            }
            if !heavy(None) {
                return Err(Error::BoundViolated("no two degree-4 or one degree-6 vertex".into()));
            }
            for (x, _) in deg.iter().filter(|(_, &d)| d >= 4) {
                if let Some(y) = absent(x.part) {
                    return Ok(Witness::Pair(*x, y));
                }
            }
            Err(none())
        }
    }
}

/// One component of a reduced leave.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Component {
    Cycle(Cycle),
    /// Cycles `A_1..A_s` in order; `links[i]` is shared by `A_i` and `A_{i+1}`.
    /// A good chain is oriented so `A_1` is the qualifying end cycle.
    Chain { cycles: Vec<Cycle>, links: Vec<Vertex>, good: bool },
    /// Ring cycles in cyclic order; `links[i]` is shared by `A_i` and
    /// `A_{i+1 mod s}`. For `s = 2` both shared vertices are listed.
    Ring { cycles: Vec<Cycle>, links: Vec<Vertex>, good: bool },
    Other { vertices: Vec<Vertex>, edge_count: usize },
}

impl Component {
    pub fn edge_count(&self) -> usize {
        match self {
            Component::Cycle(c) => c.len(),
            Component::Chain { cycles, .. } | Component::Ring { cycles, .. } => cycles.iter().map(|c| c.len()).sum(),
            Component::Other { edge_count, .. } => *edge_count,
        }
    }

    pub fn cycle_lengths(&self) -> Vec<usize> {
        match self {
            Component::Cycle(c) => vec![c.len()],
            Component::Chain { cycles, .. } | Component::Ring { cycles, .. } => cycles.iter().map(|c| c.len()).collect(),
            Component::Other { .. } => Vec::new(),
        }
    }

    /// Number of cycles in a chain or ring.
    pub fn s(&self) -> usize {
        match self {
            Component::Chain { cycles, .. } | Component::Ring { cycles, .. } => cycles.len(),
            _ => 0,
        }
    }

    pub fn is_good(&self) -> bool {
        matches!(self, Component::Chain { good: true, .. } | Component::Ring { good: true, .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureReport {
    pub components: Vec<Component>,
}

impl StructureReport {
    pub fn cycle_lengths(&self) -> Option<Vec<usize>> {
        let mut out = Vec::new();
        for c in &self.components {
            match c {
                Component::Cycle(c) => out.push(c.len()),
                _ => return None,
            }
        }
        out.sort_unstable();
        Some(out)
    }

    pub fn chains(&self) -> impl Iterator<Item = &Component> {
        self.components.iter().filter(|c| matches!(c, Component::Chain { .. }))
    }
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl fmt::Display for StructureReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.components.is_empty() {
            return writeln!(f, "trivial");
        }
        for c in &self.components {
            match c {
                Component::Cycle(c) => writeln!(f, "cycle {} {}", c.len(), c)?,
                Component::Chain { cycles, links, good } | Component::Ring { cycles, links, good } => {
                    let tag = if matches!(c, Component::Chain { .. }) { "chain" } else { "ring" };
                    writeln!(
                        f,
                        "{} s={} lengths=[{}] links=[{}] good={}",
                        tag,
                        cycles.len(),
                        join(&c.cycle_lengths()),
                        join(links),
                        good
                    )?;
                    for a in cycles {
                        writeln!(f, "  {}", a)?;
                    }
                }
                Component::Other { vertices, edge_count } => {
                    writeln!(f, "other {} edges on [{}]", edge_count, join(vertices))?
                }
            }
        }
        Ok(())
    }
}

fn has_pure(c: &[Vertex]) -> bool {
    let l = c.len();
    (0..l).any(|i| c[i].part == Part::Outer && c[(i + 1) % l].part == Part::Outer)
}

fn mixed(a: &Vertex, b: &Vertex) -> bool {
    a.part != b.part
}

/// Goodness of a chain given cycles in order; may reverse the order so the
/// qualifying end comes first.
fn chain_good(cycles: &mut Vec<Vec<Vertex>>, links: &mut Vec<Vertex>) -> bool {
    let s = cycles.len();
    if s == 2 {
        return true;
    }
    if !(1..s - 1).all(|i| mixed(&links[i - 1], &links[i])) {
        return false;
    }
    let end_ok = |c: &[Vertex], x: &Vertex| x.part == Part::Outer && has_pure(c);
    if end_ok(&cycles[0], &links[0]) {
        return true;
    }
    if end_ok(&cycles[s - 1], &links[s - 2]) {
        cycles.reverse();
        links.reverse();
        return true;
    }
    false
}

fn ring_good(cycles: &[Vec<Vertex>], links: &[Vertex]) -> bool {
    let s = cycles.len();
    if s == 2 {
        return true;
    }
    // ring cycle i carries links i-1 and i
    let ends = |i: usize| (links[(i + s - 1) % s], links[i]);
    if s % 2 == 0 {
        return (0..s).all(|i| {
            let (a, b) = ends(i);
            mixed(&a, &b)
        });
    }
    let special: Vec<usize> = (0..s)
        .filter(|&i| {
            let (a, b) = ends(i);
            a.part == Part::Outer && b.part == Part::Outer
        })
        .collect();
    special.len() == 1
        && has_pure(&cycles[special[0]])
        && (0..s).filter(|&i| i != special[0]).all(|i| {
            let (a, b) = ends(i);
            mixed(&a, &b)
        })
}

struct Segment {
    ends: (Vertex, Vertex),
    /// Vertices from one end to the other, ends included.
    path: Vec<Vertex>,
}

fn key(a: Vertex, b: Vertex) -> (Vertex, Vertex) {
    if a < b { (a, b) } else { (b, a) }
}

/// Glue two parallel segments into a cycle.
fn close(a: &Segment, b: &Segment) -> Vec<Vertex> {
    let mut c = a.path.clone();
    let mut back = b.path.clone();
    if back[0] != *c.last().unwrap() {
        back.reverse();
    }
    c.extend_from_slice(&back[1..back.len() - 1]);
    c
}

fn loop_cycle(s: &Segment) -> Vec<Vertex> {
    s.path[..s.path.len() - 1].to_vec()
}

fn classify_component(adj: &BTreeMap<Vertex, Vec<Vertex>>, verts: &[Vertex]) -> Component {
    let edge_count = verts.iter().map(|v| adj[v].len()).sum::<usize>() / 2;
    let other = || Component::Other { vertices: verts.to_vec(), edge_count };
    if verts.iter().any(|v| adj[v].len() > 4) {
        return other();
    }
    let links: Vec<Vertex> = verts.iter().copied().filter(|v| adj[v].len() == 4).collect();
    if links.is_empty() {
        // a single cycle: walk it
        let mut c = vec![verts[0]];
        let mut prev = verts[0];
        let mut cur = adj[&verts[0]][0];
        while cur != verts[0] {
            c.push(cur);
            let next = if adj[&cur][0] == prev { adj[&cur][1] } else { adj[&cur][0] };
            prev = cur;
            cur = next;
        }
        return Component::Cycle(Cycle::new(c));
    }
    // cut the component at degree-4 vertices into segments
    let mut used: HashSet<(Vertex, Vertex)> = HashSet::new();
    let mut segs: Vec<Segment> = Vec::new();
    for &x in &links {
        for &n in &adj[&x] {
            if used.contains(&key(x, n)) {
                continue;
            }
            let mut path = vec![x];
            let (mut prev, mut cur) = (x, n);
            used.insert(key(prev, cur));
            while adj[&cur].len() == 2 {
                path.push(cur);
                let next = if adj[&cur][0] == prev { adj[&cur][1] } else { adj[&cur][0] };
                prev = cur;
                cur = next;
                used.insert(key(prev, cur));
            }
            path.push(cur);
            segs.push(Segment { ends: key(x, cur), path });
        }
    }
    let loops_at = |x: Vertex| segs.iter().filter(|s| s.ends == (x, x)).count();
    let between = |x: Vertex, y: Vertex| segs.iter().filter(|s| s.ends == key(x, y)).collect::<Vec<_>>();
    // link multigraph: simple neighbours of each link
    let mut nb: BTreeMap<Vertex, BTreeSet<Vertex>> = links.iter().map(|&x| (x, BTreeSet::new())).collect();
    for s in &segs {
        if s.ends.0 != s.ends.1 {
            nb.get_mut(&s.ends.0).unwrap().insert(s.ends.1);
            nb.get_mut(&s.ends.1).unwrap().insert(s.ends.0);
        }
    }
    let k = links.len();
    let total_loops: usize = links.iter().map(|&x| loops_at(x)).sum();
    let to_cycles = |cs: Vec<Vec<Vertex>>| cs.into_iter().map(Cycle::new).collect::<Vec<_>>();

    // 2-ring: two links joined by four segments
    if k == 2 && total_loops == 0 && between(links[0], links[1]).len() == 4 {
        let p = between(links[0], links[1]);
        let mut order: Vec<&Segment> = p.clone();
        order.sort_by_key(|s| (s.path.len(), s.path.clone()));
        let cycles = vec![close(order[0], order[1]), close(order[2], order[3])];
        return Component::Ring { cycles: to_cycles(cycles), links: links.clone(), good: true };
    }
    // chain: a path of links with doubled edges and one loop at each end
    let ends: Vec<Vertex> = links.iter().copied().filter(|x| nb[x].len() <= 1).collect();
    let is_path = if k == 1 {
        loops_at(links[0]) == 2
    } else {
        ends.len() == 2
            && links.iter().all(|x| nb[x].len() <= 2)
            && total_loops == 2
            && ends.iter().all(|&x| loops_at(x) == 1)
    };
    if is_path {
        let mut order = vec![ends.first().copied().unwrap_or(links[0])];
        while order.len() < k {
            let last = *order.last().unwrap();
            let next = nb[&last].iter().copied().find(|v| !order.contains(v));
            match next {
                Some(v) => order.push(v),
                None => return other(),
            }
        }
        let mut cycles = Vec::new();
        let first_loops: Vec<&Segment> = segs.iter().filter(|s| s.ends == (order[0], order[0])).collect();
        cycles.push(loop_cycle(first_loops[0]));
        for i in 1..k {
            let p = between(order[i - 1], order[i]);
            if p.len() != 2 {
                return other();
            }
            cycles.push(close(p[0], p[1]));
        }
        let last_loops: Vec<&Segment> = segs.iter().filter(|s| s.ends == (order[k - 1], order[k - 1])).collect();
        cycles.push(loop_cycle(last_loops[last_loops.len() - 1]));
        let mut link_list = order;
        let good = chain_good(&mut cycles, &mut link_list);
        return Component::Chain { cycles: to_cycles(cycles), links: link_list, good };
    }
    // ring of s >= 3: links on a cycle, doubled edges, no loops
    if k >= 3 && total_loops == 0 && links.iter().all(|x| nb[x].len() == 2) {
        let mut order = vec![links[0]];
        while order.len() < k {
            let last = *order.last().unwrap();
            match nb[&last].iter().copied().find(|v| !order.contains(v)) {
                Some(v) => order.push(v),
                None => return other(),
            }
        }
        let mut cycles = Vec::new();
        for i in 0..k {
            let p = between(order[(i + k - 1) % k], order[i]);
            if p.len() != 2 {
                return other();
            }
            cycles.push(close(p[0], p[1]));
        }
        // cycle i sits between links i-1 and i; report links[i] = A_i ∩ A_{i+1}
        let good = ring_good(&cycles, &order);
        return Component::Ring { cycles: to_cycles(cycles), links: order, good };
    }
    other()
}

pub fn classify_structure(leave: &LeaveView) -> Result<StructureReport> {
    if !leave.is_even() {
        return Err(Error::NotEven);
    }
    let mut adj: BTreeMap<Vertex, Vec<Vertex>> = BTreeMap::new();
    for &(x, y) in leave.edges() {
        adj.entry(x).or_default().push(y);
        adj.entry(y).or_default().push(x);
    }
    let mut seen: BTreeSet<Vertex> = BTreeSet::new();
    let mut components = Vec::new();
    for &start in adj.keys() {
        if seen.contains(&start) {
            continue;
        }
        let mut comp = vec![start];
        seen.insert(start);
        let mut i = 0;
        while i < comp.len() {
            for &n in &adj[&comp[i]] {
                if seen.insert(n) {
                    comp.push(n);
                }
            }
            i += 1;
        }
        comp.sort();
        components.push(classify_component(&adj, &comp));
    }
    Ok(StructureReport { components })
}

/// Upper bound on the components of a leave with one degree-4 vertex,
/// all other degrees 2, and `mu` pure edges.
pub fn max_components_bound(edge_count: usize, mu: usize) -> usize {
    ((edge_count + mu) / 4).saturating_sub(1)
}

/// Half the total excess degree of the reduced leave over 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Deficiency {
    pub value: usize,
}

pub(crate) fn deficiency_of(st: &State) -> usize {
    let total: usize = (0..st.frame.n).map(|x| st.leave.degree(x)).filter(|&d| d > 2).map(|d| d - 2).sum();
    total / 2
}

pub fn deficiency(packing: &Packing) -> Deficiency {
    let leave = packing.leave();
    let total: usize = leave.vertices().iter().map(|v| leave.degree(v)).filter(|&d| d > 2).map(|d| d - 2).sum();
    Deficiency { value: total / 2 }
}

pub(crate) fn component_count(st: &State) -> usize {
    st.leave.components().len()
}

/// Repeated equalising until exactly one leave vertex has degree 4.
/// Hole vertices are flattened first so that a surviving outer
/// degree-4 vertex stays outer.
pub(crate) fn pick_apart_in(st: &mut State) -> Result<()> {
    let n = st.frame.n;
    loop {
        let d = deficiency_of(st);
        if d <= 1 {
            return Ok(());
        }
        let support = st.leave.support();
        let mut moved = false;
        'classes: for high in [false, true] {
            let class: Vec<usize> = (0..n).filter(|&x| st.frame.high(x) == high).collect();
            let ys: Vec<usize> = class.iter().copied().filter(|&x| st.leave.degree(x) >= 4).collect();
            let zs: Vec<usize> = class.iter().copied().filter(|&x| support >> x & 1 == 0).collect();
            for &y in &ys {
                for &z in &zs {
                    if equalise_in(st, y, z).is_some() {
                        moved = true;
                        break 'classes;
                    }
                }
            }
        }
        if !moved {
            return Err(Error::InternalInvariantBreach(format!("no absent twin with deficiency {}", d)));
        }
    }
}

pub fn pick_apart(packing: &Packing, mu: usize) -> Result<Packing> {
    let host = packing.host();
    let (u, w) = (host.u(), host.w());
    let leave = packing.leave();
    let e = leave.edge_count();
    if !(1..=2).contains(&mu) || leave.pure_count != mu {
        return Err(Error::HypothesisViolated(format!("leave has {} pure edges, expected {}", leave.pure_count, mu)));
    }
    if e > (2 * (u + 2)).min(2 * w + 1).min(u + w) {
        return Err(Error::HypothesisViolated(format!("{} leave edges exceed min(2(u+2), 2w+1, u+w)", e)));
    }
    if !leave.is_even() {
        return Err(Error::HypothesisViolated("leave is not even".into()));
    }
    if leave.vertices().iter().all(|v| leave.degree(v) < 4) {
        return Err(Error::HypothesisViolated("no vertex of degree at least 4".into()));
    }
    let mut st = packing.to_state();
    let (k, d) = (component_count(&st), deficiency_of(&st));
    pick_apart_in(&mut st)?;
    if component_count(&st) + 1 > k + d {
        return Err(Error::InternalInvariantBreach("pick-apart produced too many components".into()));
    }
    Ok(Packing::from_state(host.clone(), &st))
}
