//! Host graphs, cycles, packings, leaves and the independent verifier.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{Frame, State};

/// Which side of the host a vertex lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Part {
    /// The hole `U`: no two hole vertices are adjacent.
    Hole,
    /// The outside `W`.
    Outer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Vertex {
    pub part: Part,
    pub index: usize,
}

impl Vertex {
    pub fn hole(index: usize) -> Vertex {
        Vertex { part: Part::Hole, index }
    }

    pub fn outer(index: usize) -> Vertex {
        Vertex { part: Part::Outer, index }
    }

    /// Same part tag. In the host this coincides with having the same
    /// neighbourhood apart from each other.
    pub fn is_twin(&self, other: &Vertex) -> bool {
        self.part == other.part && self != other
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.part {
            Part::Hole => write!(f, "U{}", self.index),
            Part::Outer => write!(f, "W{}", self.index),
        }
    }
}

impl FromStr for Vertex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Vertex> {
        let bad = || Error::Parse(format!("bad vertex token {:?}", s));
        let (tag, rest) = s.split_at(s.char_indices().nth(1).map(|(i, _)| i).ok_or_else(bad)?);
        let index: usize = rest.parse().map_err(|_| bad())?;
        if rest.starts_with('+') || (rest.len() > 1 && rest.starts_with('0')) {
            return Err(bad());
        }
        match tag {
            "U" => Ok(Vertex::hole(index)),
            "W" => Ok(Vertex::outer(index)),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Pure,
    Cross,
}

/// `K_{u+w} - K_u` with hole `U = {U0..}` and outside `W = {W0..}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HostGraph {
    u: usize,
    w: usize,
}

/// Largest vertex count the dense representation supports.
pub const MAX_HOST_VERTICES: usize = crate::state::MAX_VERTICES;

pub fn build_host(u: usize, w: usize) -> Result<HostGraph> {
    if u == 0 || w == 0 {
        return Err(Error::ZeroPart);
    }
    if u + w > MAX_HOST_VERTICES {
        return Err(Error::OutOfScope(format!("u + w = {} exceeds {}", u + w, MAX_HOST_VERTICES)));
    }
    Ok(HostGraph { u, w })
}

impl HostGraph {
    pub fn u(&self) -> usize {
        self.u
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn edge_count(&self) -> usize {
        self.u * self.w + self.w * (self.w - 1) / 2
    }

    pub fn pure_edge_count(&self) -> usize {
        self.w * (self.w - 1) / 2
    }

    pub fn contains(&self, v: &Vertex) -> bool {
        match v.part {
            Part::Hole => v.index < self.u,
            Part::Outer => v.index < self.w,
        }
    }

    pub fn vertices(&self) -> Vec<Vertex> {
        (0..self.u).map(Vertex::hole).chain((0..self.w).map(Vertex::outer)).collect()
    }

    pub fn is_edge(&self, x: &Vertex, y: &Vertex) -> bool {
        self.contains(x) && self.contains(y) && x != y && !(x.part == Part::Hole && y.part == Part::Hole)
    }

    pub fn edges(&self) -> Vec<(Vertex, Vertex)> {
        let vs = self.vertices();
        let mut out = Vec::with_capacity(self.edge_count());
        for i in 0..vs.len() {
            for j in i + 1..vs.len() {
                if self.is_edge(&vs[i], &vs[j]) {
                    out.push((vs[i], vs[j]));
                }
            }
        }
        out
    }

    pub(crate) fn frame(&self) -> Frame {
        Frame::host(self.u, self.w)
    }

    pub(crate) fn id(&self, v: &Vertex) -> usize {
        match v.part {
            Part::Hole => v.index,
            Part::Outer => self.u + v.index,
        }
    }

    pub(crate) fn vertex(&self, id: usize) -> Vertex {
        if id < self.u {
            Vertex::hole(id)
        } else {
            Vertex::outer(id - self.u)
        }
    }
}

pub fn edge_kind(host: &HostGraph, x: &Vertex, y: &Vertex) -> Result<EdgeKind> {
    if !host.is_edge(x, y) {
        return Err(Error::NotAnEdge(x.to_string(), y.to_string()));
    }
    Ok(if x.part == Part::Outer && y.part == Part::Outer { EdgeKind::Pure } else { EdgeKind::Cross })
}

/// A cycle stored in canonical rotation: least vertex first, then the
/// direction whose second vertex is smaller. The empty cycle is the
/// trivial 0-cycle.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cycle(Vec<Vertex>);

impl Cycle {
    pub fn new(mut vs: Vec<Vertex>) -> Cycle {
        if vs.len() >= 3 {
            let p = (0..vs.len()).min_by_key(|&i| vs[i]).unwrap();
            vs.rotate_left(p);
            if vs[vs.len() - 1] < vs[1] {
                vs[1..].reverse();
            }
        }
        Cycle(vs)
    }

    pub fn trivial() -> Cycle {
        Cycle(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.0
    }

    pub fn edges(&self) -> Vec<(Vertex, Vertex)> {
        let l = self.0.len();
        if l < 3 {
            return Vec::new();
        }
        (0..l).map(|i| (self.0[i], self.0[(i + 1) % l])).collect()
    }

    pub fn pure_count(&self) -> usize {
        self.edges().iter().filter(|(x, y)| x.part == Part::Outer && y.part == Part::Outer).count()
    }

    /// Distinct vertices, length 0 or at least 3, every step a host edge.
    pub fn is_valid_in(&self, host: &HostGraph) -> bool {
        let l = self.0.len();
        if l == 0 {
            return true;
        }
        if l < 3 {
            return false;
        }
        let distinct: HashSet<&Vertex> = self.0.iter().collect();
        distinct.len() == l && self.edges().iter().all(|(x, y)| host.is_edge(x, y))
    }

    pub(crate) fn from_ids(host: &HostGraph, ids: &[u8]) -> Cycle {
        Cycle::new(ids.iter().map(|&i| host.vertex(i as usize)).collect())
    }

    pub(crate) fn ids(&self, host: &HostGraph) -> Vec<u8> {
        self.0.iter().map(|v| host.id(v) as u8).collect()
    }
}

impl fmt::Display for Cycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", v)?;
        }
        write!(f, ")")
    }
}

fn edge_key(x: Vertex, y: Vertex) -> (Vertex, Vertex) {
    if x < y { (x, y) } else { (y, x) }
}

/// Edge-disjoint cycles in a host.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packing {
    host: HostGraph,
    cycles: Vec<Cycle>,
}

impl Packing {
    /// Validates that the cycles are host cycles and pairwise edge-disjoint.
    /// 0-cycles are dropped.
    pub fn new(host: HostGraph, cycles: Vec<Cycle>) -> Result<Packing> {
        let mut seen = HashSet::new();
        for c in &cycles {
            if !c.is_valid_in(&host) {
                return Err(Error::InvalidPacking(format!("{} is not a cycle of the host", c)));
            }
            for (x, y) in c.edges() {
                if !seen.insert(edge_key(x, y)) {
                    return Err(Error::InvalidPacking(format!("edge {}{} used twice", x, y)));
                }
            }
        }
        let mut cycles: Vec<Cycle> = cycles.into_iter().filter(|c| !c.is_empty()).collect();
        cycles.sort();
        Ok(Packing { host, cycles })
    }

    pub fn empty(host: HostGraph) -> Packing {
        Packing { host, cycles: Vec::new() }
    }

    pub fn host(&self) -> &HostGraph {
        &self.host
    }

    pub fn cycles(&self) -> &[Cycle] {
        &self.cycles
    }

    pub fn lengths(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.cycles.iter().map(|c| c.len()).collect();
        v.sort_unstable();
        v
    }

    pub(crate) fn to_state(&self) -> State {
        let mut st = State::new(self.host.frame());
        for c in &self.cycles {
            st.push(c.ids(&self.host));
        }
        st
    }

    pub(crate) fn from_state(host: HostGraph, st: &State) -> Packing {
        let mut cycles: Vec<Cycle> = st.cycles.iter().map(|c| Cycle::from_ids(&host, c)).collect();
        cycles.sort();
        Packing { host, cycles }
    }

    pub fn leave(&self) -> LeaveView {
        let mut used = HashSet::new();
        for c in &self.cycles {
            for (x, y) in c.edges() {
                used.insert(edge_key(x, y));
            }
        }
        let edges = self.host.edges().into_iter().filter(|&(x, y)| !used.contains(&edge_key(x, y))).collect();
        LeaveView::from_edges(edges)
    }
}

/// Uncovered edges of a packing. Vertices appear only if they carry an
/// edge, so this is the reduced leave; the empty view is the trivial graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeaveView {
    edges: Vec<(Vertex, Vertex)>,
    pub pure_count: usize,
    pub cross_count: usize,
}

impl LeaveView {
    pub(crate) fn from_edges(mut edges: Vec<(Vertex, Vertex)>) -> LeaveView {
        for e in edges.iter_mut() {
            *e = edge_key(e.0, e.1);
        }
        edges.sort();
        let pure_count = edges.iter().filter(|(x, y)| x.part == Part::Outer && y.part == Part::Outer).count();
        let cross_count = edges.len() - pure_count;
        LeaveView { edges, pure_count, cross_count }
    }

    pub fn edges(&self) -> &[(Vertex, Vertex)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn degree(&self, v: &Vertex) -> usize {
        self.edges.iter().filter(|(x, y)| x == v || y == v).count()
    }

    pub fn vertices(&self) -> Vec<Vertex> {
        let mut vs: Vec<Vertex> = self.edges.iter().flat_map(|&(x, y)| [x, y]).collect();
        vs.sort();
        vs.dedup();
        vs
    }

    pub fn neighbours(&self, v: &Vertex) -> Vec<Vertex> {
        let mut out: Vec<Vertex> = self
            .edges
            .iter()
            .filter_map(|&(x, y)| if x == *v { Some(y) } else if y == *v { Some(x) } else { None })
            .collect();
        out.sort();
        out
    }

    pub fn is_even(&self) -> bool {
        self.vertices().iter().all(|v| self.degree(v) % 2 == 0)
    }
}

pub fn reduced_leave(packing: &Packing) -> LeaveView {
    packing.leave()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailReason {
    EdgeReuse,
    NotPartition,
    LengthMismatch,
    BadCycle,
}

impl fmt::Display for FailReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FailReason::EdgeReuse => "edge used by two cycles",
            FailReason::NotPartition => "cycles do not cover every host edge",
            FailReason::LengthMismatch => "cycle lengths differ from the target list",
            FailReason::BadCycle => "a cycle is not a cycle of the host",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail(FailReason),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub host: HostGraph,
    pub cycles: Vec<Cycle>,
    pub target_lengths: Vec<usize>,
    pub verdict: Verdict,
    pub per_cycle_pure_counts: Vec<usize>,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn packing(&self) -> Result<Packing> {
        Packing::new(self.host, self.cycles.clone())
    }
}

/// Checks a claimed decomposition edge by edge. Never fails; the verdict
/// carries the first problem found (bad cycle, reuse, coverage, lengths).
pub fn verify_decomposition(host: &HostGraph, cycles: &[Cycle], target_lengths: &[usize]) -> Certificate {
    let cycles: Vec<Cycle> = cycles.iter().filter(|c| !c.is_empty()).cloned().collect();
    let mut target: Vec<usize> = target_lengths.iter().copied().filter(|&m| m != 0).collect();
    target.sort_unstable();
    let per_cycle_pure_counts = cycles.iter().map(|c| c.pure_count()).collect();
    let verdict = (|| {
        if cycles.iter().any(|c| !c.is_valid_in(host)) {
            return Verdict::Fail(FailReason::BadCycle);
        }
        let mut seen = HashSet::new();
        for c in &cycles {
            for (x, y) in c.edges() {
                if !seen.insert(edge_key(x, y)) {
                    return Verdict::Fail(FailReason::EdgeReuse);
                }
            }
        }
        let all: HashSet<(Vertex, Vertex)> = host.edges().into_iter().collect();
        if seen != all {
            return Verdict::Fail(FailReason::NotPartition);
        }
        let mut lengths: Vec<usize> = cycles.iter().map(|c| c.len()).collect();
        lengths.sort_unstable();
        if lengths != target {
            return Verdict::Fail(FailReason::LengthMismatch);
        }
        Verdict::Pass
    })();
    Certificate { host: *host, cycles, target_lengths: target, verdict, per_cycle_pure_counts }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct DecompositionJson {
    u: usize,
    w: usize,
    cycles: Vec<Vec<String>>,
}

/// Serialises cycles in canonical form, sorted, in the documented JSON shape.
pub fn to_json(host: &HostGraph, cycles: &[Cycle]) -> String {
    let mut cs: Vec<Cycle> = cycles.iter().filter(|c| !c.is_empty()).map(|c| Cycle::new(c.0.clone())).collect();
    cs.sort();
    let doc = DecompositionJson {
        u: host.u,
        w: host.w,
        cycles: cs.iter().map(|c| c.0.iter().map(|v| v.to_string()).collect()).collect(),
    };
    serde_json::to_string(&doc).expect("plain data serialises")
}

pub fn from_json(text: &str) -> Result<(HostGraph, Vec<Cycle>)> {
    let doc: DecompositionJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let host = build_host(doc.u, doc.w)?;
    let mut cycles = Vec::with_capacity(doc.cycles.len());
    for c in doc.cycles {
        let vs = c.iter().map(|t| t.parse()).collect::<Result<Vec<Vertex>>>()?;
        if let Some(v) = vs.iter().find(|v| !host.contains(v)) {
            return Err(Error::Parse(format!("vertex {} outside host", v)));
        }
        cycles.push(Cycle::new(vs));
    }
    Ok((host, cycles))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_tokens_round_trip() {
        for v in [Vertex::hole(0), Vertex::outer(13), Vertex::hole(7)] {
            assert_eq!(v.to_string().parse::<Vertex>().unwrap(), v);
        }
        assert!("X1".parse::<Vertex>().is_err());
        assert!("U".parse::<Vertex>().is_err());
        assert!("U01".parse::<Vertex>().is_err());
    }

    #[test]
    fn canonical_rotation() {
        let c = Cycle::new(vec![Vertex::outer(2), Vertex::hole(1), Vertex::outer(0), Vertex::hole(0)]);
        assert_eq!(c.vertices()[0], Vertex::hole(0));
        assert_eq!(c.vertices()[1], Vertex::outer(0));
        let d = Cycle::new(c.vertices().iter().rev().copied().collect());
        assert_eq!(c, d);
    }
}
