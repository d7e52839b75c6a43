//! Decompositions of complete and complete bipartite graphs, plus the
//! equalized edge colouring.
//!
//! These stand in for the classical existence theorems. Feasibility is
//! decided by the theorems' arithmetic conditions; construction is a seeded
//! search (greedy placement plus twin switching), exhaustive when the graph is
//! tiny. Every returned decomposition has been checked edge by edge.

mod coloring;

pub use coloring::{equalized_coloring, fournier_precondition};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::search::{self, Exact, Spec};
use crate::state::{cycle_edges, Bits, Frame, State};

/// Largest `v`, `p` or `q` the search solvers accept.
pub const SEARCH_CAP: usize = 32;

/// Edge count below which an exhaustive search settles existence outright.
const EXHAUSTIVE_EDGES: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverBudget {
    pub seed: u64,
    pub max_restarts: usize,
    pub max_moves_per_restart: usize,
}

impl Default for SolverBudget {
    fn default() -> Self {
        SolverBudget { seed: 0, max_restarts: 8, max_moves_per_restart: 10_000 }
    }
}

impl SolverBudget {
    pub fn seeded(seed: u64) -> SolverBudget {
        SolverBudget { seed, ..SolverBudget::default() }
    }

    fn check(&self) -> Result<()> {
        if self.max_restarts == 0 || self.max_moves_per_restart == 0 {
            return Err(Error::HypothesisViolated("solver budget must be positive".into()));
        }
        Ok(())
    }

    pub(crate) fn rng(&self, attempt: usize) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ (attempt as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }
}

/// Cycles as vertex lists over `0..n`.
pub type Cycles = Vec<Vec<usize>>;

pub fn complete_feasible(v: usize, lengths: &[usize]) -> std::result::Result<(), String> {
    if v % 2 == 0 {
        return Err("v even".into());
    }
    if let Some(m) = lengths.iter().find(|&&m| m < 3 || m > v) {
        return Err(format!("length {} outside 3..={}", m, v));
    }
    if lengths.iter().sum::<usize>() != v * (v - 1) / 2 {
        return Err("lengths do not sum to the edge count".into());
    }
    Ok(())
}

pub fn complete_minus_i_feasible(v: usize, lengths: &[usize]) -> std::result::Result<(), String> {
    if v % 2 == 1 {
        return Err("v odd".into());
    }
    if let Some(m) = lengths.iter().find(|&&m| m < 3 || m > v) {
        return Err(format!("length {} outside 3..={}", m, v));
    }
    if lengths.iter().sum::<usize>() != v * (v - 1) / 2 - v / 2 {
        return Err("lengths do not sum to the edge count".into());
    }
    Ok(())
}

/// What the bipartite theorem says about an instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BipartiteCheck {
    /// (B1)-(B3) hold: a decomposition exists.
    Guaranteed,
    /// Basic conditions hold but the named sufficient condition fails;
    /// existence has to be settled by search.
    Open(&'static str),
    Infeasible(String),
}

pub fn bipartite_conditions(p: usize, q: usize, lengths: &[usize]) -> BipartiteCheck {
    let (p, q) = if p <= q { (p, q) } else { (q, p) };
    if p == 0 || p % 2 == 1 || q % 2 == 1 {
        return BipartiteCheck::Infeasible("parts must be even and non-empty".into());
    }
    if let Some(m) = lengths.iter().find(|&&m| m % 2 == 1 || m < 4 || m > 2 * p) {
        return BipartiteCheck::Infeasible(format!("length {} is not an even value in 4..={}", m, 2 * p));
    }
    if lengths.iter().sum::<usize>() != p * q {
        return BipartiteCheck::Infeasible("B1: lengths do not sum to pq".into());
    }
    let mut m = lengths.to_vec();
    m.sort_unstable();
    let t = m.len();
    if t >= 2 && m[t - 1] > 3 * m[t - 2] {
        return BipartiteCheck::Open("B2");
    }
    if t >= 2 {
        let cap = if p < q { 2 * p + 2 } else { 2 * p };
        if m[t - 2] + m[t - 1] > cap {
            return BipartiteCheck::Open("B3");
        }
    }
    BipartiteCheck::Guaranteed
}

pub fn bipartite46_feasible(p: usize, q: usize, b: usize, d: usize) -> std::result::Result<(), String> {
    if p == 0 || q == 0 || p % 2 == 1 || q % 2 == 1 {
        return Err("parts must be even and positive".into());
    }
    if 4 * b + 6 * d != p * q {
        return Err("4b + 6d differs from pq".into());
    }
    if d > 0 && (p < 4 || q < 4) {
        return Err("a part of size 2 admits no 6-cycles".into());
    }
    Ok(())
}

fn cap(n: usize) -> Result<()> {
    if n > SEARCH_CAP {
        return Err(Error::OutOfScope(format!("{} exceeds the search cap {}", n, SEARCH_CAP)));
    }
    Ok(())
}

fn to_cycles(st: &State) -> Cycles {
    st.cycles.iter().map(|c| c.iter().map(|&v| v as usize).collect()).collect()
}

/// Seeded search for a decomposition of a frame into the given lengths.
pub(crate) fn search_frame(frame: Frame, lengths: &[usize], budget: &SolverBudget) -> Option<State> {
    let specs: Vec<Spec> = lengths.iter().map(|&l| Spec::any(l)).collect();
    search_frame_typed(frame, &specs, budget, true)
}

pub(crate) fn search_frame_typed(frame: Frame, specs: &[Spec], budget: &SolverBudget, retype: bool) -> Option<State> {
    let lens: Vec<usize> = specs.iter().map(|s| s.len).collect();
    for attempt in 0..budget.max_restarts {
        let mut rng = budget.rng(attempt);
        let typed = if retype && specs.iter().all(|s| s.pure.is_none()) {
            match search::assign_types(&frame, &lens, &mut rng) {
                Some(t) => t,
                None => return None,
            }
        } else {
            specs.to_vec()
        };
        let mut st = State::new(frame);
        if search::fill(&mut st, &typed, &mut rng, budget.max_moves_per_restart) && st.leave.edge_count() == 0 {
            debug_assert!(st.is_consistent());
            return Some(st);
        }
    }
    None
}

fn exhaustive(frame: Frame, lengths: &[usize]) -> Exact<State> {
    let st = State::new(frame);
    let specs: Vec<Spec> = lengths.iter().map(|&l| Spec::any(l)).collect();
    match search::decompose_graph(&st.leave, &frame, &specs, 20_000_000) {
        Exact::Found(cs) => {
            let mut st = st;
            for c in cs {
                st.push(c);
            }
            Exact::Found(st)
        }
        Exact::Impossible => Exact::Impossible,
        Exact::Unknown => Exact::Unknown,
    }
}

/// Independent check that `cycles` partition the frame's edges with the
/// wanted lengths.
pub(crate) fn frame_partition_ok(frame: &Frame, cycles: &Cycles, lengths: &[usize]) -> bool {
    let mut cover = Bits::empty(frame.n);
    for c in cycles {
        let ids: Vec<u8> = c.iter().map(|&v| v as u8).collect();
        let mut seen = 0u64;
        for &v in &ids {
            if v as usize >= frame.n || seen >> v & 1 == 1 {
                return false;
            }
            seen |= 1 << v;
        }
        if ids.len() < 3 {
            return false;
        }
        for (x, y) in cycle_edges(&ids) {
            if !frame.adjacent(x, y) || cover.has(x, y) {
                return false;
            }
            cover.toggle(x, y);
        }
    }
    let mut a: Vec<usize> = cycles.iter().map(|c| c.len()).collect();
    let mut b = lengths.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    a == b && cover.edge_count() == frame.edge_count()
}

fn finish(frame: Frame, st: State, lengths: &[usize]) -> Result<Cycles> {
    let out = to_cycles(&st);
    if !frame_partition_ok(&frame, &out, lengths) {
        return Err(Error::InternalInvariantBreach("solver output failed verification".into()));
    }
    Ok(out)
}

/// Decomposition of `K_v` into cycles of the given lengths.
pub fn solve_complete(v: usize, lengths: &[usize], budget: &SolverBudget) -> Result<Cycles> {
    budget.check()?;
    complete_feasible(v, lengths).map_err(Error::Infeasible)?;
    cap(v)?;
    let frame = Frame::complete(v);
    match search_frame(frame, lengths, budget) {
        Some(st) => finish(frame, st, lengths),
        None => Err(Error::SearchExhausted(format!("K_{} into {:?}", v, lengths))),
    }
}

/// Decomposition of `K_v - I`; the 1-factor used is `{0 1, 2 3, ...}` and is
/// returned alongside the cycles.
pub fn solve_complete_minus_i(v: usize, lengths: &[usize], budget: &SolverBudget) -> Result<(Cycles, Vec<(usize, usize)>)> {
    budget.check()?;
    complete_minus_i_feasible(v, lengths).map_err(Error::Infeasible)?;
    cap(v)?;
    let frame = Frame::complete_minus_matching(v);
    let factor = (0..v / 2).map(|i| (2 * i, 2 * i + 1)).collect();
    match search_frame(frame, lengths, budget) {
        Some(st) => Ok((finish(frame, st, lengths)?, factor)),
        None => Err(Error::SearchExhausted(format!("K_{} - I into {:?}", v, lengths))),
    }
}

/// Decomposition of `K_{p,q}`: vertices `0..p` on one side, `p..p+q` on the other.
pub fn solve_bipartite(p: usize, q: usize, lengths: &[usize], budget: &SolverBudget) -> Result<Cycles> {
    budget.check()?;
    let verdict = bipartite_conditions(p, q, lengths);
    if let BipartiteCheck::Infeasible(r) = &verdict {
        return Err(Error::Infeasible(r.clone()));
    }
    cap(p.max(q))?;
    let frame = Frame::bipartite(p, q);
    if let BipartiteCheck::Open(cond) = verdict {
        if p * q <= EXHAUSTIVE_EDGES {
            return match exhaustive(frame, lengths) {
                Exact::Found(st) => finish(frame, st, lengths),
                Exact::Impossible => Err(Error::Infeasible(format!("{}: no decomposition exists", cond))),
                Exact::Unknown => Err(Error::SearchExhausted(format!("K_{},{} into {:?}", p, q, lengths))),
            };
        }
    }
    match search_frame(frame, lengths, budget) {
        Some(st) => finish(frame, st, lengths),
        None => Err(Error::SearchExhausted(format!("K_{},{} into {:?}", p, q, lengths))),
    }
}

/// Existence of a decomposition of `K_{p,q}`: the theorem when it applies,
/// exhaustive search otherwise.
pub fn bipartite_decomposable(p: usize, q: usize, lengths: &[usize]) -> Result<bool> {
    match bipartite_conditions(p, q, lengths) {
        BipartiteCheck::Guaranteed => Ok(true),
        BipartiteCheck::Infeasible(_) => Ok(false),
        BipartiteCheck::Open(_) => match exhaustive(Frame::bipartite(p, q), lengths) {
            Exact::Found(_) => Ok(true),
            Exact::Impossible => Ok(false),
            Exact::Unknown => Err(Error::SearchExhausted(format!("K_{},{} into {:?}", p, q, lengths))),
        },
    }
}

/// `(4^b, 6^d)`-decomposition of `K_{p,q}`.
pub fn solve_bipartite_46(p: usize, q: usize, b: usize, d: usize, budget: &SolverBudget) -> Result<Cycles> {
    budget.check()?;
    bipartite46_feasible(p, q, b, d).map_err(Error::Infeasible)?;
    cap(p.max(q))?;
    let lengths: Vec<usize> = std::iter::repeat(4).take(b).chain(std::iter::repeat(6).take(d)).collect();
    let frame = Frame::bipartite(p, q);
    match search_frame(frame, &lengths, budget) {
        Some(st) => finish(frame, st, &lengths),
        None => Err(Error::SearchExhausted(format!("K_{},{} into 4^{} 6^{}", p, q, b, d))),
    }
}

/// One problem a [`Solver`] can be asked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instance {
    Complete { v: usize, lengths: Vec<usize> },
    CompleteMinusFactor { v: usize, lengths: Vec<usize> },
    Bipartite { p: usize, q: usize, lengths: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub cycles: Cycles,
    /// Only set for [`Instance::CompleteMinusFactor`].
    pub one_factor: Vec<(usize, usize)>,
}

/// Pluggable decomposition back end.
pub trait Solver: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, instance: &Instance, budget: &SolverBudget) -> Result<Solution>;
}

/// Greedy placement plus switching, exhaustive on tiny inputs.
#[derive(Debug, Default, Clone, Copy)]
pub struct SearchSolver;

impl Solver for SearchSolver {
    fn name(&self) -> &'static str {
        "search"
    }

    fn solve(&self, instance: &Instance, budget: &SolverBudget) -> Result<Solution> {
        match instance {
            Instance::Complete { v, lengths } => {
                Ok(Solution { cycles: solve_complete(*v, lengths, budget)?, one_factor: Vec::new() })
            }
            Instance::CompleteMinusFactor { v, lengths } => {
                let (cycles, one_factor) = solve_complete_minus_i(*v, lengths, budget)?;
                Ok(Solution { cycles, one_factor })
            }
            Instance::Bipartite { p, q, lengths } => {
                Ok(Solution { cycles: solve_bipartite(*p, *q, lengths, budget)?, one_factor: Vec::new() })
            }
        }
    }
}

pub fn solver_by_name(name: &str) -> Option<Box<dyn Solver>> {
    match name {
        "search" | "default" => Some(Box::new(SearchSolver)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steiner_triple_system_of_order_seven() {
        let cs = solve_complete(7, &[3; 7], &SolverBudget::default()).unwrap();
        assert_eq!(cs.len(), 7);
    }

    #[test]
    fn k5_into_two_pentagons() {
        let cs = solve_complete(5, &[5, 5], &SolverBudget::default()).unwrap();
        assert!(frame_partition_ok(&Frame::complete(5), &cs, &[5, 5]));
    }

    #[test]
    fn even_order_complete_is_infeasible() {
        assert!(matches!(solve_complete(6, &[3, 4, 4, 4], &SolverBudget::default()), Err(Error::Infeasible(_))));
    }

    #[test]
    fn complete_minus_factor() {
        let (cs, f) = solve_complete_minus_i(6, &[4, 4, 4], &SolverBudget::default()).unwrap();
        assert_eq!(f.len(), 3);
        assert_eq!(cs.len(), 3);
        let (cs, _) = solve_complete_minus_i(6, &[3, 4, 5], &SolverBudget::default()).unwrap();
        assert_eq!(cs.len(), 3);
        assert!(matches!(solve_complete_minus_i(5, &[5, 5], &SolverBudget::default()), Err(Error::Infeasible(_))));
    }

    #[test]
    fn bipartite_examples() {
        let b = SolverBudget::default();
        assert_eq!(solve_bipartite(2, 4, &[4, 4], &b).unwrap().len(), 2);
        assert!(matches!(solve_bipartite(4, 4, &[4, 4, 8], &b), Err(Error::Infeasible(_))));
        assert_eq!(solve_bipartite(4, 6, &[6, 6, 6, 6], &b).unwrap().len(), 4);
    }

    #[test]
    fn four_six_examples() {
        let b = SolverBudget::default();
        assert_eq!(solve_bipartite_46(2, 6, 3, 0, &b).unwrap().len(), 3);
        assert!(matches!(solve_bipartite_46(2, 6, 0, 2, &b), Err(Error::Infeasible(_))));
        assert_eq!(solve_bipartite_46(4, 4, 1, 2, &b).unwrap().len(), 3);
    }

    #[test]
    fn solver_registry() {
        let s = solver_by_name("search").unwrap();
        let out = s.solve(&Instance::Complete { v: 9, lengths: vec![9; 4] }, &SolverBudget::seeded(5)).unwrap();
        assert_eq!(out.cycles.len(), 4);
        assert!(solver_by_name("nope").is_none());
    }
}
