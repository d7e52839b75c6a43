//! Feasibility checks, route selection and the end-to-end pipeline.

mod few_odd;
mod join;
mod lists;
mod plan;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use few_odd::{few_odd_split, FewOddSplit};
pub use join::join_em_all;
pub use lists::LengthList;
pub use plan::{basic_refinement, select_z, PlanCase, RefinementPlan};

use crate::base::build_tagged;
use crate::error::{Error, Result};
use crate::model::{build_host, verify_decomposition, Certificate, Cycle, HostGraph, MAX_HOST_VERTICES};
use crate::search::{decompose_graph, Exact, Spec};
use crate::state::{Frame, State};
use crate::subsolvers::{self, search_frame, SolverBudget};

/// The necessary conditions, by their usual numbering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Condition {
    /// `u` odd and `w` even.
    Parity,
    /// `m_1 >= 3` and `m_tau <= min(u + w, 2w)`.
    LengthRange,
    /// Lengths sum to the edge count.
    EdgeSum,
    /// At most `C(w, 2)` odd lengths.
    OddCount,
    /// At least `(u + w - 1) / 2` cycles.
    CycleCount,
}

impl Condition {
    pub fn id(&self) -> &'static str {
        match self {
            Condition::Parity => "i",
            Condition::LengthRange => "ii",
            Condition::EdgeSum => "iii",
            Condition::OddCount => "iv",
            Condition::CycleCount => "v",
        }
    }

    pub fn describe(&self) -> &'static str {
        match self {
            Condition::Parity => "u must be odd and w even",
            Condition::LengthRange => "lengths must lie in 3..=min(u + w, 2w)",
            Condition::EdgeSum => "lengths must sum to the host edge count",
            Condition::OddCount => "at most C(w, 2) odd lengths",
            Condition::CycleCount => "at least (u + w - 1) / 2 cycles",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

fn binom2(x: usize) -> usize {
    x * x.saturating_sub(1) / 2
}

/// Edge count of `K_{u+w} - K_u`.
pub fn host_edge_count(u: usize, w: usize) -> usize {
    binom2(u + w) - binom2(u)
}

/// Evaluates every necessary condition; `Err` lists the violated ones.
pub fn check_necessary(u: usize, w: usize, lengths: &[usize]) -> std::result::Result<(), Vec<Condition>> {
    let l = LengthList::new(lengths.to_vec());
    let mut bad = Vec::new();
    if u % 2 == 0 || w % 2 == 1 {
        bad.push(Condition::Parity);
    }
    // zeros are erased from the list, so an explicit 0..2 entry is caught here
    let short = lengths.iter().any(|&x| x < 3);
    if short || l.max().is_some_and(|x| x > (u + w).min(2 * w)) {
        bad.push(Condition::LengthRange);
    }
    if l.sum() != host_edge_count(u, w) {
        bad.push(Condition::EdgeSum);
    }
    if l.odd_count() > binom2(w) {
        bad.push(Condition::OddCount);
    }
    if 2 * l.len() + 1 < u + w {
        bad.push(Condition::CycleCount);
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(bad)
    }
}

/// Whether the constructive pipeline covers the instance: `w >= 10` and the
/// largest length at most `min(u, w, 3 * second largest)`.
pub fn check_theorem_hypotheses(u: usize, w: usize, lengths: &[usize]) -> Result<()> {
    let l = LengthList::new(lengths.to_vec());
    if w < 10 {
        return Err(Error::OutOfScope(format!("w = {} is below 10", w)));
    }
    let top = l.max().unwrap_or(0);
    if top > u.min(w) {
        return Err(Error::OutOfScope(format!("longest length {} exceeds min(u, w) = {}", top, u.min(w))));
    }
    if !l.is_well_behaved() {
        return Err(Error::OutOfScope("longest length exceeds three times the next".into()));
    }
    Ok(())
}

/// Which route produced a decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Route {
    /// Hole of size 1: the host is a complete graph.
    SingleHole,
    /// Hole of size 3: a complete graph with one extra triangle removed.
    TriangleHole,
    /// Uniform lengths, handled by search.
    Uniform,
    /// Outside the constructive hypotheses, handled by search.
    Search,
    /// Odd entries sum to at most `w(w-2)/2`.
    FewOdd,
    /// Base decomposition plus merges.
    Planned(PlanCase),
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Route::SingleHole => f.write_str("single-hole"),
            Route::TriangleHole => f.write_str("triangle-hole"),
            Route::Uniform => f.write_str("uniform"),
            Route::Search => f.write_str("search"),
            Route::FewOdd => f.write_str("few-odd"),
            Route::Planned(c) => write!(f, "case {}", c.tag()),
        }
    }
}

/// A verified decomposition with the way it was found.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub certificate: Certificate,
    pub route: Route,
    pub plan: Option<RefinementPlan>,
    /// Line-oriented record of cases, merge steps and fallbacks.
    pub trace: Vec<String>,
    /// A constructive step failed and whole-host search finished the job.
    pub used_fallback: bool,
}

/// Exact answer for tiny hosts: `Some(true)` if a decomposition exists,
/// `Some(false)` if none does, `None` if the node budget ran out.
pub fn exists_exhaustive(u: usize, w: usize, lengths: &[usize], node_limit: usize) -> Option<bool> {
    if u == 0 || w == 0 || u + w > MAX_HOST_VERTICES {
        return Some(false);
    }
    if lengths.iter().any(|&x| x < 3 || x > u + w) || lengths.iter().sum::<usize>() != host_edge_count(u, w) {
        return Some(false);
    }
    let frame = Frame::host(u, w);
    let st = State::new(frame);
    let specs: Vec<Spec> = lengths.iter().map(|&l| Spec::any(l)).collect();
    match decompose_graph(&st.leave, &frame, &specs, node_limit) {
        Exact::Found(_) => Some(true),
        Exact::Impossible => Some(false),
        Exact::Unknown => None,
    }
}

/// Whole-host search; exact below 31 edges.
fn search_host(u: usize, w: usize, lengths: &[usize], budget: &SolverBudget) -> Result<State> {
    let frame = Frame::host(u, w);
    if frame.edge_count() <= 30 {
        let st = State::new(frame);
        let specs: Vec<Spec> = lengths.iter().map(|&l| Spec::any(l)).collect();
        return match decompose_graph(&st.leave, &frame, &specs, 20_000_000) {
            Exact::Found(cs) => {
                let mut st = st;
                for c in cs {
                    st.push(c);
                }
                Ok(st)
            }
            Exact::Impossible => Err(Error::Infeasible("exhaustive search found no decomposition".into())),
            Exact::Unknown => Err(Error::SearchExhausted("exhaustive search ran out of nodes".into())),
        };
    }
    let big = SolverBudget { max_restarts: budget.max_restarts.max(16), max_moves_per_restart: budget.max_moves_per_restart.max(60_000), ..*budget };
    search_frame(frame, lengths, &big).ok_or_else(|| Error::SearchExhausted(format!("host search for ({}, {}) ran out of budget", u, w)))
}

/// `K_{w+1}` is the host when the hole is a single vertex.
fn single_hole(w: usize, lengths: &[usize], budget: &SolverBudget) -> Result<State> {
    let u = 1;
    let cs = subsolvers::solve_complete(w + 1, lengths, budget)?;
    let map = |i: usize| if i < w { u + i } else { 0 };
    let mut st = State::new(Frame::host(u, w));
    for c in cs {
        st.push(c.iter().map(|&v| map(v) as u8).collect());
    }
    Ok(st)
}

/// Decompose `K_{w+3}` with an extra triangle and make that triangle the hole.
fn triangle_hole(w: usize, lengths: &[usize], budget: &SolverBudget) -> Result<State> {
    let u = 3;
    let mut lens = lengths.to_vec();
    lens.push(3);
    let mut cs = subsolvers::solve_complete(w + 3, &lens, budget)?;
    let pos = cs.iter().position(|c| c.len() == 3).expect("a triangle was requested");
    let tri = cs.swap_remove(pos);
    let mut map = vec![usize::MAX; w + 3];
    for (h, &v) in tri.iter().enumerate() {
        map[v] = h;
    }
    let mut next = u;
    for m in map.iter_mut().filter(|m| **m == usize::MAX) {
        *m = next;
        next += 1;
    }
    let mut st = State::new(Frame::host(u, w));
    for c in cs {
        st.push(c.iter().map(|&v| map[v] as u8).collect());
    }
    Ok(st)
}

fn certify(host: &HostGraph, st: &State, lengths: &[usize]) -> Result<Certificate> {
    let cycles: Vec<Cycle> = st.cycles.iter().map(|c| Cycle::from_ids(host, c)).collect();
    let cert = verify_decomposition(host, &cycles, lengths);
    if !cert.passed() {
        return Err(Error::InternalInvariantBreach(format!("output failed verification: {:?}", cert.verdict)));
    }
    Ok(cert)
}

/// Constructive route for instances inside the hypotheses.
fn planned(u: usize, w: usize, lengths: &[usize], budget: &SolverBudget, tr: &mut Vec<String>) -> Result<(State, Route, Option<RefinementPlan>)> {
    let l = LengthList::new(lengths.to_vec());
    if 2 * l.odd_sum() <= w * (w - 2) {
        tr.push("route: few-odd".into());
        let st = few_odd::few_odd_general_in(u, w, lengths, budget, tr)?;
        return Ok((st, Route::FewOdd, None));
    }
    let plan = select_z(u, w, lengths)?;
    tr.push(format!("case {}", plan.case.tag()));
    if let Some(s) = &plan.step {
        tr.push(format!("step {}", s));
    }
    tr.push(format!("Z = {}, R = {:?}, t = {}, m = {}, k = {}", plan.z, plan.refinement(), plan.t, plan.m, plan.k));
    let (mut tg, base_tr, fell_back) = build_tagged(u, w, &plan.base_request(), budget.seed)?;
    tr.extend(base_tr.into_iter().map(|s| format!("base: {}", s)));
    if fell_back {
        tr.push("base: typed search fallback".into());
    }
    let mut groups = plan.groups.clone();
    join::join_in(&mut tg, &mut groups, plan.z.entries(), budget.seed, tr)?;
    Ok((tg.st, Route::Planned(plan.case), Some(plan)))
}

/// Runs the whole pipeline and returns a verified certificate.
pub fn decompose(u: usize, w: usize, lengths: &[usize], budget: &SolverBudget) -> Result<Certificate> {
    decompose_traced(u, w, lengths, budget).map(|o| o.certificate)
}

/// [`decompose`] with the route, plan and trace.
pub fn decompose_traced(u: usize, w: usize, lengths: &[usize], budget: &SolverBudget) -> Result<Outcome> {
    if let Err(bad) = check_necessary(u, w, lengths) {
        let ids: Vec<&str> = bad.iter().map(|c| c.id()).collect();
        return Err(Error::Infeasible(format!("necessary conditions fail: {}", ids.join(", "))));
    }
    if u + w > MAX_HOST_VERTICES {
        return Err(Error::OutOfScope(format!("u + w = {} exceeds {}", u + w, MAX_HOST_VERTICES)));
    }
    let host = build_host(u, w)?;
    let mut lens = lengths.to_vec();
    lens.sort_unstable();
    let l = LengthList::new(lens.clone());
    let mut tr = Vec::new();
    let mut used_fallback = false;
    let (st, route, plan) = if u == 1 {
        tr.push("route: single-hole".into());
        (single_hole(w, &lens, budget)?, Route::SingleHole, None)
    } else if u == 3 {
        tr.push("route: triangle-hole".into());
        (triangle_hole(w, &lens, budget)?, Route::TriangleHole, None)
    } else if let Err(why) = check_theorem_hypotheses(u, w, &lens) {
        tr.push(format!("route: search ({})", why));
        (search_host(u, w, &lens, budget)?, Route::Search, None)
    } else if l.is_uniform() {
        tr.push("route: uniform".into());
        (search_host(u, w, &lens, budget)?, Route::Uniform, None)
    } else {
        match planned(u, w, &lens, budget, &mut tr) {
            Ok(x) => x,
            Err(e @ (Error::SearchExhausted(_) | Error::HypothesisViolated(_) | Error::StructureMismatch(_) | Error::NoWitness(_))) => {
                tr.push(format!("constructive route stopped ({}); whole-host search", e));
                used_fallback = true;
                (search_host(u, w, &lens, budget)?, Route::Search, None)
            }
            Err(e) => return Err(e),
        }
    };
    let certificate = certify(&host, &st, &lens)?;
    Ok(Outcome { certificate, route, plan, trace: tr, used_fallback })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn necessary_examples() {
        assert_eq!(check_necessary(5, 10, &[5; 19]), Ok(()));
        assert!(check_necessary(6, 10, &[5; 19]).unwrap_err().contains(&Condition::Parity));
        let mut m = vec![3; 47];
        m.extend([4, 4, 6]);
        assert_eq!(m.iter().sum::<usize>(), host_edge_count(11, 10));
        assert_eq!(check_necessary(11, 10, &m), Err(vec![Condition::OddCount]));
    }

    #[test]
    fn hypotheses_examples() {
        assert!(check_theorem_hypotheses(5, 10, &[5; 19]).is_ok());
        assert!(matches!(check_theorem_hypotheses(5, 8, &[3; 22]), Err(Error::OutOfScope(_))));
        assert!(check_theorem_hypotheses(9, 10, &[3, 10]).is_err());
    }
}

#[cfg(test)]
mod sweep {
    use super::*;
    use crate::generate::random_feasible_lengths;
    use std::time::Instant;

    #[test]
    #[ignore]
    fn pipeline_sweep() {
        let mut fails = 0;
        let mut routes = std::collections::BTreeMap::new();
        let n: u64 = std::env::var("SWEEP_N").ok().and_then(|s| s.parse().ok()).unwrap_or(40);
        let start: u64 = std::env::var("SWEEP_FROM").ok().and_then(|s| s.parse().ok()).unwrap_or(0);
        for seed in start..start + n {
            let us = [5, 7, 9, 11, 13];
            let ws = [10, 12, 14];
            let (u, w) = (us[(seed % 5) as usize], ws[(seed / 5 % 3) as usize]);
            let Some(m) = random_feasible_lengths(u, w, seed, 200) else { continue };
            let t = Instant::now();
            match decompose_traced(u, w, &m, &SolverBudget::seeded(seed)) {
                Ok(o) => {
                    *routes.entry(format!("{}{}", o.route, if o.used_fallback { "+fb" } else { "" })).or_insert(0) += 1;
                    if o.used_fallback {
                        println!("FALLBACK ({},{}) {:?}: {}", u, w, m, o.trace.iter().find(|l| l.contains("stopped")).unwrap());
                    }
                }
                Err(e) => {
                    fails += 1;
                    println!("FAIL ({},{}) {:?}: {}", u, w, m, e);
                }
            }
            let dt = t.elapsed().as_secs_f64();
            if dt > 2.0 {
                println!("SLOW {:.1}s ({},{}) {:?}", dt, u, w, m);
            }
        }
        println!("routes {:?} fails {}", routes, fails);
    }
}
