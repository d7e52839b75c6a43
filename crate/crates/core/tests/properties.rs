use std::collections::BTreeSet;

use holecycle_core::base::base_decompose;
use holecycle_core::driver::{basic_refinement, check_necessary, decompose, join_em_all, select_z, LengthList};
use holecycle_core::generate::{packing_with_leave, random_feasible_lengths};
use holecycle_core::subsolvers::SolverBudget;
use holecycle_core::switching::{perform_switch, switch_pairs};
use holecycle_core::{build_host, verify_decomposition, Cycle, Error, HostGraph, Packing, Vertex};
use proptest::prelude::*;
use proptest::sample::select;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random cycle of the host with no two hole vertices adjacent.
fn random_cycle(host: &HostGraph, len: usize, rng: &mut ChaCha8Rng) -> Option<Cycle> {
    let holes = rng.gen_range(0..=(len / 2).min(host.u()));
    let outers = len - holes;
    if outers > host.w() || (holes > 0 && outers < holes) || (holes == 0 && outers < 3) {
        return None;
    }
    let mut w: Vec<usize> = (0..host.w()).collect();
    w.shuffle(rng);
    let mut h: Vec<usize> = (0..host.u()).collect();
    h.shuffle(rng);
    let mut gaps: Vec<usize> = (0..outers).collect();
    gaps.shuffle(rng);
    let gaps: BTreeSet<usize> = gaps.into_iter().take(holes).collect();
    let mut vs = Vec::new();
    let mut hi = 0;
    for (i, &x) in w[..outers].iter().enumerate() {
        vs.push(Vertex::outer(x));
        if gaps.contains(&i) {
            vs.push(Vertex::hole(h[hi]));
            hi += 1;
        }
    }
    Some(Cycle::new(vs))
}

fn leave_set(p: &Packing) -> BTreeSet<(Vertex, Vertex)> {
    p.leave().edges().iter().map(|&(a, b)| (a.min(b), a.max(b))).collect()
}

/// A packing of a small host whose leave is one or two random cycles.
fn random_packing(u: usize, w: usize, seed: u64) -> Option<Packing> {
    let host = build_host(u, w).ok()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut leave = Vec::new();
    let mut used = BTreeSet::new();
    for _ in 0..rng.gen_range(1..=2) {
        let len = rng.gen_range(3..=(u + w).min(2 * w).min(8));
        let c = random_cycle(&host, len, &mut rng)?;
        let es: Vec<_> = c.edges().into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
        if es.iter().any(|e| used.contains(e)) {
            continue;
        }
        used.extend(es);
        leave.push(c);
    }
    packing_with_leave(&host, &leave, seed).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn switches_keep_lengths_and_counts(u in select(vec![3usize, 5, 7]), w in select(vec![4usize, 6, 8]), seed in any::<u64>()) {
        let Some(mut p) = random_packing(u, w, seed) else { return Ok(()) };
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let host = *p.host();
        for _ in 0..20 {
            let part_hole = rng.gen_bool(0.5) && u >= 2;
            let n = if part_hole { u } else { w };
            let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if i == j {
                continue;
            }
            let mk = |k| if part_hole { Vertex::hole(k) } else { Vertex::outer(k) };
            let (a, b) = (mk(i), mk(j));
            let pairs = switch_pairs(&p, a, b).unwrap();
            let Some(&(x, y)) = pairs.choose(&mut rng) else { continue };
            let origin = if rng.gen_bool(0.5) { x } else { y };
            let out = perform_switch(&p, a, b, origin).unwrap();
            let q = out.packing_after;
            let mut l0 = p.lengths();
            let mut l1 = q.lengths();
            l0.sort_unstable();
            l1.sort_unstable();
            prop_assert_eq!(l0, l1);
            let (v0, v1) = (p.leave(), q.leave());
            prop_assert_eq!(v0.pure_count, v1.pure_count);
            prop_assert_eq!(v0.edge_count(), v1.edge_count());
            let (s0, s1) = (leave_set(&p), leave_set(&q));
            let diff: BTreeSet<_> = s0.symmetric_difference(&s1).copied().collect();
            let t = out.terminus;
            let want: BTreeSet<_> = [(a, origin), (a, t), (b, origin), (b, t)].into_iter().map(|(c, d)| (c.min(d), c.max(d))).collect();
            prop_assert_eq!(diff, want);
            prop_assert!(Packing::new(host, q.cycles().to_vec()).is_ok());
            p = q;
        }
    }

    #[test]
    fn basic_refinement_refines(m in 3usize..400) {
        let r = basic_refinement(m);
        prop_assert_eq!(r.iter().sum::<usize>(), m);
        prop_assert!(r.iter().all(|&x| (3..=6).contains(&x)));
        prop_assert_eq!(r.iter().filter(|&&x| x % 2 == 1).count(), m % 2);
        prop_assert!(r.windows(2).all(|p| p[0] <= p[1]));
    }

    #[test]
    fn refusal_means_a_violated_condition(u in 1usize..8, w in 1usize..8, lens in prop::collection::vec(3usize..10, 1..12)) {
        let budget = SolverBudget::seeded(1);
        match decompose(u, w, &lens, &budget) {
            Err(Error::Infeasible(_)) => prop_assert!(check_necessary(u, w, &lens).is_err()),
            Ok(cert) => {
                prop_assert!(cert.passed());
                prop_assert!(check_necessary(u, w, &lens).is_ok());
            }
            Err(_) => prop_assert!(check_necessary(u, w, &lens).is_ok()),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn select_z_plans_are_consistent(u in select(vec![5usize, 7, 9, 11, 13]), w in select(vec![10usize, 12, 14]), seed in any::<u64>()) {
        let Some(lens) = random_feasible_lengths(u, w, seed, 200) else { return Ok(()) };
        let all = LengthList::new(lens.clone());
        if all.is_uniform() || 2 * all.odd_sum() <= w * (w - 2) {
            return Ok(());
        }
        let plan = select_z(u, w, &lens).unwrap();
        plan.validate(&all).unwrap();
        plan.base_request().check(u, w).unwrap();
        // the refinement only ever uses short parts plus the companion
        prop_assert!(plan.refinement().iter().all(|&x| (3..=6).contains(&x) || x == plan.k));
        prop_assert!(plan.t % 2 == 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn joining_removes_one_cycle_per_merge(u in select(vec![7usize, 9]), w in select(vec![10usize, 12]), seed in any::<u64>()) {
        let Some(lens) = random_feasible_lengths(u, w, seed, 200) else { return Ok(()) };
        let all = LengthList::new(lens.clone());
        if all.is_uniform() || 2 * all.odd_sum() <= w * (w - 2) {
            return Ok(());
        }
        let plan = select_z(u, w, &lens).unwrap();
        let base = base_decompose(u, w, &plan.base_request(), seed).unwrap();
        let (cycles, trace) = join_em_all(&base.host, &base.cycles, &base.tagged, plan.z.entries(), &plan.groups, seed).unwrap();
        let merges = plan.refinement().len() - plan.z.len();
        prop_assert_eq!(trace.iter().filter(|l| l.starts_with("join case")).count(), merges);
        prop_assert_eq!(cycles.len() + merges, base.cycles.len());
        prop_assert!(verify_decomposition(&base.host, &cycles, &lens).passed());
    }
}
