//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! `ACCEPTANCE_ONLY=1,4` runs a subset.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use holecycle_core::base::pieces::one_factor_5cycles;
use holecycle_core::base::{base_decompose, BaseVariant};
use holecycle_core::driver::{basic_refinement, check_necessary, decompose_traced, host_edge_count};
use holecycle_core::generate::{packing_with_leave, random_base_request, random_feasible_lengths};
use holecycle_core::merging::{general_joining_traced, MergeRequest};
use holecycle_core::subsolvers::{
    bipartite46_feasible, bipartite_decomposable, complete_feasible, complete_minus_i_feasible, equalized_coloring, fournier_precondition, SolverBudget,
};
use holecycle_core::switching::{perform_switch, switch_pairs};
use holecycle_core::{build_host, verify_decomposition, Cycle, HostGraph, Packing, Part, Vertex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn main() {
    let only: Option<BTreeSet<usize>> = std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let criteria: [(usize, &str, fn() -> Outcome); 9] = [
        (1, "end-to-end sweep", end_to_end),
        (2, "exhaustive {3,4,5} sweep at (5,10)", small_sweep),
        (3, "necessity on tiny hosts", necessity),
        (4, "switch invariants", switch_invariants),
        (5, "merge suite", merge_suite),
        (6, "base builder tags", base_tags),
        (7, "equalized colouring", colouring),
        (8, "basic refinement table", refinement_table),
        (9, "subsolver oracle agreement", subsolver_oracles),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let r = run();
        if !r.pass {
            failed += 1;
        }
        println!("criterion {}: {} - {}: {} [{:.1?}]", id, if r.pass { "PASS" } else { "FAIL" }, name, r.detail, start.elapsed());
    }
    if failed > 0 {
        println!("{} criterion(s) failed", failed);
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------------------
// 1. end-to-end sweep

const SWEEP_INSTANCES: usize = 200;
const MEDIAN_LIMIT: Duration = Duration::from_secs(2);
const MAX_LIMIT: Duration = Duration::from_secs(30);

fn end_to_end() -> Outcome {
    let us = [5, 7, 9, 11, 13];
    let ws = [10, 12, 14];
    let mut times = Vec::new();
    let mut bad = Vec::new();
    let mut fallbacks = 0;
    let mut routes: BTreeMap<String, usize> = BTreeMap::new();
    let mut seed = 0u64;
    while times.len() < SWEEP_INSTANCES {
        seed += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (u, w) = (*us.choose(&mut rng).unwrap(), *ws.choose(&mut rng).unwrap());
        let Some(m) = random_feasible_lengths(u, w, seed, 400) else { continue };
        let start = Instant::now();
        let res = decompose_traced(u, w, &m, &SolverBudget::seeded(seed));
        times.push(start.elapsed());
        match res {
            Ok(o) if o.certificate.passed() => {
                fallbacks += o.used_fallback as usize;
                *routes.entry(o.route.to_string()).or_insert(0) += 1;
            }
            Ok(_) => bad.push(format!("({},{}) seed {}: rejected certificate", u, w, seed)),
            Err(e) => bad.push(format!("({},{}) seed {}: {}", u, w, seed, e)),
        }
    }
    times.sort();
    let median = times[times.len() / 2];
    let max = *times.last().unwrap();
    let routes: Vec<String> = routes.iter().map(|(r, n)| format!("{} {}", r, n)).collect();
    let mut detail = format!(
        "{}/{} pass, median {:.2?} (< {:?}), max {:.2?} (< {:?}); {} used the search fallback; routes: {}",
        times.len() - bad.len(),
        times.len(),
        median,
        MEDIAN_LIMIT,
        max,
        MAX_LIMIT,
        fallbacks,
        routes.join(", ")
    );
    if let Some(b) = bad.first() {
        detail.push_str(&format!("; first failure {}", b));
    }
    outcome(bad.is_empty() && median < MEDIAN_LIMIT && max < MAX_LIMIT, detail)
}

// ---------------------------------------------------------------------------
// 2. every {3,4,5} list at (5,10)

fn small_sweep() -> Outcome {
    let (u, w) = (5, 10);
    let total = host_edge_count(u, w);
    let mut count = 0;
    let mut bad = Vec::new();
    for a in 0..=total / 3 {
        for b in 0..=(total - 3 * a) / 4 {
            let rest = total - 3 * a - 4 * b;
            if rest % 5 != 0 {
                continue;
            }
            let c = rest / 5;
            let m: Vec<usize> = [(3, a), (4, b), (5, c)].iter().flat_map(|&(l, n)| std::iter::repeat(l).take(n)).collect();
            if check_necessary(u, w, &m).is_err() {
                continue;
            }
            count += 1;
            match decompose_traced(u, w, &m, &SolverBudget::seeded(count as u64)) {
                Ok(o) if o.certificate.passed() => {}
                Ok(_) => bad.push(format!("3^{} 4^{} 5^{}: rejected", a, b, c)),
                Err(e) => bad.push(format!("3^{} 4^{} 5^{}: {}", a, b, c, e)),
            }
        }
    }
    let mut detail = format!("{}/{} lists pass", count - bad.len(), count);
    if let Some(b) = bad.first() {
        detail.push_str(&format!("; first failure {}", b));
    }
    outcome(bad.is_empty() && count > 0, detail)
}

// ---------------------------------------------------------------------------
// exact-cover oracle shared by criteria 3 and 9

/// A small simple graph as an edge list over `0..n`.
struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    fn hole_host(u: usize, w: usize) -> Graph {
        let n = u + w;
        let edges = (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))).filter(|&(x, y)| !(x < u && y < u)).collect();
        Graph { n, edges }
    }

    fn complete(v: usize) -> Graph {
        Graph::hole_host(0, v)
    }

    fn complete_minus_matching(v: usize) -> Graph {
        let edges = (0..v).flat_map(|x| (x + 1..v).map(move |y| (x, y))).filter(|&(x, y)| !(x % 2 == 0 && y == x + 1)).collect();
        Graph { n: v, edges }
    }

    fn bipartite(p: usize, q: usize) -> Graph {
        let edges = (0..p).flat_map(|x| (0..q).map(move |y| (x, p + y))).collect();
        Graph { n: p + q, edges }
    }
}

/// Does `g` split into cycles of exactly these lengths? `None` when the node
/// budget runs out. Pruning only uses facts every decomposition obeys: each
/// vertex has even degree and lies on at most one edge pair per cycle.
fn decomposable(g: &Graph, lengths: &[usize], node_limit: usize) -> Option<bool> {
    let e = g.edges.len();
    if e > 64 || lengths.iter().sum::<usize>() != e {
        return Some(false);
    }
    if lengths.iter().any(|&l| l < 3 || l > g.n) {
        return Some(false);
    }
    let mut inc = vec![0u64; g.n];
    let mut adj = vec![Vec::new(); g.n];
    for (i, &(x, y)) in g.edges.iter().enumerate() {
        inc[x] |= 1 << i;
        inc[y] |= 1 << i;
        adj[x].push((y, i));
        adj[y].push((x, i));
    }
    if inc.iter().any(|m| m.count_ones() % 2 == 1) {
        return Some(false);
    }
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in lengths {
        *counts.entry(l).or_insert(0) += 1;
    }
    let all = if e == 64 { u64::MAX } else { (1u64 << e) - 1 };
    let mut s = Search { g, adj, inc, nodes: 0, limit: node_limit };
    s.cover(all, &mut counts, lengths.len())
}

struct Search<'a> {
    g: &'a Graph,
    adj: Vec<Vec<(usize, usize)>>,
    inc: Vec<u64>,
    nodes: usize,
    limit: usize,
}

impl Search<'_> {
    fn cover(&mut self, free: u64, counts: &mut BTreeMap<usize, usize>, left: usize) -> Option<bool> {
        if free == 0 {
            return Some(true);
        }
        self.nodes += 1;
        if self.nodes > self.limit {
            return None;
        }
        if self.inc.iter().any(|m| (m & free).count_ones() as usize > 2 * left) {
            return Some(false);
        }
        let e = free.trailing_zeros() as usize;
        let (a, b) = self.g.edges[e];
        let lens: Vec<usize> = counts.iter().filter(|(_, &n)| n > 0).map(|(&l, _)| l).collect();
        let mut unknown = false;
        for l in lens {
            // paths b -> a of l - 1 edges avoiding e
            let mut path = vec![b];
            let mut used = 1u64 << e;
            match self.paths(a, l - 1, free, &mut path, &mut used, counts, l, left) {
                Some(true) => return Some(true),
                None => unknown = true,
                Some(false) => {}
            }
        }
        if unknown {
            None
        } else {
            Some(false)
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn paths(&mut self, target: usize, steps: usize, free: u64, path: &mut Vec<usize>, used: &mut u64, counts: &mut BTreeMap<usize, usize>, l: usize, left: usize) -> Option<bool> {
        let at = *path.last().unwrap();
        if steps == 1 {
            let Some(&(_, i)) = self.adj[at].iter().find(|&&(y, i)| y == target && free >> i & 1 == 1 && *used >> i & 1 == 0) else {
                return Some(false);
            };
            *counts.get_mut(&l).unwrap() -= 1;
            let r = self.cover(free & !(*used | 1 << i), counts, left - 1);
            *counts.get_mut(&l).unwrap() += 1;
            return r;
        }
        let mut unknown = false;
        for k in 0..self.adj[at].len() {
            let (y, i) = self.adj[at][k];
            if y == target || path.contains(&y) || free >> i & 1 == 0 || *used >> i & 1 == 1 {
                continue;
            }
            path.push(y);
            *used |= 1 << i;
            let r = self.paths(target, steps - 1, free, path, used, counts, l, left);
            *used &= !(1 << i);
            path.pop();
            match r {
                Some(true) => return Some(true),
                None => unknown = true,
                Some(false) => {}
            }
        }
        if unknown {
            None
        } else {
            Some(false)
        }
    }
}

/// All nondecreasing lists of entries from `parts` summing to `total`.
fn lists(total: usize, parts: &[usize]) -> Vec<Vec<usize>> {
    fn go(total: usize, parts: &[usize], cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if total == 0 {
            out.push(cur.clone());
            return;
        }
        for (i, &p) in parts.iter().enumerate() {
            if p <= total {
                cur.push(p);
                go(total - p, &parts[i..], cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(total, parts, &mut Vec::new(), &mut out);
    out
}

// ---------------------------------------------------------------------------
// 3. necessity

fn necessity() -> Outcome {
    let mut violated = 0;
    let mut counter = Vec::new();
    let mut unresolved = 0;
    for n in 2..=9 {
        for u in 1..n {
            let w = n - u;
            let g = Graph::hole_host(u, w);
            let parts: Vec<usize> = (3..=n + 1).collect();
            for m in lists(g.edges.len(), &parts) {
                if check_necessary(u, w, &m).is_ok() {
                    continue;
                }
                violated += 1;
                match decomposable(&g, &m, 2_000_000) {
                    Some(false) => {}
                    Some(true) => counter.push(format!("({},{}) {:?}", u, w, m)),
                    None => unresolved += 1,
                }
            }
        }
    }
    let mut detail = format!("{} violating lists checked, {} counterexamples, {} unresolved", violated, counter.len(), unresolved);
    if let Some(c) = counter.first() {
        detail.push_str(&format!("; first {}", c));
    }
    outcome(counter.is_empty() && unresolved == 0 && violated > 0, detail)
}

// ---------------------------------------------------------------------------
// 4. switch invariants

const SWITCHES: usize = 10_000;

/// A random cycle of the host with no two hole vertices adjacent and at
/// most `pure` pure edges (0 or 1, by parity of `len`).
fn random_cycle(u: usize, w: usize, len: usize, rng: &mut ChaCha8Rng) -> Option<Cycle> {
    let (holes, outers) = (len / 2, len - len / 2);
    if holes > u || outers > w {
        return None;
    }
    let mut hs: Vec<usize> = (0..u).collect();
    let mut ws: Vec<usize> = (0..w).collect();
    hs.shuffle(rng);
    ws.shuffle(rng);
    let mut vs = Vec::with_capacity(len);
    if len % 2 == 1 {
        vs.push(Vertex::outer(ws[outers - 1]));
    }
    for i in 0..holes {
        vs.push(Vertex::outer(ws[i]));
        vs.push(Vertex::hole(hs[i]));
    }
    Some(Cycle::new(vs))
}

fn edge_set(edges: &[(Vertex, Vertex)]) -> BTreeSet<(Vertex, Vertex)> {
    edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect()
}

fn disjoint_leave(u: usize, w: usize, lens: &[usize], rng: &mut ChaCha8Rng) -> Option<Vec<Cycle>> {
    let mut used = BTreeSet::new();
    let mut out = Vec::new();
    for &l in lens {
        let mut placed = false;
        for _ in 0..50 {
            let c = random_cycle(u, w, l, rng)?;
            let es = edge_set(&c.edges());
            if es.is_disjoint(&used) {
                used.extend(es);
                out.push(c);
                placed = true;
                break;
            }
        }
        if !placed {
            return None;
        }
    }
    Some(out)
}

fn switch_invariants() -> Outcome {
    let mut done = 0;
    let mut failures = Vec::new();
    let mut seed = 0u64;
    while done < SWITCHES {
        seed += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = *[3usize, 5, 7, 9].choose(&mut rng).unwrap();
        let w = *[4usize, 6, 8, 10].choose(&mut rng).unwrap();
        let lens: Vec<usize> = (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(3..=8)).collect();
        let Some(leave) = disjoint_leave(u, w, &lens, &mut rng) else { continue };
        let host = build_host(u, w).unwrap();
        let Ok(mut p) = packing_with_leave(&host, &leave, seed) else { continue };
        for _ in 0..100 {
            let hole = rng.gen_bool(0.5);
            let n = if hole { u } else { w };
            let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if i == j {
                continue;
            }
            let mk = |k| if hole { Vertex::hole(k) } else { Vertex::outer(k) };
            let (a, b) = (mk(i), mk(j));
            let pairs = switch_pairs(&p, a, b).unwrap();
            let Some(&(x, y)) = pairs.choose(&mut rng) else { continue };
            let origin = if rng.gen_bool(0.5) { x } else { y };
            let out = match perform_switch(&p, a, b, origin) {
                Ok(o) => o,
                Err(e) => {
                    failures.push(format!("seed {}: {}", seed, e));
                    break;
                }
            };
            let q = out.packing_after;
            let (mut l0, mut l1) = (p.lengths(), q.lengths());
            l0.sort_unstable();
            l1.sort_unstable();
            let (v0, v1) = (p.leave(), q.leave());
            let diff: BTreeSet<_> = edge_set(v0.edges()).symmetric_difference(&edge_set(v1.edges())).copied().collect();
            let t = out.terminus;
            let want = edge_set(&[(a, origin), (a, t), (b, origin), (b, t)]);
            if l0 != l1 {
                failures.push(format!("seed {}: lengths changed", seed));
            } else if (v0.pure_count, v0.cross_count) != (v1.pure_count, v1.cross_count) {
                failures.push(format!("seed {}: leave counts changed", seed));
            } else if diff != want || diff.len() != 4 {
                failures.push(format!("seed {}: toggled {} edges", seed, diff.len()));
            } else if Packing::new(host, q.cycles().to_vec()).is_err() {
                failures.push(format!("seed {}: result is not a packing", seed));
            }
            done += 1;
            p = q;
            if done == SWITCHES {
                break;
            }
        }
    }
    let mut detail = format!("{} switches, {} failures", done, failures.len());
    if let Some(f) = failures.first() {
        detail.push_str(&format!("; first {}", f));
    }
    outcome(failures.is_empty(), detail)
}

// ---------------------------------------------------------------------------
// 5. merge suite

const MERGES_PER_MU: usize = 100;

fn is_pure(x: &Vertex, y: &Vertex) -> bool {
    x.part == Part::Outer && y.part == Part::Outer
}

/// Independent check: the leave is an `h`-cycle plus an `m`-cycle, each
/// with at most one pure edge.
fn leave_is_two_cycles(host: &HostGraph, edges: &[(Vertex, Vertex)], h: usize, m: usize) -> bool {
    if edges.len() != h + m || edges.len() > 64 {
        return false;
    }
    let id = |v: &Vertex| if v.part == Part::Hole { v.index } else { host.u() + v.index };
    let g = Graph { n: host.u() + host.w(), edges: edges.iter().map(|(x, y)| (id(x), id(y))).collect() };
    let pure: u64 = edges.iter().enumerate().filter(|(_, (x, y))| is_pure(x, y)).map(|(i, _)| 1u64 << i).sum();
    // every h-cycle through the lowest edge of some component; try all
    // cycles of length h and test the rest
    let all = if edges.len() == 64 { u64::MAX } else { (1u64 << edges.len()) - 1 };
    let mut adj = vec![Vec::new(); g.n];
    for (i, &(x, y)) in g.edges.iter().enumerate() {
        adj[x].push((y, i));
        adj[y].push((x, i));
    }
    let is_cycle = |mask: u64, len: usize| -> bool {
        if mask.count_ones() as usize != len || (mask & pure).count_ones() > 1 {
            return false;
        }
        let mut deg = vec![0; g.n];
        let mut start = None;
        for i in 0..g.edges.len() {
            if mask >> i & 1 == 1 {
                let (x, y) = g.edges[i];
                deg[x] += 1;
                deg[y] += 1;
                start = Some(x);
            }
        }
        if deg.iter().any(|&d| d != 0 && d != 2) {
            return false;
        }
        // connected
        let mut seen = 0u64;
        let mut stack = vec![start.unwrap()];
        let mut verts = BTreeSet::new();
        while let Some(v) = stack.pop() {
            if !verts.insert(v) {
                continue;
            }
            for &(y, i) in &adj[v] {
                if mask >> i & 1 == 1 {
                    seen |= 1 << i;
                    stack.push(y);
                }
            }
        }
        seen == mask
    };
    fn walk(adj: &[Vec<(usize, usize)>], start: usize, at: usize, len: usize, mask: u64, visited: u64, found: &mut dyn FnMut(u64) -> bool) -> bool {
        if len == 0 {
            return false;
        }
        for &(y, i) in &adj[at] {
            if mask >> i & 1 == 1 {
                continue;
            }
            if y == start && len == 1 {
                if found(mask | 1 << i) {
                    return true;
                }
                continue;
            }
            if visited >> y & 1 == 1 || y == start {
                continue;
            }
            if walk(adj, start, y, len - 1, mask | 1 << i, visited | 1 << y, found) {
                return true;
            }
        }
        false
    }
    let mut ok = false;
    for s in 0..g.n {
        let mut check = |c: u64| {
            if is_cycle(c, h) && is_cycle(all & !c, m) {
                ok = true;
            }
            ok
        };
        if walk(&adj, s, s, h, 0, 1 << s, &mut check) {
            break;
        }
    }
    ok
}

fn merge_instance(mu: usize, rng: &mut ChaCha8Rng) -> Option<(Packing, MergeRequest)> {
    let u = *[5usize, 7, 9, 11].choose(rng).unwrap();
    let w = *[10usize, 12, 14].choose(rng).unwrap();
    let pick = |rng: &mut ChaCha8Rng, odd: bool| {
        let x = rng.gen_range(3..=10);
        if (x % 2 == 1) == odd {
            x
        } else {
            x + 1
        }
    };
    let odd_at = match mu {
        0 => [false, false, false],
        1 => {
            let mut v = [false; 3];
            v[rng.gen_range(0..3)] = true;
            v
        }
        _ => [true, rng.gen_bool(0.5), false],
    };
    let mut odd_at = odd_at;
    if mu == 2 && !odd_at[1] {
        odd_at[2] = true;
    }
    let (h, m1, m2) = (pick(rng, odd_at[0]), pick(rng, odd_at[1]), pick(rng, odd_at[2]));
    let req = MergeRequest { h, m1, m2, mu };
    req.check(u, w).ok()?;
    let leave = disjoint_leave(u, w, &[h, m1, m2], rng)?;
    let host = build_host(u, w).unwrap();
    let p = packing_with_leave(&host, &leave, rng.gen()).ok()?;
    Some((p, req))
}

fn merge_suite() -> Outcome {
    let mut parts = Vec::new();
    let mut all_ok = true;
    for mu in 0..=2 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + mu as u64);
        let (mut done, mut bad, mut walked) = (0, Vec::new(), 0);
        let mut attempts = 0;
        while done < MERGES_PER_MU && attempts < 100 * MERGES_PER_MU {
            attempts += 1;
            let Some((p, req)) = merge_instance(mu, &mut rng) else { continue };
            done += 1;
            match general_joining_traced(&p, req, rng.gen()) {
                Ok((q, trace)) => {
                    walked += trace.iter().any(|l| l.starts_with("walk")) as usize;
                    let (mut l0, mut l1) = (p.lengths(), q.lengths());
                    l0.sort_unstable();
                    l1.sort_unstable();
                    if l0 != l1 || !leave_is_two_cycles(q.host(), q.leave().edges(), req.h, req.m1 + req.m2) {
                        bad.push(format!("{:?}: wrong leave", req));
                    }
                }
                Err(e) => bad.push(format!("{:?}: {}", req, e)),
            }
        }
        all_ok &= bad.is_empty() && done == MERGES_PER_MU;
        let mut s = format!("mu={}: {}/{} ok ({} via switch walk)", mu, done - bad.len(), done, walked);
        if let Some(b) = bad.first() {
            s.push_str(&format!(", first failure {}", b));
        }
        parts.push(s);
    }
    outcome(all_ok, parts.join("; "))
}

// ---------------------------------------------------------------------------
// 6. base builder tags

const BASE_PER_VARIANT: usize = 25;

fn base_tags() -> Outcome {
    let mut parts = Vec::new();
    let mut all_ok = true;
    for variant in [BaseVariant::FewCrossOdds, BaseVariant::ManyLarge, BaseVariant::ManySmall] {
        for (u, w) in [(9, 10), (11, 12)] {
            let (mut done, mut bad, mut fell) = (0, Vec::new(), 0);
            let mut seed = 0u64;
            while done < BASE_PER_VARIANT && seed < 50 * BASE_PER_VARIANT as u64 {
                seed += 1;
                let Some(req) = random_base_request(u, w, variant, seed, 500) else { continue };
                done += 1;
                match base_decompose(u, w, &req, seed) {
                    Ok(out) => {
                        fell += out.used_fallback as usize;
                        let tagged: Vec<&Cycle> = out.tagged_cycles().collect();
                        let mut tl: Vec<usize> = tagged.iter().map(|c| c.len()).collect();
                        let mut want = req.small_lengths();
                        if req.k > 0 {
                            want.push(req.k);
                        }
                        tl.sort_unstable();
                        want.sort_unstable();
                        let pure_ok = tagged.iter().all(|c| c.edges().iter().filter(|(x, y)| is_pure(x, y)).count() <= 1);
                        if !verify_decomposition(&out.host, &out.cycles, &req.lengths()).passed() {
                            bad.push(format!("seed {}: not a decomposition", seed));
                        } else if tl != want {
                            bad.push(format!("seed {}: tagged lengths {:?}", seed, tl));
                        } else if !pure_ok {
                            bad.push(format!("seed {}: tagged cycle with two pure edges", seed));
                        }
                    }
                    Err(e) => bad.push(format!("seed {}: {}", seed, e)),
                }
            }
            all_ok &= bad.is_empty() && done == BASE_PER_VARIANT;
            let mut s = format!("{:?} ({},{}): {}/{} ok, {} fallback", variant, u, w, done - bad.len(), done, fell);
            if let Some(b) = bad.first() {
                s.push_str(&format!(", first failure {}", b));
            }
            parts.push(s);
        }
    }
    outcome(all_ok, parts.join("; "))
}

// ---------------------------------------------------------------------------
// 7. equalized colouring

const COLOURING_GRAPHS: usize = 500;

fn colouring_ok(n: usize, edges: &[(usize, usize)], ell: usize, colour: &[usize]) -> bool {
    if colour.len() != edges.len() || colour.iter().any(|&c| c >= ell) {
        return false;
    }
    let mut at: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (&(x, y), &c) in edges.iter().zip(colour) {
        if !at[x].insert(c) || !at[y].insert(c) {
            return false;
        }
    }
    let mut sizes = vec![0usize; ell];
    for &c in colour {
        sizes[c] += 1;
    }
    sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1
}

/// Random graph on `0..w` with `ceil(3w/4)` edges and degrees 1 or 3.
fn one_three_graph(w: usize, rng: &mut ChaCha8Rng) -> Option<Vec<(usize, usize)>> {
    let e = (3 * w).div_ceil(4);
    let n3 = (2 * e - w) / 2;
    let mut verts: Vec<usize> = (0..w).collect();
    verts.shuffle(rng);
    let mut stubs: Vec<usize> = verts.iter().enumerate().flat_map(|(i, &v)| std::iter::repeat(v).take(if i < n3 { 3 } else { 1 })).collect();
    for _ in 0..200 {
        stubs.shuffle(rng);
        let es: Vec<(usize, usize)> = stubs.chunks(2).map(|p| (p[0].min(p[1]), p[0].max(p[1]))).collect();
        let set: BTreeSet<_> = es.iter().collect();
        if es.iter().all(|(x, y)| x != y) && set.len() == es.len() {
            return Some(es);
        }
    }
    None
}

fn colouring() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut done = 0;
    let mut bad = 0;
    while done < COLOURING_GRAPHS {
        let n = rng.gen_range(3..=16);
        let ell = rng.gen_range(2..=5);
        let p: f64 = rng.gen_range(0.1..0.9);
        let mut deg = vec![0; n];
        let mut edges = Vec::new();
        for x in 0..n {
            for y in x + 1..n {
                if rng.gen_bool(p) && deg[x] < ell && deg[y] < ell {
                    deg[x] += 1;
                    deg[y] += 1;
                    edges.push((x, y));
                }
            }
        }
        if !fournier_precondition(n, &edges, ell) {
            continue;
        }
        done += 1;
        match equalized_coloring(n, &edges, ell) {
            Ok(c) if colouring_ok(n, &edges, ell, &c) => {}
            _ => bad += 1,
        }
    }
    // the subdivided graphs behind the 5-cycle packing
    let mut h_done = 0;
    let mut h_bad = Vec::new();
    for w in (8..=24).step_by(2) {
        for _ in 0..10 {
            let Some(g) = one_three_graph(w, &mut rng) else { continue };
            let keep = if w % 4 == 2 { Some(rng.gen_range(0..g.len())) } else { None };
            let mut h = Vec::new();
            let mut next = w;
            for (i, &(y, z)) in g.iter().enumerate() {
                if Some(i) == keep {
                    h.push((y, z));
                } else {
                    h.push((y, next));
                    h.push((z, next));
                    next += 1;
                }
            }
            h_done += 1;
            match equalized_coloring(next, &h, 3) {
                Ok(c) => {
                    let mut sizes = [0usize; 3];
                    for &x in &c {
                        sizes[x] += 1;
                    }
                    if !colouring_ok(next, &h, 3, &c) || sizes != [w / 2; 3] {
                        h_bad.push(format!("w={} sizes {:?}", w, sizes));
                    }
                }
                Err(e) => h_bad.push(format!("w={}: {}", w, e)),
            }
            let ab = g[keep.unwrap_or(0)];
            match one_factor_5cycles(w, &g, ab) {
                Ok(f) if f.class_sizes == [w / 2; 3] && f.cycles.len() == g.len() - keep.is_some() as usize => {}
                Ok(f) => h_bad.push(format!("w={} packer classes {:?}", w, f.class_sizes)),
                Err(e) => h_bad.push(format!("w={} packer: {}", w, e)),
            }
        }
    }
    let mut detail = format!("{} random graphs, {} bad; {} subdivided graphs (colouring and 5-cycle packer) with classes of exactly w/2, {} bad", done, bad, h_done, h_bad.len());
    if let Some(b) = h_bad.first() {
        detail.push_str(&format!("; first {}", b));
    }
    outcome(bad == 0 && h_bad.is_empty() && h_done > 0, detail)
}

// ---------------------------------------------------------------------------
// 8. basic refinement

/// (3s, 4s, 5s, 6s) of the basic refinement, straight from the case table.
fn table_counts(m: usize) -> [usize; 4] {
    match m % 4 {
        0 => [0, m / 4, 0, 0],
        1 if m == 5 => [0, 0, 1, 0],
        1 => [1, (m - 9) / 4, 0, 1],
        2 => [0, (m - 6) / 4, 0, 1],
        _ => [1, (m - 3) / 4, 0, 0],
    }
}

fn refinement_table() -> Outcome {
    let mut bad = Vec::new();
    for m in 3..=32 {
        let r = basic_refinement(m);
        let got = [3, 4, 5, 6].map(|l| r.iter().filter(|&&x| x == l).count());
        if got != table_counts(m) || r.len() != got.iter().sum::<usize>() {
            bad.push(m);
        }
    }
    let spots = basic_refinement(12) == [4, 4, 4] && basic_refinement(9) == [3, 6] && basic_refinement(5) == [5];
    outcome(bad.is_empty() && spots, format!("m = 3..=32, {} mismatches {:?}; spot values 12, 9, 5 {}", bad.len(), bad, if spots { "match" } else { "differ" }))
}

// ---------------------------------------------------------------------------
// 9. subsolver oracles

fn subsolver_oracles() -> Outcome {
    let limit = 20_000_000;
    let mut checked = 0;
    let mut bad = Vec::new();
    let mut unresolved = 0;
    let mut judge = |what: String, verdict: bool, truth: Option<bool>| {
        checked += 1;
        match truth {
            Some(t) if t != verdict => bad.push(format!("{}: solver says {}, enumeration {}", what, verdict, t)),
            None => unresolved += 1,
            _ => {}
        }
    };
    for v in 3..=9 {
        let g = Graph::complete(v);
        for m in lists(g.edges.len(), &(3..=v + 1).collect::<Vec<_>>()) {
            judge(format!("K_{} {:?}", v, m), complete_feasible(v, &m).is_ok(), decomposable(&g, &m, limit));
        }
        if v % 2 == 0 {
            let g = Graph::complete_minus_matching(v);
            for m in lists(g.edges.len(), &(3..=v + 1).collect::<Vec<_>>()) {
                judge(format!("K_{} - I {:?}", v, m), complete_minus_i_feasible(v, &m).is_ok(), decomposable(&g, &m, limit));
            }
        }
    }
    let mut bip = 0;
    for p in 1..=24usize {
        for q in p..=24 / p {
            let g = Graph::bipartite(p, q);
            let top = 2 * p.min(q) + 2;
            let parts: Vec<usize> = (4..=top).step_by(2).collect();
            for m in lists(p * q, &parts) {
                bip += 1;
                let verdict = bipartite_decomposable(p, q, &m).unwrap_or(false);
                judge(format!("K_{{{},{}}} {:?}", p, q, m), verdict, decomposable(&g, &m, limit));
            }
            for d in 0..=p * q / 6 {
                if (p * q - 6 * d) % 4 != 0 {
                    continue;
                }
                let b = (p * q - 6 * d) / 4;
                let m: Vec<usize> = std::iter::repeat(4).take(b).chain(std::iter::repeat(6).take(d)).collect();
                judge(format!("K_{{{},{}}} 4^{} 6^{}", p, q, b, d), bipartite46_feasible(p, q, b, d).is_ok(), decomposable(&g, &m, limit));
            }
        }
    }
    let mut detail = format!("{} verdicts ({} bipartite lists), {} disagreements, {} unresolved", checked, bip, bad.len(), unresolved);
    if let Some(b) = bad.first() {
        detail.push_str(&format!("; first {}", b));
    }
    outcome(bad.is_empty() && unresolved == 0, detail)
}
