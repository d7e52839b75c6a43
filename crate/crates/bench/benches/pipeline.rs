use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use holecycle_core::base::{base_decompose, BaseVariant};
use holecycle_core::driver::{decompose, select_z};
use holecycle_core::generate::random_base_request;
use holecycle_core::subsolvers::SolverBudget;

fn expand(pairs: &[(usize, usize)]) -> Vec<usize> {
    pairs.iter().flat_map(|&(l, n)| std::iter::repeat(l).take(n)).collect()
}

const INSTANCES: &[(&str, usize, usize, &[(usize, usize)])] = &[
    ("uniform-5", 5, 10, &[(4, 10), (5, 11)]),
    ("mixed-5", 5, 10, &[(3, 5), (4, 5), (5, 12)]),
    ("mixed-7", 7, 10, &[(3, 10), (4, 2), (5, 8), (6, 5), (7, 1)]),
    ("large-odds-9", 9, 12, &[(5, 12), (8, 3), (9, 10)]),
];

fn decompose_bench(c: &mut Criterion) {
    let mut g = c.benchmark_group("decompose");
    g.sample_size(10);
    for &(name, u, w, pairs) in INSTANCES {
        let m = expand(pairs);
        g.bench_with_input(BenchmarkId::from_parameter(name), &m, |b, m| {
            b.iter(|| decompose(u, w, black_box(m), &SolverBudget::seeded(1)).unwrap())
        });
    }
    g.finish();
}

fn base_bench(c: &mut Criterion) {
    let mut g = c.benchmark_group("base_decompose");
    g.sample_size(10);
    for variant in [BaseVariant::FewCrossOdds, BaseVariant::ManyLarge, BaseVariant::ManySmall] {
        let req = (1..100).find_map(|s| random_base_request(9, 10, variant, s, 500)).expect("a base request");
        g.bench_function(format!("{:?}", variant), |b| b.iter(|| base_decompose(9, 10, black_box(&req), 7).unwrap()));
    }
    g.finish();
}

fn select_z_bench(c: &mut Criterion) {
    let m = expand(&[(5, 12), (8, 3), (9, 10)]);
    c.bench_function("select_z", |b| b.iter(|| select_z(9, 12, black_box(&m)).unwrap()));
}

criterion_group!(benches, decompose_bench, base_bench, select_z_bench);
criterion_main!(benches);
