use criterion::{criterion_group, criterion_main, Criterion};
use towerplex_bench::odometer_chain;
use towerplex_core::multiplex::assemble_t;

fn build(c: &mut Criterion) {
    let mut g = c.benchmark_group("chain");
    g.sample_size(10);
    g.bench_function("odometer10/3 stages", |b| b.iter(|| odometer_chain(10, 3)));
    let chain = odometer_chain(10, 3);
    g.bench_function("assemble T_3", |b| b.iter(|| assemble_t(&chain, 3).unwrap()));
    g.finish();
}

criterion_group!(benches, build);
criterion_main!(benches);
