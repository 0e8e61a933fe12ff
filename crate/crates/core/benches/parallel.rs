//! Compares the rayon-parallel germ lattice sweep against the sequential
//! fallback. Run with `cargo bench -p mergelab`.

use criterion::{criterion_group, criterion_main, Criterion};

use mergelab::germ::{self, BruteForceOpts, GermParams};
use mergelab::FluxModel;

fn sweep_opts() -> BruteForceOpts {
    let mut opts = BruteForceOpts::new(0.02); // 51^3 lattice points
    opts.gamma_samples = 100;
    opts
}

fn bench_germ_sweep(c: &mut Criterion) {
    let m = FluxModel::quadratic(1.0, 1.0).unwrap();
    let g = GermParams::new(0.5).unwrap();
    let opts = sweep_opts();

    let mut group = c.benchmark_group("germ_sweep");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| germ::brute_force_equivalence(&m, &g, &opts).unwrap())
    });
    group.bench_function("serial", |b| {
        b.iter(|| germ::brute_force_equivalence_serial(&m, &g, &opts).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_germ_sweep);
criterion_main!(benches);
