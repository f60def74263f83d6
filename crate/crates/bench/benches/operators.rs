use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use pcsmri::acquisition::{adjoint, forward_noiseless, zero_filled};
use pcsmri::prior::tv_denoise;
use pcsmri::solver::{dc_update, HqsSolver};
use pcsmri::{fft2c, ConsistencyWeight, PriorSpec, SolverConfig, StageParams};
use pcsmri_bench::fixture;

const SIZES: [usize; 2] = [128, 256];

fn transforms(c: &mut Criterion) {
    let mut g = c.benchmark_group("transforms");
    for size in SIZES {
        let case = fixture(size);
        g.bench_with_input(BenchmarkId::new("fft2c", size), &case, |b, case| {
            b.iter(|| fft2c(black_box(&case.gt)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("forward", size), &case, |b, case| {
            b.iter(|| forward_noiseless(black_box(&case.gt), &case.sens, &case.mask).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("adjoint", size), &case, |b, case| {
            b.iter(|| adjoint(black_box(&case.kspace), &case.sens, &case.mask).unwrap())
        });
    }
    g.finish();
}

fn subproblems(c: &mut Criterion) {
    let mut g = c.benchmark_group("subproblems");
    for size in SIZES {
        let case = fixture(size);
        let x = zero_filled(&case.kspace, &case.sens).unwrap();
        g.bench_with_input(BenchmarkId::new("dc_update", size), &x, |b, x| {
            b.iter(|| {
                dc_update(
                    black_box(x),
                    &case.kspace,
                    &case.sens,
                    &case.mask,
                    1.0,
                    &ConsistencyWeight::Scalar(1.0),
                )
                .unwrap()
            })
        });
        g.bench_with_input(BenchmarkId::new("tv_denoise_50", size), &x, |b, x| {
            b.iter(|| tv_denoise(black_box(x), 0.012, 50, 0.0))
        });
    }
    g.finish();
}

fn solver_step(c: &mut Criterion) {
    let mut g = c.benchmark_group("hqs_step");
    g.sample_size(20);
    let priors = [
        ("tikhonov", PriorSpec::Tikhonov),
        ("haar", PriorSpec::SoftThresholdHaar),
        ("tv", PriorSpec::total_variation()),
    ];
    let case = fixture(128);
    for (name, prior) in priors {
        let cfg = SolverConfig::new(StageParams::new(1.0, 1.0, 0.01).unwrap(), 1, prior).unwrap();
        let solver = HqsSolver::new(&case.kspace, &case.sens, &case.mask, &cfg).unwrap();
        let init = solver.init().unwrap();
        g.bench_function(name, |b| {
            b.iter_batched(
                || init.clone(),
                |mut s| solver.step(&mut s).unwrap(),
                criterion::BatchSize::SmallInput,
            )
        });
    }
    g.finish();
}

criterion_group!(benches, transforms, subproblems, solver_step);
criterion_main!(benches);
