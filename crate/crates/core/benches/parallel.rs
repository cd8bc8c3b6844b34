use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use rwrp_core::environment::PotentialSpec;
use rwrp_core::fk_mc::{estimate_e, make_tilt, McOptions};
use rwrp_core::green::{green_series, GreenDecayOptions};
use rwrp_core::lattice_walk::Direction;
use rwrp_core::par::Execution;
use rwrp_core::theory::{frak_i, Q3};

fn annealed(c: &mut Criterion) {
    let mu = PotentialSpec::pareto(0.5, 1.0);
    let ell = Direction::axis(3, 0);
    let beta = 0.05;
    let tilt = make_tilt(frak_i(beta, &mu, Q3).unwrap(), &ell).unwrap();
    let mut group = c.benchmark_group("annealed_estimate");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            let opts = McOptions {
                exec,
                ..McOptions::new(20_000, 7)
            };
            b.iter(|| estimate_e(beta, 16, &mu, &ell, Some(&tilt), &opts).unwrap())
        });
    }
    group.finish();
}

fn green(c: &mut Criterion) {
    let mu = PotentialSpec::pareto(0.5, 1.0);
    let ell = Direction::axis(3, 0);
    let ns: Vec<i64> = (4..=10).collect();
    let mut group = c.benchmark_group("green_series");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            let opts = GreenDecayOptions {
                exec,
                ..GreenDecayOptions::new(8, 4, 7)
            };
            b.iter(|| green_series(&mu, 0.05, &ell, &ns, &opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, annealed, green);
criterion_main!(benches);
