//! Sequential vs. data-parallel execution of the interval solver and the
//! translation scan on the bundled 3×3 preset.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use sicnn::{solve_ivp, translation_scan, ExecMode, RunConfig};

fn modes() -> Vec<ExecMode> {
    if cfg!(feature = "parallel") {
        vec![ExecMode::Sequential, ExecMode::Parallel]
    } else {
        vec![ExecMode::Sequential]
    }
}

fn bench_solver(c: &mut Criterion) {
    let model = RunConfig::example6().build().expect("preset builds");
    let setup = model.setup.clone().expect("preset carries initial data");
    let mut group = c.benchmark_group("solve_ivp_horizon_20");
    group.sample_size(10);
    for mode in modes() {
        let mut opts = model.opts;
        opts.exec = mode;
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{mode:?}")),
            &opts,
            |b, opts| {
                b.iter(|| {
                    solve_ivp(
                        &model.net,
                        &model.schedule,
                        &model.act,
                        &setup,
                        setup.sigma + 20.0,
                        opts,
                    )
                    .expect("solve succeeds")
                })
            },
        );
    }
    group.finish();
}

fn bench_scan(c: &mut Criterion) {
    let model = RunConfig::example6().build().expect("preset builds");
    let setup = model.setup.clone().expect("preset carries initial data");
    let traj = solve_ivp(
        &model.net,
        &model.schedule,
        &model.act,
        &setup,
        setup.sigma + 80.0,
        &model.opts,
    )
    .expect("solve succeeds");
    let mut group = c.benchmark_group("translation_scan_range_40");
    group.sample_size(10);
    for mode in modes() {
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{mode:?}")),
            &mode,
            |b, &mode| {
                b.iter(|| {
                    // Window starts past the preset's σ = 0.25 so the solved
                    // trajectory covers every shifted comparison.
                    translation_scan(&traj, 0.05, (0.0, 40.0), 0.01, (1.0, 31.0), mode)
                        .expect("scan succeeds")
                })
            },
        );
    }
    group.finish();
}

criterion_group!(benches, bench_solver, bench_scan);
criterion_main!(benches);
