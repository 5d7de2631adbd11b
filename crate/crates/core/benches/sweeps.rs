use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use nullscreen::catalog::{catalog_get, EntryParams};
use nullscreen::isoparam::isoparametric_scan;
use nullscreen::nullhyp::{build_null_frame, shape_data};
use nullscreen::numkernel::Tolerances;
use nullscreen::parallel::{map_indexed, Execution};
use nullscreen::rng::Xorshift64Star;
use nullscreen::runner::{run, RunConfig, Suite};

const MODES: [Execution; 2] = [Execution::Sequential, Execution::Parallel];

fn shape_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("shape_sweep");
    group.sample_size(10);
    for (name, n) in [("mink_cone", 3), ("ads_gudermann_tube", 5)] {
        let e = catalog_get(name, n, &EntryParams::new()).unwrap();
        for exec in MODES {
            group.bench_with_input(BenchmarkId::new(format!("{name}_n{n}"), exec.as_str()), &exec, |b, &exec| {
                b.iter(|| {
                    map_indexed(exec, 64, |i| {
                        let q = e.sample_point(&mut Xorshift64Star::for_stream(1, 3, i as u64)).unwrap();
                        let f = build_null_frame(&e.graph, &q, 1e-5).unwrap();
                        shape_data(&e.graph, &f).unwrap().shape_relation_residual()
                    })
                })
            });
        }
    }
    group.finish();
}

fn isoparametric(c: &mut Criterion) {
    let mut group = c.benchmark_group("isoparametric_scan");
    group.sample_size(10);
    let e = catalog_get("ds_gudermann", 3, &EntryParams::new()).unwrap();
    let tol = Tolerances::default();
    for exec in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(exec.as_str()), &exec, |b, &exec| {
            b.iter(|| isoparametric_scan(&e, 1.0, 32, 7, &tol, exec).unwrap())
        });
    }
    group.finish();
}

fn full_run(c: &mut Criterion) {
    let mut group = c.benchmark_group("run");
    group.sample_size(10);
    for exec in MODES {
        let mut cfg = RunConfig::from_args(&["--entry", "mink_cylinder", "--n", "3", "--sample_count", "40"]).unwrap();
        cfg.suites = vec![Suite::Frames, Suite::Shape, Suite::Cartan, Suite::Chart];
        cfg.execution = exec;
        group.bench_function(BenchmarkId::from_parameter(exec.as_str()), |b| b.iter(|| run(&cfg).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, shape_sweep, isoparametric, full_run);
criterion_main!(benches);
