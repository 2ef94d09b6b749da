use std::path::PathBuf;

use clap::Parser;
use criterion::{criterion_group, criterion_main, Criterion};
use jetred::cli::{run, Cli};
use jetred::par::{map_slice, Execution};
use jetred::problem::{load_problem, LoadOptions};

fn example() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/so3_paper.json")
}

fn verify_all(c: &mut Criterion) {
    let path = example();
    let path = path.to_str().unwrap();
    let mut group = c.benchmark_group("verify_all");
    for (name, flags) in [("sequential", &["--sequential"][..]), ("parallel", &[][..])] {
        let mut argv = vec!["jetred", "-p", path];
        argv.extend_from_slice(flags);
        argv.extend_from_slice(&["verify", "all"]);
        let cli = Cli::try_parse_from(argv).unwrap();
        group.bench_function(name, |b| b.iter(|| assert_eq!(run(&cli).code, 0)));
    }
    group.finish();
}

fn el_commute_batch(c: &mut Criterion) {
    let problem = load_problem(&example(), &LoadOptions::default()).unwrap();
    let setup = problem.reduction().unwrap();
    let densities: Vec<_> = [
        "P",
        "Q",
        "R",
        "kappa",
        "P_shifted",
        "u1*u2*(x^2+y^2+z^2)",
        "(u1_x^2+u1_y^2+u1_z^2)*u2",
    ]
    .iter()
    .map(|e| problem.expression(e).unwrap())
    .collect();
    let mut group = c.benchmark_group("el_commute_batch");
    group.sample_size(20);
    for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        group.bench_function(name, |b| {
            b.iter(|| {
                let ok = map_slice(exec, &densities, |p| setup.verify_el_commute(p).unwrap());
                assert!(ok.iter().all(|v| *v));
            })
        });
    }
    group.finish();
}

criterion_group!(benches, verify_all, el_commute_batch);
criterion_main!(benches);
