use std::collections::BTreeMap;
use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use jetred::expr::Expr;
use jetred::jet::{BundleChart, HorizontalForm};
use jetred::numeric::{compare_reduced_functional, integrate, Region, Section};
use jetred::par::Execution;
use jetred::problem::{load_problem, LoadOptions};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn shell_integral(c: &mut Criterion) {
    let chart = BundleChart::new(&["x", "y", "z"], &["u1", "u2"]).unwrap();
    let s = Section::parse(
        &chart,
        &[("u1", "exp(-(x^2+y^2+z^2))"), ("u2", "x*y")],
        &BTreeMap::new(),
    )
    .unwrap();
    let p = chart.parse("u1*(u2_xx + u2_yy) + u1_x^2").unwrap();
    let nu = HorizontalForm::top(3, Expr::one());
    let mut group = c.benchmark_group("shell_integral");
    group.sample_size(10);
    for nodes in [32, 64] {
        let region = Region::shell(0.5, 4.0).unwrap().with_nodes(nodes);
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, nodes), &region, |b, region| {
                b.iter(|| integrate(&chart, &p, &s, region, &nu, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn reduced_comparison(c: &mut Criterion) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/so3_paper.json");
    let problem = load_problem(&path, &LoadOptions::default()).unwrap();
    let setup = problem.reduction().unwrap();
    let p = problem.expression("P").unwrap();
    let section = problem.section("gaussian").unwrap();
    let shell = problem.region("shell").unwrap().clone().with_nodes(48);
    let radial = problem.region("radial").unwrap();
    let mut group = c.benchmark_group("compare_reduced");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| compare_reduced_functional(setup, &p, section, &shell, radial, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, shell_integral, reduced_comparison);
criterion_main!(benches);
