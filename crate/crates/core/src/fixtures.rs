//! Shared test fixtures.

use crate::expr::{Expr, SampleRegion};
use crate::jet::{BundleChart, Generator, HorizontalForm, TotalVectorField};
use crate::reduction::{AdaptedChart, QChain, ReductionSetup};

pub(crate) fn original() -> BundleChart {
    let mut c = BundleChart::new(&["x", "y", "z"], &["u1", "u2"])
        .unwrap()
        .with_region(SampleRegion {
            base: vec![(0.25, 1.5); 3],
            jet: (-1.5, 1.5),
        });
    c.define("r", "sqrt(x^2+y^2+z^2)").unwrap();
    c
}

pub(crate) fn so3_setup() -> ReductionSetup {
    let c = original();
    let adapted = BundleChart::new(&["xh", "yh", "r"], &["v1", "v2"])
        .unwrap()
        .with_region(SampleRegion {
            base: vec![(0.25, 1.0), (0.25, 1.0), (1.5, 3.0)],
            jet: (-1.5, 1.5),
        });
    let p = |s: &str| c.parse(s).unwrap();
    let a = |s: &str| adapted.parse(s).unwrap();
    let chart = AdaptedChart::new(
        c.clone(),
        adapted.clone(),
        &["xh", "yh"],
        vec![p("x"), p("y"), p("r")],
        vec![a("xh"), a("yh"), a("sqrt(r^2 - xh^2 - yh^2)")],
    )
    .unwrap();
    let x1 = vec![p("-y"), p("x"), p("0")];
    let x2 = vec![p("0"), p("-z"), p("y")];
    let x3 = vec![p("z"), p("0"), p("-x")];
    let chain = QChain::new(
        &c,
        p("r/y"),
        vec![TotalVectorField(x1.clone()), TotalVectorField(x2.clone())],
    )
    .unwrap();
    let gens = [x1, x2, x3]
        .into_iter()
        .map(|xi| Generator::horizontal(&c, xi).unwrap())
        .collect();
    ReductionSetup::new(chart, chain, gens, HorizontalForm::top(3, Expr::one())).unwrap()
}
