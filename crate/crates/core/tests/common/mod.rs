#![allow(dead_code)]

use std::path::PathBuf;

use jetred::bracket::{check_jacobiator_exact, l2_tilde, OmegaStructure};
use jetred::expr::{Expr, VarRef};
use jetred::jet::{contract, d_h, euler_lagrange, BundleChart, HorizontalForm, TotalVectorField};
use jetred::problem::{load_problem, LoadOptions, Problem};
use jetred::reduction::ReductionSetup;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed, TestCaseError, TestRunner};

pub const CASES: u32 = 200;

pub fn config(seed: u64) -> Config {
    Config {
        cases: CASES,
        rng_seed: RngSeed::Fixed(seed),
        failure_persistence: None,
        ..Config::default()
    }
}

pub fn example_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/so3_paper.json")
}

pub fn so3_problem() -> Problem {
    load_problem(&example_path(), &LoadOptions::default()).expect("example problem loads")
}

pub fn so3_setup() -> ReductionSetup {
    so3_problem().reduction.expect("example has a reduction block")
}

/// A random polynomial with small integer coefficients, optionally divided
/// by `1 + x_i^2`.
#[derive(Debug, Clone)]
pub struct PolySpec {
    pub terms: Vec<(i64, Vec<VarRef>)>,
    pub denominator: Option<usize>,
}

impl PolySpec {
    pub fn build(&self) -> Expr {
        let mut out = Expr::zero();
        for (c, vars) in &self.terms {
            let mut t = Expr::integer(*c);
            for v in vars {
                t = t.mul_ref(&Expr::var(v.clone()));
            }
            out = out.add_ref(&t);
        }
        if let Some(i) = self.denominator {
            let x = Expr::var(VarRef::base(i));
            let d = x.mul_ref(&x).add_ref(&Expr::one());
            out = out.div(&d).expect("1 + x^2 is nonzero");
        }
        out
    }
}

pub fn var_strategy(n: usize, m: usize, max_order: usize) -> impl Strategy<Value = VarRef> {
    prop_oneof![
        1 => (0..n).prop_map(VarRef::base),
        4 => (0..m, prop::collection::vec(0..n, 0..=max_order)).prop_map(|(a, idx)| VarRef::jet(a, idx)),
    ]
}

pub fn poly_strategy(
    n: usize,
    m: usize,
    max_order: usize,
    max_terms: usize,
    max_factors: usize,
    rational: bool,
) -> impl Strategy<Value = PolySpec> {
    let coeff = prop_oneof![-3i64..=-1, 1i64..=3];
    let term = (
        coeff,
        prop::collection::vec(var_strategy(n, m, max_order), 1..=max_factors),
    );
    let denominator = if rational {
        prop::option::weighted(0.3, 0..n).boxed()
    } else {
        Just(None).boxed()
    };
    (prop::collection::vec(term, 1..=max_terms), denominator)
        .prop_map(|(terms, denominator)| PolySpec { terms, denominator })
}

/// Chart `x, y, z` with fibers `u1, u2`.
pub fn space_chart() -> BundleChart {
    BundleChart::new(&["x", "y", "z"], &["u1", "u2"]).unwrap()
}

/// Random horizontal form: degree and a list of `(basis, coefficient)`.
pub fn form_strategy(n: usize, m: usize, degree: usize) -> impl Strategy<Value = Vec<(Vec<usize>, PolySpec)>> {
    let basis = prop::sample::subsequence((0..n).collect::<Vec<_>>(), degree);
    prop::collection::vec((basis, poly_strategy(n, m, 2, 2, 3, true)), 1..=3)
}

pub fn build_form(n: usize, degree: usize, terms: &[(Vec<usize>, PolySpec)]) -> HorizontalForm {
    let mut f = HorizontalForm::zero(n, degree);
    for (basis, p) in terms {
        f.add_term(basis.clone(), p.build()).unwrap();
    }
    f
}

/// Rotation invariants on the original chart of the example problem.
pub const INVARIANTS: &[&str] = &[
    "x^2 + y^2 + z^2",
    "r",
    "u1",
    "u2",
    "u1_x^2 + u1_y^2 + u1_z^2",
    "u1_x*u2_x + u1_y*u2_y + u1_z*u2_z",
    "u1_xx + u1_yy + u1_zz",
    "u2_xx + u2_yy + u2_zz",
    "x*u1_x + y*u1_y + z*u1_z",
    "x*u2_x + y*u2_y + z*u2_z",
    "u2_x*(y*u1_z - z*u1_y) + u2_y*(z*u1_x - x*u1_z) + u2_z*(x*u1_y - y*u1_x)",
];

/// Rotation-equivariant vector fields.
pub const EQUIVARIANT_FIELDS: &[[&str; 3]] = &[
    ["x", "y", "z"],
    ["u1_x", "u1_y", "u1_z"],
    ["u2_x", "u2_y", "u2_z"],
    ["y*u1_z - z*u1_y", "z*u1_x - x*u1_z", "x*u1_y - y*u1_x"],
    [
        "u1_y*u2_z - u1_z*u2_y",
        "u1_z*u2_x - u1_x*u2_z",
        "u1_x*u2_y - u1_y*u2_x",
    ],
];

/// `Σ c_k Π invariants`, at most `max_terms` terms of at most two factors.
pub fn invariant_strategy(max_terms: usize) -> impl Strategy<Value = InvariantSpec> {
    let coeff = prop_oneof![-3i64..=-1, 1i64..=3];
    let term = (coeff, prop::collection::vec(0..INVARIANTS.len(), 1..=2));
    prop::collection::vec(term, 1..=max_terms)
}

pub fn build_invariant(chart: &BundleChart, spec: &[(i64, Vec<usize>)]) -> Expr {
    let mut out = Expr::zero();
    for (c, factors) in spec {
        let mut t = Expr::integer(*c);
        for &k in factors {
            t = t.mul_ref(&chart.parse(INVARIANTS[k]).unwrap());
        }
        out = out.add_ref(&t);
    }
    out
}

/// Terms `c Π INVARIANTS[k]` of an invariant scalar.
pub type InvariantSpec = Vec<(i64, Vec<usize>)>;

/// `ι_W ν` for `W = Σ f_k V_k` with invariant scalars `f_k`.
pub fn equivariant_strategy() -> impl Strategy<Value = Vec<(usize, InvariantSpec)>> {
    prop::collection::vec((0..EQUIVARIANT_FIELDS.len(), invariant_strategy(1)), 1..=2)
}

pub fn build_flux(setup: &ReductionSetup, spec: &[(usize, InvariantSpec)]) -> HorizontalForm {
    let chart = setup.original();
    let mut w = vec![Expr::zero(); 3];
    for (k, f) in spec {
        let f = build_invariant(chart, f);
        for (slot, comp) in w.iter_mut().zip(EQUIVARIANT_FIELDS[*k]) {
            *slot = slot.add_ref(&f.mul_ref(&chart.parse(comp).unwrap()));
        }
    }
    contract(setup.volume(), &[TotalVectorField(w)]).unwrap()
}

fn fail(msg: String) -> TestCaseError {
    TestCaseError::fail(msg)
}

pub type Suite = fn(u64) -> Result<(), String>;

/// `d_H ∘ d_H = 0` on random forms of every degree below `n - 1`.
pub fn suite_dh_squared(seed: u64) -> Result<(), String> {
    let chart = space_chart();
    let strategy = (0usize..=1).prop_flat_map(|deg| (Just(deg), form_strategy(3, 2, deg)));
    TestRunner::new(config(seed))
        .run(&strategy, |(deg, terms)| {
            let f = build_form(3, deg, &terms);
            let dd = d_h(&chart, &d_h(&chart, &f).unwrap()).unwrap();
            prop_assert!(dd.is_zero(), "d_H d_H = {:?}", dd);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// `E(d_H α) = 0` for random `(n-1)`-forms.
pub fn suite_el_of_divergence(seed: u64) -> Result<(), String> {
    let chart = space_chart();
    TestRunner::new(config(seed))
        .run(&form_strategy(3, 2, 2), |terms| {
            let f = build_form(3, 2, &terms);
            let top = d_h(&chart, &f).unwrap().scalar_part().unwrap();
            let e = euler_lagrange(&chart, &top).unwrap();
            prop_assert!(e.is_zero(), "E(d_H α) = {:?}", e.components);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// `l̃₂` is skew and bilinear for a position-dependent skew `ω`.
pub fn suite_bracket_skew_bilinear(seed: u64) -> Result<(), String> {
    let chart = space_chart();
    let omega = OmegaStructure::new(
        &chart,
        vec![
            vec![Expr::zero(), chart.parse("x^2 + y*z + 1").unwrap()],
            vec![chart.parse("-x^2 - y*z - 1").unwrap(), Expr::zero()],
        ],
    )
    .unwrap();
    let poly = || poly_strategy(3, 2, 2, 2, 3, false);
    let strategy = (poly(), poly(), poly(), -3i64..=3, -3i64..=3);
    TestRunner::new(config(seed))
        .run(&strategy, |(p, q, p2, a, b)| {
            let (p, q, p2) = (p.build(), q.build(), p2.build());
            let pq = l2_tilde(&chart, &p, &q, &omega).unwrap();
            let qp = l2_tilde(&chart, &q, &p, &omega).unwrap();
            prop_assert!(pq.add_ref(&qp).is_zero(), "not skew");
            let (a, b) = (Expr::integer(a), Expr::integer(b));
            let combo = a.mul_ref(&p).add_ref(&b.mul_ref(&p2));
            let lhs = l2_tilde(&chart, &combo, &q, &omega).unwrap();
            let rhs = a
                .mul_ref(&pq)
                .add_ref(&b.mul_ref(&l2_tilde(&chart, &p2, &q, &omega).unwrap()));
            prop_assert!(lhs.sub_ref(&rhs).is_zero(), "not bilinear");
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// For constant skew `ω` on `n = 1`, `m = 2` the Jacobiator of order-2
/// densities is a total divergence.
pub fn suite_jacobiator_constant(seed: u64) -> Result<(), String> {
    let chart = BundleChart::new(&["x"], &["u1", "u2"]).unwrap().with_order_cap(24);
    let poly = || poly_strategy(1, 2, 2, 3, 3, false);
    let strategy = (poly(), poly(), poly(), prop_oneof![-3i64..=-1, 1i64..=3]);
    TestRunner::new(config(seed))
        .run(&strategy, |(p, q, r, c)| {
            let c = Expr::integer(c);
            let omega = OmegaStructure::new(
                &chart,
                vec![vec![Expr::zero(), c.clone()], vec![c.neg_ref(), Expr::zero()]],
            )
            .unwrap();
            let ok = check_jacobiator_exact(&chart, &p.build(), &q.build(), &r.build(), &omega)
                .map_err(|e| fail(e.to_string()))?;
            prop_assert!(ok, "Jacobiator is not E-exact");
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// `ρ_X(d_H α) = d̄_H(ρ_X α)` on invariant `α = ι_W ν`.
pub fn suite_cochain(seed: u64) -> Result<(), String> {
    let setup = so3_setup();
    TestRunner::new(config(seed))
        .run(&equivariant_strategy(), |spec| {
            let alpha = build_flux(&setup, &spec);
            let ok = setup.verify_cochain(&alpha).map_err(|e| fail(e.to_string()))?;
            prop_assert!(ok, "cochain identity fails");
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// `Ē(ρ_X(Pν)) = ρ_X(E(Pν))` on invariant densities.
pub fn suite_el_commute(seed: u64) -> Result<(), String> {
    let setup = so3_setup();
    TestRunner::new(config(seed))
        .run(&invariant_strategy(2), |spec| {
            let p = build_invariant(setup.original(), &spec);
            let ok = setup.verify_el_commute(&p).map_err(|e| fail(e.to_string()))?;
            prop_assert!(ok, "E does not commute with ρ_X");
            Ok(())
        })
        .map_err(|e| e.to_string())
}
