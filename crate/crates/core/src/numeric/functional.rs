use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::func::{base_only, Func};
use super::quadrature::{integrate_fn, Domain, IntegralReport, Region};
use crate::error::{Error, Result};
use crate::expr::{Expr, MultiIndex, VarRef};
use crate::jet::{euler_lagrange, BundleChart, Generator, HorizontalForm};
use crate::par::Execution;
use crate::reduction::ReductionSetup;

/// A local section: one closed-form function of the base coordinates per
/// fiber coordinate. Components left unset make pullbacks that mention
/// them fail.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    components: Vec<Option<Func>>,
}

impl Section {
    pub fn new(components: Vec<Option<Func>>) -> Self {
        Section { components }
    }

    /// Parse `(fiber name, function)` pairs in the chart's base names.
    pub fn parse<S: AsRef<str>>(
        chart: &BundleChart,
        components: &[(S, S)],
        constants: &BTreeMap<String, f64>,
    ) -> Result<Self> {
        let mut out = vec![None; chart.m()];
        for (name, text) in components {
            let a = chart.fiber_index(name.as_ref()).ok_or_else(|| Error::UnknownEntity {
                kind: "fiber coordinate",
                name: name.as_ref().to_string(),
            })?;
            out[a] = Some(Func::parse(chart, text.as_ref(), constants)?);
        }
        Ok(Section { components: out })
    }

    pub fn zero(m: usize) -> Self {
        Section {
            components: vec![Some(Func::zero()); m],
        }
    }

    pub fn components(&self) -> &[Option<Func>] {
        &self.components
    }

    pub fn component(&self, chart: &BundleChart, a: usize) -> Result<&Func> {
        self.components
            .get(a)
            .and_then(Option::as_ref)
            .ok_or_else(|| Error::UnboundVariable(chart.fiber_names()[a].clone()))
    }

    /// `∂_I s^a`.
    pub fn jet(&self, chart: &BundleChart, a: usize, index: &MultiIndex) -> Result<Func> {
        Ok(self.component(chart, a)?.derivatives(index.indices()))
    }

    /// The section with `eps · bump` added to component `a`.
    pub fn perturbed(&self, a: usize, bump: &Func, eps: f64) -> Self {
        let mut out = self.clone();
        if let Some(c) = &mut out.components[a] {
            *c = c.add(&bump.scale(eps));
        }
        out
    }
}

/// `P ∘ j^∞s` as a function of the base coordinates.
pub fn pullback(chart: &BundleChart, p: &Expr, section: &Section) -> Result<Func> {
    let cache: RefCell<HashMap<VarRef, Func>> = RefCell::new(HashMap::new());
    Func::from_expr(p, &|v: &VarRef| match v {
        VarRef::Base(i) => Ok(Func::Var(*i)),
        VarRef::Jet { fiber, index } => {
            if let Some(f) = cache.borrow().get(v) {
                return Ok(f.clone());
            }
            let f = section.jet(chart, *fiber, index)?;
            cache.borrow_mut().insert(v.clone(), f.clone());
            Ok(f)
        }
    })
}

/// Symbolic pullback along a section whose components are expressions in
/// the base coordinates.
pub fn pullback_expr(chart: &BundleChart, p: &Expr, section: &[Option<Expr>]) -> Result<Expr> {
    let mut bindings = BTreeMap::new();
    for v in p.vars() {
        if let VarRef::Jet { fiber, index } = &v {
            let s = section
                .get(*fiber)
                .and_then(Option::as_ref)
                .ok_or_else(|| Error::UnboundVariable(chart.fiber_names()[*fiber].clone()))?;
            let d = index
                .indices()
                .iter()
                .fold(s.clone(), |e, &i| e.partial(&VarRef::base(i)));
            bindings.insert(v.clone(), d);
        }
    }
    p.substitute(&bindings)
}

fn volume_coefficient(chart: &BundleChart, volume: &HorizontalForm) -> Result<Expr> {
    if volume.dim() != chart.n() || volume.degree() != chart.n() {
        return Err(Error::Degree("integration needs a top-degree volume form".into()));
    }
    volume.scalar_part()
}

fn check_region(chart: &BundleChart, region: &Region) -> Result<()> {
    region.validate()?;
    if region.dim() != chart.n() {
        return Err(Error::Dimension(format!(
            "{}-dimensional region on a chart with n={}",
            region.dim(),
            chart.n()
        )));
    }
    Ok(())
}

/// `∫ (P ∘ j^∞s) ν` over a region by tensor-product Gauss–Legendre.
pub fn integrate(
    chart: &BundleChart,
    p: &Expr,
    section: &Section,
    region: &Region,
    volume: &HorizontalForm,
    exec: Execution,
) -> Result<IntegralReport> {
    check_region(chart, region)?;
    let density = p.mul_ref(&volume_coefficient(chart, volume)?);
    let f = pullback(chart, &density, section)?;
    integrate_fn(region, exec, &|x| f.eval(x))
}

/// Check `φ^a(x, s(x)) = ξ^i(x) ∂_i s^a(x)` for each generator at sampled
/// points, to relative tolerance `tolerance`.
pub fn check_section_invariant(
    chart: &BundleChart,
    section: &Section,
    generators: &[Generator],
    region: &Region,
    seed: u64,
    tolerance: f64,
) -> Result<()> {
    let points = region.sample(64, seed);
    for (k, g) in generators.iter().enumerate() {
        for (a, s) in section.components.iter().enumerate() {
            let Some(s) = s else { continue };
            let grad: Vec<Func> = (0..chart.n()).map(|i| s.derivative(i)).collect();
            for x in &points {
                let values: Vec<f64> = section
                    .components
                    .iter()
                    .map(|c| c.as_ref().map(|c| c.eval(x)).unwrap_or(f64::NAN))
                    .collect();
                let lookup = |v: &VarRef| match v {
                    VarRef::Base(i) => Some(x[*i]),
                    VarRef::Jet { fiber, index } if index.order() == 0 => {
                        Some(values[*fiber]).filter(|v| v.is_finite())
                    }
                    VarRef::Jet { .. } => None,
                };
                let phi = g.phi[a].evaluate_with(&lookup)?;
                let mut flow = 0.0;
                let mut scale = phi.abs();
                for (xi, d) in g.xi.iter().zip(&grad) {
                    if xi.is_zero() {
                        continue;
                    }
                    let t = xi.evaluate_with(&lookup)? * d.eval(x);
                    flow += t;
                    scale += t.abs();
                }
                let residual = phi - flow;
                if !residual.is_finite() {
                    return Err(Error::NonFinite);
                }
                if residual.abs() > tolerance * scale.max(1.0) {
                    return Err(Error::NotInvariant {
                        generator: k + 1,
                        residual: format!(
                            "section component {} changes by {residual:e} at {x:?}",
                            chart.fiber_names()[a]
                        ),
                    });
                }
            }
        }
    }
    Ok(())
}

/// `s̄(y) = s(F^{-1}(x̂*, y))` on the reduced chart.
pub fn reduce_section(setup: &ReductionSetup, section: &Section) -> Result<Section> {
    let chart = setup.chart();
    let adapted = chart.adapted();
    let at = |point: &[Expr]| -> Result<Vec<Expr>> {
        let bindings: BTreeMap<VarRef, Expr> = chart
            .orbit()
            .iter()
            .zip(point)
            .map(|(&k, p)| (VarRef::base(k), p.clone()))
            .collect();
        chart.inverse().iter().map(|e| e.substitute(&bindings)).collect()
    };
    let base = match at(chart.orbit_point()) {
        Ok(b) => b,
        Err(Error::DivisionByZero) | Err(Error::NegativeRadicand) => {
            let mid: Vec<Expr> = chart
                .orbit()
                .iter()
                .map(|&k| {
                    num_rational::BigRational::from_float(adapted.region().midpoint(k))
                        .map(Expr::constant)
                        .ok_or(Error::NonFinite)
                })
                .collect::<Result<_>>()?;
            at(&mid)?
        }
        Err(e) => return Err(e),
    };
    let to_reduced = |v: &VarRef| match v {
        VarRef::Base(k) => chart.reduced_index(*k).map(Func::Var).ok_or_else(|| Error::Validation {
            entity: "reduced section".into(),
            reason: format!("orbit coordinate `{}` survived", adapted.base_names()[*k]),
        }),
        VarRef::Jet { .. } => Err(Error::Validation {
            entity: "reduced section".into(),
            reason: "base map mentions a jet coordinate".into(),
        }),
    };
    let subs: Vec<Func> = base
        .iter()
        .map(|e| Func::from_expr(e, &to_reduced))
        .collect::<Result<_>>()?;
    Ok(Section {
        components: section
            .components
            .iter()
            .map(|c| c.as_ref().map(|c| c.compose(&subs)))
            .collect(),
    })
}

/// Both sides of `∫_Ω (j^∞s)* Pν = V ∫_Ω̄ (j^∞s̄)* ρ_X(Pν)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedComparison {
    pub lhs: IntegralReport,
    pub rhs: IntegralReport,
    /// `lhs / rhs`, absent when `|rhs| < 1e-14`.
    pub volume_factor: Option<f64>,
    /// Relative uncertainty of the ratio from the two error estimates.
    pub relative_error: Option<f64>,
}

impl ReducedComparison {
    /// `|V - expected| / |expected|`.
    pub fn deviation_from(&self, expected: f64) -> Option<f64> {
        self.volume_factor.map(|v| (v - expected).abs() / expected.abs())
    }
}

pub const RATIO_FLOOR: f64 = 1e-14;

/// Check that `region` projects into `reduced_region` under the forward
/// map.
fn check_regions_correspond(setup: &ReductionSetup, region: &Region, reduced_region: &Region, seed: u64) -> Result<()> {
    let Domain::Box { bounds } = &reduced_region.domain else {
        return Err(Error::Validation {
            entity: "reduced region".into(),
            reason: "must be a box in the invariant coordinates".into(),
        });
    };
    let chart = setup.chart();
    for x in region.sample(64, seed) {
        let lookup = |v: &VarRef| match v {
            VarRef::Base(i) => x.get(*i).copied(),
            VarRef::Jet { .. } => None,
        };
        for (k, &j) in chart.invariant().iter().enumerate() {
            let y = chart.forward()[j].evaluate_with(&lookup)?;
            let (lo, hi) = bounds[k];
            let slack = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
            if y < lo - slack || y > hi + slack {
                return Err(Error::Validation {
                    entity: "reduced region".into(),
                    reason: format!(
                        "{} = {y} at {x:?} lies outside ({lo}, {hi})",
                        chart.adapted().base_names()[j]
                    ),
                });
            }
        }
    }
    Ok(())
}

/// Integrate an invariant functional upstairs and its reduction downstairs
/// and report the ratio `V`.
pub fn compare_reduced_functional(
    setup: &ReductionSetup,
    p: &Expr,
    section: &Section,
    region: &Region,
    reduced_region: &Region,
    exec: Execution,
) -> Result<ReducedComparison> {
    let original = setup.original();
    let reduced = setup.reduced();
    check_region(original, region)?;
    check_region(reduced, reduced_region)?;
    setup
        .check_invariant(p)
        .map_err(|e| Error::Precondition(format!("P must be invariant: {e}")))?;
    if !setup.volume_is_invariant() {
        return Err(Error::Precondition("the volume form must be invariant".into()));
    }
    let seed = original.oracle().seed;
    check_section_invariant(original, section, setup.generators(), region, seed, 1e-6)
        .map_err(|e| Error::Precondition(format!("section must be invariant: {e}")))?;
    check_regions_correspond(setup, region, reduced_region, seed)?;

    let lhs = integrate(original, p, section, region, setup.volume(), exec)?;
    let density = setup.rho_chain_density(p)?;
    let reduced_section = reduce_section(setup, section)?;
    let unit = HorizontalForm::top(reduced.n(), Expr::one());
    let rhs = integrate(reduced, &density, &reduced_section, reduced_region, &unit, exec)?;
    let (volume_factor, relative_error) = if rhs.value.abs() < RATIO_FLOOR {
        (None, None)
    } else {
        let v = lhs.value / rhs.value;
        let rel = rhs.error_estimate / rhs.value.abs()
            + if lhs.value == 0.0 {
                0.0
            } else {
                lhs.error_estimate / lhs.value.abs()
            };
        (Some(v), Some(rel))
    };
    Ok(ReducedComparison {
        lhs,
        rhs,
        volume_factor,
        relative_error,
    })
}

/// Directional derivative of `∫ P` against `∫ E_a(P) · bump`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GateauxReport {
    pub finite_difference: f64,
    pub euler_lagrange: f64,
    pub relative_error: f64,
}

/// Gâteaux derivative of `s ↦ ∫ P(j^∞s) dx` in the direction `bump` on
/// fiber `a`, by a fourth-order central difference with step `h`. The bump
/// and enough of its derivatives must vanish on the region boundary.
#[allow(clippy::too_many_arguments)]
pub fn gateaux_check(
    chart: &BundleChart,
    p: &Expr,
    section: &Section,
    a: usize,
    bump: &Func,
    region: &Region,
    h: f64,
    exec: Execution,
) -> Result<GateauxReport> {
    check_region(chart, region)?;
    section.component(chart, a)?;
    let volume = HorizontalForm::top(chart.n(), Expr::one());
    let at = |eps: f64| -> Result<f64> {
        Ok(integrate(chart, p, &section.perturbed(a, bump, eps), region, &volume, exec)?.value)
    };
    let fd = (-at(2.0 * h)? + 8.0 * at(h)? - 8.0 * at(-h)? + at(-2.0 * h)?) / (12.0 * h);
    let e = euler_lagrange(chart, p)?;
    let integrand = pullback(chart, &e.components[a], section)?.mul(bump);
    let el = integrate_fn(region, exec, &|x| integrand.eval(x))?.value;
    let relative_error = (fd - el).abs() / el.abs().max(f64::MIN_POSITIVE);
    Ok(GateauxReport {
        finite_difference: fd,
        euler_lagrange: el,
        relative_error,
    })
}

/// Map base-only expressions to functions, for densities given as `Expr`.
pub fn base_function(chart: &BundleChart, e: &Expr) -> Result<Func> {
    Func::from_expr(e, &base_only(chart))
}
