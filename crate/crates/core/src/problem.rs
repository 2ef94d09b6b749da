//! Declarative problem files (JSON, `"schema": 1`).
//!
//! Every expression is a string in the expression grammar, read in the
//! chart named by its position in the file. Cross-references are by name.
//! See `docs/problem-format.md` for the full layout.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::bracket::{Automorphism, OmegaStructure};
use crate::error::{Error, Result};
use crate::expr::{Expr, OracleConfig, SampleRegion};
use crate::jet::{contract, BundleChart, Generator, HorizontalForm, TotalVectorField, DEFAULT_ORDER_CAP};
use crate::numeric::{Domain, Func, Region, Section, DEFAULT_NODES};
use crate::reduction::{AdaptedChart, QChain, ReductionSetup};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    schema: u32,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    tolerance: Option<f64>,
    chart: ChartSpec,
    #[serde(default)]
    omega: Option<Vec<Vec<String>>>,
    #[serde(default)]
    expressions: BTreeMap<String, String>,
    #[serde(default)]
    forms: BTreeMap<String, FormSpec>,
    #[serde(default)]
    reduction: Option<ReductionSpec>,
    #[serde(default)]
    automorphisms: BTreeMap<String, AutomorphismSpec>,
    #[serde(default)]
    sections: BTreeMap<String, SectionSpec>,
    #[serde(default)]
    regions: BTreeMap<String, RegionSpec>,
    #[serde(default)]
    verify: VerifyPlan,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChartSpec {
    base: Vec<String>,
    fiber: Vec<String>,
    #[serde(default)]
    order_cap: Option<usize>,
    #[serde(default)]
    region: Option<SampleBox>,
    #[serde(default)]
    definitions: Vec<Definition>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleBox {
    base: Vec<(f64, f64)>,
    #[serde(default)]
    jet: Option<(f64, f64)>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Definition {
    name: String,
    expr: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FormSpec {
    #[serde(default)]
    top: Option<String>,
    #[serde(default)]
    degree: Option<usize>,
    #[serde(default)]
    terms: Option<Vec<TermSpec>>,
    #[serde(default)]
    contract: Option<ContractSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermSpec {
    dx: Vec<String>,
    coeff: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContractSpec {
    form: String,
    fields: Vec<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReductionSpec {
    adapted: ChartSpec,
    orbit: Vec<String>,
    forward: Vec<String>,
    inverse: Vec<String>,
    #[serde(default)]
    orbit_point: Option<Vec<String>>,
    chain: ChainSpec,
    generators: Vec<GeneratorSpec>,
    #[serde(default)]
    volume: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainSpec {
    scale: String,
    fields: Vec<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeneratorSpec {
    xi: Vec<String>,
    #[serde(default)]
    phi: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AutomorphismSpec {
    base: Vec<String>,
    inverse: Vec<String>,
    fiber: Vec<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SectionSpec {
    components: BTreeMap<String, String>,
    #[serde(default)]
    constants: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionSpec {
    kind: RegionKind,
    #[serde(default)]
    bounds: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    radii: Option<(f64, f64)>,
    #[serde(default)]
    nodes: Option<usize>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RegionKind {
    Box,
    Shell,
}

/// Checks run by `verify`, by entity name.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyPlan {
    /// Forms for `ρ_X ∘ d_H = d̄_H ∘ ρ_X`.
    #[serde(default)]
    pub cochain: Vec<String>,
    /// Expressions `P` for `Ē ∘ ρ_X = ρ_X ∘ E` on `Pν`.
    #[serde(default)]
    pub el_commute: Vec<String>,
    #[serde(default)]
    pub covariance: Vec<CovarianceCase>,
    /// Expression triples whose Jacobiator must be a total divergence.
    #[serde(default)]
    pub jacobiator: Vec<[String; 3]>,
    #[serde(default)]
    pub well_defined: Vec<WellDefinedCase>,
    #[serde(default)]
    pub compare_reduced: Vec<CompareCase>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceCase {
    pub automorphism: String,
    /// Expected verdict; `false` marks a counterexample.
    #[serde(default = "yes")]
    pub covariant: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WellDefinedCase {
    pub alpha: String,
    pub alpha_prime: String,
    pub beta: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareCase {
    pub expr: String,
    pub section: String,
    pub region: String,
    pub reduced_region: String,
    /// Constant expression for the expected `V`, e.g. `"4*pi"`.
    #[serde(default)]
    pub expected: Option<String>,
    #[serde(default = "default_relative")]
    pub tolerance: f64,
}

fn default_relative() -> f64 {
    1e-6
}

/// Settings that override the file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LoadOptions {
    pub seed: Option<u64>,
    pub tolerance: Option<f64>,
    pub order_cap: Option<usize>,
}

/// A fully validated problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub chart: BundleChart,
    pub seed: u64,
    pub omega: Option<OmegaStructure>,
    pub expressions: BTreeMap<String, Expr>,
    pub forms: BTreeMap<String, HorizontalForm>,
    pub reduction: Option<ReductionSetup>,
    pub automorphisms: BTreeMap<String, Automorphism>,
    pub sections: BTreeMap<String, Section>,
    pub regions: BTreeMap<String, Region>,
    pub verify: VerifyPlan,
}

pub fn load_problem(path: &Path, options: &LoadOptions) -> Result<Problem> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_problem(&text, options)
}

pub fn parse_problem(text: &str, options: &LoadOptions) -> Result<Problem> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ProblemFile = serde_path_to_error::deserialize(de).map_err(|e| Error::Schema {
        path: e.path().to_string(),
        reason: e.inner().to_string(),
    })?;
    build(file, options)
}

fn at<T>(r: Result<T>, location: impl FnOnce() -> String) -> Result<T> {
    r.map_err(|e| e.at(location()))
}

fn build_chart(spec: &ChartSpec, oracle: OracleConfig, order_cap: Option<usize>, path: &str) -> Result<BundleChart> {
    let mut chart = at(BundleChart::new(&spec.base, &spec.fiber), || path.to_string())?
        .with_order_cap(order_cap.or(spec.order_cap).unwrap_or(DEFAULT_ORDER_CAP))
        .with_oracle(oracle);
    if let Some(r) = &spec.region {
        if r.base.len() != spec.base.len() {
            return Err(Error::Validation {
                entity: format!("{path}.region"),
                reason: format!("{} intervals for {} base coordinates", r.base.len(), spec.base.len()),
            });
        }
        let defaults = SampleRegion::uniform(spec.base.len());
        chart = chart.with_region(SampleRegion {
            base: r.base.clone(),
            jet: r.jet.unwrap_or(defaults.jet),
        });
    }
    for (k, d) in spec.definitions.iter().enumerate() {
        at(chart.define(&d.name, &d.expr), || format!("{path}.definitions[{k}]"))?;
    }
    Ok(chart)
}

fn parse_list(chart: &BundleChart, items: &[String], path: &str) -> Result<Vec<Expr>> {
    items
        .iter()
        .enumerate()
        .map(|(k, s)| at(chart.parse(s), || format!("{path}[{k}]")))
        .collect()
}

fn parse_matrix(chart: &BundleChart, rows: &[Vec<String>], path: &str) -> Result<Vec<Vec<Expr>>> {
    rows.iter()
        .enumerate()
        .map(|(a, row)| parse_list(chart, row, &format!("{path}[{a}]")))
        .collect()
}

fn build_form(
    chart: &BundleChart,
    name: &str,
    spec: &FormSpec,
    done: &BTreeMap<String, HorizontalForm>,
) -> Result<Option<HorizontalForm>> {
    let path = format!("forms.{name}");
    let n = chart.n();
    let given = [spec.top.is_some(), spec.terms.is_some(), spec.contract.is_some()];
    if given.iter().filter(|g| **g).count() != 1 {
        return Err(Error::Validation {
            entity: path,
            reason: "give exactly one of `top`, `terms` or `contract`".into(),
        });
    }
    if let Some(top) = &spec.top {
        let c = at(chart.parse(top), || format!("{path}.top"))?;
        return Ok(Some(HorizontalForm::top(n, c)));
    }
    if let Some(terms) = &spec.terms {
        let degree = match spec.degree.or_else(|| terms.first().map(|t| t.dx.len())) {
            Some(d) => d,
            None => {
                return Err(Error::Validation {
                    entity: path,
                    reason: "an empty form needs `degree`".into(),
                })
            }
        };
        if degree > n {
            return Err(Error::Degree(format!("{degree}-form on an {n}-dimensional base")).at(path));
        }
        let mut form = HorizontalForm::zero(n, degree);
        for (k, t) in terms.iter().enumerate() {
            let loc = format!("{path}.terms[{k}]");
            if t.dx.len() != degree {
                return Err(Error::Degree(format!("term of degree {} in a {degree}-form", t.dx.len())).at(loc));
            }
            let idx =
                t.dx.iter()
                    .map(|d| {
                        chart.base_index(d).ok_or_else(|| Error::UnknownEntity {
                            kind: "base coordinate",
                            name: d.clone(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| e.at(loc.clone()))?;
            let c = at(chart.parse(&t.coeff), || format!("{loc}.coeff"))?;
            let single = at(HorizontalForm::monomial(n, &idx, c), || loc.clone())?;
            form = form.add(&single)?;
        }
        return Ok(Some(form));
    }
    let spec = spec.contract.as_ref().expect("one variant is set");
    let Some(inner) = done.get(&spec.form) else {
        return Ok(None);
    };
    let fields = spec
        .fields
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let loc = format!("{path}.contract.fields[{k}]");
            if f.len() != n {
                return Err(Error::Dimension(format!("vector field needs {n} components")).at(loc));
            }
            Ok(TotalVectorField(parse_list(chart, f, &loc)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Some(at(contract(inner, &fields), || format!("{path}.contract"))?))
}

fn build_forms(chart: &BundleChart, specs: &BTreeMap<String, FormSpec>) -> Result<BTreeMap<String, HorizontalForm>> {
    let mut done = BTreeMap::new();
    while done.len() < specs.len() {
        let before = done.len();
        for (name, spec) in specs {
            if done.contains_key(name) {
                continue;
            }
            if let Some(f) = build_form(chart, name, spec, &done)? {
                done.insert(name.clone(), f);
            }
        }
        if done.len() == before {
            let stuck: Vec<&String> = specs.keys().filter(|k| !done.contains_key(*k)).collect();
            let missing = stuck
                .iter()
                .filter_map(|k| specs[*k].contract.as_ref().map(|c| &c.form))
                .find(|f| !specs.contains_key(*f));
            return Err(match missing {
                Some(f) => Error::UnknownEntity {
                    kind: "form",
                    name: f.clone(),
                },
                None => Error::Validation {
                    entity: "forms".into(),
                    reason: format!("contractions refer to each other in a cycle: {stuck:?}"),
                },
            });
        }
    }
    Ok(done)
}

fn build_reduction(
    chart: &BundleChart,
    spec: &ReductionSpec,
    forms: &BTreeMap<String, HorizontalForm>,
    oracle: OracleConfig,
    order_cap: Option<usize>,
) -> Result<ReductionSetup> {
    let adapted = build_chart(
        &spec.adapted,
        oracle,
        order_cap.or(Some(chart.order_cap())),
        "reduction.adapted",
    )?;
    let forward = parse_list(chart, &spec.forward, "reduction.forward")?;
    let inverse = parse_list(&adapted, &spec.inverse, "reduction.inverse")?;
    let orbit: Vec<&str> = spec.orbit.iter().map(String::as_str).collect();
    let mut ac = at(
        AdaptedChart::new(chart.clone(), adapted.clone(), &orbit, forward, inverse),
        || "reduction".into(),
    )?;
    if let Some(p) = &spec.orbit_point {
        let point = parse_list(&adapted, p, "reduction.orbit_point")?;
        ac = at(ac.with_orbit_point(point), || "reduction.orbit_point".into())?;
    }
    let n = chart.n();
    let fields = spec
        .chain
        .fields
        .iter()
        .enumerate()
        .map(|(k, f)| {
            Ok(TotalVectorField(parse_list(
                chart,
                f,
                &format!("reduction.chain.fields[{k}]"),
            )?))
        })
        .collect::<Result<Vec<_>>>()?;
    let scale = at(chart.parse(&spec.chain.scale), || "reduction.chain.scale".into())?;
    let chain = at(QChain::new(chart, scale, fields), || "reduction.chain".into())?;
    let generators = spec
        .generators
        .iter()
        .enumerate()
        .map(|(k, g)| {
            let loc = format!("reduction.generators[{k}]");
            let xi = parse_list(chart, &g.xi, &format!("{loc}.xi"))?;
            let phi = match &g.phi {
                Some(p) => parse_list(chart, p, &format!("{loc}.phi"))?,
                None => vec![Expr::zero(); chart.m()],
            };
            at(Generator::new(chart, xi, phi), || loc)
        })
        .collect::<Result<Vec<_>>>()?;
    let volume = match &spec.volume {
        Some(name) => forms
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownEntity {
                kind: "form",
                name: name.clone(),
            })
            .map_err(|e| e.at("reduction.volume"))?,
        None => HorizontalForm::top(n, Expr::one()),
    };
    at(ReductionSetup::new(ac, chain, generators, volume), || {
        "reduction".into()
    })
}

fn build_region(name: &str, spec: &RegionSpec) -> Result<Region> {
    let path = format!("regions.{name}");
    let nodes = spec.nodes.unwrap_or(DEFAULT_NODES);
    let domain = match (spec.kind, &spec.bounds, spec.radii) {
        (RegionKind::Box, Some(b), None) => Domain::Box { bounds: b.clone() },
        (RegionKind::Shell, None, Some(r)) => Domain::Shell { radii: r },
        (RegionKind::Box, ..) => {
            return Err(Error::Validation {
                entity: path,
                reason: "a box needs `bounds` and no `radii`".into(),
            })
        }
        (RegionKind::Shell, ..) => {
            return Err(Error::Validation {
                entity: path,
                reason: "a shell needs `radii` and no `bounds`".into(),
            })
        }
    };
    at(Region::new(domain, nodes), || path)
}

fn require<'a, T>(map: &'a BTreeMap<String, T>, kind: &'static str, name: &str) -> Result<&'a T> {
    map.get(name).ok_or_else(|| Error::UnknownEntity {
        kind,
        name: name.to_string(),
    })
}

fn check_plan(p: &Problem) -> Result<()> {
    let plan = &p.verify;
    let needs_reduction = !plan.cochain.is_empty()
        || !plan.el_commute.is_empty()
        || !plan.well_defined.is_empty()
        || !plan.compare_reduced.is_empty();
    if needs_reduction && p.reduction.is_none() {
        return Err(Error::Validation {
            entity: "verify".into(),
            reason: "reduction checks need a `reduction` block".into(),
        });
    }
    let needs_omega = !plan.covariance.is_empty() || !plan.jacobiator.is_empty() || !plan.well_defined.is_empty();
    if needs_omega && p.omega.is_none() {
        return Err(Error::Validation {
            entity: "verify".into(),
            reason: "bracket checks need `omega`".into(),
        });
    }
    for (k, f) in plan.cochain.iter().enumerate() {
        at(require(&p.forms, "form", f).map(|_| ()), || {
            format!("verify.cochain[{k}]")
        })?;
    }
    for (k, e) in plan.el_commute.iter().enumerate() {
        at(require(&p.expressions, "expression", e).map(|_| ()), || {
            format!("verify.el_commute[{k}]")
        })?;
    }
    for (k, c) in plan.covariance.iter().enumerate() {
        at(
            require(&p.automorphisms, "automorphism", &c.automorphism).map(|_| ()),
            || format!("verify.covariance[{k}]"),
        )?;
    }
    for (k, t) in plan.jacobiator.iter().enumerate() {
        for e in t {
            at(require(&p.expressions, "expression", e).map(|_| ()), || {
                format!("verify.jacobiator[{k}]")
            })?;
        }
    }
    for (k, c) in plan.well_defined.iter().enumerate() {
        for e in [&c.alpha, &c.alpha_prime, &c.beta] {
            at(require(&p.expressions, "expression", e).map(|_| ()), || {
                format!("verify.well_defined[{k}]")
            })?;
        }
    }
    for (k, c) in plan.compare_reduced.iter().enumerate() {
        let loc = || format!("verify.compare_reduced[{k}]");
        at(require(&p.expressions, "expression", &c.expr).map(|_| ()), loc)?;
        at(require(&p.sections, "section", &c.section).map(|_| ()), loc)?;
        at(require(&p.regions, "region", &c.region).map(|_| ()), loc)?;
        at(require(&p.regions, "region", &c.reduced_region).map(|_| ()), loc)?;
        if let Some(e) = &c.expected {
            at(constant_value(&p.chart, e).map(|_| ()), loc)?;
        }
    }
    Ok(())
}

/// Value of a constant expression such as `4*pi`.
pub fn constant_value(chart: &BundleChart, text: &str) -> Result<f64> {
    match Func::parse(chart, text, &BTreeMap::new())? {
        Func::Const(c) => Ok(c),
        _ => Err(Error::Validation {
            entity: format!("`{text}`"),
            reason: "expected a constant".into(),
        }),
    }
}

fn build(file: ProblemFile, options: &LoadOptions) -> Result<Problem> {
    if file.schema != SCHEMA_VERSION {
        return Err(Error::Schema {
            path: "schema".into(),
            reason: format!("unsupported version {}, expected {SCHEMA_VERSION}", file.schema),
        });
    }
    let seed = options.seed.or(file.seed).unwrap_or(0);
    let mut oracle = OracleConfig {
        seed,
        ..OracleConfig::default()
    };
    if let Some(t) = options.tolerance.or(file.tolerance) {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::Validation {
                entity: "tolerance".into(),
                reason: format!("must be positive, got {t}"),
            });
        }
        oracle.tolerance = t;
    }
    let chart = build_chart(&file.chart, oracle, options.order_cap, "chart")?;

    let mut expressions = BTreeMap::new();
    for (name, text) in &file.expressions {
        expressions.insert(name.clone(), at(chart.parse(text), || format!("expressions.{name}"))?);
    }
    let forms = build_forms(&chart, &file.forms)?;
    let omega = match &file.omega {
        Some(rows) => {
            let entries = parse_matrix(&chart, rows, "omega")?;
            Some(at(OmegaStructure::new(&chart, entries), || "omega".into())?)
        }
        None => None,
    };
    let reduction = match &file.reduction {
        Some(spec) => Some(build_reduction(&chart, spec, &forms, oracle, options.order_cap)?),
        None => None,
    };
    let mut automorphisms = BTreeMap::new();
    for (name, spec) in &file.automorphisms {
        let loc = format!("automorphisms.{name}");
        let base = parse_list(&chart, &spec.base, &format!("{loc}.base"))?;
        let inverse = parse_list(&chart, &spec.inverse, &format!("{loc}.inverse"))?;
        let fiber = parse_matrix(&chart, &spec.fiber, &format!("{loc}.fiber"))?;
        let psi = at(Automorphism::new(&chart, base, inverse, fiber), || loc)?;
        automorphisms.insert(name.clone(), psi);
    }
    let mut sections = BTreeMap::new();
    for (name, spec) in &file.sections {
        let pairs: Vec<(&str, &str)> = spec.components.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        let s = at(Section::parse(&chart, &pairs, &spec.constants), || {
            format!("sections.{name}")
        })?;
        sections.insert(name.clone(), s);
    }
    let mut regions = BTreeMap::new();
    for (name, spec) in &file.regions {
        regions.insert(name.clone(), build_region(name, spec)?);
    }
    let problem = Problem {
        chart,
        seed,
        omega,
        expressions,
        forms,
        reduction,
        automorphisms,
        sections,
        regions,
        verify: file.verify,
    };
    check_plan(&problem)?;
    Ok(problem)
}

impl Problem {
    /// A named expression, or failing that an inline expression in the
    /// chart's names.
    pub fn expression(&self, text: &str) -> Result<Expr> {
        if let Some(e) = self.expressions.get(text) {
            return Ok(e.clone());
        }
        match self.chart.parse(text) {
            Ok(e) => Ok(e),
            Err(Error::UnknownIdentifier(_)) if is_identifier(text) => Err(Error::UnknownEntity {
                kind: "expression",
                name: text.to_string(),
            }),
            Err(e) => Err(e),
        }
    }

    pub fn form(&self, name: &str) -> Result<&HorizontalForm> {
        require(&self.forms, "form", name)
    }

    pub fn section(&self, name: &str) -> Result<&Section> {
        require(&self.sections, "section", name)
    }

    pub fn region(&self, name: &str) -> Result<&Region> {
        require(&self.regions, "region", name)
    }

    pub fn automorphism(&self, name: &str) -> Result<&Automorphism> {
        require(&self.automorphisms, "automorphism", name)
    }

    pub fn omega(&self) -> Result<&OmegaStructure> {
        self.omega.as_ref().ok_or_else(|| Error::Validation {
            entity: "problem".into(),
            reason: "no `omega` declared".into(),
        })
    }

    pub fn reduction(&self) -> Result<&ReductionSetup> {
        self.reduction.as_ref().ok_or_else(|| Error::Validation {
            entity: "problem".into(),
            reason: "no `reduction` block declared".into(),
        })
    }
}

fn is_identifier(text: &str) -> bool {
    let mut chars = text.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_') && chars.all(|c| c.is_alphanumeric() || c == '_')
}
