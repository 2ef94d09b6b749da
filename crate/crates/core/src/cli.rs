//! Command-line front end. [`run`] is pure apart from reading the problem
//! file, and returns the rendered output with its exit code.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::bracket::{check_covariance, check_jacobiator_exact, jacobiator, l2_tilde};
use crate::error::{Error, Result};
use crate::expr::{Atom, Expr};
use crate::jet::{d_h, euler_lagrange, BundleChart, HorizontalForm};
use crate::numeric::{compare_reduced_functional, integrate, pullback, ReducedComparison};
use crate::par::{map_slice, Execution};
use crate::problem::{constant_value, load_problem, LoadOptions, Problem};
use crate::reduction::Representative;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "jetred",
    version,
    about = "Variational calculus on jet bundles and symmetry reduction"
)]
pub struct Cli {
    /// Problem file (JSON, schema 1).
    #[arg(short = 'p', long, global = true, value_name = "FILE")]
    pub problem: Option<PathBuf>,
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Seed for the randomized equality oracle (default: file, then 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Maximum jet order.
    #[arg(long, global = true)]
    pub order_cap: Option<usize>,
    /// Relative tolerance of the numeric equality fallback.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Run quadrature and independent checks on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Euler-Lagrange components of a density.
    El {
        #[arg(long)]
        expr: String,
    },
    /// Horizontal differential of a form, or of a function as a 0-form.
    Dh {
        #[arg(long, conflicts_with = "expr", required_unless_present = "expr")]
        form: Option<String>,
        #[arg(long)]
        expr: Option<String>,
    },
    /// Coefficient of the bracket of two densities.
    Bracket { p: String, q: String },
    /// Jacobiator of three densities and whether it is a total divergence.
    Jacobiator { p: String, q: String, r: String },
    /// Reduce an invariant function to the reduced jet bundle.
    Reduce {
        #[arg(long)]
        expr: String,
    },
    /// Contract a form with the q-chain and reduce it.
    ReduceForm {
        #[arg(long)]
        form: String,
    },
    /// Reduced bracket of two invariant densities, computed two ways.
    L2hat {
        p: String,
        q: String,
        /// Expected reduced density of P, checked against the representative.
        #[arg(long)]
        p_bar: Option<String>,
        #[arg(long)]
        q_bar: Option<String>,
    },
    /// Run the verification checks declared in the problem file.
    Verify {
        #[arg(value_enum)]
        check: VerifyKind,
    },
    /// Pull a density back along a section and evaluate or integrate it.
    Eval {
        #[arg(long)]
        expr: String,
        #[arg(long)]
        section: String,
        /// Base point, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "region")]
        at: Option<Vec<f64>>,
        #[arg(long, required_unless_present = "at")]
        region: Option<String>,
    },
    /// Integrate an invariant functional and its reduction and report V.
    CompareReduced {
        #[arg(long)]
        expr: String,
        #[arg(long)]
        section: String,
        #[arg(long)]
        region: String,
        #[arg(long)]
        reduced_region: String,
        /// Expected V as a constant expression, e.g. `4*pi`.
        #[arg(long)]
        expect: Option<String>,
        /// Relative tolerance for `--expect`.
        #[arg(long, default_value_t = 1e-6)]
        rel_tol: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifyKind {
    Cochain,
    ElCommute,
    Covariance,
    Jacobiator,
    WellDefined,
    All,
}

/// Rendered result of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

struct Report {
    text: String,
    json: Value,
    positive: bool,
    /// Set when some part of the report failed with an error.
    error: Option<Error>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::El { .. } => "el",
            Command::Dh { .. } => "dh",
            Command::Bracket { .. } => "bracket",
            Command::Jacobiator { .. } => "jacobiator",
            Command::Reduce { .. } => "reduce",
            Command::ReduceForm { .. } => "reduce-form",
            Command::L2hat { .. } => "l2hat",
            Command::Verify { .. } => "verify",
            Command::Eval { .. } => "eval",
            Command::CompareReduced { .. } => "compare-reduced",
        }
    }
}

pub fn run(cli: &Cli) -> Outcome {
    let operation = cli.command.name();
    let result = cli
        .problem
        .as_ref()
        .ok_or_else(|| Error::Validation {
            entity: "command line".into(),
            reason: "a problem file is required (--problem FILE)".into(),
        })
        .and_then(|path| {
            let options = LoadOptions {
                seed: cli.seed,
                tolerance: cli.tolerance,
                order_cap: cli.order_cap,
            };
            load_problem(path, &options)
        })
        .and_then(|problem| {
            let exec = if cli.sequential {
                Execution::Sequential
            } else {
                Execution::Parallel
            };
            dispatch(&cli.command, &problem, exec)
        });
    match result {
        Ok(Report {
            text,
            json,
            error: Some(e),
            ..
        }) => {
            let (stdout, stderr) = if cli.json {
                let mut v = json;
                v["command"] = json!(operation);
                v["ok"] = json!(false);
                v["error"] = diagnostic(operation, &e);
                (
                    format!("{}\n", serde_json::to_string_pretty(&v).expect("JSON values serialize")),
                    String::new(),
                )
            } else {
                (text, format!("error[{}] in {operation}: {e}\n", e.kind()))
            };
            Outcome {
                stdout,
                stderr,
                code: EXIT_ERROR,
            }
        }
        Ok(report) => {
            let stdout = if cli.json {
                let mut v = report.json;
                v["command"] = json!(operation);
                v["ok"] = json!(report.positive);
                format!("{}\n", serde_json::to_string_pretty(&v).expect("JSON values serialize"))
            } else {
                report.text
            };
            Outcome {
                stdout,
                stderr: String::new(),
                code: if report.positive { EXIT_OK } else { EXIT_NEGATIVE },
            }
        }
        Err(e) => {
            let diag = json!({ "command": operation, "ok": false, "error": diagnostic(operation, &e) });
            let (stdout, stderr) = if cli.json {
                (
                    format!(
                        "{}\n",
                        serde_json::to_string_pretty(&diag).expect("JSON values serialize")
                    ),
                    String::new(),
                )
            } else {
                (String::new(), format!("error[{}] in {operation}: {e}\n", e.kind()))
            };
            Outcome {
                stdout,
                stderr,
                code: EXIT_ERROR,
            }
        }
    }
}

fn diagnostic(operation: &str, e: &Error) -> Value {
    json!({
        "operation": operation,
        "kind": e.kind(),
        "locations": e.locations(),
        "message": e.root().to_string(),
    })
}

/// Human rendering of a horizontal form.
pub fn show_form(chart: &BundleChart, f: &HorizontalForm) -> String {
    if f.degree() == 0 {
        return chart.show(&f.coeff(&[]));
    }
    let parts: Vec<String> = f
        .terms()
        .map(|(key, c)| {
            let basis: Vec<String> = key.iter().map(|&i| format!("d{}", chart.base_names()[i])).collect();
            let coeff = chart.show(c);
            let basis = basis.join("∧");
            if c.is_one() {
                basis
            } else if c.num_terms() == 1 {
                format!("{coeff} {basis}")
            } else {
                format!("({coeff}) {basis}")
            }
        })
        .collect();
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

/// Expression as JSON: its grammar text and the canonical term tree.
pub fn expr_json(chart: &BundleChart, e: &Expr) -> Value {
    json!({
        "text": chart.show(e),
        "grammar": chart.serialize(e),
        "ast": expr_tree(chart, e),
    })
}

fn expr_tree(chart: &BundleChart, e: &Expr) -> Value {
    let terms: Vec<Value> = e
        .terms()
        .map(|(m, c)| {
            let factors: Vec<Value> = m
                .factors()
                .iter()
                .map(|(a, p)| {
                    let base = match a {
                        Atom::Var(v) => json!({ "var": chart.var_name(v) }),
                        Atom::Surd(s) => json!({ "surd": s.to_string() }),
                        Atom::Sum(inner) => json!({ "sum": expr_tree(chart, inner) }),
                    };
                    json!({ "base": base, "exponent": p.to_string() })
                })
                .collect();
            json!({ "coefficient": c.to_string(), "factors": factors })
        })
        .collect();
    Value::Array(terms)
}

fn form_json(chart: &BundleChart, f: &HorizontalForm) -> Value {
    let terms: Vec<Value> = f
        .terms()
        .map(|(key, c)| {
            let dx: Vec<&str> = key.iter().map(|&i| chart.base_names()[i].as_str()).collect();
            json!({ "dx": dx, "coefficient": expr_json(chart, c) })
        })
        .collect();
    json!({ "degree": f.degree(), "text": show_form(chart, f), "terms": terms })
}

fn dispatch(command: &Command, p: &Problem, exec: Execution) -> Result<Report> {
    let chart = &p.chart;
    match command {
        Command::El { expr } => {
            let e = euler_lagrange(chart, &p.expression(expr)?)?;
            let mut text = String::new();
            let mut comps = Vec::new();
            for (a, c) in e.components.iter().enumerate() {
                let name = &chart.fiber_names()[a];
                writeln!(text, "E[{name}] = {}", chart.show(c)).unwrap();
                comps.push(json!({ "fiber": name, "component": expr_json(chart, c) }));
            }
            Ok(Report {
                text,
                json: json!({ "components": comps }),
                positive: true,
                error: None,
            })
        }
        Command::Dh { form, expr } => {
            let f = match (form, expr) {
                (Some(name), _) => p.form(name)?.clone(),
                (None, Some(e)) => HorizontalForm::scalar(chart.n(), p.expression(e)?),
                (None, None) => unreachable!("clap requires one of --form and --expr"),
            };
            let d = d_h(chart, &f)?;
            Ok(Report {
                text: format!("{}\n", show_form(chart, &d)),
                json: json!({ "form": form_json(chart, &d) }),
                positive: true,
                error: None,
            })
        }
        Command::Bracket { p: a, q: b } => {
            let l2 = l2_tilde(chart, &p.expression(a)?, &p.expression(b)?, p.omega()?)?;
            Ok(Report {
                text: format!("{}\n", chart.show(&l2)),
                json: json!({ "bracket": expr_json(chart, &l2) }),
                positive: true,
                error: None,
            })
        }
        Command::Jacobiator { p: a, q: b, r: c } => {
            let (a, b, c) = (p.expression(a)?, p.expression(b)?, p.expression(c)?);
            let omega = p.omega()?;
            let j = jacobiator(chart, &a, &b, &c, omega)?;
            let exact = check_jacobiator_exact(chart, &a, &b, &c, omega)?;
            Ok(Report {
                text: format!(
                    "J = {}\nE(J) = 0: {}\n",
                    chart.show(&j),
                    if exact { "yes" } else { "no" }
                ),
                json: json!({ "jacobiator": expr_json(chart, &j), "divergence": exact }),
                positive: exact,
                error: None,
            })
        }
        Command::Reduce { expr } => {
            let setup = p.reduction()?;
            let r = setup.rho(&p.expression(expr)?)?;
            let red = setup.reduced();
            Ok(Report {
                text: format!("{}\n", red.show(&r)),
                json: json!({ "reduced": expr_json(red, &r) }),
                positive: true,
                error: None,
            })
        }
        Command::ReduceForm { form } => {
            let setup = p.reduction()?;
            let r = setup.rho_chain(p.form(form)?)?;
            let red = setup.reduced();
            Ok(Report {
                text: format!("{}\n", show_form(red, &r)),
                json: json!({ "reduced": form_json(red, &r) }),
                positive: true,
                error: None,
            })
        }
        Command::L2hat {
            p: a,
            q: b,
            p_bar,
            q_bar,
        } => {
            let setup = p.reduction()?;
            let red = setup.reduced();
            let rep = |text: &str, bar: &Option<String>| -> Result<Representative> {
                let density = p.expression(text)?;
                Ok(match bar {
                    Some(b) => Representative::with_reduced(density, red.parse(b)?),
                    None => Representative::new(density),
                })
            };
            let out = setup.l2_hat(&rep(a, p_bar)?, &rep(b, q_bar)?, p.omega()?)?;
            let volume = red.show(setup.reduced_volume());
            let mut text = format!(
                "l2hat = ({}) ν̄\nν̄ = {volume} d{}\n",
                red.show(&out.coefficient),
                red.base_names().join(" d")
            );
            match out.agree {
                Some(true) => text.push_str("omega-bar path: agrees\n"),
                Some(false) => text.push_str("omega-bar path: DISAGREES\n"),
                None => text.push_str("omega-bar path: unavailable (omega or volume not invariant)\n"),
            }
            Ok(Report {
                text,
                json: json!({
                    "coefficient": expr_json(red, &out.coefficient),
                    "reduced_volume": expr_json(red, setup.reduced_volume()),
                    "omega_bar": out.omega_bar.as_ref().map(|e| expr_json(red, e)),
                    "agree": out.agree,
                }),
                positive: out.agree != Some(false),
                error: None,
            })
        }
        Command::Verify { check } => verify(p, *check, exec),
        Command::Eval {
            expr,
            section,
            at,
            region,
        } => {
            let e = p.expression(expr)?;
            let s = p.section(section)?;
            if let Some(point) = at {
                if point.len() != chart.n() {
                    return Err(Error::Dimension(format!("--at needs {} coordinates", chart.n())));
                }
                let v = pullback(chart, &e, s)?.eval(point);
                if !v.is_finite() {
                    return Err(Error::NonFinite);
                }
                return Ok(Report {
                    text: format!("{v}\n"),
                    json: json!({ "point": point, "value": v }),
                    positive: true,
                    error: None,
                });
            }
            let name = region.as_deref().expect("clap requires --at or --region");
            let volume = match &p.reduction {
                Some(setup) => setup.volume().clone(),
                None => HorizontalForm::top(chart.n(), Expr::one()),
            };
            let rep = integrate(chart, &e, s, p.region(name)?, &volume, exec)?;
            Ok(Report {
                text: format!(
                    "integral = {}\nerror estimate = {:e}\nnodes per axis = {}\n",
                    rep.value, rep.error_estimate, rep.nodes
                ),
                json: json!({ "integral": rep }),
                positive: true,
                error: None,
            })
        }
        Command::CompareReduced {
            expr,
            section,
            region,
            reduced_region,
            expect,
            rel_tol,
        } => {
            let setup = p.reduction()?;
            let cmp = compare_reduced_functional(
                setup,
                &p.expression(expr)?,
                p.section(section)?,
                p.region(region)?,
                p.region(reduced_region)?,
                exec,
            )?;
            let expected = expect.as_deref().map(|e| constant_value(chart, e)).transpose()?;
            Ok(comparison_report(&cmp, expected, *rel_tol))
        }
    }
}

fn comparison_report(cmp: &ReducedComparison, expected: Option<f64>, tol: f64) -> Report {
    let mut text = String::new();
    writeln!(
        text,
        "lhs = {} (error estimate {:e})",
        cmp.lhs.value, cmp.lhs.error_estimate
    )
    .unwrap();
    writeln!(
        text,
        "rhs = {} (error estimate {:e})",
        cmp.rhs.value, cmp.rhs.error_estimate
    )
    .unwrap();
    match cmp.volume_factor {
        Some(v) => writeln!(text, "V = {v}").unwrap(),
        None => writeln!(text, "V undefined (|rhs| below {:e})", crate::numeric::RATIO_FLOOR).unwrap(),
    }
    if let Some(r) = cmp.relative_error {
        writeln!(text, "relative error estimate = {r:e}").unwrap();
    }
    let mut positive = true;
    let mut deviation = None;
    if let Some(e) = expected {
        let dev = cmp.deviation_from(e);
        positive = matches!(dev, Some(d) if d <= tol);
        deviation = dev;
        match dev {
            Some(d) => writeln!(
                text,
                "expected V = {e}, relative deviation {d:e} ({})",
                if positive { "ok" } else { "FAIL" }
            )
            .unwrap(),
            None => writeln!(text, "expected V = {e}, but V is undefined (FAIL)").unwrap(),
        }
    }
    Report {
        text,
        json: json!({ "comparison": cmp, "expected": expected, "deviation": deviation, "tolerance": tol }),
        positive,
        error: None,
    }
}

enum Check<'a> {
    Cochain(&'a str),
    ElCommute(&'a str),
    Covariance(&'a str, bool),
    Jacobiator(&'a [String; 3]),
    WellDefined(&'a crate::problem::WellDefinedCase),
}

struct CheckResult {
    name: String,
    outcome: Result<(bool, String)>,
}

fn run_check(p: &Problem, check: &Check) -> CheckResult {
    let (name, outcome) = match check {
        Check::Cochain(f) => (
            format!("cochain[{f}]"),
            (|| {
                let setup = p.reduction()?;
                Ok((setup.verify_cochain(p.form(f)?)?, "ρ_X(d_H α) = d̄_H(ρ_X α)".to_string()))
            })(),
        ),
        Check::ElCommute(e) => (
            format!("el-commute[{e}]"),
            (|| {
                let setup = p.reduction()?;
                Ok((
                    setup.verify_el_commute(&p.expression(e)?)?,
                    "Ē(ρ_X(Pν)) = ρ_X(E(Pν))".to_string(),
                ))
            })(),
        ),
        Check::Covariance(a, expect) => (
            format!("covariance[{a}]"),
            (|| {
                let got = check_covariance(&p.chart, p.omega()?, p.automorphism(a)?)?;
                let what = if got { "covariant" } else { "not covariant" };
                let expected = if *expect { "covariant" } else { "not covariant" };
                Ok((got == *expect, format!("{what}, expected {expected}")))
            })(),
        ),
        Check::Jacobiator([a, b, c]) => (
            format!("jacobiator[{a}, {b}, {c}]"),
            (|| {
                let (x, y, z) = (p.expression(a)?, p.expression(b)?, p.expression(c)?);
                let ok = check_jacobiator_exact(&p.chart, &x, &y, &z, p.omega()?)?;
                Ok((ok, "E annihilates the Jacobiator".to_string()))
            })(),
        ),
        Check::WellDefined(c) => (
            format!("well-defined[{}, {}; {}]", c.alpha, c.alpha_prime, c.beta),
            (|| {
                let setup = p.reduction()?;
                let ok = setup.verify_l2hat_well_defined(
                    &p.expression(&c.alpha)?,
                    &p.expression(&c.alpha_prime)?,
                    &p.expression(&c.beta)?,
                    p.omega()?,
                )?;
                Ok((ok, "ρ_X l̃₂(α - α', β) = 0".to_string()))
            })(),
        ),
    };
    CheckResult { name, outcome }
}

fn verify(p: &Problem, kind: VerifyKind, exec: Execution) -> Result<Report> {
    use VerifyKind::*;
    let plan = &p.verify;
    let mut checks = Vec::new();
    if matches!(kind, Cochain | All) {
        checks.extend(plan.cochain.iter().map(|f| Check::Cochain(f)));
    }
    if matches!(kind, ElCommute | All) {
        checks.extend(plan.el_commute.iter().map(|e| Check::ElCommute(e)));
    }
    if matches!(kind, Covariance | All) {
        checks.extend(
            plan.covariance
                .iter()
                .map(|c| Check::Covariance(&c.automorphism, c.covariant)),
        );
    }
    if matches!(kind, Jacobiator | All) {
        checks.extend(plan.jacobiator.iter().map(Check::Jacobiator));
    }
    if matches!(kind, WellDefined | All) {
        checks.extend(plan.well_defined.iter().map(Check::WellDefined));
    }
    if checks.is_empty() {
        return Err(Error::Validation {
            entity: "verify".into(),
            reason: "the problem file declares no checks of this kind".into(),
        });
    }
    let results = map_slice(exec, &checks, |c| run_check(p, c));
    let mut text = String::new();
    let mut entries = Vec::new();
    let (mut passed, mut failed) = (0, 0);
    let mut first_error = None;
    for r in &results {
        match &r.outcome {
            Ok((true, detail)) => {
                passed += 1;
                writeln!(text, "PASS  {}  {detail}", r.name).unwrap();
                entries.push(json!({ "check": r.name, "verdict": true, "detail": detail }));
            }
            Ok((false, detail)) => {
                failed += 1;
                writeln!(text, "FAIL  {}  {detail}", r.name).unwrap();
                entries.push(json!({ "check": r.name, "verdict": false, "detail": detail }));
            }
            Err(e) => {
                writeln!(text, "ERROR {}  {e}", r.name).unwrap();
                entries.push(json!({
                    "check": r.name,
                    "error": { "kind": e.kind(), "message": e.root().to_string(), "locations": e.locations() },
                }));
                first_error.get_or_insert_with(|| e.clone().at(r.name.clone()));
            }
        }
    }
    writeln!(
        text,
        "{passed} passed, {failed} failed, {} errors",
        results.len() - passed - failed
    )
    .unwrap();
    Ok(Report {
        text,
        json: json!({ "checks": entries, "passed": passed, "failed": failed }),
        positive: failed == 0,
        error: first_error,
    })
}
