//! Real-valued closed-form functions of the base coordinates.
//!
//! Unlike [`Expr`], these admit `exp`, `ln`, `sin` and `cos`, and carry
//! floating-point constants. They are used only on the numeric path.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::expr::{Ast, Atom, BinOp, Expr, VarRef};
use crate::jet::BundleChart;

#[derive(Debug, Clone, PartialEq)]
pub enum Func {
    Const(f64),
    /// Base coordinate by index.
    Var(usize),
    Sum(Arc<Vec<Func>>),
    Product(Arc<Vec<Func>>),
    Pow(Arc<Func>, f64),
    Exp(Arc<Func>),
    Ln(Arc<Func>),
    Sin(Arc<Func>),
    Cos(Arc<Func>),
}

impl Func {
    pub fn zero() -> Func {
        Func::Const(0.0)
    }

    pub fn one() -> Func {
        Func::Const(1.0)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Func::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn sum(items: Vec<Func>) -> Func {
        let mut c = 0.0;
        let mut out = Vec::with_capacity(items.len());
        for f in items {
            match f {
                Func::Const(k) => c += k,
                Func::Sum(inner) => {
                    for g in inner.iter() {
                        match g {
                            Func::Const(k) => c += k,
                            g => out.push(g.clone()),
                        }
                    }
                }
                f => out.push(f),
            }
        }
        if c != 0.0 {
            out.push(Func::Const(c));
        }
        match out.len() {
            0 => Func::zero(),
            1 => out.pop().unwrap(),
            _ => Func::Sum(Arc::new(out)),
        }
    }

    pub fn product(items: Vec<Func>) -> Func {
        let mut c = 1.0;
        let mut out = Vec::with_capacity(items.len());
        for f in items {
            match f {
                Func::Const(k) => c *= k,
                Func::Product(inner) => {
                    for g in inner.iter() {
                        match g {
                            Func::Const(k) => c *= k,
                            g => out.push(g.clone()),
                        }
                    }
                }
                f => out.push(f),
            }
        }
        if c == 0.0 {
            return Func::zero();
        }
        if c != 1.0 {
            out.insert(0, Func::Const(c));
        }
        match out.len() {
            0 => Func::one(),
            1 => out.pop().unwrap(),
            _ => Func::Product(Arc::new(out)),
        }
    }

    pub fn add(&self, other: &Func) -> Func {
        Func::sum(vec![self.clone(), other.clone()])
    }

    pub fn mul(&self, other: &Func) -> Func {
        Func::product(vec![self.clone(), other.clone()])
    }

    pub fn scale(&self, c: f64) -> Func {
        Func::product(vec![Func::Const(c), self.clone()])
    }

    pub fn powf(&self, p: f64) -> Func {
        if p == 0.0 {
            return Func::one();
        }
        if p == 1.0 {
            return self.clone();
        }
        match self {
            Func::Const(c) => Func::Const(pow_value(*c, p)),
            Func::Pow(g, q) if p.fract() == 0.0 => g.powf(q * p),
            _ => Func::Pow(Arc::new(self.clone()), p),
        }
    }

    pub fn exp(&self) -> Func {
        match self {
            Func::Const(c) => Func::Const(c.exp()),
            _ => Func::Exp(Arc::new(self.clone())),
        }
    }

    pub fn ln(&self) -> Func {
        match self {
            Func::Const(c) => Func::Const(c.ln()),
            _ => Func::Ln(Arc::new(self.clone())),
        }
    }

    pub fn sin(&self) -> Func {
        match self {
            Func::Const(c) => Func::Const(c.sin()),
            _ => Func::Sin(Arc::new(self.clone())),
        }
    }

    pub fn cos(&self) -> Func {
        match self {
            Func::Const(c) => Func::Const(c.cos()),
            _ => Func::Cos(Arc::new(self.clone())),
        }
    }

    /// `∂/∂x^i`.
    pub fn derivative(&self, i: usize) -> Func {
        match self {
            Func::Const(_) => Func::zero(),
            Func::Var(j) => Func::Const(if *j == i { 1.0 } else { 0.0 }),
            Func::Sum(items) => Func::sum(items.iter().map(|f| f.derivative(i)).collect()),
            Func::Product(items) => {
                let mut terms = Vec::new();
                for k in 0..items.len() {
                    let d = items[k].derivative(i);
                    if d.as_const() == Some(0.0) {
                        continue;
                    }
                    let mut factors: Vec<Func> = items.iter().cloned().collect();
                    factors[k] = d;
                    terms.push(Func::product(factors));
                }
                Func::sum(terms)
            }
            Func::Pow(f, p) => {
                let d = f.derivative(i);
                if d.as_const() == Some(0.0) {
                    return Func::zero();
                }
                Func::product(vec![Func::Const(*p), f.powf(p - 1.0), d])
            }
            Func::Exp(f) => Func::product(vec![self.clone(), f.derivative(i)]),
            Func::Ln(f) => Func::product(vec![f.derivative(i), f.powf(-1.0)]),
            Func::Sin(f) => Func::product(vec![f.cos(), f.derivative(i)]),
            Func::Cos(f) => Func::product(vec![Func::Const(-1.0), f.sin(), f.derivative(i)]),
        }
    }

    /// Mixed partial along a list of base indices.
    pub fn derivatives(&self, indices: &[usize]) -> Func {
        indices.iter().fold(self.clone(), |f, &i| f.derivative(i))
    }

    /// Replace `Var(i)` by `subs[i]`.
    pub fn compose(&self, subs: &[Func]) -> Func {
        match self {
            Func::Const(_) => self.clone(),
            Func::Var(i) => subs[*i].clone(),
            Func::Sum(items) => Func::sum(items.iter().map(|f| f.compose(subs)).collect()),
            Func::Product(items) => Func::product(items.iter().map(|f| f.compose(subs)).collect()),
            Func::Pow(f, p) => f.compose(subs).powf(*p),
            Func::Exp(f) => f.compose(subs).exp(),
            Func::Ln(f) => f.compose(subs).ln(),
            Func::Sin(f) => f.compose(subs).sin(),
            Func::Cos(f) => f.compose(subs).cos(),
        }
    }

    /// Value at `x`; may be NaN or infinite, callers check.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Func::Const(c) => *c,
            Func::Var(i) => x[*i],
            Func::Sum(items) => items.iter().map(|f| f.eval(x)).sum(),
            Func::Product(items) => items.iter().map(|f| f.eval(x)).product(),
            Func::Pow(f, p) => pow_value(f.eval(x), *p),
            Func::Exp(f) => f.eval(x).exp(),
            Func::Ln(f) => f.eval(x).ln(),
            Func::Sin(f) => f.eval(x).sin(),
            Func::Cos(f) => f.eval(x).cos(),
        }
    }

    /// Number of nodes, counting shared subtrees once per occurrence.
    pub fn size(&self) -> usize {
        match self {
            Func::Const(_) | Func::Var(_) => 1,
            Func::Sum(items) | Func::Product(items) => 1 + items.iter().map(Func::size).sum::<usize>(),
            Func::Pow(f, _) | Func::Exp(f) | Func::Ln(f) | Func::Sin(f) | Func::Cos(f) => 1 + f.size(),
        }
    }

    /// Convert a symbolic expression, resolving each coordinate with `var`.
    pub fn from_expr(e: &Expr, var: &dyn Fn(&VarRef) -> Result<Func>) -> Result<Func> {
        let mut terms = Vec::with_capacity(e.num_terms());
        for (m, c) in e.terms() {
            let mut factors = vec![Func::Const(c.to_f64().ok_or(Error::NonFinite)?)];
            for (atom, p) in m.factors() {
                let p = *p.numer() as f64 / *p.denom() as f64;
                let base = match atom {
                    Atom::Var(v) => var(v)?,
                    Atom::Surd(s) => Func::Const(s.to_f64().ok_or(Error::NonFinite)?),
                    Atom::Sum(inner) => Func::from_expr(inner, var)?,
                };
                factors.push(base.powf(p));
            }
            terms.push(Func::product(factors));
        }
        Ok(Func::sum(terms))
    }

    /// Parse a function of the chart's base coordinates. Identifiers may be
    /// base names, chart definitions, entries of `constants`, or `pi`;
    /// calls are `exp`, `ln`, `sin`, `cos` and `sqrt`.
    pub fn parse(chart: &BundleChart, text: &str, constants: &BTreeMap<String, f64>) -> Result<Func> {
        let ast = crate::expr::parse_ast(text)?;
        lower(chart, &ast, constants)
    }
}

pub(crate) fn pow_value(base: f64, p: f64) -> f64 {
    if p.fract() == 0.0 && p.abs() < 1e9 {
        base.powi(p as i32)
    } else if p == 0.5 {
        base.sqrt()
    } else {
        base.powf(p)
    }
}

/// Base-coordinate resolver for expressions that must not contain jets.
pub(crate) fn base_only(chart: &BundleChart) -> impl Fn(&VarRef) -> Result<Func> + '_ {
    move |v: &VarRef| match v {
        VarRef::Base(i) => Ok(Func::Var(*i)),
        VarRef::Jet { .. } => Err(Error::Validation {
            entity: "section".into(),
            reason: format!("`{}` is not a base coordinate", chart.var_name(v)),
        }),
    }
}

fn lower(chart: &BundleChart, ast: &Ast, constants: &BTreeMap<String, f64>) -> Result<Func> {
    Ok(match ast {
        Ast::Num(n) => Func::Const(n.to_f64().ok_or(Error::NonFinite)?),
        Ast::Ident { name, .. } => {
            if let Some(i) = chart.base_index(name) {
                Func::Var(i)
            } else if let Some(c) = constants.get(name) {
                Func::Const(*c)
            } else if let Some(def) = chart.definitions().get(name) {
                Func::from_expr(def, &base_only(chart))?
            } else if name == "pi" {
                Func::Const(std::f64::consts::PI)
            } else {
                return Err(Error::UnknownIdentifier(name.clone()));
            }
        }
        Ast::Neg(a) => lower(chart, a, constants)?.scale(-1.0),
        Ast::Bin(op, a, b) => {
            let x = lower(chart, a, constants)?;
            let y = lower(chart, b, constants)?;
            match op {
                BinOp::Add => x.add(&y),
                BinOp::Sub => x.add(&y.scale(-1.0)),
                BinOp::Mul => x.mul(&y),
                BinOp::Div => {
                    if y.as_const() == Some(0.0) {
                        return Err(Error::DivisionByZero);
                    }
                    x.mul(&y.powf(-1.0))
                }
                BinOp::Pow => match y.as_const() {
                    Some(p) => x.powf(p),
                    None => return Err(Error::NonConstantExponent),
                },
            }
        }
        Ast::Call { name, args, .. } => {
            let [a] = args.as_slice() else {
                return Err(Error::UnknownIdentifier(format!("{name}(..)")));
            };
            let a = lower(chart, a, constants)?;
            match name.as_str() {
                "exp" => a.exp(),
                "ln" | "log" => a.ln(),
                "sin" => a.sin(),
                "cos" => a.cos(),
                "sqrt" => a.powf(0.5),
                _ => return Err(Error::UnknownIdentifier(format!("{name}(..)"))),
            }
        }
    })
}
