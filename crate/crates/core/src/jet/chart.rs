use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::expr::{
    self, parse_ast, Ast, BinOp, Exponent, Expr, GrammarDisplay, HumanDisplay, MultiIndex, OracleConfig, SampleRegion,
    VarRef, Verdict,
};

pub const DEFAULT_ORDER_CAP: usize = 6;

/// Coordinates of a trivial bundle `E -> M` and the jet-variable universe
/// they generate.
///
/// Jet variables are named `<fiber>_<base names>`, e.g. `u1_xy` for the
/// derivative of `u1` along `x` and `y`. The suffix must split into base
/// names in exactly one way.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleChart {
    base: Vec<String>,
    fiber: Vec<String>,
    order_cap: usize,
    definitions: BTreeMap<String, Expr>,
    region: SampleRegion,
    oracle: OracleConfig,
}

fn valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic()) && chars.all(|c| c.is_alphanumeric())
}

impl BundleChart {
    pub fn new<S: AsRef<str>>(base: &[S], fiber: &[S]) -> Result<Self> {
        let base: Vec<String> = base.iter().map(|s| s.as_ref().to_string()).collect();
        let fiber: Vec<String> = fiber.iter().map(|s| s.as_ref().to_string()).collect();
        let invalid = |reason: String| Error::Validation {
            entity: "chart".into(),
            reason,
        };
        if base.is_empty() || fiber.is_empty() {
            return Err(invalid("need at least one base and one fiber coordinate".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for name in base.iter().chain(&fiber) {
            if !valid_name(name) {
                return Err(invalid(format!("`{name}` is not a valid coordinate name")));
            }
            if !seen.insert(name.as_str()) {
                return Err(invalid(format!("duplicate coordinate name `{name}`")));
            }
        }
        let chart = BundleChart {
            region: SampleRegion::uniform(base.len()),
            base,
            fiber,
            order_cap: DEFAULT_ORDER_CAP,
            definitions: BTreeMap::new(),
            oracle: OracleConfig::default(),
        };
        // Each base name must decode as a suffix in exactly one way.
        for i in 0..chart.base.len() {
            let suffix = chart.base[i].clone();
            if chart.count_splits(&suffix) != 1 {
                return Err(invalid(format!("base name `{suffix}` makes jet names ambiguous")));
            }
        }
        Ok(chart)
    }

    pub fn with_order_cap(mut self, cap: usize) -> Self {
        self.order_cap = cap;
        self
    }

    pub fn with_region(mut self, region: SampleRegion) -> Self {
        self.region = region;
        self
    }

    pub fn with_oracle(mut self, oracle: OracleConfig) -> Self {
        self.oracle = oracle;
        self
    }

    /// Bind a name to an expression, e.g. `r = sqrt(x^2+y^2+z^2)`.
    pub fn define(&mut self, name: &str, text: &str) -> Result<()> {
        if !valid_name(name) || self.resolve(name).is_ok() {
            return Err(Error::Validation {
                entity: format!("definition `{name}`"),
                reason: "name is invalid or already in use".into(),
            });
        }
        let e = self.parse(text)?;
        self.definitions.insert(name.to_string(), e);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.base.len()
    }

    pub fn m(&self) -> usize {
        self.fiber.len()
    }

    pub fn order_cap(&self) -> usize {
        self.order_cap
    }

    pub fn base_names(&self) -> &[String] {
        &self.base
    }

    pub fn fiber_names(&self) -> &[String] {
        &self.fiber
    }

    pub fn region(&self) -> &SampleRegion {
        &self.region
    }

    pub fn oracle(&self) -> &OracleConfig {
        &self.oracle
    }

    pub fn definitions(&self) -> &BTreeMap<String, Expr> {
        &self.definitions
    }

    pub fn base_index(&self, name: &str) -> Option<usize> {
        self.base.iter().position(|b| b == name)
    }

    pub fn fiber_index(&self, name: &str) -> Option<usize> {
        self.fiber.iter().position(|b| b == name)
    }

    pub fn x(&self, i: usize) -> Expr {
        Expr::var(VarRef::base(i))
    }

    pub fn u(&self, a: usize, index: &[usize]) -> Expr {
        Expr::var(VarRef::jet(a, index.to_vec()))
    }

    pub fn check_order(&self, order: usize) -> Result<()> {
        if order > self.order_cap {
            Err(Error::OrderCapExceeded {
                needed: order,
                cap: self.order_cap,
            })
        } else {
            Ok(())
        }
    }

    fn count_splits(&self, suffix: &str) -> usize {
        // ways[k] = number of decodings of suffix[..k], capped at 2.
        let mut ways = vec![0usize; suffix.len() + 1];
        ways[0] = 1;
        for k in 0..suffix.len() {
            if ways[k] == 0 || !suffix.is_char_boundary(k) {
                continue;
            }
            for b in &self.base {
                if suffix[k..].starts_with(b.as_str()) {
                    ways[k + b.len()] = (ways[k + b.len()] + ways[k]).min(2);
                }
            }
        }
        ways[suffix.len()]
    }

    fn decode_suffix(&self, suffix: &str) -> Option<Vec<usize>> {
        if self.count_splits(suffix) != 1 {
            return None;
        }
        let mut out = Vec::new();
        let mut k = 0;
        while k < suffix.len() {
            let i = self
                .base
                .iter()
                .position(|b| suffix[k..].starts_with(b.as_str()) && self.count_splits(&suffix[k + b.len()..]) == 1)?;
            out.push(i);
            k += self.base[i].len();
        }
        Some(out)
    }

    fn resolve(&self, name: &str) -> Result<Expr> {
        if let Some(i) = self.base_index(name) {
            return Ok(self.x(i));
        }
        if let Some(e) = self.definitions.get(name) {
            return Ok(e.clone());
        }
        if let Some(a) = self.fiber_index(name) {
            return Ok(self.u(a, &[]));
        }
        if let Some((f, suffix)) = name.split_once('_') {
            if let (Some(a), Some(index)) = (self.fiber_index(f), self.decode_suffix(suffix)) {
                if !index.is_empty() {
                    self.check_order(index.len())?;
                    return Ok(self.u(a, &index));
                }
            }
        }
        Err(Error::UnknownIdentifier(name.to_string()))
    }

    /// Parse an expression in this chart's names.
    pub fn parse(&self, text: &str) -> Result<Expr> {
        self.lower(&parse_ast(text)?)
    }

    pub fn lower(&self, ast: &Ast) -> Result<Expr> {
        Ok(match ast {
            Ast::Num(n) => Expr::constant(n.clone()),
            Ast::Ident { name, .. } => self.resolve(name)?,
            Ast::Neg(a) => self.lower(a)?.neg_ref(),
            Ast::Bin(op, a, b) => {
                let x = self.lower(a)?;
                match op {
                    BinOp::Add => x.add_ref(&self.lower(b)?),
                    BinOp::Sub => x.sub_ref(&self.lower(b)?),
                    BinOp::Mul => x.mul_ref(&self.lower(b)?),
                    BinOp::Div => x.div(&self.lower(b)?)?,
                    BinOp::Pow => {
                        let p = match b.constant_value() {
                            Some(p) => p,
                            None => self.lower(b)?.as_constant().ok_or(Error::NonConstantExponent)?,
                        };
                        x.pow(to_exponent(&p)?)?
                    }
                }
            }
            Ast::Call { name, args, .. } => match (name.as_str(), args.as_slice()) {
                ("sqrt", [a]) => self.lower(a)?.pow(Exponent::new(1, 2))?,
                _ => return Err(Error::UnknownIdentifier(format!("{name}(..)"))),
            },
        })
    }

    pub fn var_name(&self, v: &VarRef) -> String {
        match v {
            VarRef::Base(i) => self.base.get(*i).cloned().unwrap_or_else(|| format!("x{i}?")),
            VarRef::Jet { fiber, index } => {
                let mut s = self.fiber.get(*fiber).cloned().unwrap_or_else(|| format!("u{fiber}?"));
                if index.order() > 0 {
                    s.push('_');
                    for i in index.indices() {
                        s.push_str(&self.base[*i]);
                    }
                }
                s
            }
        }
    }

    /// Human-readable rendering.
    pub fn show(&self, e: &Expr) -> String {
        let names = |v: &VarRef| self.var_name(v);
        HumanDisplay { expr: e, names: &names }.to_string()
    }

    /// Fully parenthesized rendering that [`BundleChart::parse`] reads back.
    pub fn serialize(&self, e: &Expr) -> String {
        let names = |v: &VarRef| self.var_name(v);
        GrammarDisplay { expr: e, names: &names }.to_string()
    }

    pub fn equal(&self, a: &Expr, b: &Expr) -> Result<Verdict> {
        expr::equal(a, b, &self.region, &self.oracle)
    }

    pub fn is_zero(&self, e: &Expr) -> Result<Verdict> {
        expr::is_zero(e, &self.region, &self.oracle)
    }

    /// Every jet variable of this chart up to the given order.
    pub fn jet_vars(&self, order: usize) -> Vec<VarRef> {
        let mut out = Vec::new();
        let mut layer = vec![MultiIndex::empty()];
        for k in 0..=order {
            for a in 0..self.m() {
                for idx in &layer {
                    out.push(VarRef::Jet {
                        fiber: a,
                        index: idx.clone(),
                    });
                }
            }
            if k < order {
                let mut next = Vec::new();
                for idx in &layer {
                    let start = idx.indices().last().copied().unwrap_or(0);
                    for i in start..self.n() {
                        next.push(idx.with(i));
                    }
                }
                layer = next;
            }
        }
        out
    }
}

pub(crate) fn to_exponent(p: &BigRational) -> Result<Exponent> {
    if p.is_zero() {
        return Ok(Exponent::zero());
    }
    match (p.numer().to_i64(), p.denom().to_i64()) {
        (Some(n), Some(d)) => Ok(Exponent::new(n, d)),
        _ => Err(Error::Overflow),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xyz() -> BundleChart {
        BundleChart::new(&["x", "y", "z"], &["u1", "u2"]).unwrap()
    }

    #[test]
    fn jet_names_decode() {
        let c = xyz();
        assert_eq!(c.parse("u1_xy").unwrap(), c.parse("u1_yx").unwrap());
        assert_eq!(c.parse("u2").unwrap(), c.u(1, &[]));
        assert_eq!(c.parse("u1_zz").unwrap(), c.u(0, &[2, 2]));
        assert!(matches!(c.parse("u3_x"), Err(Error::UnknownIdentifier(_))));
        assert!(matches!(c.parse("u1_w"), Err(Error::UnknownIdentifier(_))));
        assert!(matches!(c.parse("u1_"), Err(Error::UnknownIdentifier(_))));
    }

    #[test]
    fn order_cap_is_enforced() {
        let c = xyz().with_order_cap(2);
        assert!(c.parse("u1_xy").is_ok());
        assert_eq!(c.parse("u1_xyz"), Err(Error::OrderCapExceeded { needed: 3, cap: 2 }));
    }

    #[test]
    fn multi_letter_base_names() {
        let c = BundleChart::new(&["xh", "yh", "r"], &["v1", "v2"]).unwrap();
        assert_eq!(c.parse("v1_xhr").unwrap(), c.u(0, &[0, 2]));
        assert_eq!(c.var_name(&VarRef::jet(1, vec![2, 2])), "v2_rr");
        assert!(BundleChart::new(&["x", "xx"], &["u"]).is_err());
    }

    #[test]
    fn definitions_and_sqrt() {
        let mut c = xyz();
        c.define("r", "sqrt(x^2+y^2+z^2)").unwrap();
        let e = c.parse("r*r").unwrap();
        assert_eq!(e, c.parse("x^2+y^2+z^2").unwrap());
        assert!(c.define("x", "1").is_err());
    }

    #[test]
    fn grammar_roundtrip() {
        let c = BundleChart::new(&["r"], &["v1"]).unwrap();
        for text in ["2/r * v1_r", "v1_rr + 2/r*v1_r - 3/7", "(r^2+1)^(1/2) * v1", "r^(-3)"] {
            let e = c.parse(text).unwrap();
            assert_eq!(c.parse(&c.serialize(&e)).unwrap(), e, "{text}");
        }
        assert_eq!(c.show(&c.parse("v1_rr + 2/r * v1_r").unwrap()), "v1_rr + 2/r * v1_r");
    }

    #[test]
    fn non_constant_exponent_rejected() {
        assert_eq!(xyz().parse("x^y"), Err(Error::NonConstantExponent));
    }

    #[test]
    fn jet_vars_enumerate_sorted_indices() {
        let c = BundleChart::new(&["x", "y"], &["u"]).unwrap();
        // order 0: 1, order 1: 2, order 2: 3
        assert_eq!(c.jet_vars(2).len(), 6);
    }
}
