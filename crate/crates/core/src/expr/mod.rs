//! Exact symbolic expressions over base and jet coordinates.
//!
//! An [`Expr`] is kept in a canonical expanded form: a sum of terms, each a
//! nonzero rational coefficient times a [`Monomial`]. A monomial is a sorted
//! product of [`Atom`]s raised to nonzero rational exponents. Atoms are
//! coordinates, positive rational surds such as `2^(1/2)`, or sums that could
//! not be expanded, e.g. `(x^2 + y^2)^(-1)` or `(x^2 + y^2)^(1/2)`.
//!
//! The invariants maintained by every constructor:
//!
//! - like terms are combined and zero coefficients dropped;
//! - a sum atom never carries an exponent `>= 1` (the integer part is
//!   multiplied out), and its inner expression has no common monomial factor
//!   and a normalized leading coefficient;
//! - a surd atom carries an exponent in `(0, 1)`.
//!
//! Powers of products distribute, `(x^2)^(1/2) = x`. Variables are therefore
//! treated as positive whenever a fractional power is taken; charts declare
//! sampling regions that respect this.

mod calculus;
mod equal;
mod eval;
mod format;
mod parse;
mod var;

pub use equal::{equal, is_zero, sample_base_points, OracleConfig, SampleRegion, Verdict, VerdictMethod};
pub use eval::Point;
pub use format::{GrammarDisplay, HumanDisplay, NameResolver};
pub use parse::{parse_ast, Ast, BinOp};
pub use var::{MultiIndex, VarRef};

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Exponent = Rational64;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Var(VarRef),
    /// A positive rational constant that is not a perfect power.
    Surd(BigRational),
    Sum(Arc<Expr>),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<(Atom, Exponent)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[(Atom, Exponent)] {
        &self.0
    }

    fn single(atom: Atom, e: Exponent) -> Self {
        Monomial(vec![(atom, e)])
    }

    fn merge(&self, other: &Monomial) -> Vec<(Atom, Exponent)> {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let e = a[i].1 + b[j].1;
                    if !e.is_zero() {
                        out.push((a[i].0.clone(), e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        out
    }

    fn exponent_of(&self, atom: &Atom) -> Exponent {
        self.0
            .binary_search_by(|(a, _)| a.cmp(atom))
            .map(|k| self.0[k].1)
            .unwrap_or_else(|_| Exponent::zero())
    }

    /// Largest jet order among the coordinates in this monomial, looking
    /// inside sum atoms.
    pub fn max_order(&self) -> usize {
        self.0
            .iter()
            .map(|(a, _)| match a {
                Atom::Var(v) => v.order(),
                Atom::Surd(_) => 0,
                Atom::Sum(s) => s.max_order(),
            })
            .max()
            .unwrap_or(0)
    }
}

/// Canonical symbolic expression. Cheap to clone.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr {
    terms: Arc<BTreeMap<Monomial, BigRational>>,
}

#[derive(Default)]
struct Accumulator(BTreeMap<Monomial, BigRational>);

impl Accumulator {
    fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.0.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn add_expr_scaled(&mut self, e: &Expr, s: &BigRational) {
        for (m, c) in e.terms.iter() {
            self.add_term(m.clone(), c * s);
        }
    }

    fn finish(self) -> Expr {
        Expr {
            terms: Arc::new(self.0),
        }
    }
}

pub(crate) fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn floor_exp(e: Exponent) -> i64 {
    e.floor().to_integer()
}

fn checked_exp_mul(a: Exponent, b: Exponent) -> Result<Exponent> {
    use num_traits::CheckedMul;
    a.checked_mul(&b).ok_or(Error::Overflow)
}

impl Expr {
    pub fn zero() -> Self {
        Expr::default()
    }

    pub fn one() -> Self {
        Expr::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        let mut acc = Accumulator::default();
        acc.add_term(Monomial::one(), c);
        acc.finish()
    }

    pub fn integer(n: i64) -> Self {
        Expr::constant(rat(n))
    }

    pub fn rational(n: i64, d: i64) -> Self {
        Expr::constant(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn var(v: VarRef) -> Self {
        Expr::term(Monomial::single(Atom::Var(v), Exponent::one()), BigRational::one())
    }

    fn term(m: Monomial, c: BigRational) -> Self {
        let mut acc = Accumulator::default();
        acc.add_term(m, c);
        acc.finish()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    /// The value of a constant expression.
    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn max_order(&self) -> usize {
        self.terms.keys().map(Monomial::max_order).max().unwrap_or(0)
    }

    pub fn scale(&self, s: &BigRational) -> Expr {
        if s.is_zero() {
            return Expr::zero();
        }
        if s.is_one() {
            return self.clone();
        }
        let mut acc = Accumulator::default();
        acc.add_expr_scaled(self, s);
        acc.finish()
    }

    pub fn add_ref(&self, other: &Expr) -> Expr {
        if other.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return other.clone();
        }
        let (big, small) = if self.terms.len() >= other.terms.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut acc = Accumulator((*big.terms).clone());
        acc.add_expr_scaled(small, &BigRational::one());
        acc.finish()
    }

    pub fn sub_ref(&self, other: &Expr) -> Expr {
        let mut acc = Accumulator((*self.terms).clone());
        acc.add_expr_scaled(other, &-BigRational::one());
        acc.finish()
    }

    pub fn neg_ref(&self) -> Expr {
        self.scale(&-BigRational::one())
    }

    pub fn mul_ref(&self, other: &Expr) -> Expr {
        if let Some(c) = other.as_constant() {
            return self.scale(&c);
        }
        if let Some(c) = self.as_constant() {
            return other.scale(&c);
        }
        let mut acc = Accumulator::default();
        for (ma, ca) in self.terms.iter() {
            for (mb, cb) in other.terms.iter() {
                let c = ca * cb;
                match reduce(ma.merge(mb), c) {
                    Reduced::Term(m, c) => acc.add_term(m, c),
                    Reduced::Expr(e) => acc.add_expr_scaled(&e, &BigRational::one()),
                }
            }
        }
        acc.finish()
    }

    /// Multiply every term by a monomial, merging exponents atom by atom.
    pub(crate) fn mul_monomial(&self, m: &Monomial) -> Expr {
        let mut acc = Accumulator::default();
        for (mt, c) in self.terms.iter() {
            match reduce(mt.merge(m), c.clone()) {
                Reduced::Term(m, c) => acc.add_term(m, c),
                Reduced::Expr(e) => acc.add_expr_scaled(&e, &BigRational::one()),
            }
        }
        acc.finish()
    }

    /// Sum of a sequence of expressions.
    pub fn sum<'a>(items: impl IntoIterator<Item = &'a Expr>) -> Expr {
        let mut acc = Accumulator::default();
        for e in items {
            acc.add_expr_scaled(e, &BigRational::one());
        }
        acc.finish()
    }

    pub fn product<'a>(items: impl IntoIterator<Item = &'a Expr>) -> Expr {
        items.into_iter().fold(Expr::one(), |acc, e| acc.mul_ref(e))
    }

    pub fn div(&self, other: &Expr) -> Result<Expr> {
        if let Some(c) = other.as_constant() {
            if c.is_zero() {
                return Err(Error::DivisionByZero);
            }
            return Ok(self.scale(&c.recip()));
        }
        Ok(self.mul_ref(&other.pow(-Exponent::one())?))
    }

    pub fn recip(&self) -> Result<Expr> {
        self.pow(-Exponent::one())
    }

    pub fn powi(&self, n: i64) -> Result<Expr> {
        self.pow(Exponent::from_integer(n))
    }

    /// `self^p` for a rational exponent `p`.
    pub fn pow(&self, p: Exponent) -> Result<Expr> {
        if p.is_zero() {
            return Ok(Expr::one());
        }
        if self.is_zero() {
            return if p > Exponent::zero() {
                Ok(Expr::zero())
            } else {
                Err(Error::DivisionByZero)
            };
        }
        if p.is_one() {
            return Ok(self.clone());
        }
        if self.terms.len() == 1 {
            let (m, c) = self.terms.iter().next().unwrap();
            return pow_single(m, c, p);
        }
        if p.is_integer() && p > Exponent::zero() {
            return Ok(self.pow_positive(p.to_integer() as u64));
        }
        self.pow_sum(p, 0)
    }

    fn pow_positive(&self, mut n: u64) -> Expr {
        let mut base = self.clone();
        let mut out = Expr::one();
        while n > 0 {
            if n & 1 == 1 {
                out = out.mul_ref(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul_ref(&base);
            }
        }
        out
    }

    /// Power of a multi-term sum with a negative or fractional exponent:
    /// pull out the common monomial and the leading coefficient, then wrap
    /// what is left in a sum atom.
    fn pow_sum(&self, p: Exponent, depth: usize) -> Result<Expr> {
        if self.terms.len() == 1 {
            return self.pow(p);
        }
        let common = self.common_monomial();
        if !common.is_one() && depth < 4 {
            let inv = Monomial(common.0.iter().map(|(a, e)| (a.clone(), -e)).collect());
            let rest = self.mul_ref(&reduce(inv.0, BigRational::one()).into_expr());
            let g = pow_single(&common, &BigRational::one(), p)?;
            return Ok(g.mul_ref(&rest.pow_sum(p, depth + 1)?));
        }
        let lead = self.terms.values().next().unwrap().clone();
        let content = if p.is_integer() { lead } else { lead.abs() };
        if !content.is_one() {
            let inner = self.scale(&content.recip());
            return Ok(pow_const(&content, p)?.mul_ref(&inner.pow_sum(p, depth)?));
        }
        let atom = Atom::Sum(Arc::new(self.clone()));
        Ok(reduce(vec![(atom, p)], BigRational::one()).into_expr())
    }

    /// Atoms shared by every term, each at its minimum exponent (absent
    /// atoms count as exponent zero).
    fn common_monomial(&self) -> Monomial {
        let mut iter = self.terms.keys();
        let first = match iter.next() {
            Some(m) => m,
            None => return Monomial::one(),
        };
        let mut mins: BTreeMap<Atom, Exponent> = first.0.iter().map(|(a, e)| (a.clone(), *e)).collect();
        for m in iter {
            for (a, e) in &m.0 {
                let cur = mins.entry(a.clone()).or_insert_with(Exponent::zero);
                if *e < *cur {
                    *cur = *e;
                }
            }
            for (a, cur) in mins.iter_mut() {
                let e = m.exponent_of(a);
                if e < *cur {
                    *cur = e;
                }
            }
        }
        Monomial(mins.into_iter().filter(|(_, e)| !e.is_zero()).collect())
    }

    /// Expression for `monomial^p` with unit coefficient.
    pub fn monomial_pow(m: &Monomial, p: Exponent) -> Result<Expr> {
        pow_single(m, &BigRational::one(), p)
    }

    /// Rebuild an expression from its terms through the public
    /// constructors. Normalization is idempotent, so this is the identity on
    /// every value produced by this module.
    pub fn normalize(&self) -> Result<Expr> {
        let mut acc = Expr::zero();
        for (m, c) in self.terms.iter() {
            let mut t = Expr::constant(c.clone());
            for (a, e) in &m.0 {
                let base = match a {
                    Atom::Var(v) => Expr::var(v.clone()),
                    Atom::Surd(s) => Expr::constant(s.clone()),
                    Atom::Sum(s) => s.normalize()?,
                };
                t = t.mul_ref(&base.pow(*e)?);
            }
            acc = acc.add_ref(&t);
        }
        Ok(acc)
    }
}

enum Reduced {
    Term(Monomial, BigRational),
    Expr(Expr),
}

impl Reduced {
    fn into_expr(self) -> Expr {
        match self {
            Reduced::Term(m, c) => Expr::term(m, c),
            Reduced::Expr(e) => e,
        }
    }
}

/// Restore monomial invariants after exponents changed: fold integer parts
/// of surd exponents into the coefficient and multiply out integer parts of
/// sum-atom exponents.
fn reduce(factors: Vec<(Atom, Exponent)>, mut coeff: BigRational) -> Reduced {
    let mut kept = Vec::with_capacity(factors.len());
    let mut expand: Vec<(Arc<Expr>, u64)> = Vec::new();
    for (atom, e) in factors {
        match atom {
            Atom::Surd(ref s) => {
                let k = floor_exp(e);
                if k != 0 {
                    coeff *= Pow::pow(s, k as i32);
                }
                let f = e - Exponent::from_integer(k);
                if !f.is_zero() {
                    kept.push((atom, f));
                }
            }
            Atom::Sum(ref s) if e >= Exponent::one() => {
                let k = floor_exp(e);
                let f = e - Exponent::from_integer(k);
                expand.push((s.clone(), k as u64));
                if !f.is_zero() {
                    kept.push((atom, f));
                }
            }
            _ => kept.push((atom, e)),
        }
    }
    if expand.is_empty() {
        return Reduced::Term(Monomial(kept), coeff);
    }
    let mut out = Expr::term(Monomial(kept), coeff);
    for (s, k) in expand {
        out = out.mul_ref(&s.pow_positive(k));
    }
    Reduced::Expr(out)
}

fn pow_single(m: &Monomial, c: &BigRational, p: Exponent) -> Result<Expr> {
    let coeff = pow_const(c, p)?;
    let mut factors = Vec::with_capacity(m.0.len());
    for (a, e) in &m.0 {
        factors.push((a.clone(), checked_exp_mul(*e, p)?));
    }
    Ok(coeff.mul_ref(&reduce(factors, BigRational::one()).into_expr()))
}

fn exact_root(n: &BigInt, q: u32) -> Option<BigInt> {
    let r = n.nth_root(q);
    (Pow::pow(&r, q) == *n).then_some(r)
}

/// `c^p` for a rational constant, exact where possible and a surd atom
/// otherwise.
fn pow_const(c: &BigRational, p: Exponent) -> Result<Expr> {
    if c.is_zero() {
        return if p > Exponent::zero() {
            Ok(Expr::zero())
        } else {
            Err(Error::DivisionByZero)
        };
    }
    if p.is_integer() {
        let k = p.to_integer().to_i32().ok_or(Error::Overflow)?;
        return Ok(Expr::constant(Pow::pow(c, k)));
    }
    let k = *p.numer();
    let q = *p.denom();
    let q32 = u32::try_from(q).map_err(|_| Error::Overflow)?;
    let sign = if c.is_negative() {
        if q % 2 == 0 {
            return Err(Error::NegativeRadicand);
        }
        if k % 2 == 0 {
            1
        } else {
            -1
        }
    } else {
        1
    };
    let a = c.abs();
    if let (Some(rn), Some(rd)) = (exact_root(a.numer(), q32), exact_root(a.denom(), q32)) {
        let root = BigRational::new(rn, rd);
        let k32 = i32::try_from(k).map_err(|_| Error::Overflow)?;
        return Ok(Expr::constant(Pow::pow(&root, k32) * rat(sign)));
    }
    let factors = vec![(Atom::Surd(a), p)];
    Ok(reduce(factors, rat(sign)).into_expr())
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $inner:ident) => {
        impl $tr<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                self.$inner(rhs)
            }
        }
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                self.$inner(&rhs)
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                self.$inner(rhs)
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                self.$inner(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, add_ref);
forward_binop!(Sub, sub, sub_ref);
forward_binop!(Mul, mul, mul_ref);

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        self.neg_ref()
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        self.neg_ref()
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::integer(n)
    }
}

impl From<VarRef> for Expr {
    fn from(v: VarRef) -> Self {
        Expr::var(v)
    }
}
