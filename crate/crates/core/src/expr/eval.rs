use std::collections::BTreeMap;

use num_traits::ToPrimitive;

use super::{Atom, Exponent, Expr, VarRef};
use crate::error::{Error, Result};

/// Numeric values for coordinates.
pub type Point = BTreeMap<VarRef, f64>;

/// Evaluation failure at a sample point, kept apart from [`Error`] so the
/// sampling oracle can reject points cheaply.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum EvalFault {
    Unbound(VarRef),
    DivisionByZero,
    NegativeRadicand,
    NonFinite,
    /// A denominator or radicand came within the guard margin of zero.
    NearSingular,
}

impl EvalFault {
    pub(crate) fn into_error(self, name: impl Fn(&VarRef) -> String) -> Error {
        match self {
            EvalFault::Unbound(v) => Error::UnboundVariable(name(&v)),
            EvalFault::DivisionByZero | EvalFault::NearSingular => Error::DivisionByZero,
            EvalFault::NegativeRadicand => Error::NegativeRadicand,
            EvalFault::NonFinite => Error::NonFinite,
        }
    }
}

fn exp_f64(e: Exponent) -> f64 {
    *e.numer() as f64 / *e.denom() as f64
}

/// `base^e` for real `base` under the principal real branch.
pub(crate) fn real_pow(base: f64, e: Exponent, margin: f64) -> std::result::Result<f64, EvalFault> {
    let fractional = !e.is_integer();
    let negative = e < Exponent::from_integer(0);
    if (fractional || negative) && base.abs() < margin {
        return Err(EvalFault::NearSingular);
    }
    if base == 0.0 {
        return if negative {
            Err(EvalFault::DivisionByZero)
        } else {
            Ok(0.0)
        };
    }
    let v = if e.is_integer() {
        base.powi(e.to_integer() as i32)
    } else if base < 0.0 {
        if e.denom() % 2 == 0 {
            return Err(EvalFault::NegativeRadicand);
        }
        let mag = (-base).powf(exp_f64(e));
        if e.numer() % 2 == 0 {
            mag
        } else {
            -mag
        }
    } else {
        base.powf(exp_f64(e))
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalFault::NonFinite)
    }
}

impl Expr {
    pub(crate) fn eval_guarded(
        &self,
        lookup: &dyn Fn(&VarRef) -> Option<f64>,
        margin: f64,
    ) -> std::result::Result<(f64, f64), EvalFault> {
        let mut value = 0.0;
        let mut scale = 0.0;
        for (m, c) in self.terms() {
            let mut t = c.to_f64().ok_or(EvalFault::NonFinite)?;
            for (a, e) in m.factors() {
                let base = match a {
                    Atom::Var(v) => lookup(v).ok_or_else(|| EvalFault::Unbound(v.clone()))?,
                    Atom::Surd(s) => s.to_f64().ok_or(EvalFault::NonFinite)?,
                    Atom::Sum(s) => s.eval_guarded(lookup, margin)?.0,
                };
                t *= real_pow(base, *e, margin)?;
            }
            value += t;
            scale += t.abs();
        }
        if !value.is_finite() {
            return Err(EvalFault::NonFinite);
        }
        Ok((value, scale))
    }

    /// Floating-point value at a point. Every coordinate must be bound.
    pub fn evaluate(&self, point: &Point) -> Result<f64> {
        self.eval_guarded(&|v| point.get(v).copied(), 0.0)
            .map(|(v, _)| v)
            .map_err(|f| f.into_error(|v| format!("{v:?}")))
    }

    /// Like [`Expr::evaluate`] with a lookup function.
    pub fn evaluate_with(&self, lookup: &dyn Fn(&VarRef) -> Option<f64>) -> Result<f64> {
        self.eval_guarded(lookup, 0.0)
            .map(|(v, _)| v)
            .map_err(|f| f.into_error(|v| format!("{v:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(i: usize) -> Expr {
        Expr::var(VarRef::base(i))
    }

    #[test]
    fn polynomial_value() {
        let ux = VarRef::jet(0, vec![0]);
        let e = &(&b(0) * &b(0)) + &Expr::var(ux.clone());
        let mut p = Point::new();
        p.insert(VarRef::base(0), 2.0);
        p.insert(ux, 3.0);
        assert_eq!(e.evaluate(&p).unwrap(), 7.0);
    }

    #[test]
    fn singular_point_is_an_error() {
        let e = b(0).powi(-2).unwrap();
        let mut p = Point::new();
        p.insert(VarRef::base(0), 0.0);
        assert_eq!(e.evaluate(&p), Err(Error::DivisionByZero));
    }

    #[test]
    fn three_four_five() {
        let s = &(&(&b(0) * &b(0)) + &(&b(1) * &b(1))) + &(&b(2) * &b(2));
        let r = s.pow(Exponent::new(1, 2)).unwrap();
        let p: Point = [(VarRef::base(0), 3.0), (VarRef::base(1), 0.0), (VarRef::base(2), 4.0)]
            .into_iter()
            .collect();
        assert!((r.evaluate(&p).unwrap() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn unbound_and_radicand_errors() {
        let e = b(0).pow(Exponent::new(1, 2)).unwrap();
        assert!(matches!(e.evaluate(&Point::new()), Err(Error::UnboundVariable(_))));
        let p: Point = [(VarRef::base(0), -1.0)].into_iter().collect();
        assert_eq!(e.evaluate(&p), Err(Error::NegativeRadicand));
    }
}
