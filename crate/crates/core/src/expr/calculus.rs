use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{Atom, Exponent, Expr, Monomial, VarRef};
use crate::error::Result;

impl Expr {
    /// Every coordinate occurring in the expression, including inside sum
    /// atoms.
    pub fn vars(&self) -> BTreeSet<VarRef> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<VarRef>) {
        for m in self.terms.keys() {
            for (a, _) in &m.0 {
                match a {
                    Atom::Var(v) => {
                        out.insert(v.clone());
                    }
                    Atom::Surd(_) => {}
                    Atom::Sum(s) => s.collect_vars(out),
                }
            }
        }
    }

    pub fn depends_on(&self, v: &VarRef) -> bool {
        self.terms.keys().any(|m| monomial_depends_on(m, v))
    }

    /// Partial derivative with respect to one coordinate, all other base and
    /// jet coordinates held fixed.
    pub fn partial(&self, v: &VarRef) -> Expr {
        let mut parts = Vec::new();
        for (m, c) in self.terms.iter() {
            for (k, (a, e)) in m.0.iter().enumerate() {
                let inner = match a {
                    Atom::Var(w) if w == v => None,
                    Atom::Var(_) | Atom::Surd(_) => continue,
                    Atom::Sum(s) => {
                        if !s.depends_on(v) {
                            continue;
                        }
                        Some(s.partial(v))
                    }
                };
                let mut factors = m.0.clone();
                let lowered = *e - Exponent::one();
                if lowered.is_zero() {
                    factors.remove(k);
                } else {
                    factors[k].1 = lowered;
                }
                let coeff = c * BigRational::new((*e.numer()).into(), (*e.denom()).into());
                // Lowering an exponent never pushes a sum atom to >= 1, so
                // the monomial stays canonical.
                let t = Expr::term(Monomial(factors), coeff);
                parts.push(match inner {
                    None => t,
                    Some(d) => t.mul_ref(&d),
                });
            }
        }
        Expr::sum(parts.iter())
    }

    /// Simultaneous substitution of coordinates, followed by normalization.
    pub fn substitute(&self, bindings: &BTreeMap<VarRef, Expr>) -> Result<Expr> {
        if bindings.is_empty() {
            return Ok(self.clone());
        }
        let mut out = Vec::with_capacity(self.terms.len());
        for (m, c) in self.terms.iter() {
            if !bindings.keys().any(|v| monomial_depends_on(m, v)) {
                out.push(Expr::term(m.clone(), c.clone()));
                continue;
            }
            let mut t = Expr::constant(c.clone());
            let mut untouched = Vec::new();
            for (a, e) in &m.0 {
                let replaced = match a {
                    Atom::Var(v) => bindings.get(v).cloned(),
                    Atom::Sum(s) => {
                        if bindings.keys().any(|v| s.depends_on(v)) {
                            Some(s.substitute(bindings)?)
                        } else {
                            None
                        }
                    }
                    Atom::Surd(_) => None,
                };
                match replaced {
                    Some(r) => t = t.mul_ref(&r.pow(*e)?),
                    None => untouched.push((a.clone(), *e)),
                }
            }
            if !untouched.is_empty() {
                t = t.mul_ref(&Expr::term(Monomial(untouched), BigRational::one()));
            }
            out.push(t);
        }
        Ok(Expr::sum(out.iter()))
    }

    /// Substitute a single coordinate.
    pub fn substitute_one(&self, v: &VarRef, with: &Expr) -> Result<Expr> {
        let mut b = BTreeMap::new();
        b.insert(v.clone(), with.clone());
        self.substitute(&b)
    }

    /// Apply a relabeling of coordinates. Every coordinate must be mapped.
    pub fn rename(&self, f: &dyn Fn(&VarRef) -> VarRef) -> Result<Expr> {
        let mut out = Vec::with_capacity(self.terms.len());
        for (m, c) in self.terms.iter() {
            let mut t = Expr::constant(c.clone());
            for (a, e) in &m.0 {
                let base = match a {
                    Atom::Var(v) => Expr::var(f(v)),
                    Atom::Surd(s) => Expr::constant(s.clone()),
                    Atom::Sum(s) => s.rename(f)?,
                };
                t = t.mul_ref(&base.pow(*e)?);
            }
            out.push(t);
        }
        Ok(Expr::sum(out.iter()))
    }
}

fn monomial_depends_on(m: &Monomial, v: &VarRef) -> bool {
    m.0.iter().any(|(a, _)| match a {
        Atom::Var(w) => w == v,
        Atom::Surd(_) => false,
        Atom::Sum(s) => s.depends_on(v),
    })
}
