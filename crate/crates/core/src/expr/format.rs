use std::cmp::Reverse;
use std::fmt::{self, Write};

use num_rational::BigRational;
use num_traits::{One, Signed};

use super::{Atom, Exponent, Expr, Monomial, VarRef};

/// Maps coordinates to their names in some chart.
pub trait NameResolver {
    fn var_name(&self, v: &VarRef) -> String;
}

impl<F: Fn(&VarRef) -> String> NameResolver for F {
    fn var_name(&self, v: &VarRef) -> String {
        self(v)
    }
}

/// Readable rendering with minimal parentheses, e.g. `v1_rr + 2/r * v1_r`.
pub struct HumanDisplay<'a> {
    pub expr: &'a Expr,
    pub names: &'a dyn NameResolver,
}

/// Fully parenthesized rendering in the input grammar.
pub struct GrammarDisplay<'a> {
    pub expr: &'a Expr,
    pub names: &'a dyn NameResolver,
}

fn exponent_str(e: Exponent) -> String {
    if e.is_integer() {
        e.to_integer().to_string()
    } else {
        format!("({}/{})", e.numer(), e.denom())
    }
}

fn rational_str(c: &BigRational) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

fn display_order(e: &Expr) -> Vec<(&Monomial, &BigRational)> {
    let mut terms: Vec<_> = e.terms().collect();
    terms.sort_by_key(|(m, _)| (Reverse(m.max_order()), m.is_one()));
    terms
}

fn human_atom(a: &Atom, names: &dyn NameResolver) -> String {
    match a {
        Atom::Var(v) => names.var_name(v),
        Atom::Surd(s) => {
            if s.is_integer() {
                rational_str(s)
            } else {
                format!("({})", rational_str(s))
            }
        }
        Atom::Sum(s) => format!("({})", human(s, names)),
    }
}

fn human_factor(a: &Atom, e: Exponent, names: &dyn NameResolver) -> String {
    let base = human_atom(a, names);
    if e.is_one() {
        base
    } else {
        format!("{base}^{}", exponent_str(e))
    }
}

fn human(e: &Expr, names: &dyn NameResolver) -> String {
    if e.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (k, (m, c)) in display_order(e).into_iter().enumerate() {
        let negative = c.is_negative();
        if k == 0 {
            if negative {
                out.push('-');
            }
        } else {
            out.push_str(if negative { " - " } else { " + " });
        }
        let mut pos = Vec::new();
        let mut den = Vec::new();
        if !c.denom().is_one() {
            den.push(c.denom().to_string());
        }
        for (a, x) in m.factors() {
            if *x > Exponent::from_integer(0) {
                pos.push(human_factor(a, *x, names));
            } else {
                den.push(human_factor(a, -*x, names));
            }
        }
        let den_str = match den.len() {
            0 => None,
            1 => Some(den[0].clone()),
            _ => Some(format!("({})", den.join(" * "))),
        };
        let num = c.numer().abs();
        if !num.is_one() || pos.is_empty() {
            out.push_str(&num.to_string());
            if let Some(d) = den_str {
                let _ = write!(out, "/{d}");
            }
            for p in pos {
                let _ = write!(out, " * {p}");
            }
        } else {
            out.push_str(&pos.join(" * "));
            if let Some(d) = den_str {
                let _ = write!(out, "/{d}");
            }
        }
    }
    out
}

fn grammar(e: &Expr, names: &dyn NameResolver) -> String {
    if e.is_zero() {
        return "0".to_string();
    }
    let mut acc: Option<String> = None;
    for (m, c) in e.terms() {
        let mut parts = Vec::new();
        if !c.is_one() || m.is_one() {
            let s = rational_str(c);
            parts.push(if c.is_integer() && !c.is_negative() {
                s
            } else {
                format!("({s})")
            });
        }
        for (a, x) in m.factors() {
            let base = match a {
                Atom::Var(v) => names.var_name(v),
                Atom::Surd(s) => format!("({})", rational_str(s)),
                Atom::Sum(s) => grammar(s, names),
            };
            parts.push(if x.is_one() {
                base
            } else {
                format!("({base} ^ {})", grammar_exponent(*x))
            });
        }
        let mut t = parts[0].clone();
        for p in &parts[1..] {
            t = format!("({t} * {p})");
        }
        acc = Some(match acc {
            None => t,
            Some(prev) => format!("({prev} + {t})"),
        });
    }
    acc.unwrap()
}

fn grammar_exponent(e: Exponent) -> String {
    if e.is_integer() && e > Exponent::from_integer(0) {
        e.to_integer().to_string()
    } else if e.is_integer() {
        format!("({})", e.to_integer())
    } else {
        format!("({}/{})", e.numer(), e.denom())
    }
}

impl fmt::Display for HumanDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&human(self.expr, self.names))
    }
}

impl fmt::Display for GrammarDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&grammar(self.expr, self.names))
    }
}
