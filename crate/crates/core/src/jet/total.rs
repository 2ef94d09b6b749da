use crate::error::Result;
use crate::expr::{Expr, MultiIndex, VarRef};

use super::chart::BundleChart;
use super::forms::SourceForm;

/// `D_i P = ∂P/∂x^i + Σ u^a_{iJ} ∂P/∂u^a_J`, summed over the jet
/// variables that occur in `P`.
pub fn total_derivative(chart: &BundleChart, p: &Expr, i: usize) -> Result<Expr> {
    let mut parts = vec![p.partial(&VarRef::base(i))];
    for v in p.vars() {
        if let VarRef::Jet { fiber, index } = &v {
            let raised = index.with(i);
            chart.check_order(raised.order())?;
            let dp = p.partial(&v);
            if dp.is_zero() {
                continue;
            }
            parts.push(
                Expr::var(VarRef::Jet {
                    fiber: *fiber,
                    index: raised,
                })
                .mul_ref(&dp),
            );
        }
    }
    Ok(Expr::sum(parts.iter()))
}

/// `D_I P` for a multi-index, applied one index at a time.
pub fn total_derivative_multi(chart: &BundleChart, p: &Expr, index: &MultiIndex) -> Result<Expr> {
    let mut cur = p.clone();
    for &i in index.indices() {
        if cur.is_zero() {
            break;
        }
        cur = total_derivative(chart, &cur, i)?;
    }
    Ok(cur)
}

/// `E_a(P) = Σ_I (-D)_I (∂P/∂u^a_I)` over the multi-indices present in `P`.
pub fn euler_lagrange(chart: &BundleChart, p: &Expr) -> Result<SourceForm> {
    let mut components = vec![Vec::new(); chart.m()];
    for v in p.vars() {
        if let VarRef::Jet { fiber, index } = &v {
            let mut term = total_derivative_multi(chart, &p.partial(&v), index)?;
            if index.order() % 2 == 1 {
                term = term.neg_ref();
            }
            components[*fiber].push(term);
        }
    }
    Ok(SourceForm::new(
        components.iter().map(|c| Expr::sum(c.iter())).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart() -> BundleChart {
        BundleChart::new(&["x", "y", "z"], &["u1", "u2"]).unwrap()
    }

    #[test]
    fn total_derivative_examples() {
        let c = chart();
        let p = |s: &str| c.parse(s).unwrap();
        assert_eq!(total_derivative(&c, &p("u1"), 0).unwrap(), p("u1_x"));
        assert_eq!(total_derivative(&c, &p("x*u1_y"), 0).unwrap(), p("u1_y + x*u1_xy"));
        assert_eq!(total_derivative(&c, &p("u1_x^2"), 0).unwrap(), p("2*u1_x*u1_xx"));
    }

    #[test]
    fn order_cap_reported() {
        let c = chart().with_order_cap(2);
        let e = c.parse("u1_xy").unwrap();
        assert!(matches!(
            total_derivative(&c, &e, 2),
            Err(crate::Error::OrderCapExceeded { needed: 3, cap: 2 })
        ));
    }

    #[test]
    fn euler_lagrange_examples() {
        let line = BundleChart::new(&["x"], &["u1"]).unwrap();
        let e = euler_lagrange(&line, &line.parse("u1_x^2").unwrap()).unwrap();
        assert_eq!(e.components[0], line.parse("-2*u1_xx").unwrap());

        let c = chart();
        let p = |s: &str| c.parse(s).unwrap();
        let e = euler_lagrange(&c, &p("u1*(u2_xx+u2_yy+u2_zz)")).unwrap();
        assert_eq!(e.components[0], p("u2_xx+u2_yy+u2_zz"));
        assert_eq!(e.components[1], p("u1_xx+u1_yy+u1_zz"));
    }

    #[test]
    fn divergence_is_annihilated() {
        let c = chart();
        let f = c.parse("x*u1_y*u2 + u1_xy^2*z + u2_z/(1+x^2)").unwrap();
        let d = total_derivative(&c, &f, 0).unwrap();
        assert!(euler_lagrange(&c, &d).unwrap().is_zero());
    }

    #[test]
    fn mixed_indices_counted_once() {
        let c = BundleChart::new(&["x", "y"], &["u"]).unwrap();
        // E(u_xy^2) = 2 u_xxyy, counted once for the sorted index {x,y}.
        let e = euler_lagrange(&c, &c.parse("u_xy^2").unwrap()).unwrap();
        assert_eq!(e.components[0], c.parse("2*u_xxyy").unwrap());
    }
}
