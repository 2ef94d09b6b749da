use crate::bracket::OmegaStructure;
use crate::error::Error;
use crate::expr::Expr;
use crate::fixtures::so3_setup as setup;
use crate::jet::{HorizontalForm, TotalVectorField};

use super::*;

#[test]
fn first_derivatives_in_adapted_coordinates() {
    let s = setup();
    let c = s.original();
    let a = s.chart().adapted();
    let got = s.chart().prolong_change_of_coords(&c.parse("u1_x").unwrap()).unwrap();
    assert_eq!(got, a.parse("v1_xh + xh/r * v1_r").unwrap());
    let got = s.chart().prolong_change_of_coords(&c.parse("u1_zz").unwrap()).unwrap();
    let restricted = s.chart().zero_orbit_jets(&got).unwrap();
    let z2 = "(r^2 - xh^2 - yh^2)";
    let expect = a.parse(&format!("{z2}/r^2 * v1_rr + (r^2 - {z2})/r^3 * v1_r")).unwrap();
    assert!(a.equal(&restricted, &expect).unwrap().equal);
    assert_eq!(
        s.chart().prolong_change_of_coords(&Expr::integer(7)).unwrap(),
        Expr::integer(7)
    );
}

#[test]
fn laplacian_reduces_to_radial_form() {
    let s = setup();
    let lap = s.original().parse("u1_xx+u1_yy+u1_zz").unwrap();
    let got = s.rho(&lap).unwrap();
    assert_eq!(got, s.reduced().parse("v1_rr + 2/r*v1_r").unwrap());
}

#[test]
fn simple_invariants() {
    let s = setup();
    let c = s.original();
    assert_eq!(
        s.rho(&c.parse("x^2+y^2+z^2").unwrap()).unwrap(),
        s.reduced().parse("r^2").unwrap()
    );
    assert_eq!(
        s.rho(&c.parse("u1*u2").unwrap()).unwrap(),
        s.reduced().parse("v1*v2").unwrap()
    );
    let mixed = s.chart().adapted().parse("v1_xhr").unwrap();
    assert!(s.chart().restrict_to_invariant(&mixed).unwrap().is_zero());
}

#[test]
fn non_invariant_inputs_are_rejected() {
    let s = setup();
    let ux = s.original().parse("u1_x").unwrap();
    assert!(matches!(s.rho(&ux), Err(Error::NotInvariant { generator: 1, .. })));
    assert!(matches!(
        s.rho_unchecked(&ux),
        Err(Error::InvarianceViolation { ref coordinate, .. }) if coordinate == "xh"
    ));
}

#[test]
fn volume_reduces_to_r_squared_dr() {
    let s = setup();
    assert_eq!(*s.reduced_volume(), s.reduced().parse("r^2").unwrap());
    let nu_bar = s.rho_chain(s.volume()).unwrap();
    assert_eq!(nu_bar, HorizontalForm::top(1, s.reduced().parse("r^2").unwrap()));
}

#[test]
fn non_invariant_forms_are_rejected() {
    let s = setup();
    // dx∧dy contracts to r z, which depends on the orbit coordinates.
    let f = HorizontalForm::monomial(3, &[0, 1], Expr::one()).unwrap();
    assert!(matches!(s.rho_chain(&f), Err(Error::InvarianceViolation { .. })));
}

#[test]
fn basicness_is_enforced() {
    let s = setup();
    let a = s.chart().adapted();
    let mut f = HorizontalForm::zero(3, 1);
    f.add_term(vec![0], a.parse("v1").unwrap()).unwrap();
    f.add_term(vec![2], a.parse("r").unwrap()).unwrap();
    assert!(matches!(
        s.restrict_form(&f),
        Err(Error::BasicnessViolation { ref component, .. }) if component == "dxh"
    ));
    // A dxh component that vanishes on invariant jets is fine.
    let mut g = HorizontalForm::zero(3, 1);
    g.add_term(vec![0], a.parse("v1_xh").unwrap()).unwrap();
    g.add_term(vec![2], a.parse("r").unwrap()).unwrap();
    let got = s.restrict_form(&g).unwrap();
    assert_eq!(
        got,
        HorizontalForm::monomial(1, &[0], s.reduced().parse("r").unwrap()).unwrap()
    );
}

#[test]
fn top_form_density() {
    let s = setup();
    let p = s.original().parse("u1*(u2_xx+u2_yy+u2_zz)").unwrap();
    let got = s.rho_chain_density(&p).unwrap();
    let expect = s.reduced().parse("v1*(v2_rr + 2/r*v2_r)*r^2").unwrap();
    assert_eq!(got, expect);
    assert!(s.verify_factorization(&p).unwrap());
}

#[test]
fn source_forms() {
    let s = setup();
    let c = s.original();
    let p = c.parse("u1*(u2_xx+u2_yy+u2_zz)").unwrap();
    let e = crate::jet::euler_lagrange(c, &p).unwrap();
    let got = s.rho_chain_source(&e).unwrap();
    let red = s.reduced();
    assert_eq!(got.components[0], red.parse("v2_rr + 2/r*v2_r").unwrap());
    assert_eq!(got.components[1], red.parse("v1_rr + 2/r*v1_r").unwrap());
    assert_eq!(got.volume, red.parse("r^2").unwrap());
    assert!(s.verify_el_commute(&p).unwrap());
    let zero = crate::jet::SourceForm::new(vec![Expr::zero(), Expr::zero()]);
    assert!(s.rho_chain_source(&zero).unwrap().is_zero());
}

#[test]
fn reduced_bracket_two_paths() {
    let s = setup();
    let c = s.original();
    let omega = OmegaStructure::new(
        c,
        vec![
            vec![c.parse("0").unwrap(), c.parse("r").unwrap()],
            vec![c.parse("-r").unwrap(), c.parse("0").unwrap()],
        ],
    )
    .unwrap();
    let p = Representative::new(c.parse("u1*(u2_xx+u2_yy+u2_zz)").unwrap());
    let q = Representative::new(c.parse("u1*u2").unwrap());
    let got = s.l2_hat(&p, &q, &omega).unwrap();
    let expect = s
        .reduced()
        .parse("(r*v2_rr + 2*v2_r)*v1 - (r*v1_rr + 2*v1_r)*v2")
        .unwrap();
    assert_eq!(got.coefficient, expect);
    assert_eq!(got.agree, Some(true));

    let wrong = Representative::with_reduced(c.parse("u1*u2").unwrap(), s.reduced().parse("v1").unwrap());
    assert!(matches!(
        s.l2_hat(&p, &wrong, &omega),
        Err(Error::RepresentativeMismatch(_))
    ));

    let same = s.l2_hat(&q, &q, &omega).unwrap();
    assert!(same.coefficient.is_zero());
}

#[test]
fn well_definedness() {
    let s = setup();
    let c = s.original();
    let omega = OmegaStructure::new(
        c,
        vec![
            vec![c.parse("0").unwrap(), c.parse("r").unwrap()],
            vec![c.parse("-r").unwrap(), c.parse("0").unwrap()],
        ],
    )
    .unwrap();
    let alpha = c.parse("u1*(u2_xx+u2_yy+u2_zz)").unwrap();
    let beta = c.parse("u1*u2").unwrap();
    assert!(s.verify_l2hat_well_defined(&alpha, &alpha, &beta, &omega).unwrap());
    // ∇u2 · (x × ∇u1) is invariant, a divergence, and reduces to zero.
    let kappa = c
        .parse("u2_x*(y*u1_z - z*u1_y) + u2_y*(z*u1_x - x*u1_z) + u2_z*(x*u1_y - y*u1_x)")
        .unwrap();
    let alpha2 = alpha.add_ref(&kappa);
    assert!(s.verify_l2hat_well_defined(&alpha, &alpha2, &beta, &omega).unwrap());
    let bad = alpha.add_ref(&c.parse("u1_x").unwrap());
    assert!(matches!(
        s.verify_l2hat_well_defined(&alpha, &bad, &beta, &omega),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn cochain_identity_on_interior_products() {
    let s = setup();
    let c = s.original();
    let nu = s.volume().clone();
    for w in [
        ["u1*x", "u1*y", "u1*z"],
        ["u1*u2_x", "u1*u2_y", "u1*u2_z"],
        ["u2*(y*u1_z - z*u1_y)", "u2*(z*u1_x - x*u1_z)", "u2*(x*u1_y - y*u1_x)"],
    ] {
        let field = TotalVectorField(w.iter().map(|t| c.parse(t).unwrap()).collect());
        let alpha = crate::jet::contract(&nu, &[field]).unwrap();
        assert!(s.verify_cochain(&alpha).unwrap(), "{w:?}");
    }
    assert!(s.verify_cochain(&HorizontalForm::zero(3, 2)).unwrap());
    let low = HorizontalForm::monomial(3, &[0], Expr::one()).unwrap();
    assert!(matches!(s.verify_cochain(&low), Err(Error::Degree(_))));
}

#[test]
fn round_trip() {
    let s = setup();
    let e = s.original().parse("u1_xy*z + u2_z^2/(x^2+1) + u1").unwrap();
    assert!(s.verify_round_trip(&e).unwrap());
}
