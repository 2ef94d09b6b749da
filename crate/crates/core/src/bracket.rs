//! The bracket `l̃₂(P, Q) = ω^{ab} E_b(Q) E_a(P)` on local functions, its
//! Jacobiator, and covariance of `ω` under fiber-linear automorphisms.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::{Expr, VarRef};
use crate::jet::{determinant, euler_lagrange, jacobian, BundleChart, JetMap, SourceForm};

/// Skew matrix `ω^{ab}` of local functions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OmegaStructure {
    entries: Vec<Vec<Expr>>,
}

impl OmegaStructure {
    /// Validate shape and skew-symmetry with the chart's equality oracle.
    #[allow(clippy::needless_range_loop)]
    pub fn new(chart: &BundleChart, entries: Vec<Vec<Expr>>) -> Result<Self> {
        let m = chart.m();
        if entries.len() != m || entries.iter().any(|row| row.len() != m) {
            return Err(Error::Dimension(format!("omega must be {m}x{m}")));
        }
        for a in 0..m {
            for b in a..m {
                let sum = entries[a][b].add_ref(&entries[b][a]);
                if !chart.is_zero(&sum)?.equal {
                    return Err(Error::NotSkew { row: a + 1, col: b + 1 });
                }
            }
        }
        Ok(OmegaStructure { entries })
    }

    /// The constant symplectic matrix on `m = 2k` fibers.
    pub fn canonical(chart: &BundleChart) -> Result<Self> {
        let m = chart.m();
        if !m.is_multiple_of(2) {
            return Err(Error::Dimension("canonical omega needs an even fiber dimension".into()));
        }
        let mut entries = vec![vec![Expr::zero(); m]; m];
        for k in 0..m / 2 {
            entries[k][k + m / 2] = Expr::one();
            entries[k + m / 2][k] = Expr::integer(-1);
        }
        Self::new(chart, entries)
    }

    pub fn m(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, a: usize, b: usize) -> &Expr {
        &self.entries[a][b]
    }

    pub fn entries(&self) -> &[Vec<Expr>] {
        &self.entries
    }

    /// `ω^{ab} f_b g_a` for two component vectors.
    pub fn pair(&self, f: &[Expr], g: &[Expr]) -> Expr {
        let mut parts = Vec::new();
        for (a, ga) in g.iter().enumerate() {
            if ga.is_zero() {
                continue;
            }
            for (b, fb) in f.iter().enumerate() {
                let w = &self.entries[a][b];
                if !w.is_zero() && !fb.is_zero() {
                    parts.push(w.mul_ref(fb).mul_ref(ga));
                }
            }
        }
        Expr::sum(parts.iter())
    }
}

/// `l̃₂` from precomputed Euler-Lagrange forms.
pub fn l2_from_sources(ep: &SourceForm, eq: &SourceForm, omega: &OmegaStructure) -> Expr {
    omega.pair(&eq.components, &ep.components)
}

/// Coefficient of `ν` in `l̃₂(Pν, Qν)`.
pub fn l2_tilde(chart: &BundleChart, p: &Expr, q: &Expr, omega: &OmegaStructure) -> Result<Expr> {
    let ep = euler_lagrange(chart, p)?;
    let eq = euler_lagrange(chart, q)?;
    Ok(l2_from_sources(&ep, &eq, omega))
}

/// Signed sum over the (2,1)-unshuffles of `l̃₂(l̃₂(·,·),·)`.
pub fn jacobiator(chart: &BundleChart, p: &Expr, q: &Expr, r: &Expr, omega: &OmegaStructure) -> Result<Expr> {
    let pq = l2_tilde(chart, p, q, omega)?;
    let pr = l2_tilde(chart, p, r, omega)?;
    let qr = l2_tilde(chart, q, r, omega)?;
    let parts = [
        l2_tilde(chart, &pq, r, omega)?,
        l2_tilde(chart, &pr, q, omega)?.neg_ref(),
        l2_tilde(chart, &qr, p, omega)?,
    ];
    Ok(Expr::sum(parts.iter()))
}

/// True when the Euler-Lagrange operator annihilates the Jacobiator, i.e.
/// it is a total divergence.
pub fn check_jacobiator_exact(
    chart: &BundleChart,
    p: &Expr,
    q: &Expr,
    r: &Expr,
    omega: &OmegaStructure,
) -> Result<bool> {
    let j = jacobiator(chart, p, q, r, omega)?;
    euler_lagrange(chart, &j)?.is_zero_in(chart)
}

/// Fiber-linear bundle automorphism `(x, u) ↦ (ψ(x), A(x) u)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Automorphism {
    pub base: Vec<Expr>,
    pub inverse: Vec<Expr>,
    pub fiber: Vec<Vec<Expr>>,
}

fn identity_bindings(map: &[Expr]) -> BTreeMap<VarRef, Expr> {
    map.iter()
        .enumerate()
        .map(|(i, e)| (VarRef::base(i), e.clone()))
        .collect()
}

impl Automorphism {
    pub fn new(chart: &BundleChart, base: Vec<Expr>, inverse: Vec<Expr>, fiber: Vec<Vec<Expr>>) -> Result<Self> {
        let (n, m) = (chart.n(), chart.m());
        if base.len() != n || inverse.len() != n {
            return Err(Error::Dimension(format!("base maps need {n} components")));
        }
        if fiber.len() != m || fiber.iter().any(|row| row.len() != m) {
            return Err(Error::Dimension(format!("fiber matrix must be {m}x{m}")));
        }
        if base
            .iter()
            .chain(&inverse)
            .chain(fiber.iter().flatten())
            .any(|e| e.vars().iter().any(VarRef::is_jet))
        {
            return Err(Error::Validation {
                entity: "automorphism".into(),
                reason: "maps may depend on base coordinates only".into(),
            });
        }
        let psi = Automorphism { base, inverse, fiber };
        psi.check_inverse(chart)?;
        if chart.is_zero(&determinant(&psi.fiber))?.equal {
            return Err(Error::Validation {
                entity: "automorphism".into(),
                reason: "fiber matrix is singular".into(),
            });
        }
        Ok(psi)
    }

    /// Identity on base and fibers.
    pub fn identity(chart: &BundleChart) -> Self {
        let base: Vec<Expr> = (0..chart.n()).map(|i| chart.x(i)).collect();
        let fiber = (0..chart.m())
            .map(|a| {
                (0..chart.m())
                    .map(|b| if a == b { Expr::one() } else { Expr::zero() })
                    .collect()
            })
            .collect();
        Automorphism {
            inverse: base.clone(),
            base,
            fiber,
        }
    }

    fn check_inverse(&self, chart: &BundleChart) -> Result<()> {
        let there = identity_bindings(&self.base);
        let back = identity_bindings(&self.inverse);
        for i in 0..chart.n() {
            let x = chart.x(i);
            let a = self.base[i].substitute(&back)?;
            let b = self.inverse[i].substitute(&there)?;
            if !chart.equal(&a, &x)?.equal || !chart.equal(&b, &x)?.equal {
                return Err(Error::InverseMismatch(format!(
                    "component {} of the base map",
                    chart.base_names()[i]
                )));
            }
        }
        Ok(())
    }

    /// `det ∂ψ/∂x`.
    pub fn base_jacobian_det(&self, n: usize) -> Expr {
        determinant(&jacobian(&self.base, n))
    }

    /// Prolonged pullback `(j^∞ψ)^* f` of a local function.
    pub fn jet_map(&self, chart: &BundleChart) -> Result<JetMap> {
        let fiber = self
            .fiber
            .iter()
            .map(|row| {
                let parts: Vec<Expr> = row
                    .iter()
                    .enumerate()
                    .map(|(b, a)| a.mul_ref(&chart.u(b, &[])))
                    .collect();
                Expr::sum(parts.iter())
            })
            .collect();
        JetMap::from_base_maps(chart.clone(), self.base.clone(), &self.inverse, fiber)
    }

    pub fn pullback(&self, chart: &BundleChart, f: &Expr) -> Result<Expr> {
        self.jet_map(chart)?.apply(f)
    }

    /// Pullback of the top form `f ν`, returned as its coefficient.
    pub fn pullback_density(&self, chart: &BundleChart, f: &Expr) -> Result<Expr> {
        Ok(self.pullback(chart, f)?.mul_ref(&self.base_jacobian_det(chart.n())))
    }
}

/// Entrywise comparison of `det² (A ω A^T)^{ab}(x)` with
/// `det · ω^{ab}(ψ(x))`, the coordinate form of covariance for a
/// fiber-linear automorphism.
pub fn check_covariance(chart: &BundleChart, omega: &OmegaStructure, psi: &Automorphism) -> Result<bool> {
    let det = psi.base_jacobian_det(chart.n());
    if chart.is_zero(&det)?.equal {
        return Err(Error::SingularJacobian("automorphism base map".into()));
    }
    let at_image = identity_bindings(&psi.base);
    let det2 = det.mul_ref(&det);
    let m = chart.m();
    let a = &psi.fiber;
    for i in 0..m {
        for j in 0..m {
            let mut parts = Vec::new();
            for c in 0..m {
                for d in 0..m {
                    let w = omega.entry(c, d);
                    if !w.is_zero() {
                        parts.push(a[i][c].mul_ref(w).mul_ref(&a[j][d]));
                    }
                }
            }
            let lhs = det2.mul_ref(&Expr::sum(parts.iter()));
            let rhs = det.mul_ref(&omega.entry(i, j).substitute(&at_image)?);
            if !chart.equal(&lhs, &rhs)?.equal {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn so3() -> (BundleChart, OmegaStructure) {
        let mut c = BundleChart::new(&["x", "y", "z"], &["u1", "u2"]).unwrap();
        c.define("r", "sqrt(x^2+y^2+z^2)").unwrap();
        let p = |s: &str| c.parse(s).unwrap();
        let w = OmegaStructure::new(&c, vec![vec![p("0"), p("r")], vec![p("-r"), p("0")]]).unwrap();
        (c, w)
    }

    fn line2() -> (BundleChart, OmegaStructure) {
        let c = BundleChart::new(&["x"], &["u1", "u2"]).unwrap();
        let w = OmegaStructure::canonical(&c).unwrap();
        (c, w)
    }

    #[test]
    fn bracket_of_the_rotation_example() {
        let (c, w) = so3();
        let p = |s: &str| c.parse(s).unwrap();
        let got = l2_tilde(&c, &p("u1*(u2_xx+u2_yy+u2_zz)"), &p("u1*u2"), &w).unwrap();
        let expect = p("r*((u2_xx+u2_yy+u2_zz)*u1 - (u1_xx+u1_yy+u1_zz)*u2)");
        assert_eq!(got, expect);
    }

    #[test]
    fn bracket_on_the_line() {
        let (c, w) = line2();
        let p = |s: &str| c.parse(s).unwrap();
        assert_eq!(l2_tilde(&c, &p("u1_x^2"), &p("u2^2"), &w).unwrap(), p("-4*u1_xx*u2"));
        let q = p("u1*u2_x + x*u1^2");
        assert!(l2_tilde(&c, &q, &q, &w).unwrap().is_zero());
    }

    #[test]
    fn omega_must_be_skew() {
        let c = BundleChart::new(&["x"], &["u1", "u2"]).unwrap();
        let p = |s: &str| c.parse(s).unwrap();
        let r = OmegaStructure::new(&c, vec![vec![p("0"), p("1")], vec![p("1"), p("0")]]);
        assert_eq!(r, Err(Error::NotSkew { row: 1, col: 2 }));
        let r = OmegaStructure::new(&c, vec![vec![p("x"), p("1")], vec![p("-1"), p("0")]]);
        assert_eq!(r, Err(Error::NotSkew { row: 1, col: 1 }));
    }

    #[test]
    fn jacobiator_examples() {
        let (c, w) = line2();
        let p = |s: &str| c.parse(s).unwrap();
        let u = p("u1");
        assert!(jacobiator(&c, &u, &u, &u, &w).unwrap().is_zero());
        assert!(check_jacobiator_exact(&c, &p("u1*u2"), &p("u1^2"), &p("u2^2"), &w).unwrap());
        let a = p("u1_x*u2");
        assert!(check_jacobiator_exact(&c, &a, &a, &p("u2_x^2"), &w).unwrap());
    }

    fn rotation(c: &BundleChart) -> Automorphism {
        let p = |s: &str| c.parse(s).unwrap();
        Automorphism::new(
            c,
            vec![p("(3*x-4*y)/5"), p("(4*x+3*y)/5"), p("z")],
            vec![p("(3*x+4*y)/5"), p("(-4*x+3*y)/5"), p("z")],
            vec![vec![p("1"), p("0")], vec![p("0"), p("1")]],
        )
        .unwrap()
    }

    #[test]
    fn covariance_examples() {
        let (c, w) = so3();
        assert!(check_covariance(&c, &w, &Automorphism::identity(&c)).unwrap());
        assert!(check_covariance(&c, &w, &rotation(&c)).unwrap());

        let (l, w) = line2();
        let p = |s: &str| l.parse(s).unwrap();
        let id = vec![vec![p("1"), p("0")], vec![p("0"), p("1")]];
        let scaling = Automorphism::new(&l, vec![p("2*x")], vec![p("x/2")], id).unwrap();
        assert!(!check_covariance(&l, &w, &scaling).unwrap());
        // A translation with a volume-compensating fiber matrix is covariant.
        let diag = vec![vec![p("2"), p("0")], vec![p("0"), p("1/2")]];
        let shift = Automorphism::new(&l, vec![p("x+1")], vec![p("x-1")], diag).unwrap();
        assert!(check_covariance(&l, &w, &shift).unwrap());
    }

    #[test]
    fn mismatched_inverse_is_rejected() {
        let (l, _) = line2();
        let p = |s: &str| l.parse(s).unwrap();
        let id = vec![vec![p("1"), p("0")], vec![p("0"), p("1")]];
        let r = Automorphism::new(&l, vec![p("2*x")], vec![p("x/3")], id);
        assert!(matches!(r, Err(Error::InverseMismatch(_))));
    }

    #[test]
    fn bracket_commutes_with_covariant_pullback() {
        let (c, w) = so3();
        let psi = rotation(&c);
        let p = c.parse("u1*u2_x + x*u1_y^2").unwrap();
        let q = c.parse("u2*u1_z*y + u1^2").unwrap();
        let lhs = l2_tilde(
            &c,
            &psi.pullback_density(&c, &p).unwrap(),
            &psi.pullback_density(&c, &q).unwrap(),
            &w,
        )
        .unwrap();
        let rhs = psi.pullback_density(&c, &l2_tilde(&c, &p, &q, &w).unwrap()).unwrap();
        assert!(c.equal(&lhs, &rhs).unwrap().equal);

        let (l, w) = line2();
        let s = |t: &str| l.parse(t).unwrap();
        let diag = vec![vec![s("2"), s("0")], vec![s("0"), s("1/2")]];
        let shift = Automorphism::new(&l, vec![s("x+1")], vec![s("x-1")], diag).unwrap();
        let (p, q) = (s("u1_x^2*u2 + x*u1"), s("u1*u2_x*x^2"));
        let lhs = l2_tilde(
            &l,
            &shift.pullback_density(&l, &p).unwrap(),
            &shift.pullback_density(&l, &q).unwrap(),
            &w,
        )
        .unwrap();
        let rhs = shift.pullback_density(&l, &l2_tilde(&l, &p, &q, &w).unwrap()).unwrap();
        assert!(l.equal(&lhs, &rhs).unwrap().equal);
    }
}
