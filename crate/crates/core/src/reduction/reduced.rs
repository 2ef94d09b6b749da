use crate::bracket::{l2_tilde, OmegaStructure};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::{d_h, euler_lagrange, HorizontalForm};

use super::setup::ReductionSetup;

/// Reduced bracket of two invariant densities, computed two ways.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedBracket {
    /// Coefficient of `ν̄` in `ρ_X(l̃₂(Pν, Qν))`.
    pub coefficient: Expr,
    /// Coefficient of `ν̄` from `ρ(ω^{ab}) Ē_b(q̄) Ē_a(p̄)`, when `ν` and `ω`
    /// are invariant.
    pub omega_bar: Option<Expr>,
    /// Whether the two paths agree.
    pub agree: Option<bool>,
}

/// Representative of a reduced density: `ρ_X(Pν) = p̄ ν̄`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Representative {
    pub density: Expr,
    pub reduced: Option<Expr>,
}

impl Representative {
    pub fn new(density: Expr) -> Self {
        Representative { density, reduced: None }
    }

    pub fn with_reduced(density: Expr, reduced: Expr) -> Self {
        Representative {
            density,
            reduced: Some(reduced),
        }
    }
}

impl ReductionSetup {
    /// `ρ_X(Pν)` divided by `ν̄`, i.e. the reduced density of `P`.
    pub fn reduced_density(&self, p: &Expr) -> Result<Expr> {
        self.rho_chain_density(p)?.div(self.reduced_volume())
    }

    fn check_representative(&self, rep: &Representative) -> Result<Expr> {
        let got = self.reduced_density(&rep.density)?;
        if let Some(expect) = &rep.reduced {
            if !self.reduced().equal(&got, expect)?.equal {
                return Err(Error::RepresentativeMismatch(format!(
                    "ρ_X gives {} but {} was supplied",
                    self.reduced().show(&got),
                    self.reduced().show(expect)
                )));
            }
        }
        Ok(got)
    }

    /// `l̂₂(ρ_X α, ρ_X β) = ρ_X(l̃₂(α, β))` for representatives
    /// `α = Pν`, `β = Qν`.
    pub fn l2_hat(&self, p: &Representative, q: &Representative, omega: &OmegaStructure) -> Result<ReducedBracket> {
        let original = self.original();
        let p_bar = self.check_representative(p)?;
        let q_bar = self.check_representative(q)?;
        let l2 = l2_tilde(original, &p.density, &q.density, omega)?;
        let coefficient = self.reduced_density(&l2)?;

        let omega_bar = if self.volume_is_invariant() {
            self.omega_bar_path(&p_bar, &q_bar, omega)?
        } else {
            None
        };
        let agree = match &omega_bar {
            Some(w) => Some(self.reduced().equal(w, &coefficient)?.equal),
            None => None,
        };
        Ok(ReducedBracket {
            coefficient,
            omega_bar,
            agree,
        })
    }

    /// `ρ(ω^{ab}) · Ē_b(q̄ w)/w · Ē_a(p̄ w)/w`, or `None` if some entry of
    /// `ω` is not invariant.
    fn omega_bar_path(&self, p_bar: &Expr, q_bar: &Expr, omega: &OmegaStructure) -> Result<Option<Expr>> {
        let reduced = self.reduced();
        let w = self.reduced_volume();
        let m = omega.m();
        let mut entries = vec![vec![Expr::zero(); m]; m];
        for (a, row) in entries.iter_mut().enumerate() {
            for (b, slot) in row.iter_mut().enumerate() {
                let e = omega.entry(a, b);
                if e.is_zero() {
                    continue;
                }
                match self.rho(e) {
                    Ok(r) => *slot = r,
                    Err(Error::NotInvariant { .. }) | Err(Error::InvarianceViolation { .. }) => return Ok(None),
                    Err(err) => return Err(err),
                }
            }
        }
        let ep = euler_lagrange(reduced, &p_bar.mul_ref(w))?;
        let eq = euler_lagrange(reduced, &q_bar.mul_ref(w))?;
        let normalize = |c: &[Expr]| -> Result<Vec<Expr>> { c.iter().map(|e| e.div(w)).collect() };
        let (ep, eq) = (normalize(&ep.components)?, normalize(&eq.components)?);
        let omega_bar = OmegaStructure::new(reduced, entries)?;
        Ok(Some(omega_bar.pair(&eq, &ep)))
    }

    /// Check that `l̂₂` does not depend on the representative: if
    /// `ρ_X α = ρ_X α'` then `ρ_X l̃₂(α - α', β) = 0`.
    ///
    /// A failed precondition is an error; a false result means the
    /// bracket is not well defined for this instance.
    pub fn verify_l2hat_well_defined(
        &self,
        alpha: &Expr,
        alpha_prime: &Expr,
        beta: &Expr,
        omega: &OmegaStructure,
    ) -> Result<bool> {
        let reduced = self.reduced();
        let precondition = |what: &str, e: Error| Error::Precondition(format!("ρ_X({what}): {e}"));
        let a = self.reduced_density(alpha).map_err(|e| precondition("α", e))?;
        let a2 = self.reduced_density(alpha_prime).map_err(|e| precondition("α'", e))?;
        if !reduced.equal(&a, &a2)?.equal {
            return Err(Error::Precondition(format!(
                "ρ_X(α) = {} differs from ρ_X(α') = {}",
                reduced.show(&a),
                reduced.show(&a2)
            )));
        }
        let diff = alpha.sub_ref(alpha_prime);
        let l2 = l2_tilde(self.original(), &diff, beta, omega)?;
        let image = self.rho_chain_density(&l2)?;
        Ok(reduced.is_zero(&image)?.equal)
    }

    /// `ρ_X(d_H α) = d̄_H(ρ_X α)` for an invariant form of degree below `n`.
    pub fn verify_cochain(&self, alpha: &HorizontalForm) -> Result<bool> {
        let q = self.chain().q();
        if alpha.degree() < q {
            return Err(Error::Degree(format!(
                "cochain check needs degree at least {q}, got {}",
                alpha.degree()
            )));
        }
        if alpha.is_zero() {
            return Ok(true);
        }
        let lhs = self.rho_chain(&d_h(self.original(), alpha)?)?;
        let rhs = d_h(self.reduced(), &self.rho_chain(alpha)?)?;
        lhs.equal(&rhs, self.reduced())
    }

    /// `Ē(ρ_X(Pν)) = ρ_X(E(Pν))` componentwise.
    pub fn verify_el_commute(&self, p: &Expr) -> Result<bool> {
        let reduced = self.reduced();
        let lhs = euler_lagrange(reduced, &self.rho_chain_density(p)?)?;
        let source = euler_lagrange(self.original(), &p.mul_ref(&self.volume_coefficient()?))?;
        let rhs = self.rho_chain_source(&source)?;
        for (l, r) in lhs.components.iter().zip(&rhs.components) {
            if !reduced.equal(l, &r.mul_ref(&rhs.volume))?.equal {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `ρ_X(Pν) = ρ(P) ν̄` for invariant `P`.
    pub fn verify_factorization(&self, p: &Expr) -> Result<bool> {
        let lhs = self.rho_chain_density(p)?;
        let rhs = self.rho(p)?.mul_ref(self.reduced_volume());
        Ok(self.reduced().equal(&lhs, &rhs)?.equal)
    }

    /// Prolonging to adapted coordinates and back is the identity.
    pub fn verify_round_trip(&self, e: &Expr) -> Result<bool> {
        let chart = self.chart();
        let there = chart.prolong_change_of_coords(e)?;
        let back = chart.prolong_to_original(&there)?;
        Ok(self.original().equal(&back, e)?.equal)
    }
}
