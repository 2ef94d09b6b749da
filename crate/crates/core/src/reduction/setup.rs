use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::{
    contract, form_residual, invariance_residual, wedge, BundleChart, Generator, HorizontalForm, SourceForm,
    TotalVectorField,
};

use super::adapted::AdaptedChart;

/// `J (tot X_1 ∧ … ∧ tot X_q)` over the original base.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QChain {
    pub scale: Expr,
    pub fields: Vec<TotalVectorField>,
}

impl QChain {
    pub fn new(chart: &BundleChart, scale: Expr, fields: Vec<TotalVectorField>) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::Validation {
                entity: "q-chain".into(),
                reason: "needs at least one vector field".into(),
            });
        }
        if fields.iter().any(|f| f.0.len() != chart.n()) {
            return Err(Error::Dimension(format!(
                "q-chain fields need {} components",
                chart.n()
            )));
        }
        Ok(QChain { scale, fields })
    }

    pub fn q(&self) -> usize {
        self.fields.len()
    }

    /// `J · (X_q ⨼ … ⨼ X_1 ⨼ γ)`.
    pub fn contract(&self, gamma: &HorizontalForm) -> Result<HorizontalForm> {
        Ok(contract(gamma, &self.fields)?.scale(&self.scale))
    }
}

/// Everything needed to push invariant objects down to the reduced bundle.
#[derive(Debug, Clone)]
pub struct ReductionSetup {
    chart: AdaptedChart,
    chain: QChain,
    generators: Vec<Generator>,
    volume: HorizontalForm,
    volume_invariant: bool,
    reduced_volume: Expr,
}

fn sign(negative: bool, f: &HorizontalForm) -> HorizontalForm {
    if negative {
        f.scale(&Expr::integer(-1))
    } else {
        f.clone()
    }
}

impl ReductionSetup {
    /// Validate the pieces and compute the reduced volume `ν̄ = w dy`.
    pub fn new(chart: AdaptedChart, chain: QChain, generators: Vec<Generator>, volume: HorizontalForm) -> Result<Self> {
        let original = chart.original();
        if chain.q() != chart.q() {
            return Err(Error::Validation {
                entity: "q-chain".into(),
                reason: format!("{} fields for {} orbit coordinates", chain.q(), chart.q()),
            });
        }
        if volume.degree() != original.n() || volume.dim() != original.n() {
            return Err(Error::Degree("volume must be a top-degree form".into()));
        }
        if generators.is_empty() {
            return Err(Error::Validation {
                entity: "generators".into(),
                reason: "at least one symmetry generator is required".into(),
            });
        }
        let volume_invariant = form_residual(original, &volume, &generators)?.is_none();
        // Spot-check the chain on the volume form: its contraction must be
        // invariant.
        let contracted = chain.contract(&volume)?;
        if let Some((k, _)) = form_residual(original, &contracted, &generators)? {
            return Err(Error::Validation {
                entity: "q-chain".into(),
                reason: format!("contraction of the volume is not invariant under generator {}", k + 1),
            });
        }
        let mut setup = ReductionSetup {
            chart,
            chain,
            generators,
            volume,
            volume_invariant,
            reduced_volume: Expr::zero(),
        };
        let nu_bar = setup.rho_chain(&setup.volume.clone())?;
        let w = nu_bar.scalar_part()?;
        if setup.chart.reduced().is_zero(&w)?.equal {
            return Err(Error::Validation {
                entity: "q-chain".into(),
                reason: "reduced volume vanishes".into(),
            });
        }
        setup.reduced_volume = w;
        Ok(setup)
    }

    pub fn chart(&self) -> &AdaptedChart {
        &self.chart
    }

    pub fn original(&self) -> &BundleChart {
        self.chart.original()
    }

    pub fn reduced(&self) -> &BundleChart {
        self.chart.reduced()
    }

    pub fn chain(&self) -> &QChain {
        &self.chain
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn volume(&self) -> &HorizontalForm {
        &self.volume
    }

    pub fn volume_is_invariant(&self) -> bool {
        self.volume_invariant
    }

    /// Coefficient `w` of the reduced volume `ν̄ = w dy`.
    pub fn reduced_volume(&self) -> &Expr {
        &self.reduced_volume
    }

    /// Coefficient of `ν` in `dx^1 ∧ … ∧ dx^n`.
    pub fn volume_coefficient(&self) -> Result<Expr> {
        self.volume.scalar_part()
    }

    pub fn check_invariant(&self, f: &Expr) -> Result<()> {
        if let Some((k, r)) = invariance_residual(self.original(), f, &self.generators)? {
            return Err(Error::NotInvariant {
                generator: k + 1,
                residual: self.original().show(&r),
            });
        }
        Ok(())
    }

    /// `ρ(f)`: the function on the reduced jet bundle induced by an
    /// invariant `f`.
    pub fn rho(&self, f: &Expr) -> Result<Expr> {
        self.check_invariant(f)?;
        self.rho_unchecked(f)
    }

    /// `ρ(f)` without the prolonged-generator check. Residual dependence on
    /// orbit coordinates is still reported.
    pub fn rho_unchecked(&self, f: &Expr) -> Result<Expr> {
        let adapted = self.chart.prolong_change_of_coords(f)?;
        self.chart.restrict_to_invariant(&adapted)
    }

    /// `ρ_X(γ) = (-1)^{qr} ρ(𝒳 ⨼ γ)`, a form of degree `r - q` on the
    /// reduced base.
    pub fn rho_chain(&self, gamma: &HorizontalForm) -> Result<HorizontalForm> {
        let q = self.chain.q();
        let r = gamma.degree();
        if r < q {
            return Err(Error::Degree(format!("ρ_X of a {r}-form with a {q}-chain")));
        }
        let contracted = sign((q * r) % 2 == 1, &self.chain.contract(gamma)?);
        let adapted = self.to_adapted_basis(&contracted)?;
        self.restrict_form(&adapted)
    }

    /// Rewrite coefficients and the `dx` basis in adapted coordinates.
    fn to_adapted_basis(&self, f: &HorizontalForm) -> Result<HorizontalForm> {
        let n = f.dim();
        let m = self.chart.inverse_jacobian();
        let dx: Vec<HorizontalForm> = (0..n)
            .map(|i| {
                let mut one = HorizontalForm::zero(n, 1);
                for (j, c) in m[i].iter().enumerate() {
                    one.add_term(vec![j], c.clone())?;
                }
                Ok(one)
            })
            .collect::<Result<_>>()?;
        let mut out = HorizontalForm::zero(n, f.degree());
        for (key, c) in f.terms() {
            let mut basis = HorizontalForm::scalar(n, self.chart.prolong_change_of_coords(c)?);
            for &i in key {
                basis = wedge(&basis, &dx[i])?;
            }
            out = out.add(&basis)?;
        }
        Ok(out)
    }

    /// Check basicness and restrict every coefficient to the reduced chart.
    pub(super) fn restrict_form(&self, f: &HorizontalForm) -> Result<HorizontalForm> {
        let adapted = self.chart.adapted();
        let orbit = self.chart.orbit();
        let mut out = HorizontalForm::zero(self.reduced().n(), f.degree());
        for (key, c) in f.terms() {
            if key.iter().any(|i| orbit.contains(i)) {
                let c = self.chart.zero_orbit_jets(c)?;
                if !c.is_zero() && !adapted.is_zero(&c)?.equal {
                    let names: Vec<String> = key.iter().map(|&i| format!("d{}", adapted.base_names()[i])).collect();
                    return Err(Error::BasicnessViolation {
                        component: names.join("∧"),
                        coefficient: adapted.show(&c),
                    });
                }
                continue;
            }
            let reduced_key: Vec<usize> = key
                .iter()
                .map(|&i| self.chart.reduced_index(i).expect("invariant index"))
                .collect();
            out.add_term(reduced_key, self.chart.restrict_to_invariant(c)?)?;
        }
        Ok(out)
    }

    /// `ρ_X` on source forms `E_a θ^a ∧ ν`: components go through `ρ` and
    /// the volume through `ρ_X`. The contraction sign `(-1)^{q(n+1)}` from
    /// moving past `θ^a` cancels the global sign for `s = 1`.
    pub fn rho_chain_source(&self, delta: &SourceForm) -> Result<SourceForm> {
        if delta.components.len() != self.original().m() {
            return Err(Error::Dimension(format!(
                "source form with {} components",
                delta.components.len()
            )));
        }
        let components = delta
            .components
            .iter()
            .map(|e| if e.is_zero() { Ok(Expr::zero()) } else { self.rho(e) })
            .collect::<Result<Vec<_>>>()?;
        let relative = delta.volume.div(&self.volume_coefficient()?)?;
        let volume = self.rho(&relative)?.mul_ref(&self.reduced_volume);
        Ok(SourceForm { components, volume })
    }

    /// `ρ_X(P ν)` as its coefficient on the reduced top degree.
    pub fn rho_chain_density(&self, p: &Expr) -> Result<Expr> {
        let top = self.volume.scale(p);
        self.rho_chain(&top)?.scalar_part()
    }
}
