use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::expr::{Expr, MultiIndex, VarRef};

use super::chart::BundleChart;
use super::forms::{sort_with_sign, HorizontalForm, TotalVectorField};
use super::total::total_derivative;

/// Infinitesimal point symmetry `ξ^i ∂_{x^i} + φ^a ∂_{u^a}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generator {
    pub xi: Vec<Expr>,
    pub phi: Vec<Expr>,
}

impl Generator {
    pub fn new(chart: &BundleChart, xi: Vec<Expr>, phi: Vec<Expr>) -> Result<Self> {
        if xi.len() != chart.n() || phi.len() != chart.m() {
            return Err(Error::Dimension(format!(
                "generator with {} base and {} fiber components on a chart with n={}, m={}",
                xi.len(),
                phi.len(),
                chart.n(),
                chart.m()
            )));
        }
        if xi.iter().chain(&phi).any(|e| e.max_order() > 0) {
            return Err(Error::Validation {
                entity: "generator".into(),
                reason: "components may not depend on derivatives".into(),
            });
        }
        Ok(Generator { xi, phi })
    }

    /// Purely horizontal generator with no fiber component.
    pub fn horizontal(chart: &BundleChart, xi: Vec<Expr>) -> Result<Self> {
        let phi = vec![Expr::zero(); chart.m()];
        Self::new(chart, xi, phi)
    }

    pub fn total(&self) -> TotalVectorField {
        TotalVectorField(self.xi.clone())
    }

    /// Characteristic `Q^a = φ^a - ξ^i u^a_i`.
    pub fn characteristic(&self, a: usize) -> Expr {
        let mut parts = vec![self.phi[a].clone()];
        for (i, xi) in self.xi.iter().enumerate() {
            if !xi.is_zero() {
                parts.push(xi.mul_ref(&Expr::var(VarRef::jet(a, vec![i]))).neg_ref());
            }
        }
        Expr::sum(parts.iter())
    }

    /// Prolonged action in evolutionary form,
    /// `pr X(f) = ξ^i D_i f + Σ D_J(Q^a) ∂f/∂u^a_J`.
    pub fn prolong(&self, chart: &BundleChart, f: &Expr) -> Result<Expr> {
        let mut parts = vec![self.total().apply(chart, f)?];
        let mut cache: HashMap<(usize, MultiIndex), Expr> = HashMap::new();
        for v in f.vars() {
            if let VarRef::Jet { fiber, index } = &v {
                let df = f.partial(&v);
                if df.is_zero() {
                    continue;
                }
                let dq = self.characteristic_derivative(chart, *fiber, index, &mut cache)?;
                parts.push(dq.mul_ref(&df));
            }
        }
        Ok(Expr::sum(parts.iter()))
    }

    fn characteristic_derivative(
        &self,
        chart: &BundleChart,
        a: usize,
        index: &MultiIndex,
        cache: &mut HashMap<(usize, MultiIndex), Expr>,
    ) -> Result<Expr> {
        if let Some(e) = cache.get(&(a, index.clone())) {
            return Ok(e.clone());
        }
        let e = match index.indices().split_last() {
            None => self.characteristic(a),
            Some((&last, rest)) => {
                let prev = self.characteristic_derivative(chart, a, &MultiIndex::new(rest.to_vec()), cache)?;
                total_derivative(chart, &prev, last)?
            }
        };
        cache.insert((a, index.clone()), e.clone());
        Ok(e)
    }

    /// Lie derivative of a horizontal form along the prolonged generator,
    /// with `L dx^i = D_j ξ^i dx^j`.
    pub fn lie_form(&self, chart: &BundleChart, a: &HorizontalForm) -> Result<HorizontalForm> {
        let mut out = HorizontalForm::zero(a.dim(), a.degree());
        let dxi: Vec<Vec<Expr>> = self
            .xi
            .iter()
            .map(|x| (0..a.dim()).map(|j| total_derivative(chart, x, j)).collect())
            .collect::<Result<_>>()?;
        for (k, c) in a.terms() {
            out.add_term(k.clone(), self.prolong(chart, c)?)?;
            for pos in 0..k.len() {
                for (j, d) in dxi[k[pos]].iter().enumerate() {
                    if d.is_zero() {
                        continue;
                    }
                    let mut idx = k.clone();
                    idx[pos] = j;
                    if sort_with_sign(idx.clone()).is_some() {
                        out.add_term(idx, c.mul_ref(d))?;
                    }
                }
            }
        }
        Ok(out)
    }
}

/// First generator whose prolongation does not annihilate `f`, with the
/// residual.
pub fn invariance_residual(chart: &BundleChart, f: &Expr, generators: &[Generator]) -> Result<Option<(usize, Expr)>> {
    for (k, g) in generators.iter().enumerate() {
        let r = g.prolong(chart, f)?;
        if !chart.is_zero(&r)?.equal {
            return Ok(Some((k, r)));
        }
    }
    Ok(None)
}

pub fn is_invariant(chart: &BundleChart, f: &Expr, generators: &[Generator]) -> Result<bool> {
    Ok(invariance_residual(chart, f, generators)?.is_none())
}

/// Like [`invariance_residual`] for horizontal forms.
pub fn form_residual(
    chart: &BundleChart,
    a: &HorizontalForm,
    generators: &[Generator],
) -> Result<Option<(usize, HorizontalForm)>> {
    for (k, g) in generators.iter().enumerate() {
        let r = g.lie_form(chart, a)?;
        let mut vanishes = true;
        for (_, c) in r.terms() {
            if !chart.is_zero(c)?.equal {
                vanishes = false;
                break;
            }
        }
        if !vanishes {
            return Ok(Some((k, r)));
        }
    }
    Ok(None)
}

pub fn is_form_invariant(chart: &BundleChart, a: &HorizontalForm, generators: &[Generator]) -> Result<bool> {
    Ok(form_residual(chart, a, generators)?.is_none())
}
