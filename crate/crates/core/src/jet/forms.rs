use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::Expr;

use super::chart::BundleChart;
use super::total::total_derivative;

/// Sort a list of base indices, returning the permutation sign, or `None`
/// when an index repeats.
pub(crate) fn sort_with_sign(mut idx: Vec<usize>) -> Option<(Vec<usize>, bool)> {
    let mut negative = false;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            negative = !negative;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((idx, negative))
}

/// Horizontal form `α_I dx^I` of fixed degree on an `n`-dimensional base.
/// Keys are strictly increasing index tuples; absent keys are zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HorizontalForm {
    dim: usize,
    degree: usize,
    coeffs: BTreeMap<Vec<usize>, Expr>,
}

impl HorizontalForm {
    pub fn zero(dim: usize, degree: usize) -> Self {
        HorizontalForm {
            dim,
            degree,
            coeffs: BTreeMap::new(),
        }
    }

    /// Degree-0 form.
    pub fn scalar(dim: usize, f: Expr) -> Self {
        let mut out = Self::zero(dim, 0);
        out.add_term(Vec::new(), f).expect("empty key is valid");
        out
    }

    /// `f dx^1 ∧ … ∧ dx^n`.
    pub fn top(dim: usize, f: Expr) -> Self {
        let mut out = Self::zero(dim, dim);
        out.add_term((0..dim).collect(), f).expect("sorted key is valid");
        out
    }

    /// `f dx^{i_1} ∧ … ∧ dx^{i_r}` for indices in any order.
    pub fn monomial(dim: usize, indices: &[usize], f: Expr) -> Result<Self> {
        let mut out = Self::zero(dim, indices.len());
        out.add_term(indices.to_vec(), f)?;
        Ok(out)
    }

    /// Add `f dx^I`, sorting `I` and adjusting the sign.
    pub fn add_term(&mut self, indices: Vec<usize>, f: Expr) -> Result<()> {
        if indices.len() != self.degree {
            return Err(Error::Degree(format!(
                "term of degree {} added to a {}-form",
                indices.len(),
                self.degree
            )));
        }
        if let Some(&i) = indices.iter().find(|&&i| i >= self.dim) {
            return Err(Error::Dimension(format!(
                "index {i} on a {}-dimensional base",
                self.dim
            )));
        }
        let Some((key, negative)) = sort_with_sign(indices) else {
            return Ok(());
        };
        let f = if negative { f.neg_ref() } else { f };
        let sum = match self.coeffs.remove(&key) {
            Some(old) => old.add_ref(&f),
            None => f,
        };
        if !sum.is_zero() {
            self.coeffs.insert(key, sum);
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeff(&self, indices: &[usize]) -> Expr {
        self.coeffs.get(indices).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &Expr)> {
        self.coeffs.iter()
    }

    /// Coefficient of a degree-0 or top-degree form.
    pub fn scalar_part(&self) -> Result<Expr> {
        if self.degree == 0 {
            Ok(self.coeff(&[]))
        } else if self.degree == self.dim {
            Ok(self.coeff(&(0..self.dim).collect::<Vec<_>>()))
        } else {
            Err(Error::Degree(format!(
                "{}-form on a {}-dimensional base has no single coefficient",
                self.degree, self.dim
            )))
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Apply a fallible map to every coefficient.
    pub fn try_map(&self, f: impl Fn(&Expr) -> Result<Expr>) -> Result<Self> {
        let mut out = Self::zero(self.dim, self.degree);
        for (k, c) in &self.coeffs {
            out.add_term(k.clone(), f(c)?)?;
        }
        Ok(out)
    }

    pub fn scale(&self, f: &Expr) -> Self {
        self.try_map(|c| Ok(c.mul_ref(f))).expect("scaling cannot fail")
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (k, c) in &other.coeffs {
            out.add_term(k.clone(), c.clone())?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&Expr::integer(-1)))
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim || self.degree != other.degree {
            return Err(Error::Degree(format!(
                "cannot combine a {}-form on R^{} with a {}-form on R^{}",
                self.degree, self.dim, other.degree, other.dim
            )));
        }
        Ok(())
    }

    /// Compare coefficientwise with the chart's equality oracle.
    pub fn equal(&self, other: &Self, chart: &BundleChart) -> Result<bool> {
        self.check_same_shape(other)?;
        for k in self.coeffs.keys().chain(other.coeffs.keys()) {
            if !chart.equal(&self.coeff(k), &other.coeff(k))?.equal {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Graded-commutative product.
pub fn wedge(a: &HorizontalForm, b: &HorizontalForm) -> Result<HorizontalForm> {
    if a.dim != b.dim {
        return Err(Error::Dimension(format!(
            "wedge of forms on R^{} and R^{}",
            a.dim, b.dim
        )));
    }
    let degree = a.degree + b.degree;
    if degree > a.dim {
        return Err(Error::Degree(format!(
            "wedge degree {degree} exceeds base dimension {}",
            a.dim
        )));
    }
    let mut out = HorizontalForm::zero(a.dim, degree);
    for (ka, ca) in &a.coeffs {
        for (kb, cb) in &b.coeffs {
            let mut idx = ka.clone();
            idx.extend_from_slice(kb);
            out.add_term(idx, ca.mul_ref(cb))?;
        }
    }
    Ok(out)
}

/// Horizontal differential `d_H = dx^i ∧ D_i`.
pub fn d_h(chart: &BundleChart, a: &HorizontalForm) -> Result<HorizontalForm> {
    if a.degree >= a.dim {
        return Err(Error::Degree(format!("d_H of a top-degree {}-form", a.degree)));
    }
    let mut out = HorizontalForm::zero(a.dim, a.degree + 1);
    for (k, c) in &a.coeffs {
        for i in 0..a.dim {
            if k.contains(&i) {
                continue;
            }
            let d = total_derivative(chart, c, i)?;
            if d.is_zero() {
                continue;
            }
            let mut idx = vec![i];
            idx.extend_from_slice(k);
            out.add_term(idx, d)?;
        }
    }
    Ok(out)
}

/// Total vector field `ξ^i D_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TotalVectorField(pub Vec<Expr>);

impl TotalVectorField {
    /// `ξ^i D_i f`.
    pub fn apply(&self, chart: &BundleChart, f: &Expr) -> Result<Expr> {
        let mut parts = Vec::new();
        for (i, xi) in self.0.iter().enumerate() {
            if !xi.is_zero() {
                parts.push(xi.mul_ref(&total_derivative(chart, f, i)?));
            }
        }
        Ok(Expr::sum(parts.iter()))
    }

    fn interior(&self, a: &HorizontalForm) -> Result<HorizontalForm> {
        if a.degree == 0 {
            return Err(Error::Degree("contraction of a 0-form".into()));
        }
        if self.0.len() != a.dim {
            return Err(Error::Dimension(format!(
                "vector field with {} components on R^{}",
                self.0.len(),
                a.dim
            )));
        }
        let mut out = HorizontalForm::zero(a.dim, a.degree - 1);
        for (k, c) in &a.coeffs {
            for (pos, &i) in k.iter().enumerate() {
                if self.0[i].is_zero() {
                    continue;
                }
                let mut t = c.mul_ref(&self.0[i]);
                if pos % 2 == 1 {
                    t = t.neg_ref();
                }
                let mut rest = k.clone();
                rest.remove(pos);
                out.add_term(rest, t)?;
            }
        }
        Ok(out)
    }
}

/// `ι_{X_q} ∘ … ∘ ι_{X_1} α`, the first field contracted first.
pub fn contract(a: &HorizontalForm, fields: &[TotalVectorField]) -> Result<HorizontalForm> {
    if fields.len() > a.degree {
        return Err(Error::Degree(format!(
            "{} contractions of a {}-form",
            fields.len(),
            a.degree
        )));
    }
    let mut cur = a.clone();
    for x in fields {
        cur = x.interior(&cur)?;
    }
    Ok(cur)
}

/// Source form `E_a θ^a ∧ volume·dx^1∧…∧dx^n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceForm {
    pub components: Vec<Expr>,
    pub volume: Expr,
}

impl SourceForm {
    pub fn new(components: Vec<Expr>) -> Self {
        SourceForm {
            components,
            volume: Expr::one(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Expr::is_zero)
    }

    /// True when every component vanishes under the chart's oracle.
    pub fn is_zero_in(&self, chart: &BundleChart) -> Result<bool> {
        for c in &self.components {
            if !chart.is_zero(c)?.equal {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
