use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::expr::{Expr, MultiIndex, VarRef};

use super::chart::BundleChart;
use super::total::total_derivative;

/// Prolonged change of coordinates from a source jet chart to a target jet
/// chart.
///
/// The base map sends each source base coordinate to an expression in the
/// target base coordinates, the fiber map sends each source fiber coordinate
/// to an expression in target base and fiber coordinates, and source total
/// derivatives are rewritten as `D_i = Σ_j derivs[i][j] D̂_j`. Jet images are
/// memoized and computed by iterating that rule.
#[derive(Debug)]
pub struct JetMap {
    target: BundleChart,
    base: Vec<Expr>,
    fiber: Vec<Expr>,
    derivs: Vec<Vec<Expr>>,
    cache: Mutex<HashMap<(usize, MultiIndex), Expr>>,
}

impl Clone for JetMap {
    fn clone(&self) -> Self {
        JetMap {
            target: self.target.clone(),
            base: self.base.clone(),
            fiber: self.fiber.clone(),
            derivs: self.derivs.clone(),
            cache: Mutex::new(self.cache.lock().expect("cache poisoned").clone()),
        }
    }
}

fn base_bindings(map: &[Expr]) -> BTreeMap<VarRef, Expr> {
    map.iter()
        .enumerate()
        .map(|(i, e)| (VarRef::base(i), e.clone()))
        .collect()
}

impl JetMap {
    pub fn new(target: BundleChart, base: Vec<Expr>, fiber: Vec<Expr>, derivs: Vec<Vec<Expr>>) -> Result<Self> {
        if derivs.len() != base.len() || derivs.iter().any(|row| row.len() != target.n()) {
            return Err(Error::Dimension(format!(
                "derivative matrix must be {}x{}",
                base.len(),
                target.n()
            )));
        }
        Ok(JetMap {
            target,
            base,
            fiber,
            derivs,
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// Build the map for a base diffeomorphism given in both directions.
    ///
    /// `forward[i]` is source base coordinate `i` written in target base
    /// coordinates; `backward[j]` is target base coordinate `j` written in
    /// source base coordinates. The chain rule gives
    /// `derivs[i][j] = ∂ backward[j] / ∂ source_i`, rewritten in target
    /// coordinates through `forward`.
    pub fn from_base_maps(
        target: BundleChart,
        forward: Vec<Expr>,
        backward: &[Expr],
        fiber: Vec<Expr>,
    ) -> Result<Self> {
        if backward.len() != target.n() {
            return Err(Error::Dimension(format!(
                "inverse map has {} components, target base has {}",
                backward.len(),
                target.n()
            )));
        }
        let sub = base_bindings(&forward);
        let mut derivs = Vec::with_capacity(forward.len());
        for i in 0..forward.len() {
            let row = backward
                .iter()
                .map(|b| b.partial(&VarRef::base(i)).substitute(&sub))
                .collect::<Result<Vec<_>>>()?;
            derivs.push(row);
        }
        Self::new(target, forward, fiber, derivs)
    }

    pub fn target(&self) -> &BundleChart {
        &self.target
    }

    pub fn derivs(&self) -> &[Vec<Expr>] {
        &self.derivs
    }

    pub fn base_map(&self) -> &[Expr] {
        &self.base
    }

    /// Image of the source jet coordinate `u^a_I`.
    pub fn jet_image(&self, a: usize, index: &MultiIndex) -> Result<Expr> {
        let key = (a, index.clone());
        if let Some(e) = self.cache.lock().expect("cache poisoned").get(&key) {
            return Ok(e.clone());
        }
        let e = match index.indices().split_last() {
            None => self
                .fiber
                .get(a)
                .cloned()
                .ok_or_else(|| Error::Dimension(format!("no fiber coordinate {a}")))?,
            Some((&last, rest)) => {
                let prev = self.jet_image(a, &MultiIndex::new(rest.to_vec()))?;
                self.total(&prev, last)?
            }
        };
        self.cache.lock().expect("cache poisoned").insert(key, e.clone());
        Ok(e)
    }

    /// Source total derivative `D_i` of an expression already written in
    /// target coordinates.
    pub fn total(&self, e: &Expr, i: usize) -> Result<Expr> {
        let row = self
            .derivs
            .get(i)
            .ok_or_else(|| Error::Dimension(format!("no source base coordinate {i}")))?;
        let mut parts = Vec::new();
        for (j, c) in row.iter().enumerate() {
            if !c.is_zero() {
                parts.push(c.mul_ref(&total_derivative(&self.target, e, j)?));
            }
        }
        Ok(Expr::sum(parts.iter()))
    }

    /// Rewrite a source expression in target coordinates.
    pub fn apply(&self, e: &Expr) -> Result<Expr> {
        let mut bindings = BTreeMap::new();
        for v in e.vars() {
            let image = match &v {
                VarRef::Base(i) => self
                    .base
                    .get(*i)
                    .cloned()
                    .ok_or_else(|| Error::Dimension(format!("no source base coordinate {i}")))?,
                VarRef::Jet { fiber, index } => self.jet_image(*fiber, index)?,
            };
            bindings.insert(v, image);
        }
        e.substitute(&bindings)
    }
}

/// Determinant by cofactor expansion along the first row.
pub fn determinant(m: &[Vec<Expr>]) -> Expr {
    match m.len() {
        0 => Expr::one(),
        1 => m[0][0].clone(),
        n => {
            let mut parts = Vec::with_capacity(n);
            for (k, lead) in m[0].iter().enumerate() {
                if lead.is_zero() {
                    continue;
                }
                let minor: Vec<Vec<Expr>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(j, _)| *j != k)
                            .map(|(_, e)| e.clone())
                            .collect()
                    })
                    .collect();
                let t = lead.mul_ref(&determinant(&minor));
                parts.push(if k % 2 == 1 { t.neg_ref() } else { t });
            }
            Expr::sum(parts.iter())
        }
    }
}

/// Jacobian matrix `∂ map_i / ∂ x^j` over `n` base coordinates.
pub fn jacobian(map: &[Expr], n: usize) -> Vec<Vec<Expr>> {
    map.iter()
        .map(|f| (0..n).map(|j| f.partial(&VarRef::base(j))).collect())
        .collect()
}
