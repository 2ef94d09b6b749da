use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::{sample_base_points, Expr, MultiIndex, SampleRegion, VarRef};
use crate::jet::{determinant, jacobian, BundleChart, JetMap};

/// Base chart adapted to a group action: orbit coordinates `x̂` followed by
/// invariant coordinates `y`, with the fiber coordinates carried over
/// unchanged.
#[derive(Debug, Clone)]
pub struct AdaptedChart {
    original: BundleChart,
    adapted: BundleChart,
    reduced: BundleChart,
    orbit: Vec<usize>,
    invariant: Vec<usize>,
    forward: Vec<Expr>,
    inverse: Vec<Expr>,
    orbit_point: Vec<Expr>,
    to_adapted: JetMap,
    to_original: JetMap,
}

fn bindings(map: &[Expr]) -> BTreeMap<VarRef, Expr> {
    map.iter()
        .enumerate()
        .map(|(i, e)| (VarRef::base(i), e.clone()))
        .collect()
}

impl AdaptedChart {
    /// `forward[j]` writes adapted base coordinate `j` in original
    /// coordinates, `inverse[i]` writes original coordinate `i` in adapted
    /// ones, and `orbit` lists the adapted base names spanning group orbits.
    pub fn new(
        original: BundleChart,
        adapted: BundleChart,
        orbit: &[&str],
        forward: Vec<Expr>,
        inverse: Vec<Expr>,
    ) -> Result<Self> {
        let (n, m) = (original.n(), original.m());
        let invalid = |reason: String| Error::Validation {
            entity: "adapted chart".into(),
            reason,
        };
        if adapted.n() != n || adapted.m() != m {
            return Err(invalid(format!(
                "adapted chart must have n={n} base and m={m} fiber coordinates"
            )));
        }
        if forward.len() != n || inverse.len() != n {
            return Err(invalid(format!("base maps need {n} components")));
        }
        let mut orbit_idx = Vec::new();
        for name in orbit {
            let i = adapted.base_index(name).ok_or_else(|| Error::UnknownEntity {
                kind: "orbit coordinate",
                name: name.to_string(),
            })?;
            if orbit_idx.contains(&i) {
                return Err(invalid(format!("orbit coordinate `{name}` listed twice")));
            }
            orbit_idx.push(i);
        }
        orbit_idx.sort_unstable();
        if orbit_idx.is_empty() || orbit_idx.len() >= n {
            return Err(invalid("need between 1 and n-1 orbit coordinates".into()));
        }
        let invariant: Vec<usize> = (0..n).filter(|i| !orbit_idx.contains(i)).collect();
        if forward
            .iter()
            .chain(&inverse)
            .any(|e| e.max_order() > 0 || e.vars().iter().any(VarRef::is_jet))
        {
            return Err(invalid("base maps may depend on base coordinates only".into()));
        }

        // F^{-1}(F(x)) = x and F(F^{-1}(y)) = y.
        let there = bindings(&forward);
        let back = bindings(&inverse);
        for i in 0..n {
            let roundtrip = inverse[i].substitute(&there)?;
            if !original.equal(&roundtrip, &original.x(i))?.equal {
                return Err(Error::InverseMismatch(format!(
                    "inverse({}) does not return `{}`",
                    original.base_names()[i],
                    original.base_names()[i]
                )));
            }
            let roundtrip = forward[i].substitute(&back)?;
            if !adapted.equal(&roundtrip, &adapted.x(i))?.equal {
                return Err(Error::InverseMismatch(format!(
                    "forward(inverse) does not return `{}`",
                    adapted.base_names()[i]
                )));
            }
        }
        check_jacobian(&original, &forward)?;

        let region = SampleRegion {
            base: invariant
                .iter()
                .map(|&i| adapted.region().base.get(i).copied().unwrap_or((0.25, 2.0)))
                .collect(),
            jet: adapted.region().jet,
        };
        let reduced_base: Vec<&str> = invariant.iter().map(|&i| adapted.base_names()[i].as_str()).collect();
        let fibers: Vec<&str> = adapted.fiber_names().iter().map(String::as_str).collect();
        let reduced = BundleChart::new(&reduced_base, &fibers)?
            .with_order_cap(adapted.order_cap())
            .with_region(region)
            .with_oracle(*adapted.oracle());

        let adapted_fiber = (0..m).map(|a| adapted.u(a, &[])).collect();
        let to_adapted = JetMap::from_base_maps(adapted.clone(), inverse.clone(), &forward, adapted_fiber)?;
        let original_fiber = (0..m).map(|a| original.u(a, &[])).collect();
        let to_original = JetMap::from_base_maps(original.clone(), forward.clone(), &inverse, original_fiber)?;
        let orbit_point = vec![Expr::zero(); orbit_idx.len()];
        Ok(AdaptedChart {
            original,
            adapted,
            reduced,
            orbit: orbit_idx,
            invariant,
            forward,
            inverse,
            orbit_point,
            to_adapted,
            to_original,
        })
    }

    /// Orbit coordinates substituted when a reduced expression still
    /// mentions them syntactically after the invariance check.
    pub fn with_orbit_point(mut self, point: Vec<Expr>) -> Result<Self> {
        if point.len() != self.orbit.len() || point.iter().any(|e| e.as_constant().is_none()) {
            return Err(Error::Validation {
                entity: "orbit point".into(),
                reason: format!("need {} constants", self.orbit.len()),
            });
        }
        self.orbit_point = point;
        Ok(self)
    }

    pub fn original(&self) -> &BundleChart {
        &self.original
    }

    pub fn adapted(&self) -> &BundleChart {
        &self.adapted
    }

    pub fn reduced(&self) -> &BundleChart {
        &self.reduced
    }

    pub fn orbit(&self) -> &[usize] {
        &self.orbit
    }

    pub fn invariant(&self) -> &[usize] {
        &self.invariant
    }

    pub fn forward(&self) -> &[Expr] {
        &self.forward
    }

    pub fn inverse(&self) -> &[Expr] {
        &self.inverse
    }

    pub fn orbit_point(&self) -> &[Expr] {
        &self.orbit_point
    }

    pub fn q(&self) -> usize {
        self.orbit.len()
    }

    /// Rewrite an expression over the original jet chart in adapted jet
    /// coordinates by the prolonged chain rule.
    pub fn prolong_change_of_coords(&self, e: &Expr) -> Result<Expr> {
        self.to_adapted.apply(e)
    }

    /// Inverse direction of [`AdaptedChart::prolong_change_of_coords`].
    pub fn prolong_to_original(&self, e: &Expr) -> Result<Expr> {
        self.to_original.apply(e)
    }

    /// `∂x^i/∂ŷ^j` in adapted coordinates, for rewriting `dx^i`.
    pub fn inverse_jacobian(&self) -> Vec<Vec<Expr>> {
        jacobian(&self.inverse, self.adapted.n())
    }

    fn is_orbit_index(&self, index: &MultiIndex) -> bool {
        index.indices().iter().any(|i| self.orbit.contains(i))
    }

    /// Set every jet coordinate carrying an orbit index to zero.
    pub fn zero_orbit_jets(&self, e: &Expr) -> Result<Expr> {
        let zeros: BTreeMap<VarRef, Expr> = e
            .vars()
            .into_iter()
            .filter(|v| matches!(v, VarRef::Jet { index, .. } if self.is_orbit_index(index)))
            .map(|v| (v, Expr::zero()))
            .collect();
        e.substitute(&zeros)
    }

    /// Restrict an adapted-chart expression to invariant jets and express it
    /// on the reduced chart.
    pub fn restrict_to_invariant(&self, e: &Expr) -> Result<Expr> {
        let e = self.zero_orbit_jets(e)?;
        for &k in &self.orbit {
            let d = e.partial(&VarRef::base(k));
            if d.is_zero() {
                continue;
            }
            if !self.adapted.is_zero(&d)?.equal {
                return Err(Error::InvarianceViolation {
                    coordinate: self.adapted.base_names()[k].clone(),
                    derivative: self.adapted.show(&d),
                });
            }
        }
        let e = self.eliminate_orbit_coords(&e)?;
        self.to_reduced(&e)
    }

    /// Remove orbit coordinates that survive only syntactically, by
    /// evaluating on the orbit point or, failing that, the region midpoint.
    fn eliminate_orbit_coords(&self, e: &Expr) -> Result<Expr> {
        if !self.orbit.iter().any(|&k| e.depends_on(&VarRef::base(k))) {
            return Ok(e.clone());
        }
        let at_point: BTreeMap<VarRef, Expr> = self
            .orbit
            .iter()
            .zip(&self.orbit_point)
            .map(|(&k, p)| (VarRef::base(k), p.clone()))
            .collect();
        match e.substitute(&at_point) {
            Ok(r) => Ok(r),
            Err(Error::DivisionByZero) | Err(Error::NegativeRadicand) => {
                let mid: BTreeMap<VarRef, Expr> = self
                    .orbit
                    .iter()
                    .map(|&k| {
                        let m = self.adapted.region().midpoint(k);
                        let c = num_rational::BigRational::from_float(m).expect("finite region midpoint");
                        (VarRef::base(k), Expr::constant(c))
                    })
                    .collect();
                e.substitute(&mid)
            }
            Err(err) => Err(err),
        }
    }

    fn to_reduced(&self, e: &Expr) -> Result<Expr> {
        let pos: BTreeMap<usize, usize> = self.invariant.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        e.rename(&|v: &VarRef| match v {
            VarRef::Base(i) => VarRef::Base(pos[i]),
            VarRef::Jet { fiber, index } => VarRef::Jet {
                fiber: *fiber,
                index: MultiIndex::new(index.indices().iter().map(|i| pos[i]).collect()),
            },
        })
    }

    /// Reduced-chart index of an invariant adapted coordinate.
    pub fn reduced_index(&self, adapted_index: usize) -> Option<usize> {
        self.invariant.iter().position(|&i| i == adapted_index)
    }

    /// Lift a reduced-chart expression to the adapted chart.
    pub fn lift_reduced(&self, e: &Expr) -> Result<Expr> {
        e.rename(&|v: &VarRef| match v {
            VarRef::Base(k) => VarRef::Base(self.invariant[*k]),
            VarRef::Jet { fiber, index } => VarRef::Jet {
                fiber: *fiber,
                index: MultiIndex::new(index.indices().iter().map(|k| self.invariant[*k]).collect()),
            },
        })
    }
}

fn check_jacobian(original: &BundleChart, forward: &[Expr]) -> Result<()> {
    let n = original.n();
    let det = determinant(&jacobian(forward, n));
    if original.is_zero(&det)?.equal {
        return Err(Error::SingularJacobian("forward map is degenerate".into()));
    }
    let margin = original.oracle().margin;
    for point in sample_base_points(original.region(), n, 16, original.oracle().seed) {
        let value = det.evaluate_with(&|v: &VarRef| match v {
            VarRef::Base(i) => point.get(*i).copied(),
            VarRef::Jet { .. } => None,
        });
        if let Ok(d) = value {
            if d.abs() < margin {
                return Err(Error::SingularJacobian(format!(
                    "forward map degenerates near {point:?}"
                )));
            }
        }
    }
    Ok(())
}
