use serde::Serialize;

use crate::error::{Error, Result};
use crate::par::{map_range, neumaier_sum, Execution};

pub const DEFAULT_NODES: usize = 96;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on `P_n` from the Chebyshev guesses.
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "quadrature needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for k in 0..n.div_ceil(2) {
            let mut z = (std::f64::consts::PI * (k as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, z);
                dp = d;
                let step = p / d;
                z -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, z);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[k] = -z;
            nodes[n - 1 - k] = z;
            weights[k] = w;
            weights[n - 1 - k] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// `(node, weight)` pairs for `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| (mid + half * x, half * w))
            .collect()
    }
}

/// `(P_n(z), P_n'(z))` by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Integration domain in base coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// Product of intervals, one per base coordinate.
    Box { bounds: Vec<(f64, f64)> },
    /// Spherical shell about the origin in three dimensions, integrated in
    /// spherical coordinates.
    Shell { radii: (f64, f64) },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub domain: Domain,
    /// Gauss–Legendre nodes per axis.
    pub nodes: usize,
}

fn check_interval(what: &str, (a, b): (f64, f64)) -> Result<()> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::Validation {
            entity: "region".into(),
            reason: format!("{what} interval ({a}, {b}) must be finite and increasing"),
        });
    }
    Ok(())
}

impl Region {
    pub fn new(domain: Domain, nodes: usize) -> Result<Self> {
        let region = Region { domain, nodes };
        region.validate()?;
        Ok(region)
    }

    pub fn cube(bounds: Vec<(f64, f64)>) -> Result<Self> {
        Region::new(Domain::Box { bounds }, DEFAULT_NODES)
    }

    pub fn shell(r0: f64, r1: f64) -> Result<Self> {
        Region::new(Domain::Shell { radii: (r0, r1) }, DEFAULT_NODES)
    }

    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nodes = nodes;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes == 0 {
            return Err(Error::Validation {
                entity: "region".into(),
                reason: "needs at least one node per axis".into(),
            });
        }
        match &self.domain {
            Domain::Box { bounds } => {
                if bounds.is_empty() {
                    return Err(Error::Validation {
                        entity: "region".into(),
                        reason: "box needs at least one interval".into(),
                    });
                }
                bounds.iter().try_for_each(|b| check_interval("box", *b))
            }
            Domain::Shell { radii } => {
                check_interval("radial", *radii)?;
                if radii.0 < 0.0 {
                    return Err(Error::Validation {
                        entity: "region".into(),
                        reason: "shell radii must be non-negative".into(),
                    });
                }
                Ok(())
            }
        }
    }

    pub fn dim(&self) -> usize {
        match &self.domain {
            Domain::Box { bounds } => bounds.len(),
            Domain::Shell { .. } => 3,
        }
    }

    /// Parameter intervals of the quadrature grid.
    fn parameter_box(&self) -> Vec<(f64, f64)> {
        match &self.domain {
            Domain::Box { bounds } => bounds.clone(),
            Domain::Shell { radii } => vec![*radii, (0.0, std::f64::consts::PI), (0.0, 2.0 * std::f64::consts::PI)],
        }
    }

    /// Base point and volume factor for grid parameters `t`.
    fn map(&self, t: &[f64], out: &mut [f64]) -> f64 {
        match &self.domain {
            Domain::Box { .. } => {
                out.copy_from_slice(t);
                1.0
            }
            Domain::Shell { .. } => {
                let (r, theta, phi) = (t[0], t[1], t[2]);
                let (st, ct) = theta.sin_cos();
                let (sp, cp) = phi.sin_cos();
                out[0] = r * st * cp;
                out[1] = r * st * sp;
                out[2] = r * ct;
                r * r * st
            }
        }
    }

    /// Deterministic pseudo-random points inside the region.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let params = self.parameter_box();
        (0..count)
            .map(|_| {
                let t: Vec<f64> = params.iter().map(|&(a, b)| rng.gen_range(a..b)).collect();
                let mut x = vec![0.0; self.dim()];
                self.map(&t, &mut x);
                x
            })
            .collect()
    }
}

/// Value of an integral with its resolution check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralReport {
    pub value: f64,
    /// `|I_n - I_{n/2}|`.
    pub error_estimate: f64,
    pub nodes: usize,
    pub evaluations: usize,
}

/// Tensor-product Gauss–Legendre sum with `nodes` per axis. The outermost
/// axis is split across threads; each slice is summed in order.
pub fn tensor_quadrature(
    region: &Region,
    nodes: usize,
    exec: Execution,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
) -> Result<f64> {
    let rule = GaussLegendre::new(nodes);
    let axes: Vec<Vec<(f64, f64)>> = region.parameter_box().iter().map(|&(a, b)| rule.on(a, b)).collect();
    let d = axes.len();
    let inner: usize = axes[1..].iter().map(Vec::len).product();
    let slices = map_range(exec, axes[0].len(), |i0| -> Result<f64> {
        let mut t = vec![0.0; d];
        let mut x = vec![0.0; d];
        let mut idx = vec![0usize; d];
        let mut values = Vec::with_capacity(inner);
        for _ in 0..inner {
            let mut w = axes[0][i0].1;
            t[0] = axes[0][i0].0;
            for k in 1..d {
                t[k] = axes[k][idx[k]].0;
                w *= axes[k][idx[k]].1;
            }
            let jac = region.map(&t, &mut x);
            let v = f(&x);
            if !v.is_finite() {
                return Err(Error::NonFinite);
            }
            values.push(v * w * jac);
            for k in (1..d).rev() {
                idx[k] += 1;
                if idx[k] < axes[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
        Ok(neumaier_sum(values))
    });
    Ok(neumaier_sum(slices.into_iter().collect::<Result<Vec<_>>>()?))
}

/// Integrate at the region's resolution and at half of it.
pub fn integrate_fn(region: &Region, exec: Execution, f: &(dyn Fn(&[f64]) -> f64 + Sync)) -> Result<IntegralReport> {
    region.validate()?;
    let value = tensor_quadrature(region, region.nodes, exec, f)?;
    let half = (region.nodes / 2).max(1);
    let coarse = tensor_quadrature(region, half, exec, f)?;
    let d = region.dim() as u32;
    Ok(IntegralReport {
        value,
        error_estimate: (value - coarse).abs(),
        nodes: region.nodes,
        evaluations: region.nodes.pow(d) + half.pow(d),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two_and_integrate_polynomials() {
        for n in [1, 2, 5, 48, 96] {
            let g = GaussLegendre::new(n);
            assert!((g.weights.iter().sum::<f64>() - 2.0).abs() < 1e-13, "n={n}");
            let deg = 2 * n - 1;
            let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
            let got: f64 = g
                .nodes
                .iter()
                .zip(&g.weights)
                .map(|(x, w)| w * x.powi(deg as i32))
                .sum();
            assert!((got - exact).abs() < 1e-13, "n={n}");
            let even = 2 * (n - 1);
            let got: f64 = g
                .nodes
                .iter()
                .zip(&g.weights)
                .map(|(x, w)| w * x.powi(even as i32))
                .sum();
            assert!((got - 2.0 / (even as f64 + 1.0)).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn nodes_are_sorted_and_interior() {
        let g = GaussLegendre::new(96);
        assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(g.nodes[0] > -1.0 && g.nodes[95] < 1.0);
    }

    #[test]
    fn unit_cube_volume() {
        let r = Region::cube(vec![(0.0, 1.0); 3]).unwrap().with_nodes(8);
        let rep = integrate_fn(&r, Execution::Sequential, &|_| 1.0).unwrap();
        assert!((rep.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shell_volume_and_odd_integrand() {
        let r = Region::shell(1.0, 2.0).unwrap().with_nodes(24);
        let rep = integrate_fn(&r, Execution::Parallel, &|_| 1.0).unwrap();
        let exact = 4.0 / 3.0 * std::f64::consts::PI * 7.0;
        assert!((rep.value - exact).abs() < 1e-11 * exact);
        let odd = integrate_fn(&r, Execution::Parallel, &|x| x[0] * x[1] * x[1]).unwrap();
        assert!(odd.value.abs() < 1e-10);
    }

    #[test]
    fn non_finite_samples_are_reported() {
        let r = Region::cube(vec![(-1.0, 1.0)]).unwrap().with_nodes(4);
        assert!(matches!(
            integrate_fn(&r, Execution::Sequential, &|_| f64::NAN),
            Err(Error::NonFinite)
        ));
    }

    #[test]
    fn invalid_regions() {
        assert!(Region::cube(vec![(1.0, 0.0)]).is_err());
        assert!(Region::cube(vec![(0.0, f64::INFINITY)]).is_err());
        assert!(Region::shell(-1.0, 1.0).is_err());
        assert!(Region::cube(vec![]).is_err());
    }
}
