use std::collections::BTreeMap;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::eval::EvalFault;
use super::{Atom, Exponent, Expr, Monomial, VarRef};
use crate::error::{Error, Result};

/// Settings for the randomized fallback of the equality oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub seed: u64,
    pub tolerance: f64,
    pub samples: usize,
    pub max_attempts: usize,
    /// Denominators and radicands closer to zero than this reject a point.
    pub margin: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            seed: 0,
            tolerance: 1e-9,
            samples: 20,
            max_attempts: 2000,
            margin: 1e-3,
        }
    }
}

/// Box from which sample points are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRegion {
    pub base: Vec<(f64, f64)>,
    pub jet: (f64, f64),
}

pub const DEFAULT_BASE_INTERVAL: (f64, f64) = (0.25, 2.0);
pub const DEFAULT_JET_INTERVAL: (f64, f64) = (-1.5, 1.5);

impl SampleRegion {
    pub fn uniform(n: usize) -> Self {
        SampleRegion {
            base: vec![DEFAULT_BASE_INTERVAL; n],
            jet: DEFAULT_JET_INTERVAL,
        }
    }

    fn interval(&self, v: &VarRef) -> (f64, f64) {
        match v {
            VarRef::Base(i) => self.base.get(*i).copied().unwrap_or(DEFAULT_BASE_INTERVAL),
            VarRef::Jet { .. } => self.jet,
        }
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        let (lo, hi) = self.base.get(i).copied().unwrap_or(DEFAULT_BASE_INTERVAL);
        0.5 * (lo + hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictMethod {
    /// Decided by normalization alone.
    Canonical,
    /// Decided by numeric sampling.
    Probabilistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub equal: bool,
    pub method: VerdictMethod,
}

impl Verdict {
    fn canonical(equal: bool) -> Self {
        Verdict {
            equal,
            method: VerdictMethod::Canonical,
        }
    }
}

/// Multiply through by every negative power so that only nonnegative
/// exponents remain. The result vanishes iff the input does, away from the
/// zero set of the denominators.
fn clear_denominators(e: &Expr) -> Expr {
    let mut cur = e.clone();
    for _ in 0..6 {
        let mut mins: BTreeMap<Atom, Exponent> = BTreeMap::new();
        for (m, _) in cur.terms() {
            for (a, x) in m.factors() {
                if *x < Exponent::zero() {
                    let slot = mins.entry(a.clone()).or_insert_with(Exponent::zero);
                    if *x < *slot {
                        *slot = *x;
                    }
                }
            }
        }
        if mins.is_empty() {
            break;
        }
        // Merge exponents before expanding so each denominator cancels
        // against its own atom.
        let mult = Monomial(mins.into_iter().map(|(a, x)| (a, -x)).collect());
        cur = cur.mul_monomial(&mult);
    }
    cur
}

/// True when the expression is a polynomial in coordinates only, for which
/// structural zero is decisive.
fn is_plain_polynomial(e: &Expr) -> bool {
    e.terms().all(|(m, _)| {
        m.factors()
            .iter()
            .all(|(a, x)| matches!(a, Atom::Var(_)) && x.is_integer() && *x > Exponent::zero())
    })
}

/// Decide `a == b`.
///
/// Canonical zero of `a - b`, possibly after clearing denominators, settles
/// the question exactly. Otherwise, if radicals or surds remain, both sides
/// are compared at seeded pseudo-random points of `region`.
pub fn equal(a: &Expr, b: &Expr, region: &SampleRegion, config: &OracleConfig) -> Result<Verdict> {
    let d = a.sub_ref(b);
    if d.is_zero() {
        return Ok(Verdict::canonical(true));
    }
    let cleared = clear_denominators(&d);
    if cleared.is_zero() {
        return Ok(Verdict::canonical(true));
    }
    if is_plain_polynomial(&cleared) {
        return Ok(Verdict::canonical(false));
    }
    sample_compare(a, b, &d, region, config)
}

pub fn is_zero(e: &Expr, region: &SampleRegion, config: &OracleConfig) -> Result<Verdict> {
    equal(e, &Expr::zero(), region, config)
}

fn sample_compare(a: &Expr, b: &Expr, d: &Expr, region: &SampleRegion, config: &OracleConfig) -> Result<Verdict> {
    let mut vars = a.vars();
    vars.extend(b.vars());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut valid = 0;
    let mut attempts = 0;
    while valid < config.samples {
        if attempts >= config.max_attempts {
            return Err(Error::NoSamplePoints { attempts });
        }
        attempts += 1;
        let point: BTreeMap<VarRef, f64> = vars
            .iter()
            .map(|v| {
                let (lo, hi) = region.interval(v);
                let x: f64 = rng.gen_range(lo..=hi);
                // Dyadic rationals keep the sample points exact.
                (v.clone(), (x * 1024.0).round() / 1024.0)
            })
            .collect();
        let lookup = |v: &VarRef| point.get(v).copied();
        let evals = (
            a.eval_guarded(&lookup, config.margin),
            b.eval_guarded(&lookup, config.margin),
            d.eval_guarded(&lookup, config.margin),
        );
        let ((va, sa), (vb, sb), (vd, sd)) = match evals {
            (Ok(x), Ok(y), Ok(z)) => (x, y, z),
            (Err(EvalFault::Unbound(_)), _, _) | (_, Err(EvalFault::Unbound(_)), _) => {
                unreachable!("every variable is sampled")
            }
            _ => continue,
        };
        valid += 1;
        let scale = va.abs().max(vb.abs()).max(sa).max(sb).max(sd);
        let diff = (va - vb).abs().min(vd.abs());
        if diff > config.tolerance * scale.max(f64::MIN_POSITIVE) {
            return Ok(Verdict {
                equal: false,
                method: VerdictMethod::Probabilistic,
            });
        }
    }
    Ok(Verdict {
        equal: true,
        method: VerdictMethod::Probabilistic,
    })
}

/// Seeded pseudo-random points in the base box of `region`, rounded to
/// dyadic rationals like the oracle's sample points.
pub fn sample_base_points(region: &SampleRegion, n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..n)
                .map(|i| {
                    let (lo, hi) = region.interval(&VarRef::base(i));
                    let x: f64 = rng.gen_range(lo..=hi);
                    (x * 1024.0).round() / 1024.0
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use num_rational::BigRational;

    use super::*;

    fn b(i: usize) -> Expr {
        Expr::var(VarRef::base(i))
    }

    fn region() -> SampleRegion {
        SampleRegion::uniform(4)
    }

    #[test]
    fn symmetric_jets_are_equal() {
        let a = Expr::var(VarRef::jet(0, vec![0, 1]));
        let c = Expr::var(VarRef::jet(0, vec![1, 0]));
        let v = equal(&a, &c, &region(), &OracleConfig::default()).unwrap();
        assert_eq!(v, Verdict::canonical(true));
    }

    #[test]
    fn rational_functions_decided_canonically() {
        // 1/(x+1) + 1/(x-1) == 2x/(x^2-1)
        let one = Expr::one();
        let lhs = (&b(0) + &one).recip().unwrap() + (&b(0) - &one).recip().unwrap();
        let rhs = b(0).scale(&BigRational::from_integer(2.into())) * (&(&b(0) * &b(0)) - &one).recip().unwrap();
        let v = equal(&lhs, &rhs, &region(), &OracleConfig::default()).unwrap();
        assert_eq!(v, Verdict::canonical(true));
        let v = equal(&lhs, &b(0), &region(), &OracleConfig::default()).unwrap();
        assert!(!v.equal);
    }

    #[test]
    fn radical_identity_falls_back_to_sampling() {
        // x/(x^2+y^2+z^2)^(1/2) - x/r with r bound to the same root.
        let s = &(&(&b(0) * &b(0)) + &(&b(1) * &b(1))) + &(&b(2) * &b(2));
        let r = s.pow(Exponent::new(1, 2)).unwrap();
        let lhs = b(0).div(&r).unwrap();
        let rhs = &b(0) * &s.pow(Exponent::new(-1, 2)).unwrap();
        let v = equal(&lhs, &rhs, &region(), &OracleConfig::default()).unwrap();
        assert!(v.equal);
        // sqrt(x^2 y^2 + 2xy + 1) == xy + 1 needs the numeric path.
        let xy = &b(0) * &b(1);
        let inner = &(&(&xy * &xy) + &xy.scale(&BigRational::from_integer(2.into()))) + &Expr::one();
        let root = inner.pow(Exponent::new(1, 2)).unwrap();
        let v = equal(&root, &(&xy + &Expr::one()), &region(), &OracleConfig::default()).unwrap();
        assert_eq!(v.method, VerdictMethod::Probabilistic);
        assert!(v.equal);
        let v = equal(&root, &xy, &region(), &OracleConfig::default()).unwrap();
        assert!(!v.equal);
    }

    #[test]
    fn no_valid_points_is_an_error() {
        // (x - 5)^(1/2) never has a valid sample in (0.25, 2).
        let e = (&b(0) - &Expr::integer(5)).pow(Exponent::new(1, 2)).unwrap();
        let r = equal(&e, &Expr::one(), &region(), &OracleConfig::default());
        assert!(matches!(r, Err(Error::NoSamplePoints { .. })));
    }
}
