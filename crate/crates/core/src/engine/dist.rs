//! Bounded continuous distributions used in node probability tables and
//! their discretization onto bin edges.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// A one-dimensional distribution with bounded support.
///
/// `TNormal` is the Normal density renormalized on `[lower, upper]`; its
/// `variance` is the variance of the untruncated Normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Distribution {
    #[serde(rename = "tnormal")]
    TNormal {
        mean: f64,
        variance: f64,
        lower: f64,
        upper: f64,
    },
    Exponential {
        mean: f64,
        lower: f64,
        upper: f64,
    },
    PointMass {
        value: f64,
    },
    Uniform {
        lower: f64,
        upper: f64,
    },
}

/// Mean and variance of a distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

/// Standard normal density.
pub fn std_normal_pdf(z: f64) -> f64 {
    if z.is_infinite() {
        return 0.0;
    }
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// P(za <= Z <= zb) for a standard normal Z, computed from whichever tail
/// keeps the subtraction well conditioned.
pub fn std_normal_interval(za: f64, zb: f64) -> f64 {
    if za >= zb {
        return 0.0;
    }
    if za >= 0.0 {
        // both in the upper tail
        0.5 * (libm::erfc(za / SQRT_2) - libm::erfc(zb / SQRT_2))
    } else if zb <= 0.0 {
        0.5 * (libm::erfc(-zb / SQRT_2) - libm::erfc(-za / SQRT_2))
    } else {
        1.0 - 0.5 * libm::erfc(-za / SQRT_2) - 0.5 * libm::erfc(zb / SQRT_2)
    }
}

impl Distribution {
    pub fn tnormal(mean: f64, variance: f64, lower: f64, upper: f64) -> Self {
        Distribution::TNormal {
            mean,
            variance,
            lower,
            upper,
        }
    }

    pub fn exponential(mean: f64, lower: f64, upper: f64) -> Self {
        Distribution::Exponential { mean, lower, upper }
    }

    /// Checks the parameter invariants.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidDistribution(format!("{msg}: {self:?}")));
        match *self {
            Distribution::TNormal {
                mean,
                variance,
                lower,
                upper,
            } => {
                if !(variance > 0.0) || !variance.is_finite() {
                    return bad("variance must be positive");
                }
                if !mean.is_finite() {
                    return bad("mean must be finite");
                }
                if !(lower < upper) {
                    return bad("lower bound must be below upper bound");
                }
            }
            Distribution::Exponential { mean, lower, upper } => {
                if !(mean > 0.0) || !mean.is_finite() {
                    return bad("mean must be positive");
                }
                if !(lower < upper) || !lower.is_finite() {
                    return bad("bounds must satisfy lower < upper with finite lower");
                }
            }
            Distribution::PointMass { value } => {
                if !value.is_finite() {
                    return bad("value must be finite");
                }
            }
            Distribution::Uniform { lower, upper } => {
                if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
                    return bad("bounds must be finite with lower < upper");
                }
            }
        }
        Ok(())
    }

    /// Support of the distribution as a closed interval.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Distribution::TNormal { lower, upper, .. }
            | Distribution::Exponential { lower, upper, .. }
            | Distribution::Uniform { lower, upper } => (lower, upper),
            Distribution::PointMass { value } => (value, value),
        }
    }

    /// Probability mass on `[a, b]`. Point masses are handled by
    /// [`discretize`], which needs the half-open bin convention.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        let (lo, hi) = self.support();
        let a = a.max(lo);
        let b = b.min(hi);
        if !(a < b) {
            return 0.0;
        }
        match *self {
            Distribution::TNormal {
                mean,
                variance,
                lower,
                upper,
            } => {
                let sd = variance.sqrt();
                let z = |x: f64| (x - mean) / sd;
                let total = std_normal_interval(z(lower), z(upper));
                if total <= 0.0 {
                    return 0.0;
                }
                std_normal_interval(z(a), z(b)) / total
            }
            Distribution::Exponential { mean, lower, upper } => {
                // e^{-x/m} - e^{-y/m} = -e^{-x/m} * expm1(-(y-x)/m)
                let seg = |x: f64, y: f64| {
                    if y.is_infinite() {
                        (-x / mean).exp()
                    } else {
                        -(-x / mean).exp() * (-(y - x) / mean).exp_m1()
                    }
                };
                let total = seg(lower, upper);
                if total <= 0.0 {
                    return 0.0;
                }
                seg(a, b) / total
            }
            Distribution::Uniform { lower, upper } => (b - a) / (upper - lower),
            Distribution::PointMass { .. } => 0.0,
        }
    }

    /// Mean and variance of the (truncated) distribution.
    pub fn moments(&self) -> Moments {
        match *self {
            Distribution::TNormal {
                mean,
                variance,
                lower,
                upper,
            } => tnormal_moments(mean, variance, lower, upper),
            Distribution::Exponential { mean, lower, upper } => {
                // shift to the origin; the truncated exponential on [0, w]
                let w = upper - lower;
                if w.is_infinite() {
                    return Moments {
                        mean: lower + mean,
                        variance: mean * mean,
                    };
                }
                let r = w / mean;
                let e = (-r).exp();
                let denom = -(-r).exp_m1();
                let m1 = mean - w * e / denom;
                let m2 = 2.0 * mean * mean - (w * w + 2.0 * mean * w) * e / denom;
                Moments {
                    mean: lower + m1,
                    variance: (m2 - m1 * m1).max(0.0),
                }
            }
            Distribution::PointMass { value } => Moments {
                mean: value,
                variance: 0.0,
            },
            Distribution::Uniform { lower, upper } => Moments {
                mean: 0.5 * (lower + upper),
                variance: (upper - lower).powi(2) / 12.0,
            },
        }
    }
}

/// Closed-form moments of a Normal(mean, variance) truncated to
/// `[lower, upper]`.
pub fn tnormal_moments(mean: f64, variance: f64, lower: f64, upper: f64) -> Moments {
    let sd = variance.sqrt();
    let alpha = (lower - mean) / sd;
    let beta = (upper - mean) / sd;
    let z = std_normal_interval(alpha, beta);
    let (pa, pb) = (std_normal_pdf(alpha), std_normal_pdf(beta));
    let xa = if alpha.is_finite() { alpha * pa } else { 0.0 };
    let xb = if beta.is_finite() { beta * pb } else { 0.0 };
    let shift = (pa - pb) / z;
    Moments {
        mean: mean + sd * shift,
        variance: variance * (1.0 + (xa - xb) / z - shift * shift),
    }
}

/// Index of the bin containing `x`: bins are half-open except the last,
/// which is closed. `None` when `x` lies outside the edge range.
pub fn bin_index(edges: &[f64], x: f64) -> Option<usize> {
    let n = edges.len();
    if n < 2 || !(x >= edges[0] && x <= edges[n - 1]) {
        return None;
    }
    if x == edges[n - 1] {
        return Some(n - 2);
    }
    // first edge strictly greater than x, minus one
    let upper = edges.partition_point(|&e| e <= x);
    Some(upper - 1)
}

pub fn check_edges(edges: &[f64]) -> Result<()> {
    if edges.len() < 2 {
        return Err(Error::InvalidEdges("need at least two bin edges".into()));
    }
    if edges.iter().any(|e| !e.is_finite()) {
        return Err(Error::InvalidEdges("bin edges must be finite".into()));
    }
    if edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidEdges("bin edges must be strictly increasing".into()));
    }
    Ok(())
}

/// Probability of each bin `[edges[i], edges[i+1])`, renormalized over the
/// edge range.
pub fn discretize(dist: &Distribution, edges: &[f64]) -> Result<Vec<f64>> {
    check_edges(edges)?;
    dist.validate()?;
    let bins = edges.len() - 1;
    let mut probs = vec![0.0; bins];
    if let Distribution::PointMass { value } = *dist {
        let i = bin_index(edges, value).ok_or(Error::ZeroMass)?;
        probs[i] = 1.0;
        return Ok(probs);
    }
    for (i, w) in edges.windows(2).enumerate() {
        probs[i] = dist.mass(w[0], w[1]);
    }
    let total: f64 = probs.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::ZeroMass);
    }
    probs.iter_mut().for_each(|p| *p /= total);
    Ok(probs)
}

/// `n` equal-width edges spanning `[lo, hi]`.
pub fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let width = (hi - lo) / bins as f64;
    (0..=bins)
        .map(|i| if i == bins { hi } else { lo + width * i as f64 })
        .collect()
}

pub fn bin_midpoints(edges: &[f64]) -> Vec<f64> {
    edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn huge_variance_is_flat() {
        let d = Distribution::tnormal(0.5, 1000.0, 0.0, 1.0);
        let p = discretize(&d, &uniform_edges(0.0, 1.0, 10)).unwrap();
        for x in p {
            assert!((x - 0.1).abs() < 1e-3);
        }
    }

    #[test]
    fn symmetric_tnormal_is_symmetric() {
        let d = Distribution::tnormal(0.5, 0.01, 0.0, 1.0);
        let p = discretize(&d, &uniform_edges(0.0, 1.0, 10)).unwrap();
        assert!((p[4] - p[5]).abs() < 1e-12);
        for i in 0..5 {
            assert!((p[i] - p[9 - i]).abs() < 1e-12);
        }
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_truncation_keeps_mean() {
        let m = tnormal_moments(0.5, 0.001, 0.0, 1.0);
        assert!((m.mean - 0.5).abs() < 1e-15);
        let m = tnormal_moments(0.25, 0.1, 0.0, 1.0);
        assert!(m.mean > 0.25);
    }

    #[test]
    fn bin_lookup_half_open() {
        let edges = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(bin_index(&edges, 0.0), Some(0));
        assert_eq!(bin_index(&edges, 1.0), Some(1));
        assert_eq!(bin_index(&edges, 2.999), Some(2));
        assert_eq!(bin_index(&edges, 3.0), Some(2));
        assert_eq!(bin_index(&edges, 3.01), None);
        assert_eq!(bin_index(&edges, -0.01), None);
    }

    #[test]
    fn zero_mass_is_an_error() {
        let d = Distribution::Uniform {
            lower: 5.0,
            upper: 6.0,
        };
        assert!(matches!(
            discretize(&d, &[0.0, 1.0, 2.0]),
            Err(Error::ZeroMass)
        ));
    }

    #[test]
    fn point_mass_lands_in_one_bin() {
        let d = Distribution::PointMass { value: 22.0 };
        let p = discretize(&d, &uniform_edges(0.0, 70.0, 14)).unwrap();
        assert_eq!(p[4], 1.0);
    }

    #[test]
    fn rejects_bad_edges() {
        let d = Distribution::tnormal(0.5, 0.1, 0.0, 1.0);
        assert!(discretize(&d, &[0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(discretize(&d, &[0.0]).is_err());
    }
}
