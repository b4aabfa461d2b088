//! The affine empirical estimator `p_hat_i = A t_i / n - B` and its exact
//! finite-sample moments.

use serde::{Deserialize, Serialize};

use crate::error::{LdpError, Result};
use crate::mechanisms::subset::{validate_parameters, SubsetSample};
use crate::simplex::ProbabilityVector;

/// Affine constants of the estimator for `(k, eps, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorCoefficients {
    pub a: f64,
    pub b: f64,
}

/// `A = ((k-1) e^eps + (k-1)(k-d)/d) / ((k-d)(e^eps - 1))`,
/// `B = ((d-1) e^eps + k - d) / ((k-d)(e^eps - 1))`.
pub fn coefficients(k: usize, epsilon: f64, d: usize) -> Result<EstimatorCoefficients> {
    validate_parameters(k, epsilon, d)?;
    let (kf, df) = (k as f64, d as f64);
    let e = epsilon.exp();
    let denom = (kf - df) * epsilon.exp_m1();
    Ok(EstimatorCoefficients {
        a: ((kf - 1.0) * e + (kf - 1.0) * (kf - df) / df) / denom,
        b: ((df - 1.0) * e + kf - df) / denom,
    })
}

impl EstimatorCoefficients {
    /// Probability that a report contains symbol `i` when `P(X = i) = p_i`:
    /// `(p_i + B) / A`.
    pub fn membership_probability(&self, p_i: f64) -> f64 {
        (p_i + self.b) / self.a
    }
}

/// Per-symbol report counts `t_i` over `n` reports of size `d`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountVector {
    pub t: Vec<u64>,
    pub n: u64,
}

impl CountVector {
    pub fn zeros(k: usize) -> Self {
        Self { t: vec![0; k], n: 0 }
    }

    /// Associative merge of partial counts.
    pub fn merge(&mut self, other: &CountVector) -> Result<()> {
        if other.t.len() != self.t.len() {
            return Err(LdpError::Dimension {
                expected: self.t.len(),
                actual: other.t.len(),
            });
        }
        for (a, b) in self.t.iter_mut().zip(&other.t) {
            *a += b;
        }
        self.n += other.n;
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.t.len()
    }
}

/// Counts how many reports contain each symbol. All reports must have the
/// same size and lie in `0..k`.
pub fn count_occurrences(samples: &[SubsetSample], k: usize) -> Result<CountVector> {
    let mut counts = CountVector::zeros(k);
    let Some(first) = samples.first() else {
        return Ok(counts);
    };
    let d = first.len();
    for s in samples {
        if s.len() != d {
            return Err(LdpError::Dimension {
                expected: d,
                actual: s.len(),
            });
        }
        match s {
            SubsetSample::Mask(m) => {
                if k < 64 && m >> k != 0 {
                    return Err(LdpError::Parameter(format!("report {m:#b} has a member outside 0..{k}")));
                }
                let mut bits = *m;
                while bits != 0 {
                    counts.t[bits.trailing_zeros() as usize] += 1;
                    bits &= bits - 1;
                }
            }
            SubsetSample::Indices(v) => {
                for &i in v {
                    let slot = counts.t.get_mut(i as usize).ok_or_else(|| {
                        LdpError::Parameter(format!("report member {i} outside 0..{k}"))
                    })?;
                    *slot += 1;
                }
            }
        }
    }
    counts.n = samples.len() as u64;
    Ok(counts)
}

/// `p_hat_i = A t_i / n - B`. The result sums to one but may leave the
/// simplex.
pub fn empirical_estimate(counts: &CountVector, coeffs: &EstimatorCoefficients) -> Result<Vec<f64>> {
    if counts.n == 0 {
        return Err(LdpError::EmptyBatch);
    }
    let mut out = vec![0.0; counts.k()];
    estimate_into(&counts.t, counts.n, coeffs, &mut out);
    Ok(out)
}

#[inline]
pub(crate) fn estimate_into(t: &[u64], n: u64, coeffs: &EstimatorCoefficients, out: &mut [f64]) {
    let scale = coeffs.a / n as f64;
    for (o, &ti) in out.iter_mut().zip(t) {
        *o = scale * ti as f64 - coeffs.b;
    }
}

/// Euclidean projection onto the probability simplex (sort-and-threshold).
pub fn project_to_simplex(estimate: &[f64]) -> Result<ProbabilityVector> {
    let mut out = estimate.to_vec();
    project_in_place(&mut out)?;
    ProbabilityVector::new(out)
}

pub(crate) fn project_in_place(v: &mut [f64]) -> Result<()> {
    if v.len() < 2 {
        return Err(LdpError::InvalidAlphabet { k: v.len() });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(LdpError::Parameter("cannot project a non-finite vector".into()));
    }
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    // theta = (sum of the rho largest entries - 1) / rho for the largest rho
    // with sorted[rho-1] > theta.
    let mut prefix = 0.0;
    let mut theta = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        prefix += s;
        let candidate = (prefix - 1.0) / (i + 1) as f64;
        if s > candidate {
            theta = candidate;
        } else {
            break;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
    // Absorb rounding so the result passes the simplex tolerance.
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.iter_mut().for_each(|x| *x /= total);
    }
    Ok(())
}

/// Exact mean and variance of one coordinate of the raw estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoordinateMoments {
    pub mean: f64,
    pub variance: f64,
}

/// The raw estimator is unbiased and `Var p_hat_i = (p_i + B)(A - p_i - B) / n`.
pub fn exact_estimator_moments(
    p: &ProbabilityVector,
    epsilon: f64,
    d: usize,
    n: u64,
) -> Result<Vec<CoordinateMoments>> {
    if n == 0 {
        return Err(LdpError::EmptyBatch);
    }
    let c = coefficients(p.k(), epsilon, d)?;
    Ok(p.as_slice()
        .iter()
        .map(|&pi| CoordinateMoments {
            mean: pi,
            variance: (pi + c.b) * (c.a - pi - c.b) / n as f64,
        })
        .collect())
}

/// `E l_2^2(p_hat, p) = sum_i Var p_hat_i`.
pub fn exact_l2_risk(p: &ProbabilityVector, epsilon: f64, d: usize, n: u64) -> Result<f64> {
    Ok(exact_estimator_moments(p, epsilon, d, n)?
        .iter()
        .map(|m| m.variance)
        .sum())
}
