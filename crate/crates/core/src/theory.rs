//! Closed-form constants, risks and bounds for subset-selection estimation.
//!
//! Everything here is a pure function. Fisher information is reported per
//! sample; multiply by `n` for the information of a size-`n` batch.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{LdpError, Result};
use crate::mechanisms::finite::{is_extremal, FiniteMechanism};
use crate::mechanisms::subset::{
    check_alphabet, check_epsilon, optimal_d, subset_size_objective, validate_parameters,
};
use crate::simplex::ProbabilityVector;

/// `C_u = E|Z|^u = 2^{u/2} Gamma((u+1)/2) / sqrt(pi)` for standard normal `Z`.
pub fn c_u(u: f64) -> Result<f64> {
    if !(u > 0.0) || !u.is_finite() {
        return Err(LdpError::Parameter(format!("moment order u = {u} must be positive")));
    }
    if u == 2.0 {
        return Ok(1.0);
    }
    let ln = 0.5 * u * std::f64::consts::LN_2 + ln_gamma(0.5 * (u + 1.0))
        - 0.5 * std::f64::consts::PI.ln();
    Ok(ln.exp())
}

/// `M(k, eps) = (k-1)^2 / (k^2 (e^eps - 1)^2) * (d* e^eps + k - d*)^2 / (d* (k - d*))`.
pub fn big_m(k: usize, epsilon: f64) -> Result<f64> {
    let d = optimal_d(k, epsilon)?;
    let kf = k as f64;
    let em1 = epsilon.exp_m1();
    Ok((kf - 1.0).powi(2) / (kf * kf * em1 * em1) * subset_size_objective(k, epsilon, d))
}

/// Exact worst-case (uniform-input) mean-square risk of `Q_{k,eps,d}` with
/// the empirical estimator:
/// `(k-1)^2 / (n k (e^eps - 1)^2) * (d e^eps + k - d)^2 / (d (k - d))`.
pub fn closed_form_l2_risk(k: usize, epsilon: f64, d: usize, n: u64) -> Result<f64> {
    validate_parameters(k, epsilon, d)?;
    check_n(n)?;
    let kf = k as f64;
    let em1 = epsilon.exp_m1();
    Ok((kf - 1.0).powi(2) / (n as f64 * kf * em1 * em1) * subset_size_objective(k, epsilon, d))
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(LdpError::Parameter("sample count n must be >= 1".into()));
    }
    Ok(())
}

/// `k C_u M(k, eps)^{u/2} n^{-u/2}`, shared by the lower bound and the
/// achievable asymptote.
fn leading_term(k: usize, epsilon: f64, u: f64, n: u64) -> Result<f64> {
    check_alphabet(k)?;
    check_epsilon(epsilon)?;
    check_n(n)?;
    let m = big_m(k, epsilon)?;
    Ok(k as f64 * c_u(u)? * (m / n as f64).powf(u / 2.0))
}

/// Minimax lower bound on the `l_u^u` risk of any `eps`-LDP scheme, `u >= 1`.
pub fn lower_bound(k: usize, epsilon: f64, u: f64, n: u64) -> Result<f64> {
    if !(u >= 1.0) {
        return Err(LdpError::Parameter(format!(
            "the lower bound is only established for u >= 1, got u = {u}"
        )));
    }
    leading_term(k, epsilon, u, n)
}

/// Leading term of the `l_u^u` risk of `Q_{k,eps,d*}` with the empirical
/// estimator, `0 < u <= 2`.
pub fn asymptotic_risk(k: usize, epsilon: f64, u: f64, n: u64) -> Result<f64> {
    if !(u > 0.0 && u <= 2.0) {
        return Err(LdpError::Parameter(format!(
            "the asymptotic risk is only established for 0 < u <= 2, got u = {u}"
        )));
    }
    leading_term(k, epsilon, u, n)
}

/// Everything `bound` reports for one `(k, eps, u, n)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSummary {
    pub k: usize,
    pub epsilon: f64,
    pub u: f64,
    pub n: u64,
    pub d_star: usize,
    pub big_m: f64,
    pub c_u: f64,
    pub lower_bound: f64,
    /// `None` for `u > 2`, where only the lower bound is claimed.
    pub asymptotic_risk: Option<f64>,
}

pub fn bound_summary(k: usize, epsilon: f64, u: f64, n: u64) -> Result<BoundSummary> {
    let lower_bound = lower_bound(k, epsilon, u, n)?;
    let asymptotic_risk = if u <= 2.0 {
        Some(asymptotic_risk(k, epsilon, u, n)?)
    } else {
        None
    };
    Ok(BoundSummary {
        k,
        epsilon,
        u,
        n,
        d_star: optimal_d(k, epsilon)?,
        big_m: big_m(k, epsilon)?,
        c_u: c_u(u)?,
        lower_bound,
        asymptotic_risk,
    })
}

/// Per-sample Fisher information of coordinate `i` in the one-dimensional
/// family through `p_star` where the other coordinates absorb changes in
/// `p_i` equally:
///
/// `k^2 / (k-1)^2 * sum_j (q_ji - mean_v q_jv)^2 / (sum_v p*_v q_jv)`.
///
/// Outputs with zero marginal contribute nothing when their score also
/// vanishes and make the information singular otherwise.
pub fn fisher_information(m: &FiniteMechanism, p_star: &ProbabilityVector, i: usize) -> Result<f64> {
    let k = m.inputs();
    if p_star.k() != k {
        return Err(LdpError::Dimension {
            expected: k,
            actual: p_star.k(),
        });
    }
    if i >= k {
        return Err(LdpError::Parameter(format!("coordinate {i} outside 0..{k}")));
    }
    if k < 2 {
        return Err(LdpError::InvalidAlphabet { k });
    }
    let mut total = 0.0;
    for (j, row) in m.rows().enumerate() {
        let row_mean = row.iter().sum::<f64>() / k as f64;
        let score = row[i] - row_mean;
        let mass: f64 = row.iter().zip(p_star.as_slice()).map(|(q, p)| q * p).sum();
        if mass == 0.0 {
            if score != 0.0 {
                return Err(LdpError::SingularInformation { output: j });
            }
            continue;
        }
        total += score * score / mass;
    }
    let kf = k as f64;
    Ok(kf * kf / ((kf - 1.0) * (kf - 1.0)) * total)
}

/// `k (1 + (e^eps - 1)^2 d (k - d) / (d e^eps + k - d)^2)`: the value of
/// `sum_i q_ji^2 / q_j^2` for an output row with `d` entries at the high
/// level. Equals `k` for `d = 0` and `d = k`.
pub fn row_concentration(k: usize, epsilon: f64, d: usize) -> f64 {
    let (kf, df) = (k as f64, d as f64);
    let em1 = epsilon.exp_m1();
    let s = df * epsilon.exp() + kf - df;
    kf * (1.0 + em1 * em1 * df * (kf - df) / (s * s))
}

/// Result of [`lemma_column_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ColumnBound {
    /// Largest `sum_i q_ji^2 / q_j^2` over outputs `j`, with `q_j` the row mean.
    pub max_lhs: f64,
    /// `row_concentration(k, eps, d*)`.
    pub rhs: f64,
    pub holds: bool,
}

/// Checks the per-output concentration bound for an extremal mechanism.
pub fn lemma_column_check(m: &FiniteMechanism, epsilon: f64) -> Result<ColumnBound> {
    check_epsilon(epsilon)?;
    if !is_extremal(m, epsilon)? {
        return Err(LdpError::Precondition(format!(
            "mechanism is not extremal for epsilon = {epsilon}"
        )));
    }
    let k = m.inputs();
    check_alphabet(k)?;
    let max_lhs = m
        .rows()
        .map(|row| {
            let mean = row.iter().sum::<f64>() / k as f64;
            row.iter().map(|q| (q / mean).powi(2)).sum::<f64>()
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let rhs = row_concentration(k, epsilon, optimal_d(k, epsilon)?);
    Ok(ColumnBound {
        max_lhs,
        rhs,
        holds: max_lhs <= rhs + 1e-9,
    })
}
