//! Points of the probability simplex and the `l_u^u` loss.

use serde::{Deserialize, Serialize};

use crate::error::{LdpError, Result};

/// Absolute tolerance on `sum(p) == 1`.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// A probability mass function over the alphabet `0..k`, `k >= 2`.
///
/// Construction validates the vector and never renormalizes it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbabilityVector {
    probs: Vec<f64>,
}

impl ProbabilityVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(LdpError::InvalidAlphabet { k: probs.len() });
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(LdpError::InvalidDistribution(format!(
                "entry {i} is {p}, must be finite and nonnegative"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(LdpError::InvalidDistribution(format!(
                "entries sum to {total}, not 1"
            )));
        }
        Ok(Self { probs })
    }

    /// Point mass on `symbol`.
    pub fn point_mass(k: usize, symbol: usize) -> Result<Self> {
        if k < 2 {
            return Err(LdpError::InvalidAlphabet { k });
        }
        if symbol >= k {
            return Err(LdpError::Parameter(format!(
                "point mass symbol {symbol} outside alphabet 0..{k}"
            )));
        }
        let mut probs = vec![0.0; k];
        probs[symbol] = 1.0;
        Ok(Self { probs })
    }

    pub fn k(&self) -> usize {
        self.probs.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    pub fn is_uniform(&self) -> bool {
        let u = 1.0 / self.k() as f64;
        self.probs.iter().all(|&p| p == u)
    }
}

impl TryFrom<Vec<f64>> for ProbabilityVector {
    type Error = LdpError;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        Self::new(probs)
    }
}

impl From<ProbabilityVector> for Vec<f64> {
    fn from(p: ProbabilityVector) -> Self {
        p.probs
    }
}

impl AsRef<[f64]> for ProbabilityVector {
    fn as_ref(&self) -> &[f64] {
        &self.probs
    }
}

/// The uniform distribution `(1/k, ..., 1/k)`.
pub fn uniform_distribution(k: usize) -> Result<ProbabilityVector> {
    if k < 2 {
        return Err(LdpError::InvalidAlphabet { k });
    }
    Ok(ProbabilityVector {
        probs: vec![1.0 / k as f64; k],
    })
}

/// `sum_i |a_i - b_i|^u`.
pub fn lp_loss(a: &[f64], b: &[f64], u: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(LdpError::Dimension {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if !(u > 0.0) {
        return Err(LdpError::Parameter(format!("loss exponent u = {u} must be > 0")));
    }
    Ok(lp_loss_unchecked(a, b, u))
}

#[inline]
pub(crate) fn lp_loss_unchecked(a: &[f64], b: &[f64], u: f64) -> f64 {
    if u == 2.0 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    } else if u == 1.0 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
    } else {
        a.iter().zip(b).map(|(x, y)| (x - y).abs().powf(u)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_entries() {
        assert_eq!(uniform_distribution(2).unwrap().as_slice(), &[0.5, 0.5]);
        assert_eq!(uniform_distribution(5).unwrap().as_slice(), &[0.2; 5]);
        assert_eq!(
            uniform_distribution(1),
            Err(LdpError::InvalidAlphabet { k: 1 })
        );
        assert!(uniform_distribution(7).unwrap().is_uniform());
    }

    #[test]
    fn rejects_instead_of_renormalizing() {
        assert!(ProbabilityVector::new(vec![0.5, 0.5 + 1e-8]).is_err());
        assert!(ProbabilityVector::new(vec![0.5, 0.5 + 1e-10]).is_ok());
        assert!(ProbabilityVector::new(vec![1.5, -0.5]).is_err());
        assert!(ProbabilityVector::new(vec![1.0]).is_err());
        assert!(ProbabilityVector::new(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn loss_examples() {
        let a = [0.6, 0.4];
        let b = [0.5, 0.5];
        assert!((lp_loss(&a, &b, 2.0).unwrap() - 0.02).abs() < 1e-15);
        assert!((lp_loss(&a, &b, 1.0).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(lp_loss(&a, &a, 1.5).unwrap(), 0.0);
        assert!(matches!(
            lp_loss(&a, &[0.1], 2.0),
            Err(LdpError::Dimension { .. })
        ));
        assert!(lp_loss(&a, &b, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn loss_symmetric_and_zero_iff_equal(
            a in prop::collection::vec(-2.0f64..2.0, 1..10),
            shift in prop::collection::vec(-1.0f64..1.0, 1..10),
            u in 0.1f64..2.0,
        ) {
            let n = a.len().min(shift.len());
            let a = &a[..n];
            let b: Vec<f64> = a.iter().zip(&shift).map(|(x, s)| x + s).collect();
            let ab = lp_loss(a, &b, u).unwrap();
            let ba = lp_loss(&b, a, u).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert_eq!(ab == 0.0, a == &b[..]);
        }

        #[test]
        fn loss_monotone_in_each_coordinate(
            diffs in prop::collection::vec(0.0f64..1.0, 2..8),
            idx in 0usize..8,
            bump in 0.0f64..1.0,
            u in 0.1f64..2.0,
        ) {
            let zeros = vec![0.0; diffs.len()];
            let mut larger = diffs.clone();
            larger[idx % diffs.len()] += bump;
            prop_assert!(lp_loss(&larger, &zeros, u).unwrap() >= lp_loss(&diffs, &zeros, u).unwrap());
        }
    }
}
