//! Comparison schemes: k-ary randomized response and basic RAPPOR.

use crate::error::{LdpError, Result};
use crate::mechanisms::finite::FiniteMechanism;
use crate::mechanisms::subset::{check_alphabet, check_epsilon, SubsetMechanism};

/// Largest alphabet for [`rappor_mechanism`] (`2^k` outputs).
pub const MAX_RAPPOR_K: usize = 20;

/// k-ary randomized response: the subset scheme with `d = 1`.
pub fn krr_mechanism(k: usize, epsilon: f64) -> Result<FiniteMechanism> {
    SubsetMechanism::new(k, epsilon, 1)?.materialize()
}

/// Per-bit flip probability `1 / (e^{eps/2} + 1)` of [`rappor_mechanism`].
pub fn rappor_flip_probability(epsilon: f64) -> f64 {
    1.0 / ((epsilon / 2.0).exp() + 1.0)
}

/// Basic one-shot RAPPOR: one-hot encode `x`, then flip each of the `k` bits
/// independently. Rows are indexed by the output bit vector read as an
/// integer (bit `i` = symbol `i`).
pub fn rappor_mechanism(k: usize, epsilon: f64) -> Result<FiniteMechanism> {
    check_alphabet(k)?;
    check_epsilon(epsilon)?;
    if k > MAX_RAPPOR_K {
        return Err(LdpError::Capacity(format!(
            "RAPPOR with k = {k} has 2^{k} outputs; limit is k <= {MAX_RAPPOR_K}"
        )));
    }
    let f = rappor_flip_probability(epsilon);
    let outputs = 1usize << k;
    let mut entries = Vec::with_capacity(outputs * k);
    for y in 0..outputs {
        let ones = y.count_ones() as i32;
        for x in 0..k {
            // Bits that differ from the one-hot encoding of x.
            let flips = if y >> x & 1 == 1 { ones - 1 } else { ones + 1 };
            entries.push(f.powi(flips) * (1.0 - f).powi(k as i32 - flips));
        }
    }
    FiniteMechanism::new(outputs, k, entries)
}
