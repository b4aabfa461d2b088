//! The subset-selection scheme.
//!
//! Outputs are `d`-element subsets `y` of the alphabet `0..k`, with
//! `Q(y | x) = (e^eps * [x in y] + [x not in y]) / Z` and
//! `Z = C(k-1, d-1) e^eps + C(k-1, d)`. The `C(k, d)` outputs are never
//! enumerated except by [`SubsetMechanism::materialize`].

use rand::Rng;
use serde::Serialize;

use crate::combinatorics::{binomial_exact, ln_binomial, ColexSubsets};
use crate::error::{LdpError, Result};
use crate::mechanisms::finite::FiniteMechanism;

/// Largest accepted privacy level; `e^50` keeps every derived quantity well
/// inside double range.
pub const MAX_EPSILON: f64 = 50.0;

/// Row limit for [`SubsetMechanism::materialize`].
pub const MAX_MATERIALIZED_ROWS: u128 = 1_000_000;

/// Entry limit (`rows * k`) for explicit matrices.
pub const MAX_MATERIALIZED_ENTRIES: u128 = 50_000_000;

pub(crate) fn check_alphabet(k: usize) -> Result<()> {
    if k < 2 {
        return Err(LdpError::InvalidAlphabet { k });
    }
    if k > u32::MAX as usize {
        return Err(LdpError::Capacity(format!("alphabet size {k} exceeds 2^32 - 1")));
    }
    Ok(())
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_finite() && epsilon > 0.0 && epsilon <= MAX_EPSILON {
        Ok(())
    } else {
        Err(LdpError::PrivacyParameter(epsilon))
    }
}

pub(crate) fn check_subset_size(k: usize, d: usize) -> Result<()> {
    if d == 0 || d >= k {
        return Err(LdpError::Parameter(format!(
            "subset size d = {d} must satisfy 1 <= d <= k - 1 = {}",
            k.saturating_sub(1)
        )));
    }
    Ok(())
}

/// Validates `(k, epsilon, d)` for the subset scheme.
pub fn validate_parameters(k: usize, epsilon: f64, d: usize) -> Result<()> {
    check_alphabet(k)?;
    check_epsilon(epsilon)?;
    check_subset_size(k, d)
}

/// `(d e^eps + k - d)^2 / (d (k - d))`, the `d`-dependent factor of the
/// mean-square risk.
pub fn subset_size_objective(k: usize, epsilon: f64, d: usize) -> f64 {
    let (k, d) = (k as f64, d as f64);
    let s = d * epsilon.exp() + k - d;
    s * s / (d * (k - d))
}

/// The risk-minimizing subset size.
///
/// The continuous minimizer is `k / (e^eps + 1)`, so only its floor and
/// ceiling (clamped to `1..=k-1`) are compared. Ties go to the smaller `d`.
pub fn optimal_d(k: usize, epsilon: f64) -> Result<usize> {
    check_alphabet(k)?;
    check_epsilon(epsilon)?;
    let center = k as f64 / (epsilon.exp() + 1.0);
    let lo = (center.floor() as usize).clamp(1, k - 1);
    let hi = (center.ceil() as usize).clamp(1, k - 1);
    if lo == hi {
        return Ok(lo);
    }
    let (f_lo, f_hi) = (
        subset_size_objective(k, epsilon, lo),
        subset_size_objective(k, epsilon, hi),
    );
    Ok(if f_hi < f_lo { hi } else { lo })
}

/// One output of the subset scheme.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SubsetSample {
    /// Bit `i` set iff symbol `i` is a member; used when `k <= 64`.
    Mask(u64),
    /// Sorted member list; used when `k > 64`.
    Indices(Vec<u32>),
}

impl SubsetSample {
    pub fn len(&self) -> usize {
        match self {
            Self::Mask(m) => m.count_ones() as usize,
            Self::Indices(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, symbol: u32) -> bool {
        match self {
            Self::Mask(m) => symbol < 64 && m >> symbol & 1 == 1,
            Self::Indices(v) => v.binary_search(&symbol).is_ok(),
        }
    }

    /// Members in increasing order.
    pub fn members(&self) -> Vec<u32> {
        match self {
            Self::Mask(m) => {
                let mut out = Vec::with_capacity(m.count_ones() as usize);
                let mut bits = *m;
                while bits != 0 {
                    out.push(bits.trailing_zeros());
                    bits &= bits - 1;
                }
                out
            }
            Self::Indices(v) => v.clone(),
        }
    }

    /// Largest member, if any.
    pub fn max_member(&self) -> Option<u32> {
        match self {
            Self::Mask(0) => None,
            Self::Mask(m) => Some(63 - m.leading_zeros()),
            Self::Indices(v) => v.last().copied(),
        }
    }
}

/// The scheme `Q_{k, eps, d}` in implicit form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetMechanism {
    k: usize,
    epsilon: f64,
    d: usize,
    e_eps: f64,
    ln_normalizer: f64,
}

/// Constructs `Q_{k, eps, d}`.
pub fn subset_mechanism(k: usize, epsilon: f64, d: usize) -> Result<SubsetMechanism> {
    SubsetMechanism::new(k, epsilon, d)
}

impl SubsetMechanism {
    pub fn new(k: usize, epsilon: f64, d: usize) -> Result<Self> {
        validate_parameters(k, epsilon, d)?;
        let e_eps = epsilon.exp();
        // ln Z = ln C(k-1, d-1) + ln(e^eps + (k-d)/d), using
        // C(k-1, d) = C(k-1, d-1) (k-d)/d.
        let ln_normalizer = ln_binomial(k as u64 - 1, d as u64 - 1)
            + (e_eps + (k - d) as f64 / d as f64).ln();
        Ok(Self {
            k,
            epsilon,
            d,
            e_eps,
            ln_normalizer,
        })
    }

    /// The scheme with `d = optimal_d(k, epsilon)`.
    pub fn optimal(k: usize, epsilon: f64) -> Result<Self> {
        Self::new(k, epsilon, optimal_d(k, epsilon)?)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn e_eps(&self) -> f64 {
        self.e_eps
    }

    pub fn ln_normalizer(&self) -> f64 {
        self.ln_normalizer
    }

    /// `Z = C(k-1, d-1) e^eps + C(k-1, d)`. Computed exactly from integer
    /// binomials when they fit in 128 bits; `inf` only for astronomically
    /// large alphabets, where [`Self::ln_normalizer`] remains finite.
    pub fn normalizer(&self) -> f64 {
        let (k, d) = (self.k as u64, self.d as u64);
        match (binomial_exact(k - 1, d - 1), binomial_exact(k - 1, d)) {
            (Some(a), Some(b)) => a as f64 * self.e_eps + b as f64,
            _ => self.ln_normalizer.exp(),
        }
    }

    /// Number of outputs `C(k, d)`, if it fits in 128 bits.
    pub fn output_alphabet_size(&self) -> Option<u128> {
        binomial_exact(self.k as u64, self.d as u64)
    }

    pub fn log10_output_alphabet_size(&self) -> f64 {
        ln_binomial(self.k as u64, self.d as u64) / std::f64::consts::LN_10
    }

    /// `P(x in Y | X = x) = C(k-1, d-1) e^eps / Z = d e^eps / (d e^eps + k - d)`.
    pub fn inclusion_probability(&self) -> f64 {
        let de = self.d as f64 * self.e_eps;
        de / (de + (self.k - self.d) as f64)
    }

    /// `Q(y | x)` for an output given by its member list.
    pub fn probability(&self, output: &SubsetSample, x: u32) -> f64 {
        let numerator = if output.contains(x) { self.epsilon } else { 0.0 };
        (numerator - self.ln_normalizer).exp()
    }

    /// Explicit `C(k, d) x k` matrix, rows in increasing bitmask order.
    pub fn materialize(&self) -> Result<FiniteMechanism> {
        let rows = self
            .output_alphabet_size()
            .filter(|&l| l <= MAX_MATERIALIZED_ROWS)
            .ok_or_else(|| {
                LdpError::Capacity(format!(
                    "C({}, {}) outputs exceed the materialization limit of {MAX_MATERIALIZED_ROWS}",
                    self.k, self.d
                ))
            })?;
        if rows * self.k as u128 > MAX_MATERIALIZED_ENTRIES {
            return Err(LdpError::Capacity(format!(
                "{rows} x {} matrix exceeds {MAX_MATERIALIZED_ENTRIES} entries",
                self.k
            )));
        }
        let z = self.normalizer();
        let (high, low) = (self.e_eps / z, 1.0 / z);
        let mut entries = vec![low; rows as usize * self.k];
        for (j, members) in ColexSubsets::new(self.k as u32, self.d as u32).enumerate() {
            let row = &mut entries[j * self.k..(j + 1) * self.k];
            for &m in &members {
                row[m as usize] = high;
            }
        }
        FiniteMechanism::new(rows as usize, self.k, entries)
    }

    /// A sampler with scratch space sized for this scheme.
    pub fn privatizer(&self) -> Privatizer<'_> {
        Privatizer::new(self)
    }
}

/// Draws outputs of a [`SubsetMechanism`] in `O(d)` time per draw.
///
/// Symbol `x` is kept with probability [`SubsetMechanism::inclusion_probability`];
/// the remaining `d - 1` (or all `d`) members are a uniform subset of the
/// other `k - 1` symbols, drawn with a partial Fisher-Yates shuffle over a
/// scratch permutation that is restored after every draw.
#[derive(Debug, Clone)]
pub struct Privatizer<'a> {
    mech: &'a SubsetMechanism,
    inclusion: f64,
    perm: Vec<u32>,
    swaps: Vec<u32>,
}

impl<'a> Privatizer<'a> {
    pub fn new(mech: &'a SubsetMechanism) -> Self {
        Self {
            mech,
            inclusion: mech.inclusion_probability(),
            perm: (0..mech.k as u32).collect(),
            swaps: Vec::with_capacity(mech.d),
        }
    }

    pub fn mechanism(&self) -> &SubsetMechanism {
        self.mech
    }

    /// Draws the members of one report for input `x` and hands each one to
    /// `visit`. `x` must be in range.
    #[inline]
    fn draw<R: Rng + ?Sized>(&mut self, x: u32, rng: &mut R, mut visit: impl FnMut(u32)) {
        let k = self.mech.k as u32;
        let last = k - 1;
        let mut need = self.mech.d as u32;
        if rng.random::<f64>() < self.inclusion {
            visit(x);
            need -= 1;
        }
        // Park x at the end; positions 0..last then hold the other symbols.
        self.perm.swap(x as usize, last as usize);
        self.swaps.clear();
        for i in 0..need {
            let j = rng.random_range(i..last);
            self.perm.swap(i as usize, j as usize);
            self.swaps.push(j);
            visit(self.perm[i as usize]);
        }
        for (i, &j) in self.swaps.iter().enumerate().rev() {
            self.perm.swap(i, j as usize);
        }
        self.perm.swap(x as usize, last as usize);
    }

    /// One privatized report for input symbol `x`.
    pub fn privatize<R: Rng + ?Sized>(&mut self, x: u32, rng: &mut R) -> Result<SubsetSample> {
        self.check_symbol(x)?;
        if self.mech.k <= 64 {
            let mut mask = 0u64;
            self.draw(x, rng, |m| mask |= 1u64 << m);
            Ok(SubsetSample::Mask(mask))
        } else {
            let mut members = Vec::with_capacity(self.mech.d);
            self.draw(x, rng, |m| members.push(m));
            members.sort_unstable();
            Ok(SubsetSample::Indices(members))
        }
    }

    /// Privatizes `x` and adds the report straight into per-symbol counts.
    #[inline]
    pub fn privatize_into<R: Rng + ?Sized>(&mut self, x: u32, rng: &mut R, counts: &mut [u64]) {
        debug_assert!((x as usize) < self.mech.k && counts.len() == self.mech.k);
        self.draw(x, rng, |m| counts[m as usize] += 1);
    }

    fn check_symbol(&self, x: u32) -> Result<()> {
        if (x as usize) < self.mech.k {
            Ok(())
        } else {
            Err(LdpError::Parameter(format!(
                "input symbol {x} outside alphabet 0..{}",
                self.mech.k
            )))
        }
    }
}

/// One report for `x`; allocates fresh scratch space, so prefer a
/// [`Privatizer`] for repeated draws.
pub fn privatize<R: Rng + ?Sized>(mech: &SubsetMechanism, x: u32, rng: &mut R) -> Result<SubsetSample> {
    mech.privatizer().privatize(x, rng)
}
