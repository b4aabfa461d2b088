//! Categorical sampling of raw (pre-privatization) data.

use rand::distr::Distribution;
use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;

use crate::error::{LdpError, Result};
use crate::rng::RngStream;
use crate::simplex::ProbabilityVector;

/// Below this many draws from one distribution, inverse-CDF beats building
/// an alias table.
pub const ALIAS_THRESHOLD: usize = 64;

/// `n` i.i.d. symbols in `0..k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawSampleBatch {
    symbols: Vec<u32>,
    k: usize,
}

impl RawSampleBatch {
    pub fn new(symbols: Vec<u32>, k: usize) -> Result<Self> {
        if symbols.is_empty() {
            return Err(LdpError::EmptyBatch);
        }
        if let Some(&s) = symbols.iter().find(|&&s| s as usize >= k) {
            return Err(LdpError::Parameter(format!(
                "symbol {s} outside alphabet 0..{k}"
            )));
        }
        Ok(Self { symbols, k })
    }

    pub fn symbols(&self) -> &[u32] {
        &self.symbols
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Number of occurrences of each symbol.
    pub fn histogram(&self) -> Vec<u64> {
        let mut h = vec![0u64; self.k];
        for &s in &self.symbols {
            h[s as usize] += 1;
        }
        h
    }
}

/// A reusable sampler for one categorical distribution.
#[derive(Debug, Clone)]
pub enum CategoricalSampler {
    Uniform { k: u32 },
    InverseCdf { cumulative: Vec<f64> },
    Alias { table: WeightedAliasIndex<f64> },
}

impl CategoricalSampler {
    /// Chooses a strategy given how many draws will be taken.
    pub fn for_draws(p: &ProbabilityVector, draws: usize) -> Self {
        if p.is_uniform() {
            return Self::Uniform { k: p.k() as u32 };
        }
        if draws >= ALIAS_THRESHOLD {
            let table = WeightedAliasIndex::new(p.as_slice().to_vec())
                .expect("a validated probability vector has positive total weight");
            Self::Alias { table }
        } else {
            let mut acc = 0.0;
            let cumulative = p
                .as_slice()
                .iter()
                .map(|&x| {
                    acc += x;
                    acc
                })
                .collect();
            Self::InverseCdf { cumulative }
        }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        match self {
            Self::Uniform { k } => rng.random_range(0..*k),
            Self::Alias { table } => table.sample(rng) as u32,
            Self::InverseCdf { cumulative } => {
                let u: f64 = rng.random::<f64>() * cumulative[cumulative.len() - 1];
                // First index with cumulative > u; skips zero-mass symbols.
                let idx = cumulative.partition_point(|&c| c <= u);
                idx.min(cumulative.len() - 1) as u32
            }
        }
    }
}

/// Draws `n` i.i.d. symbols from `p` using the stream `rng`.
pub fn sample_categorical(p: &ProbabilityVector, n: usize, rng: &RngStream) -> Result<RawSampleBatch> {
    if n == 0 {
        return Err(LdpError::EmptyBatch);
    }
    let sampler = CategoricalSampler::for_draws(p, n);
    let mut g = rng.generator();
    let symbols = (0..n).map(|_| sampler.sample(&mut g)).collect();
    Ok(RawSampleBatch { symbols, k: p.k() })
}
