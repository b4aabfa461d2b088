//! Locally private discrete distribution estimation with the
//! subset-selection mechanism.
//!
//! - [`mechanisms`]: the subset scheme (implicit, sampled in `O(d)`),
//!   explicit finite schemes, baselines and privacy/extremality checks.
//! - [`estimation`]: the affine unbiased estimator and its exact moments.
//! - [`theory`]: `C_u`, `d*`, `M(k, eps)`, exact and asymptotic risks, the
//!   minimax lower bound and Fisher-information checks.
//! - [`montecarlo`]: deterministic parallel risk simulation.
//!
//! Symbols are 0-based: an alphabet of size `k` is `0..k`.

pub mod combinatorics;
pub mod error;
pub mod estimation;
pub mod mechanisms;
pub mod montecarlo;
pub mod rng;
pub mod sampling;
pub mod simplex;
pub mod theory;

pub use error::{LdpError, Result};
pub use rng::RngStream;
pub use simplex::{lp_loss, uniform_distribution, ProbabilityVector};
