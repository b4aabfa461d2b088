//! Privatization schemes.

pub mod baselines;
pub mod finite;
pub mod subset;

pub use baselines::{krr_mechanism, rappor_flip_probability, rappor_mechanism};
pub use finite::{is_extremal, marginal, verify_ldp, CsvError, FiniteMechanism, LdpVerdict};
pub use subset::{
    optimal_d, privatize, subset_mechanism, subset_size_objective, validate_parameters, Privatizer,
    SubsetMechanism, SubsetSample, MAX_EPSILON,
};
