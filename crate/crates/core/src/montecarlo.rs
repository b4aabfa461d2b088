//! Monte Carlo risk estimation for the subset scheme.
//!
//! Trial `t` of cell `c` draws from stream `(master_seed, c << 32 | t)`, and
//! per-trial losses are combined by a fixed-order pairwise sum, so reports
//! are bit-identical for any worker count.

use rand::distr::Distribution;
use rand_distr::Gamma;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LdpError, Result};
use crate::estimation::{coefficients, estimate_into, exact_l2_risk, project_in_place, EstimatorCoefficients};
use crate::mechanisms::subset::{optimal_d, validate_parameters, Privatizer, SubsetMechanism};
use crate::rng::RngStream;
use crate::sampling::CategoricalSampler;
use crate::simplex::{lp_loss_unchecked, uniform_distribution, ProbabilityVector};
use crate::theory;

/// Stream reserved for drawing a Dirichlet input distribution.
const DISTRIBUTION_STREAM: u64 = u64::MAX;
/// Stream reserved for the Dirichlet draws of a worst-case scan.
const SCAN_STREAM: u64 = u64::MAX - 1;
/// Relative standard error above which a risk estimate is flagged.
pub const NOISY_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsetSize {
    /// Use `optimal_d(k, eps)`.
    Auto,
    Fixed(usize),
}

impl SubsetSize {
    pub fn resolve(self, k: usize, epsilon: f64) -> Result<usize> {
        match self {
            Self::Auto => optimal_d(k, epsilon),
            Self::Fixed(d) => {
                validate_parameters(k, epsilon, d)?;
                Ok(d)
            }
        }
    }
}

/// Input distribution of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionSpec {
    Uniform,
    PointMass(usize),
    /// One draw from the symmetric Dirichlet with this concentration, taken
    /// from a stream reserved for it.
    Dirichlet(f64),
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// The affine estimator as is; may leave the simplex.
    #[default]
    Raw,
    /// The affine estimator followed by Euclidean projection onto the simplex.
    Projected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub k: usize,
    pub epsilon: f64,
    pub d: SubsetSize,
    pub u_values: Vec<f64>,
    pub n_values: Vec<u64>,
    pub trials: u64,
    pub master_seed: u64,
    pub distribution: DistributionSpec,
    pub estimator: EstimatorKind,
}

impl ExperimentConfig {
    /// A raw-estimator, uniform-input configuration.
    pub fn uniform(k: usize, epsilon: f64, u_values: Vec<f64>, n_values: Vec<u64>, trials: u64, master_seed: u64) -> Self {
        Self {
            k,
            epsilon,
            d: SubsetSize::Auto,
            u_values,
            n_values,
            trials,
            master_seed,
            distribution: DistributionSpec::Uniform,
            estimator: EstimatorKind::Raw,
        }
    }

    /// Checks the shape of the configuration; parameter-domain errors
    /// (`k`, `epsilon`, `d`) surface from [`Self::resolve_d`].
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(LdpError::InvalidConfig("trials must be >= 1".into()));
        }
        if self.trials > u32::MAX as u64 {
            return Err(LdpError::InvalidConfig("trials must be < 2^32".into()));
        }
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(LdpError::InvalidConfig("n_values must be a nonempty list of positive counts".into()));
        }
        if self.n_values.len() > u32::MAX as usize {
            return Err(LdpError::InvalidConfig("too many n values".into()));
        }
        if self.u_values.is_empty() || self.u_values.iter().any(|&u| !(u > 0.0 && u <= 2.0)) {
            return Err(LdpError::InvalidConfig("u_values must be a nonempty list in (0, 2]".into()));
        }
        Ok(())
    }

    pub fn resolve_d(&self) -> Result<usize> {
        self.d.resolve(self.k, self.epsilon)
    }

    pub fn resolve_distribution(&self) -> Result<ProbabilityVector> {
        match &self.distribution {
            DistributionSpec::Uniform => uniform_distribution(self.k),
            DistributionSpec::PointMass(i) => ProbabilityVector::point_mass(self.k, *i),
            DistributionSpec::Dirichlet(alpha) => {
                dirichlet_sample(self.k, *alpha, &mut RngStream::new(self.master_seed, DISTRIBUTION_STREAM).generator())
            }
            DistributionSpec::Explicit(p) => {
                if p.len() != self.k {
                    return Err(LdpError::Dimension { expected: self.k, actual: p.len() });
                }
                ProbabilityVector::new(p.clone())
            }
        }
    }

    /// Total number of privatizations the experiment performs.
    pub fn privatizations(&self) -> u128 {
        self.n_values.iter().map(|&n| n as u128 * self.trials as u128).sum()
    }
}

/// A draw from the symmetric Dirichlet(`alpha`, ..., `alpha`) on `k` symbols.
pub fn dirichlet_sample<R: rand::Rng + ?Sized>(k: usize, alpha: f64, rng: &mut R) -> Result<ProbabilityVector> {
    if k < 2 {
        return Err(LdpError::InvalidAlphabet { k });
    }
    let gamma = Gamma::new(alpha, 1.0)
        .map_err(|_| LdpError::Parameter(format!("Dirichlet concentration {alpha} must be positive")))?;
    loop {
        let mut g: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
        let total: f64 = g.iter().sum();
        if total > 0.0 && total.is_finite() {
            g.iter_mut().for_each(|x| *x /= total);
            return ProbabilityVector::new(g);
        }
    }
}

/// Risk estimate for one `(n, u)` pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskCell {
    pub n: u64,
    pub u: f64,
    /// Mean `l_u^u` loss over trials.
    pub empirical_risk: f64,
    /// Sample standard deviation over `sqrt(trials)`; `None` for one trial.
    pub standard_error: Option<f64>,
    /// Exact mean-square risk; present for `u = 2` at the uniform input.
    pub closed_form_risk: Option<f64>,
    /// `sum_i C_u (Var p_hat_i)^{u/2}`, the leading term of the risk for the
    /// configured scheme and input. For `d = d*` and the uniform input this
    /// is `k C_u M^{u/2} n^{-u/2}`.
    pub asymptote: f64,
    /// Minimax lower bound; present for `u >= 1`.
    pub lower_bound: Option<f64>,
    pub ratio_to_asymptote: f64,
    /// Relative standard error above [`NOISY_THRESHOLD`] (or unavailable).
    pub noisy: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskReport {
    pub config: ExperimentConfig,
    /// Subset size actually used.
    pub d: usize,
    /// Input distribution actually used.
    pub distribution: Vec<f64>,
    pub cells: Vec<RiskCell>,
}

/// Column order of [`RiskReport::to_csv`].
pub const CSV_HEADER: &str = "n,u,empirical_risk,std_error,asymptote,lower_bound,ratio";

/// Rounds to `digits` significant decimal digits.
pub fn round_significant(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap_or(x)
}

/// Formats with 12 significant digits; `NA` for missing values.
pub fn format_value(x: Option<f64>) -> String {
    match x {
        Some(v) => format!("{:?}", round_significant(v, 12)),
        None => "NA".to_string(),
    }
}

impl RiskReport {
    /// One row per `(n, u)` cell in [`CSV_HEADER`] order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for c in &self.cells {
            let row = [
                c.n.to_string(),
                format_value(Some(c.u)),
                format_value(Some(c.empirical_risk)),
                format_value(c.standard_error),
                format_value(Some(c.asymptote)),
                format_value(c.lower_bound),
                format_value(Some(c.ratio_to_asymptote)),
            ];
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn cell(&self, n: u64, u: f64) -> Option<&RiskCell> {
        self.cells.iter().find(|c| c.n == n && c.u == u)
    }
}

/// Sum in a fixed balanced-tree order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// Mean and (for two or more values) standard error of the mean.
pub fn mean_and_standard_error(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    if xs.len() < 2 {
        return (mean, None);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    (mean, Some((var / n).sqrt()))
}

/// Immutable per-experiment state shared by all workers.
struct Setup<'a> {
    mech: &'a SubsetMechanism,
    coeffs: EstimatorCoefficients,
    p: &'a ProbabilityVector,
    sampler: CategoricalSampler,
    estimator: EstimatorKind,
}

struct Workspace<'a> {
    privatizer: Privatizer<'a>,
    counts: Vec<u64>,
    estimate: Vec<f64>,
}

impl<'a> Workspace<'a> {
    fn new(mech: &'a SubsetMechanism) -> Self {
        Self {
            privatizer: mech.privatizer(),
            counts: vec![0; mech.k()],
            estimate: vec![0.0; mech.k()],
        }
    }
}

impl Setup<'_> {
    /// One simulated batch of `n` reports, scored under every `u`.
    fn trial(&self, ws: &mut Workspace<'_>, n: u64, u_values: &[f64], stream: RngStream) -> Vec<f64> {
        let mut rng = stream.generator();
        ws.counts.iter_mut().for_each(|c| *c = 0);
        for _ in 0..n {
            let x = self.sampler.sample(&mut rng);
            ws.privatizer.privatize_into(x, &mut rng, &mut ws.counts);
        }
        estimate_into(&ws.counts, n, &self.coeffs, &mut ws.estimate);
        if self.estimator == EstimatorKind::Projected {
            project_in_place(&mut ws.estimate).expect("estimates are finite");
        }
        u_values
            .iter()
            .map(|&u| lp_loss_unchecked(&ws.estimate, self.p.as_slice(), u))
            .collect()
    }
}

/// One independent draw of `l_u^u(p_hat(Y^n), p)` for each `u`, all
/// computed from the same simulated reports (raw estimator).
pub fn run_trial(
    k: usize,
    epsilon: f64,
    d: usize,
    p: &ProbabilityVector,
    n: u64,
    u_values: &[f64],
    rng: &RngStream,
) -> Result<Vec<f64>> {
    if p.k() != k {
        return Err(LdpError::Dimension { expected: k, actual: p.k() });
    }
    if n == 0 {
        return Err(LdpError::EmptyBatch);
    }
    if let Some(&u) = u_values.iter().find(|&&u| !(u > 0.0)) {
        return Err(LdpError::Parameter(format!("loss exponent u = {u} must be > 0")));
    }
    let mech = SubsetMechanism::new(k, epsilon, d)?;
    let setup = Setup {
        mech: &mech,
        coeffs: coefficients(k, epsilon, d)?,
        p,
        sampler: CategoricalSampler::for_draws(p, n as usize),
        estimator: EstimatorKind::Raw,
    };
    let mut ws = Workspace::new(&mech);
    Ok(setup.trial(&mut ws, n, u_values, *rng))
}

/// Runs experiments on a fixed number of worker threads.
pub struct Engine {
    pool: rayon::ThreadPool,
}

impl Engine {
    /// `workers == 0` uses one worker per available CPU.
    pub fn new(workers: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| LdpError::Parameter(format!("cannot start worker pool: {e}")))?;
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Losses `[trial][u]` for one cell.
    fn simulate_cell(&self, setup: &Setup<'_>, n: u64, u_values: &[f64], cell: u64, trials: u64, seed: u64) -> Vec<Vec<f64>> {
        self.pool.install(|| {
            (0..trials)
                .into_par_iter()
                .map_init(
                    || Workspace::new(setup.mech),
                    |ws, t| setup.trial(ws, n, u_values, RngStream::new(seed, cell << 32 | t)),
                )
                .collect()
        })
    }

    pub fn run_experiment(&self, config: &ExperimentConfig) -> Result<RiskReport> {
        config.validate()?;
        let d = config.resolve_d()?;
        let p = config.resolve_distribution()?;
        let mech = SubsetMechanism::new(config.k, config.epsilon, d)?;
        let coeffs = coefficients(config.k, config.epsilon, d)?;
        let max_n = *config.n_values.iter().max().expect("validated nonempty");
        let setup = Setup {
            mech: &mech,
            coeffs,
            p: &p,
            sampler: CategoricalSampler::for_draws(&p, (max_n.saturating_mul(config.trials)) as usize),
            estimator: config.estimator,
        };
        let mut cells = Vec::with_capacity(config.n_values.len() * config.u_values.len());
        for (cell, &n) in config.n_values.iter().enumerate() {
            let losses = self.simulate_cell(&setup, n, &config.u_values, cell as u64, config.trials, config.master_seed);
            for (ui, &u) in config.u_values.iter().enumerate() {
                let column: Vec<f64> = losses.iter().map(|l| l[ui]).collect();
                cells.push(summarize(config, d, &p, &coeffs, n, u, &column)?);
            }
        }
        Ok(RiskReport {
            config: config.clone(),
            d,
            distribution: p.into_vec(),
            cells,
        })
    }

    /// `(n, u, ratio_to_asymptote)` for each cell of a multi-`n` experiment.
    pub fn risk_curve(&self, config: &ExperimentConfig) -> Result<Vec<CurvePoint>> {
        let mut distinct = config.n_values.clone();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() < 2 {
            return Err(LdpError::InvalidConfig("a risk curve needs at least two distinct n values".into()));
        }
        let report = self.run_experiment(config)?;
        Ok(report
            .cells
            .iter()
            .map(|c| CurvePoint {
                n: c.n,
                u: c.u,
                ratio: c.ratio_to_asymptote,
                ratio_standard_error: c.standard_error.map(|se| se / c.asymptote),
            })
            .collect())
    }

    pub fn worst_case_scan(&self, config: &ScanConfig) -> Result<ScanReport> {
        config.validate()?;
        let d = config.d.resolve(config.k, config.epsilon)?;
        let mech = SubsetMechanism::new(config.k, config.epsilon, d)?;
        let coeffs = coefficients(config.k, config.epsilon, d)?;
        let candidates = scan_candidates(config)?;
        let exact = config.u == 2.0;
        let mut entries = Vec::with_capacity(candidates.len());
        for (idx, (label, p)) in candidates.into_iter().enumerate() {
            let (risk, standard_error) = if exact {
                (exact_l2_risk(&p, config.epsilon, d, config.n)?, None)
            } else {
                let setup = Setup {
                    mech: &mech,
                    coeffs,
                    p: &p,
                    sampler: CategoricalSampler::for_draws(&p, (config.n.saturating_mul(config.trials)) as usize),
                    estimator: EstimatorKind::Raw,
                };
                let losses = self.simulate_cell(&setup, config.n, &[config.u], idx as u64, config.trials, config.master_seed);
                let column: Vec<f64> = losses.iter().map(|l| l[0]).collect();
                mean_and_standard_error(&column)
            };
            let noisy = !exact && standard_error.is_none_or(|se| se > NOISY_THRESHOLD * risk);
            entries.push(ScanEntry {
                label,
                distribution: p.into_vec(),
                risk,
                standard_error,
                noisy,
            });
        }
        let maximizer = entries
            .iter()
            .enumerate()
            .fold(0, |best, (i, e)| if e.risk > entries[best].risk { i } else { best });
        let max_entry = &entries[maximizer];
        let uniform = &entries[0];
        let uniform_within_ties = match (uniform.standard_error, max_entry.standard_error) {
            (Some(a), Some(b)) => uniform.risk >= max_entry.risk - 3.0 * (a * a + b * b).sqrt(),
            _ => maximizer == 0,
        };
        Ok(ScanReport {
            k: config.k,
            epsilon: config.epsilon,
            d,
            n: config.n,
            u: config.u,
            exact,
            noisy: entries.iter().any(|e| e.noisy),
            maximizer,
            uniform_within_ties,
            entries,
        })
    }
}

fn summarize(
    config: &ExperimentConfig,
    d: usize,
    p: &ProbabilityVector,
    coeffs: &EstimatorCoefficients,
    n: u64,
    u: f64,
    losses: &[f64],
) -> Result<RiskCell> {
    let (empirical_risk, standard_error) = mean_and_standard_error(losses);
    let closed_form_risk = if u == 2.0 && p.is_uniform() {
        Some(theory::closed_form_l2_risk(config.k, config.epsilon, d, n)?)
    } else {
        None
    };
    let cu = theory::c_u(u)?;
    let asymptote: f64 = p
        .as_slice()
        .iter()
        .map(|&pi| cu * ((pi + coeffs.b) * (coeffs.a - pi - coeffs.b) / n as f64).powf(u / 2.0))
        .sum();
    let lower_bound = if u >= 1.0 {
        Some(theory::lower_bound(config.k, config.epsilon, u, n)?)
    } else {
        None
    };
    Ok(RiskCell {
        n,
        u,
        empirical_risk,
        standard_error,
        closed_form_risk,
        asymptote,
        lower_bound,
        ratio_to_asymptote: empirical_risk / asymptote,
        noisy: standard_error.is_none_or(|se| se > NOISY_THRESHOLD * empirical_risk),
    })
}

/// Runs on the global rayon pool.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RiskReport> {
    Engine::new(0)?.run_experiment(config)
}

pub fn risk_curve(config: &ExperimentConfig) -> Result<Vec<CurvePoint>> {
    Engine::new(0)?.risk_curve(config)
}

pub fn worst_case_scan(config: &ScanConfig) -> Result<ScanReport> {
    Engine::new(0)?.worst_case_scan(config)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub n: u64,
    pub u: f64,
    pub ratio: f64,
    pub ratio_standard_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub k: usize,
    pub epsilon: f64,
    pub d: SubsetSize,
    pub n: u64,
    pub u: f64,
    /// Monte Carlo trials per distribution; unused when `u = 2`.
    pub trials: u64,
    /// Dirichlet(1, ..., 1) draws added to the uniform input and point masses.
    pub num_distributions: usize,
    pub master_seed: u64,
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(LdpError::InvalidConfig("n must be >= 1".into()));
        }
        if !(self.u > 0.0 && self.u <= 2.0) {
            return Err(LdpError::InvalidConfig(format!("u = {} must lie in (0, 2]", self.u)));
        }
        if self.u != 2.0 && (self.trials == 0 || self.trials > u32::MAX as u64) {
            return Err(LdpError::InvalidConfig("trials must be in 1..2^32".into()));
        }
        Ok(())
    }

    /// Privatizations needed (zero on the exact `u = 2` path).
    pub fn privatizations(&self) -> u128 {
        if self.u == 2.0 {
            0
        } else {
            (1 + self.k as u128 + self.num_distributions as u128) * self.n as u128 * self.trials as u128
        }
    }
}

/// Uniform first, then the `k` point masses, then Dirichlet(1) draws.
fn scan_candidates(config: &ScanConfig) -> Result<Vec<(String, ProbabilityVector)>> {
    let mut out = vec![("uniform".to_string(), uniform_distribution(config.k)?)];
    for i in 0..config.k {
        out.push((format!("point_mass:{i}"), ProbabilityVector::point_mass(config.k, i)?));
    }
    let mut rng = RngStream::new(config.master_seed, SCAN_STREAM).generator();
    for j in 0..config.num_distributions {
        out.push((format!("dirichlet:{j}"), dirichlet_sample(config.k, 1.0, &mut rng)?));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanEntry {
    pub label: String,
    pub distribution: Vec<f64>,
    pub risk: f64,
    pub standard_error: Option<f64>,
    pub noisy: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub k: usize,
    pub epsilon: f64,
    pub d: usize,
    pub n: u64,
    pub u: f64,
    /// Risks computed from the exact variance formula rather than simulation.
    pub exact: bool,
    pub noisy: bool,
    /// Index into `entries` of the largest risk.
    pub maximizer: usize,
    /// Uniform risk is within three combined standard errors of the maximum
    /// (on the exact path: uniform is the maximizer).
    pub uniform_within_ties: bool,
    pub entries: Vec<ScanEntry>,
}
