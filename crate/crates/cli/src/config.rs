//! Flat `key = value` experiment files.
//!
//! ```text
//! # comment
//! k = 5
//! epsilon = 0.693147
//! d = auto
//! u_values = 1, 2
//! n_values = 100, 1000
//! trials = 1000
//! master_seed = 42
//! distribution = dirichlet:0.5
//! estimator = raw
//! ```

use std::collections::BTreeMap;
use std::fmt;

use ldplab::montecarlo::{DistributionSpec, EstimatorKind, ExperimentConfig, SubsetSize};

pub const KEYS: [&str; 9] = [
    "k",
    "epsilon",
    "d",
    "u_values",
    "n_values",
    "trials",
    "master_seed",
    "distribution",
    "estimator",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// 1-based; 0 when the problem is not tied to one line.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        message: message.into(),
    }
}

/// Raw key/value pairs with their line numbers.
#[derive(Debug, Default, Clone)]
pub struct RawConfig {
    entries: BTreeMap<String, (usize, String)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(line_no, format!("expected key = value, found {content:?}")))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(err(line_no, format!("unknown key {key:?}")));
            }
            let value = value.trim();
            if value.is_empty() {
                return Err(err(line_no, format!("empty value for {key}")));
            }
            if let Some((first, _)) = entries.insert(key.to_string(), (line_no, value.to_string())) {
                return Err(err(line_no, format!("duplicate key {key} (first set on line {first})")));
            }
        }
        Ok(Self { entries })
    }

    /// Sets or replaces a value, as a command-line override.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        debug_assert!(KEYS.contains(&key));
        self.entries.insert(key.to_string(), (0, value.into()));
    }

    fn get(&self, key: &str) -> Option<(usize, &str)> {
        self.entries.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn require(&self, key: &str) -> Result<(usize, &str), ConfigError> {
        self.get(key).ok_or_else(|| err(0, format!("missing required key {key}")))
    }

    pub fn into_experiment(self) -> Result<ExperimentConfig, ConfigError> {
        let (line, v) = self.require("k")?;
        let k = parse_count(v).map_err(|m| err(line, format!("k: {m}")))? as usize;
        let (line, v) = self.require("epsilon")?;
        let epsilon = parse_real(v).map_err(|m| err(line, format!("epsilon: {m}")))?;
        let d = match self.get("d") {
            None => SubsetSize::Auto,
            Some((_, "auto")) => SubsetSize::Auto,
            Some((line, v)) => SubsetSize::Fixed(parse_count(v).map_err(|m| err(line, format!("d: {m}")))? as usize),
        };
        let u_values = match self.get("u_values") {
            None => vec![2.0],
            Some((line, v)) => parse_list(v, parse_real).map_err(|m| err(line, format!("u_values: {m}")))?,
        };
        let (line, v) = self.require("n_values")?;
        let n_values = parse_list(v, parse_count).map_err(|m| err(line, format!("n_values: {m}")))?;
        let (line, v) = self.require("trials")?;
        let trials = parse_count(v).map_err(|m| err(line, format!("trials: {m}")))?;
        let master_seed = match self.get("master_seed") {
            None => 0,
            Some((line, v)) => v
                .parse::<u64>()
                .map_err(|_| err(line, format!("master_seed: {v:?} is not a 64-bit unsigned integer")))?,
        };
        let distribution = match self.get("distribution") {
            None => DistributionSpec::Uniform,
            Some((line, v)) => parse_distribution(v).map_err(|m| err(line, format!("distribution: {m}")))?,
        };
        let estimator = match self.get("estimator") {
            None | Some((_, "raw")) => EstimatorKind::Raw,
            Some((_, "projected")) => EstimatorKind::Projected,
            Some((line, v)) => return Err(err(line, format!("estimator: expected raw or projected, found {v:?}"))),
        };
        Ok(ExperimentConfig {
            k,
            epsilon,
            d,
            u_values,
            n_values,
            trials,
            master_seed,
            distribution,
            estimator,
        })
    }
}

fn parse_real(s: &str) -> Result<f64, String> {
    let x: f64 = s.trim().parse().map_err(|_| format!("{s:?} is not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{s:?} is not finite"))
    }
}

/// Non-negative integer; accepts `100000` as well as `1e5`.
fn parse_count(s: &str) -> Result<u64, String> {
    let s = s.trim();
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x <= 9.007_199_254_740_992e15 => Ok(x as u64),
        _ => Err(format!("{s:?} is not a non-negative integer")),
    }
}

fn parse_list<T>(s: &str, item: fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    s.split(',').map(|p| item(p.trim())).collect()
}

/// `uniform`, `point_mass:i`, `dirichlet:alpha` or `explicit:p0,p1,...`.
pub fn parse_distribution(s: &str) -> Result<DistributionSpec, String> {
    let s = s.trim();
    if s == "uniform" {
        return Ok(DistributionSpec::Uniform);
    }
    let (kind, arg) = s
        .split_once(':')
        .ok_or_else(|| format!("expected uniform, point_mass:i, dirichlet:alpha or explicit:list, found {s:?}"))?;
    match kind.trim() {
        "point_mass" => Ok(DistributionSpec::PointMass(parse_count(arg)? as usize)),
        "dirichlet" => Ok(DistributionSpec::Dirichlet(parse_real(arg)?)),
        "explicit" => Ok(DistributionSpec::Explicit(parse_list(arg, parse_real)?)),
        other => Err(format!("unknown distribution kind {other:?}")),
    }
}
