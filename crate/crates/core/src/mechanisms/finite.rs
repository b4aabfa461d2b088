//! Explicit finite privatization matrices: LDP and extremality checks,
//! marginals and the CSV exchange format.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{LdpError, Result};
use crate::simplex::ProbabilityVector;

/// Column-sum tolerance for matrices built in code.
pub const COLUMN_TOLERANCE: f64 = 1e-9;

/// Column-sum tolerance for matrices read from CSV.
pub const FILE_COLUMN_TOLERANCE: f64 = 1e-6;

/// Slack added to `epsilon` when deciding whether LDP holds.
pub const LDP_SLACK: f64 = 1e-12;

/// Relative tolerance for the `{1, e^eps}` ratio test.
pub const EXTREMAL_RTOL: f64 = 1e-9;

/// An `L x k` conditional distribution: entry `(j, v)` is `Q(j | v)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteMechanism {
    outputs: usize,
    inputs: usize,
    /// Row-major, `outputs * inputs`.
    entries: Vec<f64>,
}

impl FiniteMechanism {
    pub fn new(outputs: usize, inputs: usize, entries: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(outputs, inputs, entries, COLUMN_TOLERANCE)
    }

    /// Like [`Self::new`] with a caller-chosen column-sum tolerance.
    pub fn with_tolerance(outputs: usize, inputs: usize, entries: Vec<f64>, tol: f64) -> Result<Self> {
        if outputs == 0 {
            return Err(LdpError::InvalidMechanism("output alphabet is empty".into()));
        }
        if inputs == 0 {
            return Err(LdpError::InvalidMechanism("input alphabet is empty".into()));
        }
        if entries.len() != outputs * inputs {
            return Err(LdpError::Dimension {
                expected: outputs * inputs,
                actual: entries.len(),
            });
        }
        if let Some(pos) = entries.iter().position(|q| !q.is_finite() || *q < 0.0) {
            return Err(LdpError::InvalidMechanism(format!(
                "entry ({}, {}) = {} is not a probability",
                pos / inputs,
                pos % inputs,
                entries[pos]
            )));
        }
        let m = Self {
            outputs,
            inputs,
            entries,
        };
        for v in 0..inputs {
            let s: f64 = m.column(v).sum();
            if (s - 1.0).abs() > tol {
                return Err(LdpError::InvalidMechanism(format!(
                    "column {v} sums to {s}, not 1"
                )));
            }
        }
        Ok(m)
    }

    /// Builds from rows `q[j][v]`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let inputs = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != inputs) {
            return Err(LdpError::Dimension {
                expected: inputs,
                actual: bad.len(),
            });
        }
        Self::new(rows.len(), inputs, rows.concat())
    }

    /// Output alphabet size `L`.
    pub fn outputs(&self) -> usize {
        self.outputs
    }

    /// Input alphabet size `k`.
    pub fn inputs(&self) -> usize {
        self.inputs
    }

    #[inline]
    pub fn get(&self, output: usize, input: usize) -> f64 {
        self.entries[output * self.inputs + input]
    }

    pub fn row(&self, output: usize) -> &[f64] {
        &self.entries[output * self.inputs..(output + 1) * self.inputs]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks_exact(self.inputs)
    }

    pub fn column(&self, input: usize) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().skip(input).step_by(self.inputs).copied()
    }

    /// Parses the CSV exchange format: a header line `L,k` followed by `L`
    /// rows of `k` comma-separated probabilities. Columns must sum to 1
    /// within [`FILE_COLUMN_TOLERANCE`].
    pub fn from_csv(text: &str) -> std::result::Result<Self, CsvError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines.next().ok_or(CsvError::new(1, "missing header line \"L,k\""))?;
        let dims: Vec<&str> = header.split(',').map(str::trim).collect();
        let parse_dim = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| CsvError::new(hline, format!("invalid dimension {s:?}")))
        };
        let (outputs, inputs) = match dims.as_slice() {
            [l, k] => (parse_dim(l)?, parse_dim(k)?),
            _ => return Err(CsvError::new(hline, "header must be \"L,k\"")),
        };
        if outputs == 0 || inputs == 0 {
            return Err(CsvError::new(hline, "dimensions must be positive"));
        }
        let mut entries = Vec::with_capacity(outputs.saturating_mul(inputs).min(1 << 24));
        let mut rows = 0;
        for (line_no, line) in lines {
            if rows == outputs {
                return Err(CsvError::new(line_no, format!("more than L = {outputs} rows")));
            }
            let before = entries.len();
            for field in line.split(',') {
                let q: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| CsvError::new(line_no, format!("invalid number {:?}", field.trim())))?;
                if !q.is_finite() || q < 0.0 {
                    return Err(CsvError::new(line_no, format!("{q} is not a probability")));
                }
                entries.push(q);
            }
            if entries.len() - before != inputs {
                return Err(CsvError::new(
                    line_no,
                    format!("expected {inputs} fields, found {}", entries.len() - before),
                ));
            }
            rows += 1;
        }
        if rows != outputs {
            return Err(CsvError::new(
                text.lines().count().max(1),
                format!("expected {outputs} rows, found {rows}"),
            ));
        }
        Self::with_tolerance(outputs, inputs, entries, FILE_COLUMN_TOLERANCE)
            .map_err(|e| CsvError::new(0, e.to_string()))
    }

    /// Serializes to the CSV exchange format with round-trip exact floats.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{},{}\n", self.outputs, self.inputs);
        for row in self.rows() {
            for (v, q) in row.iter().enumerate() {
                if v > 0 {
                    out.push(',');
                }
                write!(out, "{q:?}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// A CSV parse or validation failure; `line` is 1-based, 0 when the error
/// concerns the matrix as a whole.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct CsvError {
    pub line: usize,
    pub message: String,
}

impl CsvError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

/// Result of [`verify_ldp`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LdpVerdict {
    pub holds: bool,
    /// `max_{j, x, x'} ln(q[j][x] / q[j][x'])`; `+inf` when some output has
    /// zero probability under one input but not another.
    pub worst_log_ratio: f64,
}

/// Checks `Q(j | x) <= e^eps Q(j | x')` for all outputs and input pairs.
pub fn verify_ldp(m: &FiniteMechanism, epsilon: f64) -> LdpVerdict {
    let worst_log_ratio = m
        .rows()
        .map(|row| {
            let (lo, hi) = row
                .iter()
                .fold((f64::INFINITY, 0.0f64), |(lo, hi), &q| (lo.min(q), hi.max(q)));
            if hi == 0.0 {
                0.0
            } else if lo == 0.0 {
                f64::INFINITY
            } else {
                (hi / lo).ln()
            }
        })
        .fold(0.0f64, f64::max);
    LdpVerdict {
        holds: worst_log_ratio <= epsilon + LDP_SLACK,
        worst_log_ratio,
    }
}

/// True iff every entry divided by its row minimum is `1` or `e^eps`
/// (relative tolerance [`EXTREMAL_RTOL`]).
pub fn is_extremal(m: &FiniteMechanism, epsilon: f64) -> Result<bool> {
    let e_eps = epsilon.exp();
    let close = |a: f64, b: f64| (a - b).abs() <= EXTREMAL_RTOL * b;
    for (j, row) in m.rows().enumerate() {
        let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
        if lo == 0.0 {
            if row.iter().all(|&q| q == 0.0) {
                return Err(LdpError::InvalidMechanism(format!(
                    "output {j} has probability zero under every input"
                )));
            }
            return Ok(false);
        }
        if !row.iter().all(|&q| {
            let r = q / lo;
            close(r, 1.0) || close(r, e_eps)
        }) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Output distribution `m_j = sum_v p_v Q(j | v)`.
pub fn marginal(m: &FiniteMechanism, p: &ProbabilityVector) -> Result<Vec<f64>> {
    if p.k() != m.inputs() {
        return Err(LdpError::Dimension {
            expected: m.inputs(),
            actual: p.k(),
        });
    }
    Ok(m.rows()
        .map(|row| row.iter().zip(p.as_slice()).map(|(q, p)| q * p).sum())
        .collect())
}
