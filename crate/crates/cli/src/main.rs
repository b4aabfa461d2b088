//! `ldplab` command-line front end.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ldplab::estimation::coefficients;
use ldplab::mechanisms::{is_extremal, verify_ldp, FiniteMechanism, SubsetMechanism};
use ldplab::montecarlo::{round_significant, Engine, ScanConfig, SubsetSize};
use ldplab::theory::bound_summary;
use ldplab::LdpError;
use serde_json::{json, Value};

use crate::config::RawConfig;

const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Parser)]
#[command(name = "ldplab", version, about = "Subset-selection local privacy: schemes, bounds and simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the minimax lower bound and its constants.
    Bound(BoundArgs),
    /// Describe a subset-selection scheme.
    Mechanism(MechanismArgs),
    /// Run a Monte Carlo risk experiment.
    Simulate(SimulateArgs),
    /// Check a privatization matrix from a CSV file.
    Verify(VerifyArgs),
    /// Compare risks across input distributions.
    Scan(ScanArgs),
}

#[derive(Args)]
struct BoundArgs {
    /// Alphabet size (number of symbols, >= 2)
    #[arg(long)]
    k: usize,
    /// Privacy level epsilon (nats, > 0)
    #[arg(long)]
    epsilon: f64,
    /// Loss exponent u (dimensionless, >= 1)
    #[arg(long)]
    u: f64,
    /// Number of samples n (count, >= 1)
    #[arg(long)]
    n: u64,
}

#[derive(Args)]
struct MechanismArgs {
    /// Alphabet size (number of symbols, >= 2)
    #[arg(long)]
    k: usize,
    /// Privacy level epsilon (nats, > 0)
    #[arg(long)]
    epsilon: f64,
    /// Subset size d (symbols per report, 1..k-1) or "auto" for the optimum
    #[arg(long, default_value = "auto", value_parser = parse_subset_size)]
    d: SubsetSize,
}

#[derive(Args)]
struct RunControl {
    /// Worker threads (count; 0 uses every available core)
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Refuse runs needing more than this many privatizations (count)
    #[arg(long, default_value_t = 1_000_000_000)]
    max_cells: u128,
    /// Run even when the privatization count exceeds --max-cells
    #[arg(long)]
    force: bool,
    /// Write the JSON report to this file path instead of standard output
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment file of key = value lines (file path)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Alphabet size (number of symbols); overrides the file
    #[arg(long)]
    k: Option<usize>,
    /// Privacy level epsilon (nats); overrides the file
    #[arg(long)]
    epsilon: Option<f64>,
    /// Subset size (symbols per report) or "auto"; overrides the file
    #[arg(long)]
    d: Option<String>,
    /// Loss exponents u, comma separated (dimensionless, in (0, 2]); overrides the file
    #[arg(long)]
    u: Option<String>,
    /// Sample counts n, comma separated (count); overrides the file
    #[arg(long)]
    n: Option<String>,
    /// Monte Carlo trials per (n, u) cell (count); overrides the file
    #[arg(long)]
    trials: Option<u64>,
    /// Input distribution: uniform, point_mass:i, dirichlet:alpha or explicit:p0,p1,...
    #[arg(long)]
    distribution: Option<String>,
    /// Estimator: raw or projected
    #[arg(long)]
    estimator: Option<String>,
    /// Master seed (unsigned 64-bit integer); overrides the file
    #[arg(long, env = "LDPLAB_SEED")]
    seed: Option<u64>,
    /// Also write one CSV row per (n, u) cell to this file path
    #[arg(long)]
    csv_out: Option<PathBuf>,
    #[command(flatten)]
    run: RunControl,
}

#[derive(Args)]
struct VerifyArgs {
    /// Privatization matrix CSV: header "L,k" then L rows of k probabilities (file path)
    #[arg(long)]
    mechanism: PathBuf,
    /// Privacy level epsilon to check against (nats, > 0)
    #[arg(long)]
    epsilon: f64,
}

#[derive(Args)]
struct ScanArgs {
    /// Alphabet size (number of symbols, >= 2)
    #[arg(long)]
    k: usize,
    /// Privacy level epsilon (nats, > 0)
    #[arg(long)]
    epsilon: f64,
    /// Subset size d (symbols per report) or "auto"
    #[arg(long, default_value = "auto", value_parser = parse_subset_size)]
    d: SubsetSize,
    /// Number of samples n (count, >= 1)
    #[arg(long)]
    n: u64,
    /// Loss exponent u (dimensionless, in (0, 2]); u = 2 uses exact risks
    #[arg(long, default_value_t = 2.0)]
    u: f64,
    /// Random Dirichlet(1, ..., 1) inputs scanned besides uniform and point masses (count)
    #[arg(long, default_value_t = 20)]
    num_distributions: usize,
    /// Monte Carlo trials per distribution (count; unused when u = 2)
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    /// Master seed (unsigned 64-bit integer)
    #[arg(long, env = "LDPLAB_SEED", default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    run: RunControl,
}

fn parse_subset_size(s: &str) -> Result<SubsetSize, String> {
    if s == "auto" {
        return Ok(SubsetSize::Auto);
    }
    s.parse()
        .map(SubsetSize::Fixed)
        .map_err(|_| format!("expected a non-negative integer or \"auto\", found {s:?}"))
}

/// Exit status 2 for bad input, 3 for requests the model cannot serve.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Domain(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Domain(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Usage(m) | Self::Domain(m) => m,
        }
    }
}

impl From<LdpError> for Failure {
    fn from(e: LdpError) -> Self {
        match e {
            LdpError::InvalidConfig(_) => Self::Usage(e.to_string()),
            _ => Self::Domain(e.to_string()),
        }
    }
}

/// A JSON number rounded to 12 significant digits, or a string for
/// non-finite values.
fn real(x: f64) -> Value {
    if x.is_finite() {
        json!(round_significant(x, SIGNIFICANT_DIGITS))
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => *v = real(n.as_f64().unwrap_or(f64::NAN)),
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

fn to_json<T: serde::Serialize>(x: &T) -> Result<Value, Failure> {
    let mut v = serde_json::to_value(x).map_err(|e| Failure::Domain(e.to_string()))?;
    round_floats(&mut v);
    Ok(v)
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn emit(value: &Value, out: Option<&Path>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Domain(e.to_string()))?;
    match out {
        Some(path) => write_file(path, &(text + "\n")),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn check_budget(run: &RunControl, needed: u128) -> Result<(), Failure> {
    if needed > run.max_cells && !run.force {
        return Err(Failure::Domain(format!(
            "run needs {needed} privatizations, above --max-cells {}; pass --force to run anyway",
            run.max_cells
        )));
    }
    Ok(())
}

fn cmd_bound(args: &BoundArgs) -> Result<(), Failure> {
    let s = bound_summary(args.k, args.epsilon, args.u, args.n)?;
    let v = json!({
        "k": s.k,
        "epsilon": real(s.epsilon),
        "u": real(s.u),
        "n": s.n,
        "d_star": s.d_star,
        "M": real(s.big_m),
        "C_u": real(s.c_u),
        "lower_bound": real(s.lower_bound),
    });
    emit(&v, None)
}

fn cmd_mechanism(args: &MechanismArgs) -> Result<(), Failure> {
    let d = args.d.resolve(args.k, args.epsilon)?;
    let mech = SubsetMechanism::new(args.k, args.epsilon, d)?;
    let c = coefficients(args.k, args.epsilon, d)?;
    let z = mech.normalizer();
    let v = json!({
        "k": args.k,
        "epsilon": real(args.epsilon),
        "d": d,
        "Z": if z.is_finite() { real(z) } else { Value::Null },
        "log_Z": real(mech.ln_normalizer()),
        "A": real(c.a),
        "B": real(c.b),
        "output_alphabet_size": mech.output_alphabet_size().map(|s| s.to_string()),
        "output_alphabet_size_log10": real(mech.log10_output_alphabet_size()),
        "inclusion_probability": real(mech.inclusion_probability()),
    });
    emit(&v, None)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let mut raw = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
            RawConfig::parse(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        None => RawConfig::default(),
    };
    let overrides = [
        ("k", args.k.map(|x| x.to_string())),
        ("epsilon", args.epsilon.map(|x| x.to_string())),
        ("d", args.d.clone()),
        ("u_values", args.u.clone()),
        ("n_values", args.n.clone()),
        ("trials", args.trials.map(|x| x.to_string())),
        ("distribution", args.distribution.clone()),
        ("estimator", args.estimator.clone()),
        ("master_seed", args.seed.map(|x| x.to_string())),
    ];
    for (key, value) in overrides {
        if let Some(value) = value {
            raw.set(key, value);
        }
    }
    let config = raw.into_experiment().map_err(|e| Failure::Usage(format!("config: {e}")))?;
    config.validate()?;
    check_budget(&args.run, config.privatizations())?;
    let report = Engine::new(args.run.workers)?.run_experiment(&config)?;
    if let Some(path) = &args.csv_out {
        write_file(path, &report.to_csv())?;
    }
    emit(&to_json(&report)?, args.run.json_out.as_deref())
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), Failure> {
    let path = &args.mechanism;
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read mechanism {}: {e}", path.display())))?;
    let m = FiniteMechanism::from_csv(&text).map_err(|e| {
        let at = if e.line == 0 { String::new() } else { format!(" line {}", e.line) };
        Failure::Usage(format!("{}{at}: {}", path.display(), e.message))
    })?;
    if !(args.epsilon.is_finite() && args.epsilon > 0.0) {
        return Err(LdpError::PrivacyParameter(args.epsilon).into());
    }
    let verdict = verify_ldp(&m, args.epsilon);
    let v = json!({
        "ldp_holds": verdict.holds,
        "worst_log_ratio": real(verdict.worst_log_ratio),
        "extremal": is_extremal(&m, args.epsilon)?,
    });
    emit(&v, None)
}

fn cmd_scan(args: &ScanArgs) -> Result<(), Failure> {
    let config = ScanConfig {
        k: args.k,
        epsilon: args.epsilon,
        d: args.d,
        n: args.n,
        u: args.u,
        trials: args.trials,
        num_distributions: args.num_distributions,
        master_seed: args.seed,
    };
    config.validate()?;
    check_budget(&args.run, config.privatizations())?;
    let report = Engine::new(args.run.workers)?.worst_case_scan(&config)?;
    let mut v = to_json(&report)?;
    if let Some(entries) = v.get_mut("entries").and_then(Value::as_array_mut) {
        for (i, entry) in entries.iter_mut().enumerate() {
            entry["is_maximizer"] = json!(i == report.maximizer);
        }
    }
    emit(&v, args.run.json_out.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Bound(a) => cmd_bound(a),
        Command::Mechanism(a) => cmd_mechanism(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Scan(a) => cmd_scan(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
