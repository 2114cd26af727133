//! Argument parsing and command dispatch.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use condensa_core::asymptotics::{leading_coefficients, solve_coefficients, CoefficientTable};
use condensa_core::ensemble::{moments_and_correlation, standardize, EnsembleConfig};
use condensa_core::martingale::default_k_track;
use condensa_core::oracle::ORACLE_MAX_N;
use condensa_core::trajectory::{self, CheckLevel, CheckpointSchedule};
use condensa_core::{Mode, OracleDistribution, SimulationConfig, WeightExponent};
use serde_json::{json, Value};

use crate::error::{AppError, AppResult};
use crate::formats::{clt_targets, coefficients_json, write_ensemble_csv, write_trajectory_csv};
use crate::parallel::{self, resolve_workers};
use crate::verify::{self, Ctx, Profile};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "condensa", version, about = "Superlinear preferential attachment: simulation, coefficients, verification")]
pub struct Cli {
    /// Replica-level parallelism; the CONDENSA_WORKERS variable overrides it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one trajectory and write its checkpoints as CSV.
    Simulate(SimulateArgs),
    /// Write the coefficient table for a rational exponent as JSON.
    Coeffs(CoeffsArgs),
    /// Run seeded replicas and write all checkpoints as CSV.
    Ensemble(EnsembleArgs),
    /// Exact small-n law, optionally compared with simulation.
    Oracle(OracleArgs),
    /// Run a verification profile and write a JSON report.
    Verify(VerifyArgs),
}

fn parse_gamma(s: &str) -> Result<WeightExponent, String> {
    s.parse().map_err(|e: condensa_core::Error| e.to_string())
}

/// Integer step counts, also in the form `1e6`.
fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return if v >= 1 { Ok(v) } else { Err("must be at least 1".into()) };
    }
    match s.parse::<f64>() {
        Ok(x) if x >= 1.0 && x.fract() == 0.0 && x < 1.8e19 => Ok(x as u64),
        _ => Err(format!("{s:?} is not a positive integer")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Histogram,
    Tracked,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Histogram => Mode::Histogram,
            ModeArg::Tracked => Mode::Tracked,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChecksArg {
    Off,
    Checkpoints,
    EveryStep,
}

impl From<ChecksArg> for CheckLevel {
    fn from(c: ChecksArg) -> Self {
        match c {
            ChecksArg::Off => CheckLevel::Off,
            ChecksArg::Checkpoints => CheckLevel::Checkpoints,
            ChecksArg::EveryStep => CheckLevel::EveryStep,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Weight exponent, `p/q` or decimal.
    #[arg(long, value_parser = parse_gamma)]
    pub gamma: WeightExponent,
    /// Number of growth steps.
    #[arg(long, value_parser = parse_count)]
    pub n: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Histogram)]
    pub mode: ModeArg,
    /// Degrees reported densely; larger ones go to the tail column.
    #[arg(long, default_value_t = condensa_core::trajectory::DEFAULT_K_REPORT)]
    pub k_report: usize,
    /// Track the martingales (up to degree A + 2 unless --k-track is given).
    #[arg(long)]
    pub track: bool,
    #[arg(long)]
    pub k_track: Option<usize>,
    /// Geometric checkpoint ratio.
    #[arg(long, default_value_t = 2.0)]
    pub ratio: f64,
    /// Extra checkpoints, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_count)]
    pub checkpoints: Vec<u64>,
    #[arg(long, value_enum, default_value_t = ChecksArg::Checkpoints)]
    pub checks: ChecksArg,
}

impl RunArgs {
    fn config(&self) -> SimulationConfig {
        let mut c = SimulationConfig::new(self.gamma, self.n, self.seed);
        c.mode = self.mode.into();
        c.k_report = self.k_report;
        c.k_track = self.k_track.or(self.track.then(|| default_k_track(&self.gamma)));
        c.schedule = CheckpointSchedule::geometric(self.ratio).with_points(self.checkpoints.iter().copied());
        c.checks = self.checks.into();
        c
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CoeffsArgs {
    #[arg(long, value_parser = parse_gamma)]
    pub gamma: WeightExponent,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_parser = parse_count)]
    pub replicas: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write standardized fluctuation statistics at n as JSON.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, value_parser = parse_gamma)]
    pub gamma: WeightExponent,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=ORACLE_MAX_N))]
    pub n: u64,
    /// Compare with this many simulated replicas.
    #[arg(long, value_parser = parse_count)]
    pub replicas: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Profile::Quick)]
    pub profile: Profile,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Include wall-clock budget checks.
    #[arg(long)]
    pub timing: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn parse_args<I, T>(argv: I) -> Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(argv)
}

/// Parses, runs, and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match parse_args(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn open_out(path: Option<&Path>) -> AppResult<Box<dyn Write>> {
    Ok(match path {
        None => Box::new(BufWriter::new(io::stdout().lock())),
        Some(p) if p == Path::new("-") => Box::new(BufWriter::new(io::stdout().lock())),
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| AppError::io(p, e))?)),
    })
}

fn write_json(path: Option<&Path>, v: &impl serde::Serialize) -> AppResult<()> {
    let mut w = open_out(path)?;
    let name = path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf);
    serde_json::to_writer_pretty(&mut w, v)?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| AppError::io(name, e))
}

pub fn run(cli: Cli) -> AppResult<i32> {
    let workers = resolve_workers(cli.workers)?;
    match cli.command {
        Command::Simulate(a) => {
            let t = trajectory::run(&a.run.config())?;
            write_trajectory_csv(open_out(a.out.as_deref())?, &t)?;
            Ok(EXIT_PASS)
        }
        Command::Coeffs(a) => {
            let table = coefficient_table(&a.gamma)?;
            write_json(a.out.as_deref(), &coefficients_json(&table))?;
            Ok(EXIT_PASS)
        }
        Command::Ensemble(a) => {
            let cfg = EnsembleConfig::new(a.run.config(), a.replicas);
            let ens = parallel::run_ensemble(&cfg, workers)?;
            write_ensemble_csv(open_out(a.out.as_deref())?, &ens)?;
            if let Some(path) = a.summary {
                write_json(Some(&path), &ensemble_summary(&ens)?)?;
            }
            Ok(EXIT_PASS)
        }
        Command::Oracle(a) => oracle(a, workers),
        Command::Verify(a) => {
            let ctx = Ctx { workers, seed: a.seed };
            let report = verify::run_profile(a.profile, ctx, a.timing, |stage| eprintln!("verify: {stage}"))?;
            for c in &report.checks {
                eprintln!(
                    "{} {} [γ={} n={} R={}]: {} {} {}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.gamma,
                    c.n,
                    c.replicas,
                    c.statistic,
                    c.op,
                    c.threshold
                );
            }
            write_json(a.out.as_deref(), &report)?;
            Ok(if report.pass { EXIT_PASS } else { EXIT_FAIL })
        }
    }
}

/// Full table in `1 < γ ≤ 2`, leading coefficients above.
fn coefficient_table(gamma: &WeightExponent) -> AppResult<CoefficientTable> {
    if gamma.as_ratio().is_none() {
        return Err(AppError::Usage(format!("coefficients need an exact rational exponent, got {gamma}")));
    }
    if gamma.value() <= 2.0 {
        Ok(solve_coefficients(gamma)?)
    } else {
        Ok(leading_coefficients(gamma)?)
    }
}

fn ensemble_summary(ens: &condensa_core::EnsembleResult) -> AppResult<Value> {
    let gamma = ens.gamma();
    let n = ens.config.template.n_max;
    let mut targets = Vec::new();
    let mut samples = Vec::new();
    if gamma.as_ratio().is_some() && gamma.is_superlinear() {
        let table = coefficient_table(&gamma)?;
        for target in clt_targets(&table) {
            let s = standardize(ens, &table, target, n)?;
            let m = s.moments();
            targets.push(json!({
                "target": target.to_string(),
                "mean": m.mean,
                "variance": m.variance,
                "stderr": m.stderr,
                "theory_variance": s.theoretical_variance,
                "ks": s.ks()?,
            }));
            samples.push(s);
        }
    }
    let correlation = if samples.len() >= 2 { Some(moments_and_correlation(&samples)?.correlation) } else { None };
    Ok(json!({
        "gamma": gamma.to_string(),
        "n": n,
        "R": ens.len(),
        "base_seed": ens.config.template.seed,
        "targets": targets,
        "correlation": correlation,
    }))
}

fn histogram_key(h: &[(u64, u64)]) -> String {
    h.iter().map(|(k, c)| format!("{k}:{c}")).collect::<Vec<_>>().join(";")
}

fn oracle(a: OracleArgs, workers: usize) -> AppResult<i32> {
    let o = OracleDistribution::new(a.gamma, a.n)?;
    let sim = match a.replicas {
        Some(r) => Some((r, parallel::histogram_frequencies(a.gamma, a.n, r, a.seed, workers)?)),
        None => None,
    };
    let mut worst: f64 = 0.0;
    let outcomes: Vec<Value> = o
        .outcomes
        .iter()
        .map(|(h, &p)| {
            let mut v = json!({ "histogram": histogram_key(h), "probability": p });
            if let Some((r, freq)) = &sim {
                let rf = *r as f64;
                let f = *freq.get(h).unwrap_or(&0) as f64 / rf;
                let se = (p * (1.0 - p) / rf).sqrt();
                let z = if se > 0.0 { (f - p) / se } else { 0.0 };
                worst = worst.max(z.abs());
                v["frequency"] = json!(f);
                v["z"] = json!(z);
            }
            v
        })
        .collect();
    let unexpected = sim.as_ref().map_or(0, |(_, f)| f.keys().filter(|h| !o.outcomes.contains_key(*h)).count());
    let pass = worst <= 4.0 && unexpected == 0;
    let doc = json!({
        "gamma": a.gamma.to_string(),
        "n": a.n,
        "total_probability": o.total_probability(),
        "expected_counts": (1..=a.n + 1).map(|k| (k.to_string(), json!(o.expected_count(k)))).collect::<serde_json::Map<_, _>>(),
        "expected_total_weight": o.expected_total_weight(),
        "max_degree_distribution": o.max_degree_distribution().iter().map(|(k, p)| (k.to_string(), json!(p))).collect::<serde_json::Map<_, _>>(),
        "outcomes": outcomes,
        "comparison": sim.as_ref().map(|(r, _)| json!({
            "R": r,
            "seed": a.seed,
            "max_abs_z": worst,
            "unexpected_outcomes": unexpected,
            "threshold": 4.0,
            "pass": pass,
        })),
    });
    write_json(a.out.as_deref(), &doc)?;
    Ok(if pass { EXIT_PASS } else { EXIT_FAIL })
}
