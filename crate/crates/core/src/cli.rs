//! Command-line front end: JSON run configs in, CSV or JSON reports out.
//!
//! Every subcommand reads one [`RunConfig`]. Reports are rendered to a string
//! first and then written in one step (stdout, or a temporary file renamed
//! over the target), so a failing run never leaves a partial file behind.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cltdist::{joint_im_density, joint_re_density, momentum_density, single_var_density};
use crate::cltdist::{Gaussian1D, Gaussian2D, SignedGaussianPair};
use crate::dynamics::{verify_against_propagator, PropagatorCheck};
use crate::entropy::{entropy_series, EntropySeries};
use crate::expr::{self, Expr};
use crate::gridstate::{build_state, GridSpec, StateSpec, SystemSpec, Units, WaveFunction};
use crate::moments::{extract_moments, MomentSet, VALIDITY_MARGIN};
use crate::numeric::fmt_f64;
use crate::observables::{classical_limit, expect_poly, HermitianPolynomial, Term};
use crate::oracle::{exact_block_moment, fit_convergence_rate, BlockMoment, RateReport};

/// Environment variable that takes precedence over `--threads`.
pub const THREADS_ENV: &str = "QCLT_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "qclt",
    version,
    about = "Block-variable limit theorems for non-interacting quantum constituents"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output file; defaults to `output.path` in the config, else stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads (overridden by QCLT_THREADS).
    #[arg(long, global = true, value_name = "K")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Moment statistics of the configured state.
    Moments,
    /// Exact block densities against the Gaussian limit, with a log-log rate fit.
    Converge,
    /// Limit, exact and classical expectation values of `poly` for each n.
    Expect,
    /// Differential entropy along the closed-form moment flow.
    Entropy,
    /// Closed-form moment flow against split-operator propagation.
    Evolve,
    /// Parameters of the limit distributions for each n.
    Dist,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Moments => "moments",
            Command::Converge => "converge",
            Command::Expect => "expect",
            Command::Entropy => "entropy",
            Command::Evolve => "evolve",
            Command::Dist => "dist",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeWindow {
    pub t0: f64,
    pub t1: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSpec {
    pub t: f64,
    /// Defaults to the step rule of the system.
    #[serde(default)]
    pub n_steps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub state: StateSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub units: Units,
    #[serde(default)]
    pub system: Option<SystemSpec>,
    #[serde(default)]
    pub n_list: Vec<u64>,
    #[serde(default)]
    pub time: Option<TimeWindow>,
    /// Rows `[m, n, re(c), im(c)]`.
    #[serde(default)]
    pub poly: Option<HermitianPolynomial>,
    /// Optional real function applied to the position variable, `g(x)`.
    #[serde(default)]
    pub g: Option<String>,
    #[serde(default)]
    pub evolve: Option<EvolveSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::usage(format!("config error at `{path}`: {}", e.inner()))
        })
    }

    fn g_expr(&self) -> Result<Option<Expr>, CliError> {
        self.g
            .as_deref()
            .map(expr::parse)
            .transpose()
            .map_err(|e| CliError::usage(format!("g: {e}")))
    }

    fn n_list(&self, min_len: usize) -> Result<&[u64], CliError> {
        if self.n_list.len() < min_len {
            return Err(CliError::usage(format!(
                "n_list needs at least {min_len} entries, got {}",
                self.n_list.len()
            )));
        }
        if let Some(bad) = self.n_list.iter().find(|&&n| n < 1) {
            return Err(CliError::usage(format!(
                "n_list entries must be >= 1, got {bad}"
            )));
        }
        Ok(&self.n_list)
    }

    fn system(&self) -> Result<SystemSpec, CliError> {
        self.system
            .ok_or_else(|| CliError::usage("missing key `system`"))
    }

    fn state(&self) -> Result<WaveFunction, CliError> {
        Ok(build_state(&self.state, self.grid, self.units)?)
    }
}

/// Failure with its process exit code: 2 for usage and configuration
/// problems, 1 for numerical failures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        if e.is_usage() {
            CliError::usage(e.to_string())
        } else {
            CliError::numerical(e.to_string())
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

/// A rendered report plus any diagnostics for stderr.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub body: String,
    pub notes: Vec<String>,
}

fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s =
        serde_json::to_string_pretty(value).map_err(|e| CliError::numerical(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn require_json(cmd: Command, format: Format) -> Result<(), CliError> {
    if format == Format::Csv {
        return Err(CliError::usage(format!(
            "`{}` only supports --format json",
            cmd.name()
        )));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct MomentsReport {
    #[serde(flatten)]
    moments: MomentSet,
    recommended_min_n: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
}

pub fn cmd_moments(config: &RunConfig, format: Format) -> Result<Rendered, CliError> {
    require_json(Command::Moments, format)?;
    let psi = config.state()?;
    let g = config.g_expr()?;
    let ms = extract_moments(&psi, g.as_ref())?;
    let ns = config.n_list(0)?;
    let warnings: Vec<String> = ns.iter().filter_map(|&n| ms.advisory(n)).collect();
    let report = MomentsReport {
        moments: ms,
        recommended_min_n: VALIDITY_MARGIN * ms.validity_ratio,
        warnings: warnings.clone(),
    };
    Ok(Rendered {
        body: json(&report)?,
        notes: warnings,
    })
}

pub fn converge_csv(report: &RateReport) -> String {
    let mut s = String::from("n,sup_error,kl_error\n");
    for ((n, e), k) in report
        .n_values
        .iter()
        .zip(&report.errors)
        .zip(&report.kl_errors)
    {
        let _ = writeln!(s, "{n},{},{}", fmt_f64(*e), fmt_f64(*k));
    }
    s
}

pub fn cmd_converge(config: &RunConfig, format: Format) -> Result<Rendered, CliError> {
    let ns = config.n_list(3)?;
    if config.g.is_some() {
        return Err(CliError::usage("`converge` does not support a g transform"));
    }
    let psi = config.state()?;
    let report = fit_convergence_rate(&psi, ns)?;
    let summary = if report.exact_fixed_point {
        "exact fixed point: every error is below the numerical floor".to_string()
    } else {
        format!(
            "fitted exponent {} (rms residual {})",
            fmt_f64(report.fitted_exponent.unwrap_or(f64::NAN)),
            fmt_f64(report.fit_residual.unwrap_or(f64::NAN))
        )
    };
    let body = match format {
        Format::Csv => converge_csv(&report),
        Format::Json => json(&report)?,
    };
    Ok(Rendered {
        body,
        notes: vec![summary],
    })
}

/// `<cX^mP^n + h.c.>` of the block state at finite `n` when a product-state
/// identity covers every term; `None` otherwise.
pub fn exact_poly_value(
    ms: &MomentSet,
    n: u64,
    poly: &HermitianPolynomial,
) -> Result<Option<f64>, crate::Error> {
    let mut total = 0.0;
    for &Term { m, n: k, c } in poly.terms() {
        let (a, b) = (c.re, c.im);
        let block = |which| exact_block_moment(ms, n, which);
        // 2a·Re<X^m P^k> − 2b·Im<X^m P^k>; only X̂P̂ has a nonzero imaginary part
        let value = match (m, k) {
            (0, 0) => 2.0 * a,
            (1, 0) => 2.0 * a * block(BlockMoment::MeanX)?,
            (0, 1) => 2.0 * a * block(BlockMoment::MeanP)?,
            (2, 0) => 2.0 * a * (block(BlockMoment::VarX)? + ms.mean_x * ms.mean_x),
            (0, 2) => 2.0 * a * (block(BlockMoment::VarP)? + ms.mean_p * ms.mean_p),
            (3, 0) => 2.0 * a * block(BlockMoment::X3)?,
            (1, 1) => {
                let sym = block(BlockMoment::SymCov)? + ms.mean_x * ms.mean_p;
                2.0 * a * sym + b * block(BlockMoment::Commutator)?
            }
            _ => return Ok(None),
        };
        total += value;
    }
    Ok(Some(total))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectRow {
    pub n: u64,
    pub clt_value: f64,
    pub exact_value: Option<f64>,
    pub classical_limit: f64,
}

pub fn expect_table(
    ms: &MomentSet,
    ns: &[u64],
    poly: &HermitianPolynomial,
) -> crate::Result<Vec<ExpectRow>> {
    let classical = classical_limit(poly, ms)?;
    ns.par_iter()
        .map(|&n| {
            Ok(ExpectRow {
                n,
                clt_value: expect_poly(ms, n, poly)?,
                exact_value: exact_poly_value(ms, n, poly)?,
                classical_limit: classical,
            })
        })
        .collect()
}

pub fn cmd_expect(config: &RunConfig, format: Format) -> Result<Rendered, CliError> {
    let poly = config
        .poly
        .as_ref()
        .ok_or_else(|| CliError::usage("missing key `poly`"))?;
    let ns = config.n_list(1)?;
    let psi = config.state()?;
    let g = config.g_expr()?;
    let ms = extract_moments(&psi, g.as_ref())?;
    let rows = expect_table(&ms, ns, poly)?;
    let notes: Vec<String> = ns.iter().filter_map(|&n| ms.advisory(n)).collect();
    let body = match format {
        Format::Csv => {
            let mut s = String::from("n,clt_value,exact_value,classical_limit\n");
            for r in &rows {
                let exact = r.exact_value.map(fmt_f64).unwrap_or_default();
                let _ = writeln!(
                    s,
                    "{},{},{exact},{}",
                    r.n,
                    fmt_f64(r.clt_value),
                    fmt_f64(r.classical_limit)
                );
            }
            s
        }
        Format::Json => json(&rows)?,
    };
    Ok(Rendered { body, notes })
}

pub fn entropy_csv(series: &EntropySeries) -> String {
    let mut s = String::from("t,sigma_x2,sigma_p2,cov_c,dent\n");
    for k in 0..series.len() {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt_f64(series.times[k]),
            fmt_f64(series.var_x[k]),
            fmt_f64(series.var_p[k]),
            fmt_f64(series.cov_c[k]),
            fmt_f64(series.dent[k])
        );
    }
    s
}

pub fn cmd_entropy(config: &RunConfig, format: Format) -> Result<Rendered, CliError> {
    let system = config.system()?;
    let window = config
        .time
        .as_ref()
        .ok_or_else(|| CliError::usage("missing key `time`"))?;
    if config.g.is_some() {
        return Err(crate::Error::JointUnavailable.into());
    }
    let psi = config.state()?;
    let ms0 = extract_moments(&psi, None)?;
    let series = entropy_series(&system, &ms0, window.t0, window.t1, window.samples)?;
    let body = match format {
        Format::Csv => entropy_csv(&series),
        Format::Json => json(&series)?,
    };
    Ok(Rendered {
        body,
        notes: Vec::new(),
    })
}

pub fn cmd_evolve(config: &RunConfig, format: Format) -> Result<Rendered, CliError> {
    require_json(Command::Evolve, format)?;
    let system = config.system()?;
    let spec = config
        .evolve
        .as_ref()
        .ok_or_else(|| CliError::usage("missing key `evolve`"))?;
    let psi = config.state()?;
    let n_steps = spec
        .n_steps
        .unwrap_or_else(|| system.recommended_steps(psi.grid(), psi.units(), spec.t));
    let check: PropagatorCheck = verify_against_propagator(&system, &psi, spec.t, n_steps)?;
    Ok(Rendered {
        body: json(&check)?,
        notes: Vec::new(),
    })
}

#[derive(Debug, Serialize)]
struct DistEntry {
    n: u64,
    x: Gaussian1D,
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<Gaussian1D>,
    #[serde(skip_serializing_if = "Option::is_none")]
    joint_re: Option<Gaussian2D>,
    #[serde(skip_serializing_if = "Option::is_none")]
    joint_im: Option<SignedGaussianPair>,
}

pub fn cmd_dist(config: &RunConfig, format: Format) -> Result<Rendered, CliError> {
    require_json(Command::Dist, format)?;
    let ns = config.n_list(1)?;
    let psi = config.state()?;
    let g = config.g_expr()?;
    let ms = extract_moments(&psi, g.as_ref())?;
    let entries = ns
        .iter()
        .map(|&n| {
            Ok(DistEntry {
                n,
                x: single_var_density(&ms, n)?,
                p: ms.joint.then(|| momentum_density(&ms, n)).transpose()?,
                joint_re: ms.joint.then(|| joint_re_density(&ms, n)).transpose()?,
                joint_im: ms.joint.then(|| joint_im_density(&ms, n)).transpose()?,
            })
        })
        .collect::<crate::Result<Vec<_>>>()?;
    let notes = ns.iter().filter_map(|&n| ms.advisory(n)).collect();
    Ok(Rendered {
        body: json(&entries)?,
        notes,
    })
}

pub fn run_command(cmd: Command, config: &RunConfig, format: Format) -> Result<Rendered, CliError> {
    match cmd {
        Command::Moments => cmd_moments(config, format),
        Command::Converge => cmd_converge(config, format),
        Command::Expect => cmd_expect(config, format),
        Command::Entropy => cmd_entropy(config, format),
        Command::Evolve => cmd_evolve(config, format),
        Command::Dist => cmd_dist(config, format),
    }
}

fn default_format(cmd: Command) -> Format {
    match cmd {
        Command::Converge | Command::Expect | Command::Entropy => Format::Csv,
        _ => Format::Json,
    }
}

/// Thread count: `QCLT_THREADS` if set, else `--threads`.
pub fn resolve_threads(flag: Option<usize>, env: Option<&str>) -> Result<Option<usize>, CliError> {
    let parsed = match env {
        Some(v) => Some(v.trim().parse::<usize>().map_err(|_| {
            CliError::usage(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))
        })?),
        None => flag,
    };
    match parsed {
        Some(0) => Err(CliError::usage("thread count must be >= 1")),
        other => Ok(other),
    }
}

/// Writes `body` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, body: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(body.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let env = std::env::var(THREADS_ENV).ok();
    let threads = resolve_threads(cli.threads, env.as_deref())?;
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::usage("--config PATH is required"))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    let config = RunConfig::from_json(&text)?;
    let format = cli
        .format
        .or(config.output.format)
        .unwrap_or_else(|| default_format(cli.command));
    let out = cli.out.clone().or_else(|| config.output.path.clone());

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = threads {
        builder = builder.num_threads(k);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::numerical(format!("thread pool: {e}")))?;
    let rendered = pool.install(|| run_command(cli.command, &config, format))?;

    for note in &rendered.notes {
        log::warn!("{note}");
    }
    match out {
        Some(p) => write_atomic(&p, &rendered.body)
            .map_err(|e| CliError::numerical(format!("cannot write {}: {e}", p.display())))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(rendered.body.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::numerical(format!("cannot write stdout: {e}")))?;
        }
    }
    Ok(())
}

/// Process entry point used by the `qclt` binary.
pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
