//! Command-line front end.
//!
//! Every subcommand reads the shared JSON config (`--config`), applies its
//! own flags on top, writes its outputs into the output directory together
//! with a `manifest.json`, and prints a one-line JSON summary. Exit codes:
//! 0 success, 1 runtime error, 2 configuration or usage error, 3 certified
//! failure, 4 inconclusive.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub use commands::{execute, resolve, SUBCOMMANDS};
use config::{pairs_to_object, pairs_to_params, RatesConfig, RunConfig, WeightRef};

use crate::experiments::TimeGrid;
use crate::models::presets::{preset, PRESET_NAMES};
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_FAIL: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "HARRIS_KINETICS_OUT";
const DEFAULT_OUT: &str = "harris_kinetics_out";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Run(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Run(e) => match e {
                Error::InvalidInput(_)
                | Error::ConstantsOutOfRange(_)
                | Error::Unsupported(_)
                | Error::UnknownRegime { .. }
                | Error::InvalidWeight { .. }
                | Error::StabilityLimit { .. } => EXIT_USAGE,
                _ => EXIT_RUNTIME,
            },
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Run(e) => match e {
                Error::InvalidInput(_) => "invalid_input",
                Error::ConstantsOutOfRange(_) => "constants_out_of_range",
                Error::Unsupported(_) => "unsupported",
                Error::UnknownRegime { .. } => "unknown_regime",
                Error::InvalidWeight { .. } => "invalid_weight",
                Error::NonFinite(_) => "non_finite",
                Error::StabilityLimit { .. } => "stability_limit",
                Error::NotConverged { .. } => "not_converged",
                Error::MassOutsideBox { .. } => "mass_outside_box",
                Error::NoCertifiedConstants(_) => "no_certified_constants",
                Error::Io(_) => "io",
                Error::Json(_) => "json",
            },
        }
    }

    /// JSON document written to stderr.
    pub fn detail(&self) -> Value {
        json!({ "error": self.kind(), "message": self.to_string(), "exit_code": self.exit_code() })
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(Error::Io(e))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => EXIT_OK,
            Status::Fail => EXIT_FAIL,
            Status::Inconclusive => EXIT_INCONCLUSIVE,
        }
    }
}

/// Result of one subcommand before anything is written.
pub struct Outcome {
    pub status: Status,
    /// File name and contents.
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// Resolved configuration; re-running it reproduces the outputs.
    pub config: RunConfig,
    pub master_seed: u64,
    pub version: String,
    pub started: String,
    pub finished: String,
    pub status: Status,
    pub exit_code: i32,
    pub outputs: Vec<OutputFile>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Parser, Debug)]
#[command(name = "harris-kinetics", version, about = "Convergence rates, kinetic simulators and hypothesis checks")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory; defaults to $HARRIS_KINETICS_OUT, then ./harris_kinetics_out.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Closed-form rate constants.
    Rates(RatesArgs),
    /// Simulate an ensemble and dump trajectories.
    Simulate(SimulateArgs),
    /// Check a drift inequality on sampled phase-space points.
    VerifyDrift(DriftArgs),
    /// Estimate a minorisation constant on a small set.
    Minorisation(MinorisationArgs),
    /// Check geometric control of the scattering coefficient.
    Gcc(GccArgs),
    /// Measure decay of the weighted distance to equilibrium.
    TvDecay(TvDecayArgs),
    /// Solve the stationary nonlinear BGK problem on an interval.
    Steady(SteadyArgs),
    /// Re-run a manifest and compare output hashes.
    Replay(ReplayArgs),
    /// List model presets.
    Models,
}

#[derive(Args, Debug)]
#[group(multiple = false)]
pub struct RatesArgs {
    /// Doeblin rate from `alpha`, `tau`.
    #[arg(long, num_args = 1.., value_name = "KEY=VALUE")]
    pub doeblin: Option<Vec<String>>,
    /// Harris rate from drift and minorisation constants.
    #[arg(long, num_args = 1.., value_name = "KEY=VALUE")]
    pub harris: Option<Vec<String>>,
    /// Discretise a continuous drift with `zeta`, `D`, `tau`.
    #[arg(long, num_args = 1.., value_name = "KEY=VALUE")]
    pub drift: Option<Vec<String>>,
    /// Subgeometric envelope from `C`, `mu_phi` and `xi` or `nodes`.
    #[arg(long, num_args = 1.., value_name = "KEY=VALUE")]
    pub subgeometric: Option<Vec<String>>,
    /// Rate under a degenerate minorisation.
    #[arg(long, num_args = 1.., value_name = "KEY=VALUE")]
    pub degenerate: Option<Vec<String>>,
}

#[derive(Args, Debug)]
pub struct ModelArgs {
    /// Preset name or path to a JSON model file.
    #[arg(long)]
    pub model: Option<String>,
    /// Weight tag from the catalog.
    #[arg(long)]
    pub weight: Option<String>,
    /// Weight parameter override, repeatable.
    #[arg(long = "weight-param", value_name = "KEY=VALUE")]
    pub weight_params: Vec<String>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of particles.
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// Final time.
    #[arg(long)]
    pub tmax: Option<f64>,
    /// Largest integrator step.
    #[arg(long)]
    pub dt_max: Option<f64>,
}

#[derive(Args, Debug)]
pub struct DriftArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Target `zeta`; fitted when absent.
    #[arg(long)]
    pub zeta: Option<f64>,
    /// Target `D`; fitted when absent.
    #[arg(long = "D")]
    pub d: Option<f64>,
    /// Sublevel set height.
    #[arg(long)]
    pub level: Option<f64>,
}

#[derive(Args, Debug)]
pub struct MinorisationArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Minorisation time.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Sublevel set height.
    #[arg(long)]
    pub level: Option<f64>,
    /// Histogram bins per axis.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Sample paths per initial state.
    #[arg(long)]
    pub paths: Option<usize>,
    /// Number of initial states.
    #[arg(long)]
    pub n_init: Option<usize>,
}

#[derive(Args, Debug)]
pub struct GccArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Time horizon.
    #[arg(long = "T")]
    pub t: Option<f64>,
    /// Spatial cells.
    #[arg(long)]
    pub nx: Option<usize>,
    /// Comma-separated transport speeds.
    #[arg(long, value_delimiter = ',')]
    pub speeds: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
pub struct TvDecayArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of particles.
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// Final time.
    #[arg(long)]
    pub tmax: Option<f64>,
    /// Histogram bins per axis.
    #[arg(long)]
    pub bins: Option<usize>,
    /// `exponential` or `power`.
    #[arg(long)]
    pub fit: Option<String>,
    /// `full`, `position`, `velocity`, `speed` or `radius_speed`.
    #[arg(long)]
    pub projection: Option<String>,
    /// Largest integrator step.
    #[arg(long)]
    pub dt_max: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SteadyArgs {
    /// Left wall temperature.
    #[arg(long = "T0")]
    pub t0: Option<f64>,
    /// Right wall temperature.
    #[arg(long = "T1")]
    pub t1: Option<f64>,
    /// Knudsen number; the collision term scales as 1/kappa.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Spatial cells.
    #[arg(long)]
    pub nx: Option<usize>,
    /// Velocity nodes.
    #[arg(long)]
    pub nv: Option<usize>,
    /// `upwind` or `minmod`.
    #[arg(long)]
    pub transport: Option<String>,
    /// Residual tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Iteration cap.
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    /// Path to a manifest.json from a previous run.
    pub manifest: PathBuf,
}

fn parse_enum<T: serde::de::DeserializeOwned>(flag: &str, s: &str) -> Result<T, CliError> {
    serde_json::from_value(Value::from(s)).map_err(|e| CliError::Usage(format!("--{flag}: {e}")))
}

fn set_tmax(grid: &mut TimeGrid, t: f64) -> Result<(), CliError> {
    match grid {
        TimeGrid::Linear { t_max, .. } | TimeGrid::Log { t_max, .. } => {
            *t_max = t;
            Ok(())
        }
        TimeGrid::Explicit { .. } => Err(CliError::Usage("--tmax cannot adjust an explicit time grid".into())),
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    let Some(p) = path else {
        return Ok(RunConfig::default());
    };
    let text = std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
}

fn apply_model(a: &ModelArgs, cfg: &mut RunConfig) -> Result<Option<WeightRef>, CliError> {
    if let Some(m) = &a.model {
        let is_file = m.ends_with(".json") || Path::new(m).is_file();
        cfg.model = Some(if is_file {
            let text = std::fs::read_to_string(m).map_err(|e| CliError::Usage(format!("{m}: {e}")))?;
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{m}: {e}")))?
        } else {
            Value::from(m.as_str())
        });
    }
    let params = pairs_to_params(&a.weight_params).map_err(CliError::Usage)?;
    Ok(match &a.weight {
        Some(tag) => Some(WeightRef {
            tag: tag.clone(),
            params,
        }),
        None if !params.is_empty() => {
            return Err(CliError::Usage("--weight-param needs --weight".into()));
        }
        None => None,
    })
}

fn rates_from_pairs(kind: &str, pairs: &[String]) -> Result<RatesConfig, CliError> {
    let mut obj = pairs_to_object(pairs).map_err(CliError::Usage)?;
    obj["kind"] = Value::from(kind);
    serde_json::from_value(obj).map_err(|e| CliError::Usage(format!("rates --{kind}: {e}")))
}

/// Applies the flags of `cmd` to `cfg` and returns the subcommand name.
fn apply_overrides(cmd: &Command, cfg: &mut RunConfig) -> Result<&'static str, CliError> {
    Ok(match cmd {
        Command::Rates(a) => {
            let given = [
                ("doeblin", &a.doeblin),
                ("harris", &a.harris),
                ("drift", &a.drift),
                ("subgeometric", &a.subgeometric),
                ("degenerate", &a.degenerate),
            ];
            if let Some((k, Some(p))) = given.iter().find(|(_, p)| p.is_some()) {
                cfg.rates = Some(rates_from_pairs(k, p)?);
            }
            "rates"
        }
        Command::Simulate(a) => {
            apply_model(&a.model, cfg)?;
            let s = cfg.simulate.get_or_insert_with(Default::default);
            if let Some(n) = a.n {
                s.n = n;
            }
            if let Some(t) = a.tmax {
                set_tmax(&mut s.grid, t)?;
            }
            if let Some(dt) = a.dt_max {
                s.dt_max = dt;
            }
            "simulate"
        }
        Command::VerifyDrift(a) => {
            if let Some(w) = apply_model(&a.model, cfg)? {
                cfg.weight = Some(w);
            }
            let o = cfg.verify_drift.get_or_insert_with(Default::default);
            if a.zeta.is_some() {
                o.zeta_target = a.zeta;
            }
            if a.d.is_some() {
                o.d_target = a.d;
            }
            if let Some(l) = a.level {
                o.level = l;
            }
            "verify-drift"
        }
        Command::Minorisation(a) => {
            if let Some(w) = apply_model(&a.model, cfg)? {
                cfg.weight = Some(w);
            }
            let o = cfg.minorisation.get_or_insert_with(Default::default);
            if let Some(t) = a.tau {
                o.tau = t;
            }
            if let Some(l) = a.level {
                o.level = l;
            }
            if let Some(b) = a.bins {
                o.bins_per_axis = b;
            }
            if let Some(p) = a.paths {
                o.n_paths = p;
            }
            if let Some(n) = a.n_init {
                o.n_init = n;
            }
            "minorisation"
        }
        Command::Gcc(a) => {
            apply_model(&a.model, cfg)?;
            let g = cfg.gcc.get_or_insert_with(Default::default);
            if let Some(t) = a.t {
                g.t_horizon = t;
            }
            if a.nx.is_some() {
                g.n_x = a.nx;
            }
            if let Some(s) = &a.speeds {
                g.speeds = s.clone();
            }
            "gcc"
        }
        Command::TvDecay(a) => {
            let w = apply_model(&a.model, cfg)?;
            let t = cfg.tv_decay.get_or_insert_with(Default::default);
            if let Some(w) = w {
                t.weight = Some(w.tag);
                t.weight_params = w.params;
            }
            if let Some(n) = a.n {
                t.n = n;
            }
            if let Some(tm) = a.tmax {
                set_tmax(&mut t.grid, tm)?;
            }
            if let Some(b) = a.bins {
                t.bins_per_axis = b;
            }
            if let Some(f) = &a.fit {
                t.fit = parse_enum("fit", f)?;
            }
            if let Some(p) = &a.projection {
                t.projection = parse_enum("projection", p)?;
            }
            if let Some(dt) = a.dt_max {
                t.dt_max = dt;
            }
            "tv-decay"
        }
        Command::Steady(a) => {
            let s = cfg.steady.get_or_insert_with(Default::default);
            if let Some(v) = a.t0 {
                s.t0 = v;
            }
            if let Some(v) = a.t1 {
                s.t1 = v;
            }
            if let Some(v) = a.kappa {
                s.kappa = v;
            }
            if let Some(v) = a.nx {
                s.nx = v;
            }
            if let Some(v) = a.nv {
                s.nv = v;
            }
            if let Some(v) = &a.transport {
                s.transport = parse_enum("transport", v)?;
            }
            if let Some(v) = a.tol {
                s.tol = v;
            }
            if let Some(v) = a.max_iter {
                s.max_iter = v;
            }
            "steady"
        }
        Command::Replay(_) | Command::Models => unreachable!("handled by dispatch"),
    })
}

/// Output directory from the flag, the environment, or the default.
pub fn output_dir(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339()
}

/// Resolves and runs `cfg`, writes the outputs and `manifest.json` into `out`.
pub fn run_config(cmd: &str, cfg: RunConfig, out: &Path) -> Result<(RunManifest, Value), CliError> {
    let started = now();
    let resolved = resolve(cmd, cfg)?;
    let outcome = execute(cmd, &resolved)?;
    std::fs::create_dir_all(out)?;
    let mut outputs = Vec::with_capacity(outcome.files.len());
    for (name, bytes) in &outcome.files {
        std::fs::write(out.join(name), bytes)?;
        outputs.push(OutputFile {
            path: name.clone(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
    }
    let manifest = RunManifest {
        subcommand: cmd.to_string(),
        master_seed: resolved.seed,
        config: resolved,
        version: env!("CARGO_PKG_VERSION").to_string(),
        started,
        finished: now(),
        status: outcome.status,
        exit_code: outcome.status.exit_code(),
        outputs,
    };
    let mut text = serde_json::to_vec_pretty(&manifest).map_err(Error::from)?;
    text.push(b'\n');
    std::fs::write(out.join("manifest.json"), text)?;
    Ok((manifest, outcome.summary))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReplayFile {
    pub path: String,
    pub original: String,
    pub replayed: Option<String>,
    pub identical: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReplayReport {
    /// All CSV outputs reproduced bit for bit.
    pub identical: bool,
    pub files: Vec<ReplayFile>,
}

/// Re-runs a manifest into `out` and compares the CSV hashes.
pub fn replay(manifest_path: &Path, out: &Path) -> Result<ReplayReport, CliError> {
    let text = std::fs::read_to_string(manifest_path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", manifest_path.display())))?;
    let original: RunManifest = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", manifest_path.display())))?;
    let (again, _) = run_config(&original.subcommand, original.config.clone(), out)?;
    let files: Vec<ReplayFile> = original
        .outputs
        .iter()
        .filter(|f| f.path.ends_with(".csv"))
        .map(|f| {
            let replayed = again.outputs.iter().find(|g| g.path == f.path).map(|g| g.sha256.clone());
            ReplayFile {
                path: f.path.clone(),
                original: f.sha256.clone(),
                identical: replayed.as_deref() == Some(f.sha256.as_str()),
                replayed,
            }
        })
        .collect();
    let report = ReplayReport {
        identical: files.iter().all(|f| f.identical),
        files,
    };
    let mut text = serde_json::to_vec_pretty(&report).map_err(Error::from)?;
    text.push(b'\n');
    std::fs::write(out.join("replay.json"), text)?;
    Ok(report)
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match &cli.command {
        Command::Models => {
            for name in PRESET_NAMES {
                let p = preset(name)?;
                println!("{name:24} {}", p.description);
            }
            Ok(EXIT_OK)
        }
        Command::Replay(a) => {
            let out = match &cli.out {
                Some(o) => o.clone(),
                None => a.manifest.parent().unwrap_or(Path::new(".")).join("replay"),
            };
            let r = replay(&a.manifest, &out)?;
            println!("{}", serde_json::to_string(&r).map_err(Error::from)?);
            Ok(if r.identical { EXIT_OK } else { EXIT_FAIL })
        }
        cmd => {
            let mut cfg = load_config(cli.config.as_deref())?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let name = apply_overrides(cmd, &mut cfg)?;
            let out = output_dir(cli.out.as_deref());
            let (m, summary) = run_config(name, cfg, &out)?;
            let line = json!({
                "subcommand": name,
                "status": m.status,
                "out": out.display().to_string(),
                "result": summary,
            });
            println!("{line}");
            Ok(m.exit_code)
        }
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("{}", CliError::Usage("--threads must be positive".into()).detail());
            return EXIT_USAGE;
        }
        // a pool already built by an earlier call in this process is kept
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.detail());
            e.exit_code()
        }
    }
}
