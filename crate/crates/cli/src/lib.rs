//! `thermolux` subcommands. Each command builds an [`Envelope`] which is
//! rendered as JSON or CSV.

pub mod commands;
pub mod envelope;

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use envelope::{Envelope, Quantity};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_NUMERICAL: i32 = 70;

/// Environment variable capping the worker pool size.
pub const THREADS_ENV: &str = "THERMOLUX_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Usage(String),
    Domain(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Domain(_) => EXIT_DOMAIN,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Domain(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<thermolux_core::Error> for CliError {
    fn from(e: thermolux_core::Error) -> Self {
        use thermolux_core::Error;
        match e {
            Error::Quadrature { .. } | Error::CountOverflow => CliError::Numerical(e.to_string()),
            other => CliError::Domain(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "thermolux",
    version,
    about = "Information capacity of photon counting under thermal illumination",
    args_override_self = true
)]
pub struct Cli {
    /// key=value file whose entries act as flags; command-line flags win.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Peak-constrained capacity: closed form against the numerical solver.
    Capacity(CapacityArgs),
    /// The blackbody integrals σ and η and the information per photon.
    Constants(ConstantsArgs),
    /// Degrees of freedom and total information of an illuminated scene.
    Radiometry(RadiometryArgs),
    /// Largest signal level at which the two-level code stays optimal.
    Threshold(ThresholdArgs),
    /// Monte Carlo readout of the optimal two-level code.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CapacityArgs {
    /// Peak signal level x_m in (0, 1).
    #[arg(long, allow_negative_numbers = true)]
    pub xm: f64,
    /// Number of grid points on [0, x_m].
    #[arg(long, default_value_t = 2001)]
    pub grid: usize,
    /// Stopping gap between the solver's bounds, in nats.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ConstantsArgs {
    /// Re-run the quadratures instead of using the cached values.
    #[arg(long)]
    pub recompute: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceModel {
    Planck { temperature: f64 },
    Flat { energy: f64 },
}

impl fmt::Display for SourceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceModel::Planck { temperature } => write!(f, "planck:{temperature}"),
            SourceModel::Flat { energy } => write!(f, "flat:{energy}"),
        }
    }
}

fn parse_model(s: &str) -> Result<SourceModel, String> {
    let (kind, value) = s
        .split_once(':')
        .ok_or_else(|| format!("expected planck:T or flat:rP, got {s:?}"))?;
    let value: f64 = value
        .parse()
        .map_err(|e| format!("bad number {value:?}: {e}"))?;
    match kind {
        "planck" => Ok(SourceModel::Planck { temperature: value }),
        "flat" => Ok(SourceModel::Flat { energy: value }),
        other => Err(format!("unknown model {other:?}; use planck or flat")),
    }
}

#[derive(Debug, Clone, Args)]
pub struct RadiometryArgs {
    /// Object area S in m².
    #[arg(long, default_value_t = 1.0)]
    pub area: f64,
    /// Solid angle Ω in sr, at most 2π.
    #[arg(long, default_value_t = 2.0 * std::f64::consts::PI)]
    pub solid_angle: f64,
    /// Observation time τ in s.
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    /// Lower band edge in Hz.
    #[arg(long, default_value_t = 0.0)]
    pub nu_lo: f64,
    /// Upper band edge in Hz; `inf` for an unbounded band.
    #[arg(long, default_value_t = f64::INFINITY)]
    pub nu_hi: f64,
    /// Recorded-energy model: `planck:T` (kelvin) or `flat:rP` (joules).
    #[arg(long, value_parser = parse_model)]
    pub model: SourceModel,
}

#[derive(Debug, Clone, Args)]
pub struct ThresholdArgs {
    #[arg(long, default_value_t = 0.85)]
    pub lo: f64,
    #[arg(long, default_value_t = 0.95)]
    pub hi: f64,
    /// Width of the final bisection interval.
    #[arg(long, default_value_t = 1e-3)]
    pub resolution: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Peak signal level x_m in (0, 1).
    #[arg(long)]
    pub xm: f64,
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Captured result of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn error(e: &CliError) -> Self {
        Outcome {
            code: e.exit_code(),
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        }
    }
}

/// Turns `key = value` lines into flags. Blank lines and `#` comments are
/// skipped; `true`/`false` toggle switches.
pub fn config_args(text: &str) -> Result<Vec<OsString>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", i + 1)))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key == "config" {
            return Err(CliError::Usage("config files cannot nest".into()));
        }
        match value {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            v => {
                out.push(format!("--{key}").into());
                out.push(v.into());
            }
        }
    }
    Ok(out)
}

fn read_config(path: &Path) -> Result<Vec<OsString>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    config_args(&text)
}

fn parse(args: &[OsString]) -> Result<Cli, Outcome> {
    Cli::try_parse_from(args).map_err(|e| {
        use clap::error::ErrorKind;
        let rendered = e.render().to_string();
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Outcome {
                code: EXIT_OK,
                stdout: rendered,
                stderr: String::new(),
            },
            _ => Outcome {
                code: EXIT_USAGE,
                stdout: String::new(),
                stderr: rendered,
            },
        }
    })
}

fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut found = None;
    let mut iter = args.iter().skip(1);
    while let Some(a) = iter.next() {
        let a = a.to_string_lossy();
        if a == "--config" {
            found = iter.next().map(PathBuf::from);
        } else if let Some(p) = a.strip_prefix("--config=") {
            found = Some(PathBuf::from(p));
        }
    }
    found
}

const SUBCOMMANDS: [&str; 5] = [
    "capacity",
    "constants",
    "radiometry",
    "threshold",
    "simulate",
];

/// Parses `args` (including the program name), runs the command and
/// renders its envelope.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let mut args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    if let Some(path) = config_path(&args) {
        let extra = match read_config(&path) {
            Ok(extra) => extra,
            Err(e) => return Outcome::error(&e),
        };
        let at = args
            .iter()
            .position(|a| SUBCOMMANDS.iter().any(|s| a == s))
            .map_or(args.len(), |i| i + 1);
        args.splice(at..at, extra);
    }
    let cli = match parse(&args) {
        Ok(cli) => cli,
        Err(out) => return out,
    };

    let envelope = match &cli.command {
        Command::Capacity(a) => commands::capacity(a),
        Command::Constants(a) => commands::constants(a),
        Command::Radiometry(a) => commands::radiometry(a),
        Command::Threshold(a) => commands::threshold(a),
        Command::Simulate(a) => commands::simulate(a),
    };
    match envelope {
        Ok(mut env) => {
            env.input("format", format!("{:?}", cli.format).to_lowercase());
            match cli.format {
                Format::Json => Outcome {
                    code: EXIT_OK,
                    stdout: env.to_json(),
                    stderr: String::new(),
                },
                Format::Csv => Outcome {
                    code: EXIT_OK,
                    stdout: env.to_csv(),
                    stderr: env
                        .warnings
                        .iter()
                        .map(|w| format!("warning: {w}\n"))
                        .collect(),
                },
            }
        }
        Err(e) => Outcome::error(&e),
    }
}

/// Caps the global rayon pool from [`THREADS_ENV`] when it is set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Usage(format!(
            "{THREADS_ENV} must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))
}
