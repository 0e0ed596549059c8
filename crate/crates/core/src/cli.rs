//! Command-line front end.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};

use crate::analytic::{self, CaptureParam, FramePolicy};
use crate::bridge::{self, MIN_TRIALS};
use crate::sim::{self, CampaignPlan, RawConfig, ScenarioConfig, Sweep};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

/// Seed override below `--seed` and above the scenario file.
pub const SEED_ENV: &str = "VSYNC_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "vsync",
    version,
    about = "VSync vehicle identification simulator and throughput models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form throughput curves as CSV.
    Theory(TheoryArgs),
    /// Run one scenario file.
    Simulate(SimulateArgs),
    /// Run a scenario over a parameter grid.
    Campaign(CampaignArgs),
    /// Monte Carlo check of the closed forms.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    #[arg(long, default_value_t = 1)]
    pub n_min: u32,
    #[arg(long, default_value_t = 100)]
    pub n_max: u32,
    /// Comma-separated capture probabilities.
    #[arg(long, value_delimiter = ',', value_parser = parse_rho, default_value = "0,0.5,0.8")]
    pub rho: Vec<f64>,
    /// `optimal`, `n` or `fixed:L`.
    #[arg(long, value_parser = parse_frame_policy, default_value = "optimal")]
    pub frame: FramePolicy,
    /// Output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CampaignArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// `key=v1,v2,...`; repeat for more dimensions.
    #[arg(long, required = true)]
    pub sweep: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub jobs: u32,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    pub n: u32,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u16).range(1..))]
    pub l: u16,
    #[arg(long, value_parser = parse_rho, default_value = "0.5")]
    pub rho: f64,
    #[arg(long, default_value_t = 200_000, value_parser = clap::value_parser!(u64).range(MIN_TRIALS..))]
    pub trials: u64,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn parse_rho(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|e| format!("{e}"))?;
    CaptureParam::new(v)
        .map(CaptureParam::value)
        .map_err(|e| e.to_string())
}

fn parse_frame_policy(s: &str) -> Result<FramePolicy, String> {
    match s.trim() {
        "optimal" => Ok(FramePolicy::Optimal),
        "n" => Ok(FramePolicy::EqualToN),
        other => {
            let l = other.strip_prefix("fixed:").unwrap_or(other);
            match l.parse::<u32>() {
                Ok(l) if l > 0 => Ok(FramePolicy::Fixed(l)),
                _ => Err(format!("expected optimal, n or fixed:L with L >= 1, got {s:?}")),
            }
        }
    }
}

/// Failure with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

impl Failure {
    fn usage(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: EXIT_USAGE,
            error: error.into(),
        }
    }

    fn config(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: EXIT_CONFIG,
            error: error.into(),
        }
    }
}

/// Parses `args` and runs the subcommand. Returns the process exit code.
pub fn run<I, T>(args: I, env_seed: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
                if !text.contains("Usage:") {
                    let _ = writeln!(err, "\n{}", Cli::command().render_usage());
                }
            }
            return code;
        }
    };
    match execute(cli.command, env_seed, out, err) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {:#}", f.error);
            f.code
        }
    }
}

fn execute(
    command: Command,
    env_seed: Option<&str>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    match command {
        Command::Theory(a) => theory(a, out),
        Command::Simulate(a) => simulate(a, env_seed, out),
        Command::Campaign(a) => campaign(a, env_seed, out, err),
        Command::Validate(a) => validate(a, env_seed, out),
    }
}

fn env_seed_value(env_seed: Option<&str>) -> Result<Option<u64>, Failure> {
    env_seed
        .map(|s| {
            s.trim()
                .parse::<u64>()
                .with_context(|| format!("{SEED_ENV}={s:?} is not an unsigned integer"))
                .map_err(Failure::config)
        })
        .transpose()
}

/// `--seed` wins over the environment, which wins over the file.
fn apply_seed(raw: &mut RawConfig, flag: Option<u64>, env_seed: Option<&str>) -> Result<(), Failure> {
    if let Some(seed) = flag.or(env_seed_value(env_seed)?) {
        raw.set("seed", &seed.to_string()).map_err(Failure::config)?;
    }
    Ok(())
}

fn read_raw(path: &Path) -> Result<RawConfig, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::config)?;
    RawConfig::parse(&text)
        .with_context(|| format!("in {}", path.display()))
        .map_err(Failure::config)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("cannot create {}", path.display()))
        .map_err(Failure::config)
}

fn io_failure(e: io::Error) -> Failure {
    Failure::config(anyhow::Error::new(e).context("write failed"))
}

fn theory(a: TheoryArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let rhos: Vec<CaptureParam> = a
        .rho
        .iter()
        .map(|&r| CaptureParam::new(r))
        .collect::<Result<_, _>>()
        .map_err(Failure::usage)?;
    let points = analytic::theory_curves(a.n_min, a.n_max, &rhos, a.frame).map_err(Failure::usage)?;
    match a.out {
        Some(path) => {
            let mut w = create(&path)?;
            analytic::write_theory_csv(&points, &mut w).map_err(io_failure)?;
            w.flush().map_err(io_failure)?;
        }
        None => analytic::write_theory_csv(&points, out).map_err(io_failure)?,
    }
    Ok(EXIT_OK)
}

fn simulate(a: SimulateArgs, env_seed: Option<&str>, out: &mut dyn Write) -> Result<i32, Failure> {
    let mut raw = read_raw(&a.config)?;
    apply_seed(&mut raw, a.seed, env_seed)?;
    let config = ScenarioConfig::from_raw(&raw).map_err(Failure::config)?;
    let result = sim::run_scenario(&config).map_err(Failure::config)?;

    fs::create_dir_all(&a.out_dir)
        .with_context(|| format!("cannot create {}", a.out_dir.display()))
        .map_err(Failure::config)?;
    let mut w = create(&a.out_dir.join("iterations.csv"))?;
    sim::write_iteration_csv(&result.logs, &mut w).map_err(io_failure)?;
    w.flush().map_err(io_failure)?;
    let mut w = create(&a.out_dir.join("metrics.csv"))?;
    sim::write_campaign_csv(std::slice::from_ref(&result.metrics), &mut w).map_err(io_failure)?;
    w.flush().map_err(io_failure)?;

    writeln!(out, "{}", result.metrics.summary()).map_err(io_failure)?;
    Ok(EXIT_OK)
}

fn campaign(
    a: CampaignArgs,
    env_seed: Option<&str>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    let mut raw = read_raw(&a.config)?;
    apply_seed(&mut raw, a.seed, env_seed)?;
    let sweeps: Vec<Sweep> = a
        .sweep
        .iter()
        .map(|s| s.parse().with_context(|| format!("bad --sweep {s:?}")))
        .collect::<Result<_, _>>()
        .map_err(Failure::config)?;
    let plan = CampaignPlan::new(&raw, &sweeps).map_err(Failure::config)?;
    let _ = writeln!(err, "running {} points on {} thread(s)", plan.len(), a.jobs);
    let rows = sim::run_campaign(&plan, a.jobs as usize).map_err(Failure::config)?;
    match a.out {
        Some(path) => {
            let mut w = create(&path)?;
            sim::write_campaign_csv(&rows, &mut w).map_err(io_failure)?;
            w.flush().map_err(io_failure)?;
        }
        None => sim::write_campaign_csv(&rows, out).map_err(io_failure)?,
    }
    Ok(EXIT_OK)
}

fn validate(a: ValidateArgs, env_seed: Option<&str>, out: &mut dyn Write) -> Result<i32, Failure> {
    let seed = match a.seed {
        Some(s) => s,
        None => env_seed_value(env_seed)?.unwrap_or(0),
    };
    let report = bridge::validate(a.n, a.l, a.rho, a.trials, seed).map_err(Failure::usage)?;
    writeln!(
        out,
        "n={} l={} rho={} trials={} seed={}",
        report.n, report.l, report.rho, report.trials, seed
    )
    .map_err(io_failure)?;
    for line in &report.lines {
        writeln!(out, "{line}").map_err(io_failure)?;
    }
    if report.pass() {
        Ok(EXIT_OK)
    } else {
        writeln!(out, "validation failed").map_err(io_failure)?;
        Ok(EXIT_VALIDATION)
    }
}
