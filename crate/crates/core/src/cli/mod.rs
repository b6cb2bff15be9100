//! Config-driven experiment runner behind the `mepp-lab` binary.
//!
//! ```text
//! mepp-lab <subcommand> --config <path> [--seed N] [--threads N] [--out DIR]
//! ```
//!
//! Exit codes: 0 pass, 1 fail, 2 configuration or input error,
//! 3 inconclusive. Errors are printed to stderr as one JSON object.

mod commands;
mod config;

use std::ffi::OsString;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{configured_trajectory, execute, Command, RunOutput};
pub use config::{
    EntropyConfig, ExperimentConfig, FamilyConfig, FlowConfig, InitialCondition, LoadedConfig, Prop1Config,
    Prop3Config, Prop4Config, Prop5Config, PropsConfig, RestrictConfig, SelectConfig, SCHEMA_VERSION,
};

use crate::{Error, Result};

/// Output directory when neither `--out` nor this variable is set.
pub const OUT_DIR_ENV: &str = "MEPP_LAB_OUT";
pub const DEFAULT_OUT_DIR: &str = "mepp-lab-out";
pub const EXIT_CONFIG_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "mepp-lab", version, about = "Energy-surface measures, entropy and MEPP selection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Replaces the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory (default: $MEPP_LAB_OUT, then ./mepp-lab-out).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Verification suites.
    #[command(subcommand)]
    Verify(Verify),
    /// Entropy of one configured measure.
    Entropy(Common),
    /// Surface restriction against direct surface integration.
    Restrict(Common),
    /// Integrate the configured flow and dump its trajectory.
    Flow(Common),
    /// Rank candidate families along the configured trajectory.
    Select(Common),
}

#[derive(Debug, Subcommand)]
enum Verify {
    /// Restriction consistency, physical entropy, entropy maximization and
    /// the series bound. Without `--config` every suite uses its defaults.
    Props {
        /// Suite to run (repeatable; default all).
        #[arg(long = "prop", value_parser = clap::value_parser!(u8).range(1..=5))]
        props: Vec<u8>,
        /// Box measure for the series bound, replacing the configured list.
        #[arg(long = "box")]
        box_measure: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common, required: bool) -> Result<LoadedConfig> {
    let mut loaded = match &common.config {
        Some(path) => LoadedConfig::load(path)?,
        None if required => return Err(Error::config("--config", "this subcommand needs a config file")),
        None => LoadedConfig::from_config(ExperimentConfig::with_seed(0), ".")?,
    };
    if let Some(seed) = common.seed {
        loaded.config.seed = seed;
    }
    Ok(loaded)
}

fn out_dir(common: &Common) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn dispatch(cli: Cli) -> Result<RunOutput> {
    let (command, common, box_measure) = match cli.command {
        Sub::Verify(Verify::Props {
            props,
            box_measure,
            common,
        }) => {
            for p in &props {
                if ![1, 3, 4, 5].contains(p) {
                    return Err(Error::config("--prop", format!("no suite {p}; choose from 1, 3, 4, 5")));
                }
            }
            let props = if props.is_empty() { vec![1, 3, 4, 5] } else { props };
            (Command::VerifyProps { props }, common, box_measure)
        }
        Sub::Entropy(c) => (Command::Entropy, c, None),
        Sub::Restrict(c) => (Command::Restrict, c, None),
        Sub::Flow(c) => (Command::Flow, c, None),
        Sub::Select(c) => (Command::Select, c, None),
    };
    let mut loaded = load(&common, !matches!(command, Command::VerifyProps { .. }))?;
    if let Some(b) = box_measure {
        loaded.config.props.prop5.boxes = vec![b];
    }
    loaded.config.validate()?;
    let out = out_dir(&common);
    match common.threads {
        Some(0) => Err(Error::config("--threads", "must be >= 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::config("--threads", e.to_string()))?
            .install(|| execute(&command, &loaded, &out)),
        None => execute(&command, &loaded, &out),
    }
}

/// Machine-readable form of an error.
pub fn diagnostic(err: &Error) -> serde_json::Value {
    let mut body = serde_json::json!({ "kind": err.kind(), "message": err.to_string() });
    match err {
        Error::Config { field, .. } => body["field"] = field.as_str().into(),
        Error::Data { path, .. } => body["path"] = path.display().to_string().into(),
        _ => {}
    }
    serde_json::json!({ "error": body })
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG_ERROR } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(out) => {
            // A closed stdout must not turn a finished run into a panic.
            let mut stdout = std::io::stdout().lock();
            let _ = writeln!(stdout, "{}", out.summary.trim_end());
            let _ = writeln!(stdout, "outcome: {}", out.outcome.as_str());
            let _ = writeln!(stdout, "report: {}", out.report.display());
            out.outcome.exit_code()
        }
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "{}", diagnostic(&e));
            EXIT_CONFIG_ERROR
        }
    }
}
