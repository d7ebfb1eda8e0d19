//! The `echoscope` command-line pipeline.
//!
//! Every subcommand reads a flat configuration file (see [`config::KEYS`]),
//! writes its artifacts to `<outdir>/<subcommand>/` and exits with 0 on
//! success, 1 on a runtime failure and 2 on a usage error.

pub mod commands;
pub mod config;
pub mod stage;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{PipelineConfig, RawConfig};

#[derive(Parser, Debug)]
#[command(name = "echoscope", version, about = "Echo-chamber analysis of interaction networks")]
struct Cli {
    /// Configuration file of `key = value` lines.
    #[arg(short, long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Shorthand for `--set outdir=DIR`.
    #[arg(long, global = true, value_name = "DIR")]
    outdir: Option<String>,
    /// Shorthand for `--set seed=N`.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Shorthand for `--set threads=N`.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Build the retweet, mention and follow networks.
    BuildNets,
    /// Ensemble bipartition of the retweet network into leaning scores.
    Partition,
    /// Pick the balance ratio that maximizes extreme users.
    Tune,
    /// Random walk controversy per network.
    Rwc,
    /// Community detection with per-community leaning.
    Communities,
    /// Neighbor leanings and their densities.
    Echo,
    /// Clustering and nearest-neighbor degree spectra.
    Spectra,
    /// Hashtag and domain usage per side.
    ContentStats,
    /// Split-point histories for stance prediction.
    Dataset,
    /// Train a stance model on the dataset.
    Train,
    /// Cross-validate the stance classifier.
    Eval,
    /// Score users with a trained model.
    Score,
    /// Generate a synthetic world in the input formats.
    Synth,
    /// Manifest of all artifacts with hashes and the configuration.
    Report,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::BuildNets => "build-nets",
            Command::Partition => "partition",
            Command::Tune => "tune",
            Command::Rwc => "rwc",
            Command::Communities => "communities",
            Command::Echo => "echo",
            Command::Spectra => "spectra",
            Command::ContentStats => "content-stats",
            Command::Dataset => "dataset",
            Command::Train => "train",
            Command::Eval => "eval",
            Command::Score => "score",
            Command::Synth => "synth",
            Command::Report => "report",
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

fn load_config(cli: &Cli) -> Result<PipelineConfig, config::ConfigError> {
    let mut raw = match &cli.config {
        Some(p) => RawConfig::read(p)?,
        None => RawConfig::default(),
    };
    let mut flags = RawConfig::default();
    for pair in &cli.set {
        flags.set_pair(pair)?;
    }
    if let Some(o) = &cli.outdir {
        flags.set("outdir", o)?;
    }
    if let Some(s) = cli.seed {
        flags.set("seed", &s.to_string())?;
    }
    if let Some(t) = cli.threads {
        flags.set("threads", &t.to_string())?;
    }
    raw.merge(&flags);
    PipelineConfig::resolve(&raw)
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if cfg.threads > 0 {
        // fails only when a pool already exists, as in repeated in-process runs
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global();
    }
    let name = cli.command.name();
    let ctx = commands::Inputs::new(&cfg);
    match commands::run(name, &ctx) {
        Ok(dir) => {
            println!("{name}: wrote {}", dir.display());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {name}: {e:#}");
            EXIT_FAILURE
        }
    }
}
