//! Experiment harness behind the `eml` binary: simulation, estimation,
//! Monte Carlo benchmarks, likelihood profiles and bridge diagnostics.
//! Every output is CSV with `#` header lines echoing the settings, and
//! depends only on the settings and `--seed`.

pub mod commands;
pub mod models;
pub mod output;
pub mod settings;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "eml", version, about = "Expected maximum likelihood estimation for diffusions")]
pub struct Cli {
    /// Master seed; every random draw derives from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory for output files.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// key=value settings file; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

/// Drift model selection shared by several commands.
#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// ou (alias A), quadratic (alias B), constant, cir, ait-sahalia.
    #[arg(long)]
    pub model: Option<String>,
    /// Drift coefficients, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
    /// Initial state.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    /// Volatility scale of the square-root model.
    #[arg(long)]
    pub sigma: Option<String>,
    #[arg(long)]
    pub sigma1: Option<String>,
    #[arg(long)]
    pub sigma2: Option<String>,
}

impl ModelArgs {
    fn flags(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("model", self.model.clone()),
            ("theta", self.theta.clone()),
            ("x0", self.x0.clone()),
            ("sigma", self.sigma.clone()),
            ("sigma1", self.sigma1.clone()),
            ("sigma2", self.sigma2.clone()),
        ]
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate observation series.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        /// Intervals per series.
        #[arg(long)]
        k: Option<String>,
        /// Observation spacing (fractions such as 1/12 accepted).
        #[arg(long)]
        delta: Option<String>,
        /// Number of series.
        #[arg(long)]
        replications: Option<String>,
        /// Euler substeps per interval for models without exact transitions.
        #[arg(long)]
        substeps: Option<String>,
    },
    /// Estimate drift coefficients from series files.
    Estimate {
        #[command(flatten)]
        model: ModelArgs,
        /// eml, regression or ou-ml.
        #[arg(long)]
        method: Option<String>,
        /// Bridge steps per interval.
        #[arg(long = "M", alias = "m")]
        m: Option<String>,
        /// Bridge paths per interval.
        #[arg(long = "S", alias = "s")]
        s: Option<String>,
        /// Series CSV files.
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Bias and spread of estimators over simulated data sets.
    Benchmark {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        replications: Option<String>,
        #[arg(long)]
        k: Option<String>,
        #[arg(long)]
        delta: Option<String>,
        #[arg(long = "M", alias = "m")]
        m: Option<String>,
        /// Bridge path counts, comma separated; one EML estimator each.
        #[arg(long = "S", alias = "s")]
        s: Option<String>,
        #[arg(long)]
        substeps: Option<String>,
    },
    /// Profile the simulated likelihood over volatility parameters.
    Profile {
        /// cir or ait-sahalia.
        #[arg(long)]
        model: Option<String>,
        /// First volatility parameter grid, lo:hi:n or a comma list.
        #[arg(long)]
        grid: Option<String>,
        /// Second volatility parameter grid (ait-sahalia).
        #[arg(long)]
        grid2: Option<String>,
        #[arg(long = "M", alias = "m")]
        m: Option<String>,
        #[arg(long = "S", alias = "s")]
        s: Option<String>,
        /// Steps of the simulated likelihood.
        #[arg(long)]
        sml_m: Option<String>,
        /// Paths of the simulated likelihood.
        #[arg(long)]
        sml_s: Option<String>,
        /// Series CSV file.
        file: PathBuf,
    },
    /// Radon–Nikodym histograms and error bounds for bridge laws.
    Diagnose {
        #[command(flatten)]
        model: ModelArgs,
        /// Bridge end points (original scale), comma separated.
        #[arg(long, allow_hyphen_values = true)]
        ys: Option<String>,
        /// Bridge horizons, comma separated.
        #[arg(long)]
        deltas: Option<String>,
        #[arg(long = "M", alias = "m")]
        m: Option<String>,
        #[arg(long = "S", alias = "s")]
        s: Option<String>,
        #[arg(long)]
        bins: Option<String>,
        /// Run the fixed ten-functional, three-model inequality suite.
        #[arg(long)]
        suite: Option<String>,
        #[arg(long)]
        suite_s: Option<String>,
    },
}

/// Number of sub-tasks that failed; outputs of the rest are written.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Outcome {
    pub failures: usize,
}

pub fn run(cli: Cli) -> Result<Outcome> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().context("starting worker threads")?;
    pool.install(|| commands::dispatch(&cli))
}
