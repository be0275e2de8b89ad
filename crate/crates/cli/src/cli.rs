//! Argument parsing. Flags map one-to-one onto [`RunConfig`] keys.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::execute;
use crate::config::{BackendName, Experiment, ModeName, RunConfig, StencilName};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "qadvect",
    version,
    about = "Hamiltonian-embedded advection experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scalar in a Poiseuille channel, compared with the exact solution.
    Channel(Options),
    /// Scalar in a lid-driven cavity flow.
    Cavity(Options),
    /// Advection error-bound surface over (r, theta).
    Bounds(Options),
    /// Worst-case success-probability surface over (r, theta).
    Pmin(Options),
    /// Heat-equation error-bound surface over (r_h, theta).
    HeatBounds(Options),
    /// Noise-free, state-noise and matrix-noise channel runs for three stencils.
    Noise(Options),
    /// Run the experiment named in a JSON config file.
    Run(Options),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// JSON config; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendName>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeName>,
    /// Exit with status 4 when the experiment's acceptance thresholds are missed.
    #[arg(long)]
    pub check: bool,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, value_enum)]
    pub stencil: Option<StencilName>,
    #[arg(long, value_enum)]
    pub stencil_y: Option<StencilName>,
    /// Successful steps to take.
    #[arg(long)]
    pub target: Option<usize>,
    /// Comma-separated successful-step counts to snapshot.
    #[arg(long, value_delimiter = ',')]
    pub snapshots: Option<Vec<usize>>,
    #[arg(long)]
    pub noise_seed: Option<u64>,
    #[arg(long)]
    pub state_noise: Option<f64>,
    #[arg(long)]
    pub matrix_noise: Option<f64>,
    #[arg(long)]
    pub series_every: Option<usize>,
    #[arg(long)]
    pub reynolds: Option<f64>,
    #[arg(long)]
    pub velocity_u: Option<PathBuf>,
    #[arg(long)]
    pub velocity_v: Option<PathBuf>,
}

impl Options {
    fn flags(&self, experiment: Option<Experiment>) -> RunConfig {
        RunConfig {
            experiment,
            n: self.n,
            r_max: self.r_max,
            theta: self.theta,
            stencil: self.stencil,
            stencil_y: self.stencil_y,
            target: self.target,
            snapshots: self.snapshots.clone(),
            backend: self.backend,
            mode: self.mode,
            seed: self.seed,
            noise_seed: self.noise_seed,
            state_noise: self.state_noise,
            matrix_noise: self.matrix_noise,
            series_every: self.series_every,
            reynolds: self.reynolds,
            velocity_u: self.velocity_u.clone(),
            velocity_v: self.velocity_v.clone(),
            out: self.out.clone(),
            ..Default::default()
        }
    }
}

/// Resolves the configuration, runs it and returns the summary as JSON text.
pub fn run(cli: Cli, argv: &[String]) -> Result<String, CliError> {
    let (opts, experiment) = match cli.command {
        Command::Channel(o) => (o, Some(Experiment::Channel)),
        Command::Cavity(o) => (o, Some(Experiment::Cavity)),
        Command::Bounds(o) => (o, Some(Experiment::Bounds)),
        Command::Pmin(o) => (o, Some(Experiment::Pmin)),
        Command::HeatBounds(o) => (o, Some(Experiment::HeatBounds)),
        Command::Noise(o) => (o, Some(Experiment::Noise)),
        Command::Run(o) => {
            if o.config.is_none() {
                return Err(CliError::Config("run needs --config <file>".into()));
            }
            (o, None)
        }
    };
    let file = match &opts.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let cfg = file.overridden_by(opts.flags(experiment)).resolve()?;
    let report = execute(&cfg, argv)?;
    let text = serde_json::to_string_pretty(&report.summary).map_err(|e| CliError::Io(e.into()))?;
    if opts.check && !report.failed_checks.is_empty() {
        println!("{text}");
        return Err(CliError::CheckFailed(report.failed_checks));
    }
    Ok(text)
}
