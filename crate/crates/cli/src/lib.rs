//! Command-line experiment runner for `solenoid-core`.

pub mod config;
pub mod runner;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{Experiment, ExperimentConfig, PotentialChoice};
use runner::Manifest;

/// Environment variable read for the worker count.
pub const WORKERS_ENV: &str = "SOLENOID_WORKERS";

#[derive(Debug, Parser)]
#[command(
    name = "solenoid",
    version,
    about = "Solenoid equilibrium-state and Fourier-decay experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coefficients, lattice check, periodic orbits and bunching margin.
    Construct {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k_max: Option<u32>,
    },
    /// Pressure, eigenfunction, density and normalized potential.
    Equilibrium {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Gibbs ratios and upper regularity.
    Gibbs {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
    },
    /// Large-deviation profile and regular-word census.
    Deviations {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
    },
    /// Sup-norm profile of the twisted transfer operator.
    Twisted {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Pair counts of a derivative phase table.
    Nonconc {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Multiplicative exponential sums over phase tables.
    Expsum {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        epsilon0: Option<f64>,
    },
    /// Decay of the Fourier transforms of the equilibrium state.
    Fourier {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        t_count: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        depth: Option<u32>,
    },
    /// Every experiment, in dependency order.
    All {
        #[command(flatten)]
        common: Common,
    },
    /// Repeat the run recorded in a manifest.
    Rerun {
        manifest: PathBuf,
        /// Write into this directory instead of the recorded one.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args, Default)]
pub struct Common {
    /// JSON configuration document.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Grid size (a power of two ≥ 1024).
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub n_max: Option<u32>,
    /// `mme`, `srb`, or a path to a JSON array of node values.
    #[arg(long)]
    pub potential: Option<String>,
}

impl Common {
    fn resolve(&self, experiment: Experiment) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        config.experiment = experiment;
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(grid) = self.grid {
            config.grid_m = grid;
        }
        if let Some(n_max) = self.n_max {
            config.spec.n_max = n_max;
        }
        if let Some(p) = &self.potential {
            config.potential = match p.as_str() {
                "mme" => PotentialChoice::Mme,
                "srb" => PotentialChoice::Srb,
                path => PotentialChoice::GridFile(PathBuf::from(path)),
            };
        }
        Ok(config)
    }
}

impl Command {
    /// The fully resolved configuration this command runs.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let config = match self {
            Command::Construct { common, k_max } => {
                let mut c = common.resolve(Experiment::Construct)?;
                if let Some(k) = k_max {
                    c.construct.lattice_k_max = *k;
                }
                c
            }
            Command::Equilibrium { common, tolerance } => {
                let mut c = common.resolve(Experiment::Equilibrium)?;
                if let Some(t) = tolerance {
                    c.equilibrium.tolerance = *t;
                }
                c
            }
            Command::Gibbs { common, n_list } => {
                let mut c = common.resolve(Experiment::Gibbs)?;
                if let Some(n) = n_list {
                    c.gibbs.n_list = n.clone();
                }
                c
            }
            Command::Deviations {
                common,
                epsilon,
                n_list,
            } => {
                let mut c = common.resolve(Experiment::Deviations)?;
                if let Some(e) = epsilon {
                    c.deviations.epsilon = *e;
                }
                if let Some(n) = n_list {
                    c.deviations.n_list = n.clone();
                }
                c
            }
            Command::Twisted { common, t, steps } => {
                let mut c = common.resolve(Experiment::Twisted)?;
                if let Some(t) = t {
                    c.twisted.t = *t;
                }
                if let Some(s) = steps {
                    c.twisted.steps = *s;
                }
                c
            }
            Command::Nonconc { common, n } => {
                let mut c = common.resolve(Experiment::Nonconc)?;
                if let Some(n) = n {
                    c.nonconc.n = *n;
                }
                c
            }
            Command::Expsum {
                common,
                n,
                k,
                epsilon0,
            } => {
                let mut c = common.resolve(Experiment::Expsum)?;
                if let Some(n) = n {
                    c.expsum.n = *n;
                }
                if let Some(k) = k {
                    c.expsum.k = *k;
                }
                if let Some(e) = epsilon0 {
                    c.expsum.epsilon0 = *e;
                }
                c
            }
            Command::Fourier {
                common,
                t_count,
                samples,
                depth,
            } => {
                let mut c = common.resolve(Experiment::Fourier)?;
                if let Some(t) = t_count {
                    c.fourier.t_count = *t;
                }
                if let Some(s) = samples {
                    c.fourier.samples = *s;
                }
                if let Some(d) = depth {
                    c.fourier.depth = *d;
                }
                c
            }
            Command::All { common } => common.resolve(Experiment::All)?,
            Command::Rerun { manifest, out } => {
                let mut c = Manifest::load(manifest)?.config;
                if let Some(out) = out {
                    c.output_dir = out.clone();
                }
                c
            }
        };
        config.validate()?;
        Ok(config)
    }
}

/// Sizes the global worker pool from [`WORKERS_ENV`] when it is set.
pub fn configure_workers() -> Result<()> {
    if let Ok(value) = std::env::var(WORKERS_ENV) {
        let n: usize = value
            .parse()
            .with_context(|| format!("{WORKERS_ENV} must be a positive integer, got {value:?}"))?;
        anyhow::ensure!(n > 0, "{WORKERS_ENV} must be positive");
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker pool")?;
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<Manifest> {
    let config = cli.command.resolve()?;
    runner::run(&config)
}
