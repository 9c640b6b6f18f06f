//! Experiment driver: corpus generation, probe training and search,
//! evaluation and charts, all configured by one flat TOML file.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod data;
pub mod error;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use jabberprobe::probes::ProbeKind;

use crate::config::Config;
use crate::error::{CliError, Result};

/// Reserved model id of the chain baseline.
pub const PATH: &str = "path";
/// Reserved model id of the per-length majority-tree baseline.
pub const MAJORITY: &str = "majority";

/// Baselines are scored directly and never trained.
pub fn is_baseline(model: &str) -> bool {
    model == PATH || model == MAJORITY
}

#[derive(Debug, Parser)]
#[command(
    name = "jabberprobe",
    version,
    about = "Syntactic probing on normal and Jabberwocky sentences"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the Jabberwocky version of the test split.
    Generate,
    /// Print the file contract an embedding extractor must satisfy.
    ExtractStub,
    /// Train one probe per (model, layer, probe kind) with fixed settings.
    Train,
    /// Random hyperparameter search over the layer sweep.
    Search,
    /// Score probes and baselines, writing the results CSV and charts.
    Eval,
    /// Redraw the charts from an existing results CSV.
    Report,
}

/// Command-line values that replace the config file's.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// TOML experiment file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Comma-separated model ids.
    #[arg(long, global = true, value_delimiter = ',')]
    pub models: Option<Vec<String>>,
    /// Comma-separated layer indices.
    #[arg(long, global = true, value_delimiter = ',')]
    pub layers: Option<Vec<u32>>,
    /// Comma-separated: structural, perceptron.
    #[arg(long, global = true, value_delimiter = ',')]
    pub probes: Option<Vec<ProbeKind>>,
    /// Random-search trials per layer.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    #[arg(long = "lr", global = true)]
    pub learning_rate: Option<f64>,
    #[arg(long, global = true)]
    pub rank: Option<usize>,
    #[arg(long, global = true)]
    pub dropout: Option<f64>,
    #[arg(long, global = true)]
    pub batch_size: Option<usize>,
    #[arg(long, global = true)]
    pub max_epochs: Option<usize>,
    #[arg(long, global = true)]
    pub patience: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, config: &mut Config) {
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    config.$field = v.clone();
                }
            )*};
        }
        set!(
            seed,
            output_dir,
            models,
            layers,
            probes,
            trials,
            learning_rate,
            dropout,
            batch_size,
            max_epochs,
            patience
        );
        if self.rank.is_some() {
            config.rank = self.rank;
        }
    }

    /// The config file with overrides applied, validated.
    pub fn load(&self) -> Result<Config> {
        let path = self
            .config
            .as_deref()
            .ok_or_else(|| CliError::Config("`--config` is required".into()))?;
        let mut config = Config::load(path)?;
        self.apply(&mut config);
        config.validate()?;
        Ok(config)
    }
}

/// Worker pool sized by `JABBERPROBE_WORKERS`, or by the machine when unset.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let workers = match std::env::var("JABBERPROBE_WORKERS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => n,
            _ => {
                return Err(CliError::Config(format!(
                    "JABBERPROBE_WORKERS={v:?} is not a positive integer"
                )))
            }
        },
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))
}

pub fn run(cli: &Cli) -> Result<()> {
    if let Command::ExtractStub = cli.command {
        commands::stub::run();
        return Ok(());
    }
    let config = cli.overrides.load()?;
    match cli.command {
        Command::Generate => commands::generate::run(&config),
        Command::Train => commands::train::run_train(&config, &worker_pool()?),
        Command::Search => commands::train::run_search(&config, &worker_pool()?),
        Command::Eval => commands::eval::run(&config),
        Command::Report => commands::report::run(&config),
        Command::ExtractStub => unreachable!(),
    }
}
