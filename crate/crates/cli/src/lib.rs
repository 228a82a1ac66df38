//! The `srm` command line: simulate a site, turn tracks and driver streams
//! into training tables, train conflict models, score road segments and draw
//! risk heat maps.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use srm_core::config::PipelineConfig;

mod commands;
pub mod files;

#[derive(Debug, Parser)]
#[command(name = "srm", version, about = "Segment risk mapping from trajectories and driver monitoring")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the configuration.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Prediction horizons.
    #[arg(long, global = true, value_enum)]
    pub horizon: Option<HorizonArg>,
    /// Also build and train the models without driver inputs.
    #[arg(long, global = true)]
    pub simplified: bool,
    /// Train on the first half of the recording and evaluate on the second.
    #[arg(long = "temporal-split", global = true)]
    pub temporal_split: bool,
    /// Output directory; also where inputs are looked up by default.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HorizonArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    Both,
}

impl HorizonArg {
    pub fn horizons(self) -> Vec<u8> {
        match self {
            HorizonArg::One => vec![1],
            HorizonArg::Two => vec![2],
            HorizonArg::Both => vec![1, 2],
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the traffic simulator and write tracks, face streams and the site.
    Simulate,
    /// Fuse tracks with driver streams and export labeled training tables.
    Ingest,
    /// Train the conflict models and report cross-validated metrics.
    Train,
    /// Predict conflict flags for every vehicle row.
    Predict,
    /// Score road segments with actual and predicted risk.
    Score,
    /// Draw heat maps from a score CSV.
    Heatmap(HeatmapArgs),
    /// Simulate, ingest, train, predict, score and draw, in one go.
    RunAll,
}

#[derive(Debug, Clone, Args)]
pub struct HeatmapArgs {
    #[arg(long, value_enum, default_value = "both")]
    pub mode: ModeArg,
    /// Snapshot time for the cell map; defaults to the latest time with known outcomes.
    #[arg(long, value_name = "SECONDS")]
    pub at: Option<f64>,
    /// Plot actual instead of predicted scores on the timeline.
    #[arg(long)]
    pub actual: bool,
}

impl Default for HeatmapArgs {
    fn default() -> Self {
        HeatmapArgs {
            mode: ModeArg::Both,
            at: None,
            actual: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Cells,
    Timeline,
    Both,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Data { path: PathBuf, source: srm_core::Error },
    #[error(transparent)]
    Core(#[from] srm_core::Error),
}

impl CliError {
    /// 1 for usage and configuration problems, 2 for bad or missing data.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Core(srm_core::Error::Config(_)) => 1,
            CliError::Data { source: srm_core::Error::Config(_), .. } => 1,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Loads the configuration and applies command-line overrides.
pub fn resolve_config(global: &GlobalArgs) -> CliResult<PipelineConfig> {
    let mut config = match &global.config {
        Some(path) => PipelineConfig::load(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = global.seed {
        config.set_seed(seed);
    }
    if let Some(h) = global.horizon {
        config.horizons = h.horizons();
    }
    if global.simplified {
        config.simplified = true;
    }
    if global.temporal_split {
        config.temporal_split = true;
    }
    config.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(config)
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    let config = resolve_config(&cli.global)?;
    let out = &cli.global.out;
    match &cli.command {
        Command::Simulate => commands::simulate(&config, out),
        Command::Ingest => commands::ingest(&config, out),
        Command::Train => commands::train(&config, out),
        Command::Predict => commands::predict(&config, out),
        Command::Score => commands::score(&config, out),
        Command::Heatmap(args) => commands::heatmap(&config, out, args),
        Command::RunAll => commands::run_all(&config, out),
    }
}
