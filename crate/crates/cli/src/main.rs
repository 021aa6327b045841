mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Config;
use crate::error::{CliError, CliResult, ErrorClass, EXIT_CODES_HELP};

#[derive(Parser, Debug)]
#[command(
    name = "phonostyle",
    version,
    about = "Phonetic stylometry of classical Persian verse at mesra resolution",
    after_help = EXIT_CODES_HELP
)]
pub struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true, env = "PHONOSTYLE_CONFIG")]
    pub config: Option<PathBuf>,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Seed for every stochastic step [default: 42].
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Read raw corpus tables and build the balanced cohort.
    Ingest(IngestArgs),
    /// Score every cohort mesra on the six metrics.
    Metrics(MetricsArgs),
    /// Fixed-effects models: primary fit, nested ledger, within-meter effects.
    Fit(FitArgs),
    /// Poem bootstrap of century means.
    Bootstrap(BootstrapArgs),
    /// Poet profiles, PCA projection and SVG figures.
    Project(ProjectArgs),
    /// Every analysis in one JSON report.
    Report(ReportArgs),
    /// Write a synthetic prephonemized corpus.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
#[command(after_help = EXIT_CODES_HELP)]
pub struct IngestArgs {
    /// Raw corpus tables (tab-delimited unless --delimiter is given).
    #[arg(long, required = true, num_args = 1..)]
    pub corpus: Vec<PathBuf>,
    /// Alias table: `alias<TAB>canonical` per line.
    #[arg(long)]
    pub aliases: Option<PathBuf>,
    /// Meter map: `raw label<TAB>meter key` per line.
    #[arg(long)]
    pub meters: Option<PathBuf>,
    /// Century map: `poet<TAB>century` per line.
    #[arg(long)]
    pub centuries: Option<PathBuf>,
    /// Minimum mesras per poet-meter cell [default: 2000].
    #[arg(long)]
    pub min_cell: Option<usize>,
    /// Retained meter keys [default: M01..M05].
    #[arg(long, value_delimiter = ',')]
    pub retained_meters: Option<Vec<String>>,
    /// Keep rows whose form is unknown.
    #[arg(long)]
    pub allow_missing_form: bool,
    /// Keep rows whose meter is unknown.
    #[arg(long)]
    pub allow_missing_meter: bool,
    /// How line text becomes symbols: prephonemized | rule-g2p.
    #[arg(long)]
    pub mode: Option<String>,
    /// Phoneme feature table (rule-g2p mode).
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Grapheme rule table (rule-g2p mode).
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Unknown-symbol policy: strict | skip | other.
    #[arg(long)]
    pub unknown: Option<String>,
    /// Word-boundary symbol in prephonemized text [default: #].
    #[arg(long)]
    pub boundary: Option<String>,
    /// Field delimiter of the corpus tables [default: tab].
    #[arg(long)]
    pub delimiter: Option<char>,
    /// Characters that split poem text into mesras [default: "|" and newline].
    #[arg(long)]
    pub mesra_delimiters: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
#[command(after_help = EXIT_CODES_HELP)]
pub struct MetricsArgs {
    /// Cohort table written by `ingest`.
    #[arg(long)]
    pub cohort: PathBuf,
    /// Phoneme feature table [default: bundled table].
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Unknown-symbol policy: strict | skip | other.
    #[arg(long)]
    pub unknown: Option<String>,
    /// Output CSV; rejects go to `<stem>.rejects.tsv` beside it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
#[command(after_help = EXIT_CODES_HELP)]
pub struct FitArgs {
    /// Metrics CSV written by `metrics`.
    #[arg(long)]
    pub metrics: PathBuf,
    /// Outcome metric [default: hardness].
    #[arg(long)]
    pub outcome: Option<String>,
    /// Model spec as inline JSON or a path to a JSON file.
    #[arg(long, conflicts_with_all = ["nested", "within_meter"])]
    pub spec: Option<String>,
    /// Run the nested R² ledger instead of the primary fit.
    #[arg(long, conflicts_with = "within_meter")]
    pub nested: bool,
    /// Within-meter standardized poet effects for these meters (comma list);
    /// two or more meters also get effect correlations.
    #[arg(long, value_delimiter = ',')]
    pub within_meter: Option<Vec<String>>,
    /// Minimum mesras for a poet to enter a within-meter table [default: 2000].
    #[arg(long)]
    pub min_cell: Option<usize>,
    /// Estimator: auto | dense-qr | absorb.
    #[arg(long)]
    pub estimator: Option<String>,
    /// Demeaning tolerance for the absorbing estimator.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Sweep cap for the absorbing estimator.
    #[arg(long)]
    pub max_sweeps: Option<usize>,
    /// Output JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
#[command(after_help = EXIT_CODES_HELP)]
pub struct BootstrapArgs {
    #[arg(long)]
    pub metrics: PathBuf,
    /// Replicates [default: 1000].
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Metrics to resample (comma list) [default: all six].
    #[arg(long = "metric", value_delimiter = ',')]
    pub metric_names: Option<Vec<String>>,
    /// Output directory for trends.json and trends.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
#[command(after_help = EXIT_CODES_HELP)]
pub struct ProjectArgs {
    #[arg(long)]
    pub metrics: PathBuf,
    /// Poets drawn in color and labelled on the scatter (comma list).
    #[arg(long, value_delimiter = ',')]
    pub highlight: Option<Vec<String>>,
    /// Fingerprints per page, at most 12 [default: 12].
    #[arg(long)]
    pub per_page: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
#[command(after_help = EXIT_CODES_HELP)]
pub struct ReportArgs {
    #[arg(long)]
    pub metrics: PathBuf,
    /// attrition.json from `ingest`, embedded in the report.
    #[arg(long)]
    pub attrition: Option<PathBuf>,
    /// Bootstrap replicates [default: 1000].
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Minimum mesras for within-meter support [default: 2000].
    #[arg(long)]
    pub min_cell: Option<usize>,
    #[arg(long)]
    pub estimator: Option<String>,
    /// Output JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
#[command(after_help = EXIT_CODES_HELP)]
pub struct SynthArgs {
    /// Number of poets.
    #[arg(long, default_value_t = 6)]
    pub poets: usize,
    /// Mesras per poet-meter cell.
    #[arg(long, default_value_t = 240)]
    pub per_cell: usize,
    #[arg(long, default_value_t = 8)]
    pub lines_per_poem: usize,
    /// Output directory for corpus.tsv.
    #[arg(long)]
    pub out: PathBuf,
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_env("PHONOSTYLE_LOG")
        .format_timestamp(None)
        .try_init();
}

fn run(cli: Cli) -> CliResult<()> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let threads = cli.threads.or(config.threads);
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::new(ErrorClass::Other, e.to_string()))?;
    }
    let seed = config.seed(cli.seed);
    let ctx = commands::Context {
        config,
        seed,
        config_path: cli.config.clone(),
    };
    match cli.command {
        Command::Ingest(a) => commands::ingest::run(&ctx, a),
        Command::Metrics(a) => commands::metrics::run(&ctx, a),
        Command::Fit(a) => commands::fit::run(&ctx, a),
        Command::Bootstrap(a) => commands::bootstrap::run(&ctx, a),
        Command::Project(a) => commands::project::run(&ctx, a),
        Command::Report(a) => commands::report::run(&ctx, a),
        Command::Synth(a) => commands::synth::run(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let first = e.to_string().lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            eprintln!("{}", CliError::usage(first).line());
            return ExitCode::from(ErrorClass::Usage.code() as u8);
        }
    };
    init_logging(cli.verbose);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.class.code() as u8)
        }
    }
}
