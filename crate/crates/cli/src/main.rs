//! `rpurn`: batch front end for ingesting, simulating, fitting, evaluating
//! and smoothing binary sentiment series.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rp_urn::ingest::DEFAULT_THRESHOLD;
use rp_urn::{ModelKind, Subset};

#[derive(Debug, Parser)]
#[command(name = "rpurn", version, about = "Rescaled Pólya urn toolkit for binary sentiment series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Threshold pre-scored posts into a binary series.
    Ingest(IngestArgs),
    /// Draw a seeded synthetic series.
    Simulate(SimulateArgs),
    /// Fit every model slot by slot and write the evaluation report.
    FitEval(FitEvalArgs),
    /// Spline-smooth a series or a prediction column.
    Smooth(SmoothArgs),
    /// Per-slot parameter estimates only.
    ParamsEvolution(ParamsArgs),
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, env = "RPURN_OUTPUT_DIR", default_value = ".")]
    output_dir: PathBuf,
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long, env = "RPURN_INPUT")]
    input: PathBuf,
    #[command(flatten)]
    out: OutputArgs,
    #[arg(long, env = "RPURN_THRESHOLD", default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, env = "RPURN_SUBSET", default_value = "entire", value_parser = parse_subset)]
    subset: Subset,
    /// `jsonl` or `csv`; guessed from the extension when omitted.
    #[arg(long, env = "RPURN_FORMAT")]
    format: Option<String>,
    /// Fail on the first malformed line instead of skipping it.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Generator {
    Rp,
    Complete,
    OnlyFashion,
    NoFashion,
    Polya,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, env = "RPURN_GENERATOR", value_enum)]
    generator: Generator,
    #[arg(long, env = "RPURN_LENGTH")]
    length: usize,
    #[arg(long, env = "RPURN_SEED", default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutputArgs,
    #[arg(long)]
    p0: Option<f64>,
    #[arg(long)]
    gamma_star: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long = "b-tilde0")]
    b_tilde0: Option<f64>,
    #[arg(long)]
    a1: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    /// Constant part, comma separated (color 0 is a positive post).
    #[arg(long, value_delimiter = ',')]
    b0: Vec<f64>,
    /// Initial reinforced part, comma separated.
    #[arg(long, value_delimiter = ',')]
    big_b0: Vec<f64>,
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, env = "RPURN_INPUT")]
    input: PathBuf,
    #[command(flatten)]
    out: OutputArgs,
    #[arg(long, env = "RPURN_SLOTS")]
    slots: usize,
    #[arg(
        long,
        env = "RPURN_MODELS",
        value_delimiter = ',',
        default_value = "complete,only_fashion,no_fashion,polya",
        value_parser = parse_model
    )]
    models: Vec<ModelKind>,
    /// Grid points per free parameter for the initial search.
    #[arg(long, env = "RPURN_GRID_POINTS", default_value_t = 21)]
    grid_points: usize,
    #[arg(long, env = "RPURN_SEQUENTIAL")]
    sequential: bool,
}

#[derive(Debug, Args)]
struct FitEvalArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, env = "RPURN_KNOTS", value_delimiter = ',', default_value = "3,5,10,20,30,50")]
    knots: Vec<usize>,
    /// Score with parameters fitted on the whole evaluated range.
    #[arg(long)]
    in_sample: bool,
    /// Also write the prediction curves.
    #[arg(long)]
    predictions: bool,
}

#[derive(Debug, Args)]
struct ParamsArgs {
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug, Args)]
struct SmoothArgs {
    /// A series file, or a CSV / one-value-per-line file of numbers.
    #[arg(long, env = "RPURN_INPUT")]
    input: PathBuf,
    #[command(flatten)]
    out: OutputArgs,
    #[arg(long, env = "RPURN_KNOTS", value_delimiter = ',', default_value = "3,5,10,20,30,50")]
    knots: Vec<usize>,
    /// Column to read from a CSV with a header row.
    #[arg(long)]
    column: Option<String>,
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: rp_urn::Error| e.to_string())
}

fn parse_subset(s: &str) -> Result<Subset, String> {
    s.parse().map_err(|e: rp_urn::Error| e.to_string())
}


fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::FitEval(a) => commands::fit_eval(a),
        Command::Smooth(a) => commands::smooth(a),
        Command::ParamsEvolution(a) => commands::params_evolution(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
