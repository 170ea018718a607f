//! Command-line surface: train, predict, evaluate, importance, synth.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error (CSV contents,
//! schema or model-document problems), 3 internal error.

mod commands;
mod csvio;
mod errors;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use errors::CliError;

#[derive(Parser)]
#[command(
    name = "gaussboost",
    about = "Gradient boosting of per-sample Normal distributions (mu, sigma) \
             with uncertainty calibration and dual feature importance",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on a labeled CSV and write the model document plus
    /// a per-iteration training-NLL trace.
    Train(TrainArgs),
    /// Predict mu, sigma, point_prediction and relative_std per row.
    Predict(PredictArgs),
    /// Evaluate MAPE, ACCURACY and NLL plus the uncertainty-bucket
    /// calibration table on a labeled CSV.
    Evaluate(EvaluateArgs),
    /// Report expectation/variance feature importance and the combined
    /// ranking.
    Importance(ImportanceArgs),
    /// Generate seeded synthetic data with a ground-truth sigma sidecar.
    Synth(SynthArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Labeled training CSV with a header row.
    #[arg(long)]
    input: PathBuf,
    /// Path for the model document; the NLL trace goes to the same path
    /// with extension `trace.csv`.
    #[arg(long)]
    output: PathBuf,
    /// Name of the target column.
    #[arg(long)]
    target: String,
    /// Train on ln(target); requires strictly positive targets and
    /// makes exp(mu) the original-scale point forecast.
    #[arg(long)]
    log_transform: bool,
    #[arg(long, default_value_t = 300)]
    iterations: usize,
    #[arg(long, default_value_t = 0.3)]
    learning_rate: f64,
    #[arg(long, default_value_t = 6)]
    max_depth: usize,
    #[arg(long, default_value_t = 64)]
    max_bins: usize,
    #[arg(long, default_value_t = 20)]
    min_samples_leaf: usize,
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct PredictArgs {
    /// Model document written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Feature CSV; must contain every model feature column (extra
    /// columns are ignored).
    #[arg(long)]
    input: PathBuf,
    /// Predictions CSV path.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Labeled CSV with the target column.
    #[arg(long)]
    input: PathBuf,
    /// Name of the target column.
    #[arg(long)]
    target: String,
    /// Calibration bucket count.
    #[arg(long, default_value_t = 10)]
    buckets: usize,
    /// Calibration table destination; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct ImportanceArgs {
    #[arg(long)]
    model: PathBuf,
    /// Blend weight: alpha * mean + (1 - alpha) * variance.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Importance flavor used for both sets and the blend.
    #[arg(long, value_enum, default_value_t = KindArg::Gain)]
    kind: KindArg,
    /// Table destination; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Labeled CSV destination; the true-sigma sidecar goes to the same
    /// path with extension `sigma.csv`.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value_t = GeneratorArg::Heteroscedastic)]
    generator: GeneratorArg,
    #[arg(long, default_value_t = 1000)]
    rows: usize,
    #[arg(long, default_value_t = 5)]
    cols: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Weight,
    Gain,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeneratorArg {
    /// y = sin(2*pi*x1) + N(0, (0.1 + 0.9*x2)^2)
    Heteroscedastic,
    /// Positive revenue-like target: exp of the heteroscedastic draw.
    Lognormal,
}

fn configure_threads(threads: usize) -> Result<(), CliError> {
    if threads == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Internal(format!("cannot configure thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(args) => {
            configure_threads(args.threads)?;
            commands::train(args)
        }
        Command::Predict(args) => {
            configure_threads(args.threads)?;
            commands::predict(args)
        }
        Command::Evaluate(args) => {
            configure_threads(args.threads)?;
            commands::evaluate(args)
        }
        Command::Importance(args) => commands::importance(args),
        Command::Synth(args) => commands::synth(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
