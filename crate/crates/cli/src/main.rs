use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stenoscan::{Error, ErrorKind};

mod commands;

#[derive(Debug, Parser)]
#[command(
    name = "stenoscan",
    version,
    about = "Virtual patient cohorts and stenosis classifiers"
)]
struct Cli {
    /// Worker threads; outputs do not depend on this.
    #[arg(long, global = true, env = "STENOSCAN_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a virtual patient cohort and write its CSV and metadata.
    Generate(GenerateArgs),
    /// Evaluate classifiers on all 63 measurement combinations.
    Search(SearchArgs),
    /// Per-class sensitivity and specificity of a multiclass strategy.
    Multiclass(MulticlassArgs),
    /// Train and test F of IVBC logistic regression versus cohort size.
    SizeSweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Number of accepted patients.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Cohort CSV; metadata goes next to it with a `.json` extension.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON cohort configuration; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Options shared by the experiment commands.
#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Cohort CSV written by `generate`.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON evaluation configuration; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub folds: Option<usize>,
    /// Effective-count ratio of the class weighting.
    #[arg(long)]
    pub ratio: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub eval: EvalArgs,
    /// `enbc` or `ivbc:<aorta|iliac1|iliac2>`.
    #[arg(long, default_value = "enbc")]
    pub scheme: String,
    /// Comma-separated subset of nb, lr, svm, svm_linear, rf.
    #[arg(long)]
    pub methods: Option<String>,
    /// Keep naive Bayes in the default method list of IVBC searches.
    #[arg(long)]
    pub include_nb: bool,
    #[arg(long)]
    pub boundary: Option<f64>,
}

#[derive(Debug, Args)]
pub struct MulticlassArgs {
    #[command(flatten)]
    pub eval: EvalArgs,
    /// `ova`, `ovo` or `cpc`.
    #[arg(long)]
    pub strategy: String,
    /// CPC decision boundary.
    #[arg(long)]
    pub boundary: Option<f64>,
    /// Also write the healthy-class ROC curve (CPC only).
    #[arg(long)]
    pub roc: bool,
    /// Number of uniformly spaced ROC boundaries.
    #[arg(long, default_value_t = stenoscan::tasks::DEFAULT_BOUNDARIES)]
    pub roc_points: usize,
    /// Measurements used, such as `Q1+P1`; all six by default.
    #[arg(long)]
    pub combination: Option<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub eval: EvalArgs,
    /// Comma-separated cohort sizes; defaults to 1000, 2000, ... up to the
    /// cohort size.
    #[arg(long)]
    pub sizes: Option<String>,
}

fn report(e: &Error) -> ExitCode {
    let (kind, code) = match e.kind() {
        ErrorKind::Usage => ("usage", 2),
        ErrorKind::Data => ("data", 3),
        ErrorKind::Numerical => ("numerical", 4),
    };
    let json = serde_json::json!({ "error": { "kind": kind, "message": e.to_string() } });
    eprintln!("{json}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.render().to_string();
            let message = message
                .lines()
                .next()
                .unwrap_or_default()
                .trim_start_matches("error: ");
            return report(&Error::invalid("arguments", message));
        }
    };
    let workers = match cli.workers {
        Some(0) => return report(&Error::invalid("workers", "must be at least 1")),
        Some(w) => w,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let result = match &cli.command {
        Command::Generate(a) => commands::generate(a, workers),
        Command::Search(a) => commands::search(a, workers),
        Command::Multiclass(a) => commands::multiclass(a),
        Command::SizeSweep(a) => commands::size_sweep(a, workers),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}
