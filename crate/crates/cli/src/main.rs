//! `ctaudit`: synthesize data, train and evaluate self-trained crowdturfing
//! detectors, score profiles, and run the forensic reports.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error
//! (unreadable or malformed input, schema mismatch), 3 training error.

mod analyze;
mod commands;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use analyze::AnalyzeArgs;
use commands::{EvalArgs, PredictArgs, SynthArgs, TrainArgs};

#[derive(Parser)]
#[command(name = "ctaudit", version, about = "Crowdturfing detection by self-training, plus engagement forensics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the labeled synthetic profile dataset.
    Synth(SynthArgs),
    /// Split, mask labels, self-train a model and score it on the held-out split.
    Train(TrainArgs),
    /// Grid search with stratified k-fold cross-validation per labeled fraction.
    Eval(EvalArgs),
    /// Score profiles with a trained model.
    Predict(PredictArgs),
    /// Run the profile and comment forensic reports.
    Analyze(AnalyzeArgs),
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    Training(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Training(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Data(m) => write!(f, "data error: {m}"),
            Failure::Training(m) => write!(f, "training error: {m}"),
        }
    }
}

impl From<ctaudit::Error> for Failure {
    fn from(e: ctaudit::Error) -> Self {
        use ctaudit::Error as E;
        match e {
            E::InvalidConfig(_) => Failure::Usage(e.to_string()),
            E::DegenerateDataset(_) | E::DegenerateLabels => Failure::Training(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Synth(a) => commands::synth(&a),
        Command::Train(a) => commands::train(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Predict(a) => commands::predict(&a),
        Command::Analyze(a) => analyze::run(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("ctaudit: {f}");
            ExitCode::from(f.code())
        }
    }
}
