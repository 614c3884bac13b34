//! Command-line front end for `aspect-embed`.

mod args;
mod commands;

use std::ffi::OsString;
use std::path::PathBuf;

pub use args::*;
use clap::Parser;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "ASPECT_EMBED_OUT_DIR";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Library(aspect_embed::Error),
}

impl From<aspect_embed::Error> for CliError {
    fn from(e: aspect_embed::Error) -> Self {
        CliError::Library(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Library(e.into())
    }
}

impl CliError {
    /// Machine-readable category and process exit code.
    pub fn category(&self) -> (&'static str, i32) {
        use aspect_embed::Error as E;
        match self {
            CliError::Usage(_) => ("usage", 2),
            CliError::Library(e) => match e {
                E::InvalidConfig(_) => ("config", 2),
                E::Io { .. } => ("io", 1),
                E::NonFinite(_) => ("numeric", 1),
                E::EmptyCorpus(_) | E::MalformedLine { .. } | E::MissingField { .. } | E::OverlappingPools(_) => {
                    ("data", 1)
                }
                E::Sampling { .. } => ("sampling", 1),
                E::Evaluation(_) => ("eval", 1),
                E::VocabularyMismatch { .. } | E::Checkpoint(_) => ("checkpoint", 1),
                E::DimensionMismatch(_) => ("dimension", 1),
                E::Json(_) => ("json", 1),
            },
        }
    }

    pub fn message(&self) -> String {
        let raw = match self {
            CliError::Usage(m) => m.clone(),
            CliError::Library(e) => e.to_string(),
        };
        raw.split_whitespace().collect::<Vec<_>>().join(" ")
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Parses `args` (program name first), runs the subcommand and returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("error[usage]: {first}");
            return 2;
        }
    };
    match execute(&cli) {
        Ok(outputs) => {
            for p in outputs {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            let (category, code) = e.category();
            eprintln!("error[{category}]: {}", e.message());
            code
        }
    }
}

/// Runs a parsed command and returns the paths it wrote.
pub fn execute(cli: &Cli) -> CliResult<Vec<PathBuf>> {
    match &cli.command {
        Command::BuildVocab(a) => commands::build_vocab(a),
        Command::GenSynthetic(a) => commands::gen_synthetic(a),
        Command::Train(a) => commands::train(a),
        Command::Embed(a) => commands::embed(a),
        Command::EvalAuc(a) => commands::eval_auc(a),
        Command::CrossAuc(a) => commands::cross_auc(a, false),
        Command::DecorrelatedAuc(a) => commands::cross_auc(a, true),
        Command::TopWords(a) => commands::top_words(a),
        Command::Highlight(a) => commands::highlight(a),
    }
}
