//! `multitag`: batch pipeline for the multilingual part-of-speech taggers.

mod commands;
mod config;
mod layout;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Overrides, RunConfig};

#[derive(Debug)]
pub enum CliError {
    /// bad configuration or input contents (exit code 1)
    Invalid(String),
    /// unreadable or unwritable files (exit code 2)
    Io(String),
}

impl From<multitag::Error> for CliError {
    fn from(e: multitag::Error) -> Self {
        match e {
            multitag::Error::Io { .. } => CliError::Io(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "multitag", version, about = "Unsupervised multilingual part-of-speech tagging")]
struct Cli {
    /// TOML run configuration; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic parallel corpus and directional alignments.
    Synth {
        #[arg(long, default_value_t = 500)]
        sentences: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Load the corpus, split it and write corpus and lexicon artifacts.
    Prepare,
    /// Symmetrize directional alignments and build alignment sets.
    AlignSets,
    /// Train the configured model for every seed.
    Train,
    /// Tag the test split with trained parameter tables.
    Tag,
    /// Score tagged test files; optionally vote or run sign tests.
    Eval {
        /// Majority vote over the merged runs of this language with every
        /// other configured language.
        #[arg(long)]
        vote: Option<String>,
        /// Sign test between two run names.
        #[arg(long, num_args = 2, value_names = ["RUN_A", "RUN_B"])]
        compare: Option<Vec<String>>,
        /// Language for --compare.
        #[arg(long)]
        language: Option<String>,
    },
    /// Aggregate every metrics file into accuracy tables.
    Report,
    /// Print the effective configuration.
    ShowConfig,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(&cli.overrides);
    match cli.command {
        Command::Synth { sentences, seed } => commands::synth(&cfg, sentences, seed),
        Command::Prepare => commands::prepare(&cfg),
        Command::AlignSets => commands::align_sets(&cfg),
        Command::Train => commands::train(&cfg),
        Command::Tag => commands::tag(&cfg),
        Command::Eval { vote, compare, language } => match (vote, compare) {
            (Some(lang), None) => commands::vote(&cfg, &lang),
            (None, Some(runs)) => {
                let lang = language.ok_or_else(|| CliError::Invalid("--compare needs --language".into()))?;
                commands::compare(&cfg, &runs[0], &runs[1], &lang)
            }
            (None, None) => commands::eval(&cfg),
            (Some(_), Some(_)) => Err(CliError::Invalid("--vote and --compare are exclusive".into())),
        },
        Command::Report => commands::report(&cfg),
        Command::ShowConfig => {
            print!("{}", cfg.to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(match e {
                CliError::Invalid(_) => 1,
                CliError::Io(_) => 2,
            })
        }
    }
}
