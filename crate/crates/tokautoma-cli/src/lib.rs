//! Command-line frontend: build token automata from merge dictionaries,
//! tokenize text, validate and search token streams, compare dictionaries,
//! and report automaton statistics.
//!
//! [`run`] drives a parsed [`Cli`] against caller-supplied streams so the
//! whole surface is testable in process; the binary wires it to the real
//! stdin, stdout, and stderr.

use std::fmt;
use std::io::{BufRead, Write};
use std::path::PathBuf;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};

pub mod stream;
pub mod vocab;

mod commands;

/// Success, acceptance, or a positive verdict.
pub const EXIT_OK: i32 = 0;
/// Bad invocation: unknown flags, unreadable or malformed files, bad
/// patterns, unmet command preconditions.
pub const EXIT_USAGE: i32 = 1;
/// A dictionary whose rule sides are not produced by earlier rules.
pub const EXIT_IMPROPER: i32 = 2;
/// Invalid input data, or a negative verdict: a rejected stream, an
/// inequivalent pair of dictionaries.
pub const EXIT_DATA: i32 = 3;
/// An internal invariant failed.
pub const EXIT_INTERNAL: i32 = 4;

/// Automata and tokenizers for merge dictionaries.
#[derive(Parser, Debug)]
#[command(name = "tokautoma", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Tokenization engine for `tokenize`.
#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum Mode {
    /// Scan the merge list directly.
    Oracle,
    /// Run the compiled single-pass tokenizer.
    Transducer,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Oracle => "oracle",
            Mode::Transducer => "transducer",
        })
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the token automaton of a dictionary and write it as JSON.
    #[command(group(ArgGroup::new("language").required(true).args(["universal", "lang"])))]
    Build {
        /// Dictionary file.
        #[arg(long)]
        dict: PathBuf,
        /// Start from every string over the alphabet.
        #[arg(long)]
        universal: bool,
        /// Start from the strings matching this pattern.
        #[arg(long, value_name = "REGEX")]
        lang: Option<String>,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Re-check invariants after every merge step.
        #[arg(long)]
        validate: bool,
        /// Drop dead states after the last merge.
        #[arg(long)]
        trim: bool,
        /// Extra base symbols beyond those occurring in the rules.
        #[arg(long, value_name = "CHARS", default_value = "")]
        sigma: String,
    },
    /// Tokenize stdin line by line into token stream records.
    Tokenize {
        /// Dictionary file.
        #[arg(long)]
        dict: PathBuf,
        /// Tokenization engine; both produce identical output.
        #[arg(long, value_enum, default_value_t = Mode::Transducer)]
        mode: Mode,
        /// Emit space-separated integer ids instead of token text.
        #[arg(long, requires = "vocab")]
        ids: bool,
        /// Vocabulary file (JSON array of token texts, index = id).
        #[arg(long, requires = "ids")]
        vocab: Option<PathBuf>,
        /// Extra base symbols beyond those occurring in the rules.
        #[arg(long, value_name = "CHARS", default_value = "")]
        sigma: String,
    },
    /// Check token stream records from stdin against an automaton file.
    Validate {
        /// Automaton file.
        #[arg(long)]
        aut: PathBuf,
        /// Check sliding windows instead of running the automaton; needs
        /// locality degree 1 at the chosen width.
        #[arg(long)]
        window: bool,
        /// Window width parameter; windows span k + 1 tokens.
        #[arg(long, default_value_t = 1)]
        k: usize,
    },
    /// Decide whether two dictionaries tokenize every string alike.
    Equiv {
        /// First dictionary file.
        #[arg(long)]
        dict: PathBuf,
        /// Second dictionary file.
        #[arg(long)]
        dict2: PathBuf,
        /// Extra base symbols added to both alphabets.
        #[arg(long, value_name = "CHARS", default_value = "")]
        sigma: String,
    },
    /// Report, per stream record, whether the underlying string contains
    /// a match of the pattern.
    Match {
        /// Dictionary file.
        #[arg(long)]
        dict: PathBuf,
        /// Pattern to search for.
        #[arg(long, value_name = "REGEX")]
        pattern: String,
        /// Extra base symbols beyond those occurring in the rules.
        #[arg(long, value_name = "CHARS", default_value = "")]
        sigma: String,
    },
    /// Report size, invariance, and locality of an automaton file.
    Stats {
        /// Automaton file.
        #[arg(long)]
        aut: PathBuf,
        /// Largest locality width to report.
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Machine-readable output.
        #[arg(long)]
        json: bool,
    },
}

/// An error path: exit code plus a diagnostic for stderr.
#[derive(Debug)]
pub(crate) struct Failure {
    pub(crate) code: i32,
    pub(crate) message: String,
}

impl Failure {
    pub(crate) fn usage(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_USAGE, message: message.into() }
    }

    pub(crate) fn data(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_DATA, message: message.into() }
    }

    pub(crate) fn internal(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_INTERNAL, message: message.into() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure { code: EXIT_USAGE, message: format!("i/o error: {e}") }
    }
}

pub(crate) type CmdResult = Result<i32, Failure>;

/// Runs one parsed command against the given streams and returns the exit
/// code. Verdicts and reports go to `stdout`; diagnostics and build
/// summaries go to `stderr`.
pub fn run(
    cli: Cli,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    let result = match cli.command {
        Command::Build { dict, universal, lang, out, validate, trim, sigma } => commands::build(
            &dict,
            universal,
            lang.as_deref(),
            out.as_deref(),
            validate,
            trim,
            &sigma,
            stdout,
            stderr,
        ),
        Command::Tokenize { dict, mode, ids, vocab, sigma } => {
            commands::tokenize(&dict, mode, ids, vocab.as_deref(), &sigma, stdin, stdout)
        }
        Command::Validate { aut, window, k } => commands::validate(&aut, window, k, stdin, stdout),
        Command::Equiv { dict, dict2, sigma } => commands::equiv(&dict, &dict2, &sigma, stdout),
        Command::Match { dict, pattern, sigma } => {
            commands::search(&dict, &pattern, &sigma, stdin, stdout)
        }
        Command::Stats { aut, k, json } => commands::stats(&aut, k, json, stdout),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "tokautoma: {}", f.message);
            f.code
        }
    }
}
