//! `nsbh`: solver runs, inequality checks, pair experiments and norm evaluation.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub mod config;
pub mod manifest;
mod norms;
mod pair;
mod solve;
mod verify;

/// Exit status for a run whose audit or check did not certify.
pub const EXIT_UNCERTIFIED: i32 = 2;
/// Exit status for usage, configuration and I/O errors.
pub const EXIT_USAGE: i32 = 1;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Uncertified(String),
}

impl CliError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Usage(format!("{}: {e}", path.display()))
    }

    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Uncertified(_) => EXIT_UNCERTIFIED,
        }
    }
}

impl From<nsbh_core::Error> for CliError {
    fn from(e: nsbh_core::Error) -> Self {
        match e {
            nsbh_core::Error::Admission(m) => CliError::Uncertified(format!("admission failed: {m}")),
            other => CliError::Usage(other.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "nsbh", version, about = "Anisotropic Boussinesq solver and inequality lab", arg_required_else_help = true)]
struct Cli {
    /// Worker threads for ensemble and pair parallelism (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Parent directory for the run directory (default: $NSBH_RUN_DIR, then ./runs).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the Galerkin system from a TOML configuration.
    Solve(SolveArgs),
    /// Run randomized checks of the functional inequalities.
    Verify(verify::VerifyArgs),
    /// Run a lockstep pair and audit the difference.
    Uniqueness(PairArgs),
    /// Evaluate norm specifications on a snapshot.
    Norms(norms::NormsArgs),
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Configuration file with [solver] and [initial] (or [restart]) sections.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args, Debug)]
struct PairArgs {
    /// Configuration file with [solver], [base], [perturbation] and optional [audit].
    #[arg(long)]
    config: PathBuf,
}

/// Parse `args` (including the program name), run, and return the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_USAGE;
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let out = cli.out_dir.as_deref();
    let result = pool.install(|| match &cli.command {
        Command::Solve(a) => solve::run(&a.config, out),
        Command::Verify(a) => verify::run(a, out),
        Command::Uniqueness(a) => pair::run(&a.config, out),
        Command::Norms(a) => norms::run(a, out),
    });
    match result {
        Ok(dir) => {
            println!("{}", dir.display());
            0
        }
        Err(e) => {
            match &e {
                CliError::Usage(m) => eprintln!("error: {m}"),
                CliError::Uncertified(m) => eprintln!("not certified: {m}"),
            }
            e.code()
        }
    }
}
