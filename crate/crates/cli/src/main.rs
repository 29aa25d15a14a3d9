//! `lsearch`: enumerate local factors, export weights, run searches and check oracles.
//!
//! Exit codes: 0 success (search: eliminated), 1 usage or configuration error,
//! 2 survivors found, 3 inconclusive, 4 oracle check failed.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] lsearch::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Parser, Debug)]
#[command(name = "lsearch", version, about = "Existence search for degree-4 self-dual L-functions")]
struct Cli {
    /// Run configuration (TOML); overrides LSEARCH_CONFIG.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the admissible local factors at a prime.
    Factors {
        #[arg(long)]
        prime: u64,
        #[arg(long)]
        level: u64,
    },
    /// Write the weights w_n of one evaluation as CSV.
    Weights {
        #[arg(long)]
        level: u64,
        #[arg(long, allow_hyphen_values = true)]
        sign: i64,
        /// Height t of s = 1/2 + it, or a complex point such as "0.5+2i".
        #[arg(long = "s", default_value = "2", allow_hyphen_values = true)]
        s: String,
        /// Test function "alpha,c" for g(z) = exp(alpha z + c z^2).
        #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
        g: String,
        #[arg(long)]
        out: PathBuf,
        /// Number of coefficients (default: configured horizon).
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Search for L-functions of the given level and sign.
    Search {
        #[arg(long)]
        level: u64,
        #[arg(long, allow_hyphen_values = true)]
        sign: i64,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the product of two elliptic-curve L-functions.
    Oracle {
        #[arg(long)]
        curve1: String,
        #[arg(long)]
        curve2: String,
        /// Check the coefficients against the default relation basis.
        #[arg(long)]
        check: bool,
        /// Number of coefficients to emit (default: configured horizon).
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Run the search over a range of levels (long-running).
    Sweep {
        #[arg(long)]
        from: u64,
        #[arg(long)]
        to: u64,
        /// Restrict to one sign; both by default.
        #[arg(long, allow_hyphen_values = true)]
        sign: Option<i64>,
    },
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let cfg = RunConfig::load(cli.config.as_deref())?;
    lsearch::scalar::set_working_precision(cfg.precision_bits);
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Factors { prime, level } => commands::factors(prime, level),
        Command::Weights { level, sign, s, g, out, horizon } => {
            commands::weights(&cfg, level, sign, &s, &g, &out, horizon)
        }
        Command::Search { level, sign, out } => commands::search(&cfg, level, sign, out.as_deref()),
        Command::Oracle { curve1, curve2, check, horizon } => commands::oracle(&cfg, &curve1, &curve2, check, horizon),
        Command::Sweep { from, to, sign } => commands::sweep(&cfg, from, to, sign),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).format_timestamp(None).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
