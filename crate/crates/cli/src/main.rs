mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use disclosure_core::Error as CoreError;

#[derive(Parser, Debug)]
#[command(name = "disclosure", version, about = "Disclosure policy analysis for emission screening models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Instance JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; the primary result goes to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Gauss-Legendre nodes per smooth segment.
    #[arg(long)]
    pub quad_nodes: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate an instance and tabulate ê and e_.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Rows of the ê / e_ table.
        #[arg(long, default_value_t = 101)]
        grid: usize,
    },
    /// Trace the Pareto frontier over an α-grid.
    Frontier {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 101)]
        alphas: usize,
    },
    /// Build and check the optimality certificate at one weight.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        alpha: f64,
        /// Threshold to certify; optimized when absent.
        #[arg(long)]
        threshold: Option<f64>,
        /// θ-grid for the sampled multipliers.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Enumerate menus on a discretized instance and compare with thresholds.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 21)]
        type_grid: usize,
        #[arg(long, default_value_t = 11)]
        emission_grid: usize,
        /// Use the built-in LOW/MID/HIGH example instead of a config.
        #[arg(long)]
        intro: bool,
    },
}

/// Assumption or input error.
pub const EXIT_INPUT: u8 = 2;
/// A certificate condition failed.
pub const EXIT_VERIFY: u8 = 3;

fn init_logging() {
    let level = match std::env::var("DISCLOSURE_LOG").as_deref() {
        Ok("quiet") => log::LevelFilter::Off,
        Ok("info") => log::LevelFilter::Info,
        Ok("debug") => log::LevelFilter::Debug,
        _ => log::LevelFilter::Warn,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze { common, grid } => commands::analyze(&common, grid),
        Command::Frontier { common, alphas } => commands::frontier(&common, alphas),
        Command::Verify {
            common,
            alpha,
            threshold,
            grid,
        } => commands::verify(&common, alpha, threshold, grid),
        Command::Oracle {
            common,
            type_grid,
            emission_grid,
            intro,
        } => commands::oracle(&common, type_grid, emission_grid, intro),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = match err.downcast_ref::<CoreError>() {
                Some(CoreError::FocPrecondition { .. }) => EXIT_VERIFY,
                _ => EXIT_INPUT,
            };
            ExitCode::from(code)
        }
    }
}
