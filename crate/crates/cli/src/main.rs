use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hjminplus_cli::commands::{self, Format};
use hjminplus_cli::config::{ModelConfig, Overrides};
use hjminplus_cli::verify::{self, Scale};
use hjminplus_cli::CliError;

/// Hamilton-Jacobi solvers for imaging models.
///
/// Exit codes: 0 success, 1 verification failure, 2 usage or configuration
/// error, 3 I/O error, 4 solver error.
#[derive(Parser)]
#[command(name = "hjminplus", version)]
struct Cli {
    /// Worker threads (defaults to one per core).
    #[arg(long, global = true, env = "HJ_MINPLUS_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML model configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for output files; reports go to stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Pgm)]
    format: Format,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    t1: Option<f64>,
    #[arg(long)]
    t2: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Minimizer of a configured model for a graymap image.
    Denoise {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Geometry, texture and noise components of a graymap image.
    Decompose {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Viscous value, posterior mean and MMSE over a grid of 1D points.
    Posterior {
        #[command(flatten)]
        common: Common,
    },
    /// Min-plus value, index set and minimizers for an image or inline signal.
    Minplus {
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Runs the seeded verification suites.
    Verify {
        /// prox, hj, minplus, viscous, decompose, cli or all.
        #[arg(default_value = "all")]
        suite: String,
        /// Run a tenth of the instances.
        #[arg(long)]
        quick: bool,
    },
}

fn load(common: &Common) -> Result<ModelConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            ModelConfig::parse(&text)?
        }
        None => ModelConfig::default(),
    };
    cfg.apply(Overrides {
        t: common.t,
        t1: common.t1,
        t2: common.t2,
        epsilon: common.eps,
    });
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    let (outputs, common) = match &cli.command {
        Command::Denoise { input, common } => (commands::denoise(&load(common)?, input, common.format)?, common),
        Command::Decompose { input, common } => (commands::decompose(&load(common)?, input, common.format)?, common),
        Command::Posterior { common } => (commands::posterior(&load(common)?, common.format)?, common),
        Command::Minplus { input, common } => {
            (commands::minplus(&load(common)?, input.as_deref(), common.format)?, common)
        }
        Command::Verify { suite, quick } => {
            let scale = if *quick { Scale::Quick } else { Scale::Full };
            let outcomes = verify::run_suite(suite, scale).ok_or_else(|| {
                CliError::Usage(format!("unknown suite {suite:?}; expected one of {}", verify::SUITES.join(", ")))
            })?;
            for o in &outcomes {
                println!("{o}");
            }
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            return if failed == 0 { Ok(()) } else { Err(CliError::VerifyFailed(failed)) };
        }
    };
    if common.output.is_none() && outputs.iter().any(|(name, _)| name.ends_with(".pgm")) {
        eprintln!("note: image outputs are only written with --output");
    }
    commands::emit(&outputs, common.output.as_ref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hjminplus: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
