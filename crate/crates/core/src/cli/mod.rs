//! Command-line front end.

pub mod config;
pub mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{parse_list, resolve, ConfigError, Overrides};
use run::{Command, RunError};

#[derive(Debug, Parser)]
#[command(
    name = "xy-entropy",
    version,
    about = "Steady-state block entropy of the XY chain"
)]
pub struct Cli {
    /// Configuration file ([model], [run], [quadrature] sections).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Comma-separated block sizes, e.g. 32,64,128.
    #[arg(long, global = true)]
    pub n: Option<String>,
    #[arg(long = "abs-tol", global = true)]
    pub abs_tol: Option<f64>,
    /// Comma-separated subset of csv,json,plot.
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "beta-left", global = true, allow_negative_numbers = true)]
    pub beta_left: Option<f64>,
    #[arg(long = "beta-right", global = true, allow_negative_numbers = true)]
    pub beta_right: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Symbol a(xi) on a uniform grid.
    Symbol {
        #[arg(long, default_value_t = 256)]
        points: usize,
    },
    /// Fourier coefficients for x in [from, to].
    Coeffs {
        #[arg(long, default_value_t = -8, allow_negative_numbers = true)]
        from: i64,
        #[arg(long, default_value_t = 8, allow_negative_numbers = true)]
        to: i64,
    },
    /// Block Toeplitz matrices, one CSV per block size.
    Matrix,
    /// Eigenvalue moduli of each matrix.
    Spectrum,
    /// Block entropies.
    Entropy,
    /// Limiting entropy density, equilibrium comparisons and bounds.
    Limit,
    /// Convergence of the entropy density to its limit.
    Converge,
    /// Limit density against equilibrium as the temperature difference grows.
    CompareEq {
        #[arg(long, default_value_t = 8)]
        steps: usize,
    },
    /// Fock-space oracle suite.
    OracleCheck {
        /// Comma-separated block sizes (at most 10).
        #[arg(long, default_value = "1,2,3")]
        sizes: String,
    },
    /// The binary entropy function on [-1, 1].
    FigureH {
        #[arg(long, default_value_t = 401)]
        points: usize,
    },
}

fn execute(cli: &Cli) -> Result<Vec<PathBuf>, RunError> {
    let text = match &cli.config {
        Some(path) => Some(std::fs::read_to_string(path).map_err(|e| RunError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?),
        None => None,
    };
    let overrides = Overrides {
        beta_left: cli.beta_left,
        beta_right: cli.beta_right,
        gamma: cli.gamma,
        lambda: cli.lambda,
        n_list: cli.n.as_deref().map(|s| parse_list(s, "n")).transpose()?,
        output: cli.out.clone(),
        formats: cli
            .format
            .as_deref()
            .map(|s| parse_list(s, "formats"))
            .transpose()?,
        abs_tol: cli.abs_tol,
    };
    let cfg = resolve(text.as_deref(), &overrides)?;
    if let Some(w) = &cfg.warning {
        eprintln!("warning: {w}");
    }
    let cmd = match &cli.command {
        Sub::Symbol { points } => Command::Symbol { points: *points },
        Sub::Coeffs { from, to } => Command::Coeffs {
            from: *from,
            to: *to,
        },
        Sub::Matrix => Command::Matrix,
        Sub::Spectrum => Command::Spectrum,
        Sub::Entropy => Command::Entropy,
        Sub::Limit => Command::Limit,
        Sub::Converge => Command::Converge,
        Sub::CompareEq { steps } => Command::CompareEq { steps: *steps },
        Sub::OracleCheck { sizes } => Command::OracleCheck {
            sizes: parse_list(sizes, "sizes").map_err(RunError::from)?,
            seed: cli.seed,
        },
        Sub::FigureH { points } => Command::FigureH { points: *points },
    };
    run::run(&cmd, &cfg)
}

/// Parses arguments, runs, and maps failures to exit codes with an error
/// document on stderr.
pub fn main_entry() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = RunError::Config(ConfigError::Invalid {
                key: "arguments".into(),
                message: e.to_string(),
            });
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code());
        }
    };
    match execute(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
