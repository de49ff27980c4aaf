mod commands;
mod config;
mod grid;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use renewal_ldp::region::Region;
use renewal_ldp::HoldingTimeModel;

use crate::config::RunConfig;
use crate::grid::{Product, Values};

const MODEL_HELP: &str = "\
Models are written kind:param[,param]:
  exponential:LAMBDA          (alias exp)
  inverse_gaussian:MU         (alias ig)
  noncentral_chi_squared:LAMBDA,K  (alias ncx2)
  gamma:SHAPE,RATE

Regions join pieces with '|': z1>=1.5, z2<=-1, rect(A1,B1,A2,B2), linf>R.
Lists are v1,v2,... or lo:hi:n.

Exit status: 0 on success, 1 on a failed validation or computation, 2 on a usage error.";

#[derive(Debug, Parser)]
#[command(name = "renewal-ldp", version, about = "Rate functions for first-passage times and areas of renewal processes", after_help = MODEL_HELP)]
struct Cli {
    /// Read the run from a JSON configuration instead of the command line.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Args)]
struct Output {
    /// Write the artifact here instead of standard output.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Workers {
    /// Worker threads.
    #[arg(long, env = "RENEWAL_LDP_WORKERS")]
    workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RateMethodArg {
    Auto,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    Table,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    ClosedForm,
    BruteForce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CenteringArg {
    Theoretical,
    Expectation,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Describe a holding-time model: moments, domain, regularity.
    Model {
        #[arg(long)]
        model: HoldingTimeModel,
        #[command(flatten)]
        output: Output,
    },
    /// Evaluate Lambda and its gradient on a grid of tilts (CSV).
    Lambda {
        #[arg(long)]
        model: HoldingTimeModel,
        #[arg(long, value_name = "LIST", allow_hyphen_values = true)]
        a1: Values,
        #[arg(long, value_name = "LIST", allow_hyphen_values = true)]
        a2: Values,
        #[command(flatten)]
        output: Output,
    },
    /// Large-deviation rate at a point or on a grid.
    Rate {
        #[arg(long, required_unless_present = "g_curve")]
        model: Option<HoldingTimeModel>,
        #[arg(long, allow_hyphen_values = true)]
        z1: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        z2: Option<f64>,
        /// Points Z1LIST;Z2LIST (Cartesian product).
        #[arg(long, value_name = "GRID", allow_hyphen_values = true, conflicts_with_all = ["z1", "z2"])]
        grid: Option<Product>,
        #[arg(long, value_enum, default_value = "auto")]
        method: RateMethodArg,
        /// Emit the Poisson curves alpha2, g, h for the given z1, z2 (CSV).
        #[arg(long, conflicts_with = "grid")]
        g_curve: bool,
        /// Samples on the g-curve.
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[command(flatten)]
        output: Output,
    },
    /// Moderate-deviation predictions and moment tables.
    Moderate {
        #[arg(long)]
        model: HoldingTimeModel,
        /// Exponent of a_x = x^(-p).
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long)]
        region: Option<Region>,
        #[arg(long, value_name = "LIST", allow_hyphen_values = true)]
        x_grid: Values,
        #[command(flatten)]
        output: Output,
    },
    /// Sample (tau, area) pairs (CSV) or estimate tail probabilities (JSON).
    Simulate {
        #[arg(long)]
        model: HoldingTimeModel,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        workers: Workers,
        /// Tail event as a region of (tau/x, area/x^2); repeatable.
        #[arg(long, value_name = "REGION")]
        event: Vec<Region>,
        #[arg(long, value_enum, default_value = "theoretical")]
        centering: CenteringArg,
        /// Defaults to csv without events and json with them.
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[command(flatten)]
        output: Output,
    },
    /// Conditional law of the area given tau for the Poisson process.
    Conditional {
        #[arg(long)]
        x: u64,
        #[arg(long)]
        y: f64,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long, value_enum, default_value = "closed-form")]
        mode: ModeArg,
        #[command(flatten)]
        output: Output,
    },
    /// Run the acceptance checks and print a pass/fail table.
    Validate {
        /// Smaller Monte Carlo budgets, same tolerances.
        #[arg(long)]
        quick: bool,
        /// Run only these criteria.
        #[arg(long, value_name = "ID")]
        criterion: Vec<usize>,
        #[arg(long, default_value_t = renewal_ldp::validation::ValidationOptions::default().seed)]
        seed: u64,
        #[command(flatten)]
        workers: Workers,
        #[arg(long, value_enum, default_value = "table")]
        format: TableFormat,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Compute(String),
    Io(String),
}

impl From<renewal_ldp::Error> for CliError {
    fn from(e: renewal_ldp::Error) -> Self {
        use renewal_ldp::Error as E;
        match e {
            E::Parse(_) | E::ParameterDomain(_) | E::Domain(_) | E::Refused(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Compute(e.to_string()),
        }
    }
}

fn parse(args: Vec<String>) -> Result<Command, ExitCode> {
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return Err(ExitCode::from(code as u8));
        }
    };
    match (cli.config, cli.command) {
        (Some(_), Some(_)) => Err(report(&CliError::Usage(
            "--config replaces the subcommand; give one or the other".into(),
        ))),
        (Some(path), None) => {
            let args = RunConfig::load(&path)
                .and_then(|c| c.to_args())
                .map_err(|e| report(&e))?;
            match Cli::try_parse_from(&args) {
                Ok(Cli {
                    command: Some(c), ..
                }) => Ok(c),
                Ok(_) => Err(report(&CliError::Usage(
                    "configuration names no subcommand".into(),
                ))),
                Err(e) => Err(report(&CliError::Usage(format!(
                    "configuration {} does not match the schema:\n{}",
                    path.display(),
                    e.render()
                )))),
            }
        }
        (None, Some(c)) => Ok(c),
        (None, None) => {
            eprintln!("error: a subcommand or --config is required\n\nFor more information, try '--help'.");
            Err(ExitCode::from(2))
        }
    }
}

fn report(e: &CliError) -> ExitCode {
    match e {
        CliError::Usage(m) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        CliError::Compute(m) | CliError::Io(m) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    let command = match parse(std::env::args().collect()) {
        Ok(c) => c,
        Err(code) => return code,
    };
    match commands::run(command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => report(&e),
    }
}
