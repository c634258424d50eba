//! Command-line front end for the power-affine solver.
//!
//! Four commands: `check` prints the solvability certificate, `solve` runs
//! the fixed-point iteration and prints the full report, `props` runs the
//! numerical property probes, and `app` builds and solves one of the
//! built-in economic models.
//!
//! Exit codes classify the outcome: 0 success, 2 no solution exists,
//! 3 iteration budget exhausted, 1 anything else (bad input, bad flags,
//! failed probes). Errors are printed to stderr as one-line JSON documents;
//! results go to stdout.

mod files;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use power_affine::{
    apps, probe_cone_lattice, probe_fixed_point_inequality, probe_nonexistence,
    probe_order_preserving, probe_shape, AppError, MarkovChain, SolveOptions, Start, SystemError,
    Verdict,
};

/// Trial count for the randomized probes under `props`.
const PROBE_TRIALS: usize = 1000;

/// Start count for the nonexistence probe under `props`. Its iteration
/// budget is `min(--max-iters, NONEXISTENCE_ITERS)`.
const NONEXISTENCE_STARTS: usize = 10;
const NONEXISTENCE_ITERS: usize = 20_000;

#[derive(Debug)]
pub struct CliError {
    kind: &'static str,
    detail: String,
}

impl CliError {
    fn parse(detail: String) -> Self {
        Self {
            kind: "parse_error",
            detail,
        }
    }

    fn io(detail: String) -> Self {
        Self {
            kind: "io_error",
            detail,
        }
    }

    fn config(detail: String) -> Self {
        Self {
            kind: "invalid_config",
            detail,
        }
    }

    fn system_data(err: impl std::fmt::Display) -> Self {
        Self {
            kind: "invalid_system",
            detail: err.to_string(),
        }
    }

    fn app(err: AppError) -> Self {
        let kind = match &err {
            AppError::InvalidParameter { .. } => "invalid_parameter",
            AppError::NotStochastic { .. } => "not_stochastic",
            AppError::System(_) | AppError::Linalg(_) => "invalid_system",
        };
        Self {
            kind,
            detail: err.to_string(),
        }
    }

    fn structured(&self) -> String {
        serde_json::json!({ "error": self.kind, "detail": self.detail }).to_string()
    }
}

#[derive(Parser)]
#[command(
    name = "power-affine-cli",
    version,
    about = "Solve x = (A x^s)^(1/s) + b and audit its solvability"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the solvability certificate for a system file.
    Check {
        path: PathBuf,
        #[command(flatten)]
        config: RunConfig,
    },
    /// Solve a system file and print the solve report.
    Solve {
        path: PathBuf,
        #[command(flatten)]
        config: RunConfig,
    },
    /// Run the property probes against a system file.
    Props {
        path: PathBuf,
        #[command(flatten)]
        config: RunConfig,
    },
    /// Build and solve one of the built-in models.
    App {
        #[command(subcommand)]
        model: Model,
    },
}

#[derive(Subcommand)]
enum Model {
    /// Optimal consumption rates under state-dependent discounting.
    Consumption {
        /// JSON array: discount factor per state.
        #[arg(long)]
        beta: PathBuf,
        /// JSON array: gross return per state.
        #[arg(long)]
        returns: PathBuf,
        /// Relative risk aversion (> 0).
        #[arg(long, allow_negative_numbers = true)]
        gamma: f64,
        /// JSON matrix: row-stochastic transition probabilities.
        #[arg(long)]
        chain: PathBuf,
        #[command(flatten)]
        config: RunConfig,
    },
    /// Recursive utility per state for a fixed consumption stream.
    EpsteinZin {
        /// Discount factor, strictly inside (0, 1).
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        /// Intertemporal substitution curvature (nonzero).
        #[arg(long, allow_negative_numbers = true)]
        rho: f64,
        /// Risk-aggregation curvature (nonzero).
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        /// JSON array: consumption per state.
        #[arg(long)]
        consumption: PathBuf,
        /// JSON matrix: row-stochastic transition probabilities.
        #[arg(long)]
        chain: PathBuf,
        #[command(flatten)]
        config: RunConfig,
    },
    /// Wealth-to-consumption ratios under a growth-rate matrix.
    WealthConsumption {
        /// Discount factor (> 0).
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        /// Curvature exponent (nonzero).
        #[arg(long, allow_negative_numbers = true)]
        exponent: f64,
        /// JSON matrix: nonnegative irreducible growth operator.
        #[arg(long)]
        growth: PathBuf,
        #[command(flatten)]
        config: RunConfig,
    },
    /// Steady-state capital in the constant-elasticity growth model.
    CesGrowth {
        /// Savings rate (> 0).
        #[arg(long, allow_negative_numbers = true)]
        savings: f64,
        /// Capital share, strictly inside (0, 1).
        #[arg(long, allow_negative_numbers = true)]
        theta: f64,
        /// Substitution curvature (nonzero).
        #[arg(long, allow_negative_numbers = true)]
        rho: f64,
        /// JSON matrix: nonnegative irreducible technology operator.
        #[arg(long)]
        technology: PathBuf,
        #[command(flatten)]
        config: RunConfig,
    },
}

#[derive(Args, Debug)]
struct RunConfig {
    /// Convergence tolerance on the y-space residual.
    #[arg(long, default_value_t = 1e-10, allow_negative_numbers = true)]
    tol: f64,
    /// Iteration budget for the fixed-point loop.
    #[arg(long, default_value_t = 100_000)]
    max_iters: usize,
    /// Where the iteration starts.
    #[arg(long, value_enum, default_value_t = StartChoice::BracketMid)]
    start: StartChoice,
    /// Start vector file (y coordinates, or a previous solve report).
    /// Required with --start file.
    #[arg(long)]
    start_file: Option<PathBuf>,
    /// Seed for the probe RNG.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the per-iteration residual history to this CSV file.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Output document format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Debug, ValueEnum)]
enum StartChoice {
    #[value(name = "bracket_mid")]
    BracketMid,
    Ones,
    Perron,
    File,
}

#[derive(Clone, Copy, PartialEq, Debug, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl RunConfig {
    fn solve_options(&self) -> Result<SolveOptions, CliError> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(CliError::config(format!(
                "--tol must be a positive finite number, got {}",
                self.tol
            )));
        }
        if self.max_iters == 0 {
            return Err(CliError::config("--max-iters must be at least 1".into()));
        }
        let start = match self.start {
            StartChoice::BracketMid => Start::BracketMid,
            StartChoice::Ones => Start::Ones,
            StartChoice::Perron => Start::Perron,
            StartChoice::File => {
                let path = self.start_file.as_deref().ok_or_else(|| {
                    CliError::config("--start file requires --start-file PATH".into())
                })?;
                Start::Vector(files::load_start(path)?)
            }
        };
        Ok(SolveOptions::default()
            .with_tol(self.tol)
            .with_max_iters(self.max_iters)
            .with_start(start))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's own usage-error exit code is 2, which this tool reserves
            // for infeasible systems; remap usage errors to 1.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("{}", err.structured());
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Check { path, config } => cmd_check(&path, &config),
        Command::Solve { path, config } => cmd_solve(&path, &config),
        Command::Props { path, config } => cmd_props(&path, &config),
        Command::App { model } => cmd_app(model),
    }
}

fn cmd_check(path: &Path, config: &RunConfig) -> Result<ExitCode, CliError> {
    let sys = files::load_system(path)?;
    let cert = sys.certify().map_err(CliError::system_data)?;
    output::print_certificate(&cert, config.format);
    Ok(match cert.verdict {
        Verdict::UniqueSolution => ExitCode::SUCCESS,
        Verdict::NoSolution => ExitCode::from(2),
    })
}

fn cmd_solve(path: &Path, config: &RunConfig) -> Result<ExitCode, CliError> {
    let sys = files::load_system(path)?;
    let opts = config.solve_options()?;
    match sys.solve(&opts) {
        Ok(report) => {
            if let Some(trace) = &config.trace {
                output::write_trace(trace, &report.residual_history)?;
            }
            output::print_solve_report(&report, config.format);
            Ok(ExitCode::SUCCESS)
        }
        Err(SystemError::NoSolution { certificate }) => {
            match config.format {
                Format::Json => output::print_json(&serde_json::json!({
                    "error": "no_solution",
                    "certificate": certificate,
                })),
                Format::Csv => output::emit(&output::certificate_csv(&certificate)),
            }
            Ok(ExitCode::from(2))
        }
        Err(SystemError::MaxIterationsExceeded {
            max_iters,
            last_residual,
        }) => {
            match config.format {
                Format::Json => output::print_json(&serde_json::json!({
                    "error": "max_iterations_exceeded",
                    "max_iters": max_iters,
                    "last_residual": last_residual,
                })),
                Format::Csv => output::emit(&format!(
                    "error,max_iters,last_residual\nmax_iterations_exceeded,{max_iters},{last_residual}\n"
                )),
            }
            Ok(ExitCode::from(3))
        }
        Err(e) => Err(CliError::system_data(e)),
    }
}

fn cmd_props(path: &Path, config: &RunConfig) -> Result<ExitCode, CliError> {
    let sys = files::load_system(path)?;
    let cert = sys.certify().map_err(CliError::system_data)?;
    let mut reports = vec![
        probe_order_preserving(&sys, PROBE_TRIALS, config.seed),
        probe_shape(&sys, PROBE_TRIALS, config.seed),
        probe_cone_lattice(sys.dim(), PROBE_TRIALS, config.seed),
    ];
    match cert.verdict {
        Verdict::UniqueSolution => {
            let opts = config.solve_options()?;
            match sys.solve(&opts) {
                Ok(report) => reports.push(probe_fixed_point_inequality(&sys, &report)),
                Err(SystemError::MaxIterationsExceeded {
                    max_iters,
                    last_residual,
                }) => {
                    eprintln!(
                        "{}",
                        serde_json::json!({
                            "error": "max_iterations_exceeded",
                            "max_iters": max_iters,
                            "last_residual": last_residual,
                        })
                    );
                    return Ok(ExitCode::from(3));
                }
                Err(e) => return Err(CliError::system_data(e)),
            }
        }
        Verdict::NoSolution => {
            reports.push(probe_nonexistence(
                &sys,
                config.max_iters.min(NONEXISTENCE_ITERS),
                NONEXISTENCE_STARTS,
            ));
        }
    }
    output::print_probe_reports(&reports, config.format);
    Ok(if reports.iter().all(|r| r.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn load_chain(path: &Path) -> Result<MarkovChain, CliError> {
    MarkovChain::new(files::load_matrix(path)?).map_err(CliError::app)
}

fn cmd_app(model: Model) -> Result<ExitCode, CliError> {
    let (result, config) = match model {
        Model::Consumption {
            beta,
            returns,
            gamma,
            chain,
            config,
        } => {
            let beta = files::load_vector(&beta)?;
            let returns = files::load_vector(&returns)?;
            let chain = load_chain(&chain)?;
            let opts = config.solve_options()?;
            (
                apps::solve_discounted_consumption(&beta, &returns, gamma, &chain, &opts),
                config,
            )
        }
        Model::EpsteinZin {
            beta,
            rho,
            alpha,
            consumption,
            chain,
            config,
        } => {
            let consumption = files::load_vector(&consumption)?;
            let chain = load_chain(&chain)?;
            let opts = config.solve_options()?;
            (
                apps::solve_epstein_zin(beta, rho, alpha, &consumption, &chain, &opts),
                config,
            )
        }
        Model::WealthConsumption {
            beta,
            exponent,
            growth,
            config,
        } => {
            let growth = files::load_matrix(&growth)?;
            let opts = config.solve_options()?;
            (
                apps::solve_wealth_consumption(beta, exponent, &growth, &opts),
                config,
            )
        }
        Model::CesGrowth {
            savings,
            theta,
            rho,
            technology,
            config,
        } => {
            let technology = files::load_matrix(&technology)?;
            let opts = config.solve_options()?;
            (
                apps::solve_ces_growth(savings, theta, rho, &technology, &opts),
                config,
            )
        }
    };
    match result {
        Ok(sol) => {
            if let Some(trace) = &config.trace {
                output::write_trace(trace, &sol.report.residual_history)?;
            }
            output::print_app_solution(&sol, config.format);
            Ok(ExitCode::SUCCESS)
        }
        Err(AppError::System(SystemError::NoSolution { certificate })) => {
            match config.format {
                Format::Json => output::print_json(&serde_json::json!({
                    "error": "no_solution",
                    "certificate": certificate,
                })),
                Format::Csv => output::emit(&output::certificate_csv(&certificate)),
            }
            Ok(ExitCode::from(2))
        }
        Err(AppError::System(SystemError::MaxIterationsExceeded {
            max_iters,
            last_residual,
        })) => {
            match config.format {
                Format::Json => output::print_json(&serde_json::json!({
                    "error": "max_iterations_exceeded",
                    "max_iters": max_iters,
                    "last_residual": last_residual,
                })),
                Format::Csv => output::emit(&format!(
                    "error,max_iters,last_residual\nmax_iterations_exceeded,{max_iters},{last_residual}\n"
                )),
            }
            Ok(ExitCode::from(3))
        }
        Err(e) => Err(CliError::app(e)),
    }
}
