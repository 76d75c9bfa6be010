//! Command-line front end: gamma tables, Kac densities, zero-count
//! simulation, CLT checks, and a self-test suite. Exit codes: 0 on success,
//! 1 on numerical failure, 2 on usage errors.

mod commands;
mod output;
mod settings;

use clap::{Parser, Subcommand};

use settings::{CommonArgs, Defaults, ModelKind, Settings};

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation or configuration; exit code 2.
    Usage(String),
    /// The computation itself failed or missed tolerance; exit code 1.
    Numerical(String),
}

impl From<kaczero::Error> for CliError {
    fn from(err: kaczero::Error) -> Self {
        CliError::Numerical(err.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "kaczero",
    version,
    about = "Zero-counting statistics of smooth Gaussian processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Limiting cumulant constants gamma_p by quadrature.
    Gamma {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Kac density and its cumulant analogue at given nodes.
    KacDensity {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Zero counts over Monte Carlo paths, with cumulant estimates.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Normalized-moment diagnostics against the Gaussian limit.
    CltCheck {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the invariant suites with per-suite timing.
    Selftest {
        #[command(flatten)]
        common: CommonArgs,
        /// Force the named suite to fail (reporting-path debug aid).
        #[arg(long, hide = true)]
        fail: Option<String>,
    },
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    let (common, defaults) = match &cli.command {
        Command::Gamma { common } => (
            common,
            Defaults {
                model: ModelKind::Sinc,
                paths: 1000,
                n: 100,
                p_max: 2,
            },
        ),
        Command::KacDensity { common } => (
            common,
            Defaults {
                model: ModelKind::Sinc,
                paths: 1000,
                n: 100,
                p_max: 2,
            },
        ),
        Command::Simulate { common } => (
            common,
            Defaults {
                model: ModelKind::TrigPoly,
                paths: 1000,
                n: 100,
                p_max: 4,
            },
        ),
        Command::CltCheck { common } => (
            common,
            Defaults {
                model: ModelKind::TrigPoly,
                paths: 4000,
                n: 100,
                p_max: 3,
            },
        ),
        Command::Selftest { common, .. } => (
            common,
            Defaults {
                model: ModelKind::Sinc,
                paths: 200,
                n: 10,
                p_max: 2,
            },
        ),
    };
    let settings = Settings::resolve(common, defaults)?;
    if let Some(workers) = settings.workers {
        if workers == 0 {
            return Err(CliError::Usage("workers must be positive".into()));
        }
        // ignore the error when a pool already exists (tests, repeat calls)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
    match &cli.command {
        Command::Gamma { .. } => commands::cmd_gamma(&settings),
        Command::KacDensity { .. } => commands::cmd_kac_density(&settings),
        Command::Simulate { .. } => commands::cmd_simulate(&settings),
        Command::CltCheck { .. } => commands::cmd_clt_check(&settings),
        Command::Selftest { fail, .. } => commands::cmd_selftest(&settings, fail.as_deref()),
    }
}

fn main() {
    match run() {
        Ok(()) => {}
        Err(CliError::Numerical(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            std::process::exit(2);
        }
    }
}
