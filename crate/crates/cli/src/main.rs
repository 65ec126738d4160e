//! `chscale`: classification, spectra, simulations and asymptotic analysis
//! from JSON configs.
//!
//! Exit codes: 0 success, 2 validation error, 3 numerical failure, 1 any
//! other failure (I/O). Every failure prints a JSON error report on stderr;
//! failures after the output directory has been created also leave
//! `error.json` there.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chscale::ErrorKind;

#[derive(Debug, Parser)]
#[command(name = "chscale", version, about = "Scaling asymptotics of higher-order dissipative PDEs")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides the config's `output_dir`).
    #[arg(long, global = true, env = "CHSCALE_OUT")]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 picks one per core.
    #[arg(long, global = true, env = "CHSCALE_THREADS", default_value_t = 0)]
    pub threads: usize,
    /// Also write gnuplot scripts for the emitted data files.
    #[arg(long, global = true)]
    pub gnuplot: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify the nonlinear terms of the config's `spec`.
    Classify,
    /// Operator spectrum, profiles and kernel.
    #[command(subcommand)]
    Spectrum(SpectrumCommand),
    /// Integrate the equation in the physical frame.
    Simulate,
    /// Integrate the equation in scaling variables.
    Scaled,
    /// Fit decay, amplitude and remainder rates of a saved physical run.
    Analyze {
        /// Run directory written by `simulate`.
        run_dir: PathBuf,
    },
    /// Run one of the pinned experiments.
    Scenario {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(chscale::scenario::NAMES))]
        name: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum SpectrumCommand {
    /// Eigenvalues `β - (d+j)/(2n)`.
    Eig,
    /// Tabulated self-similar profile.
    Profile,
    /// Kernel `g(z, τ)` along a ray.
    Kernel,
    /// Stretched-exponential fit of the kernel tail.
    DecayFit,
}

/// Failure carrying the exit code and, once known, the output directory.
pub struct Failure {
    pub error: chscale::Error,
    pub out: Option<PathBuf>,
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self.error.kind() {
            ErrorKind::Validation => 2,
            ErrorKind::Numerical => 3,
            ErrorKind::Other => 1,
        }
    }
}

impl From<chscale::Error> for Failure {
    fn from(error: chscale::Error) -> Self {
        Self { error, out: None }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let report = serde_json::json!({
                "status": "error",
                "exit_code": 2,
                "kind": "validation",
                "error": "usage",
                "message": e.render().to_string().trim_end(),
            });
            eprintln!("{}", serde_json::to_string_pretty(&report).unwrap_or_default());
            return ExitCode::from(2);
        }
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        eprintln!("thread pool: {e}");
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let code = f.code();
            let report = output::error_report(&f.error, code);
            eprintln!("{}", serde_json::to_string_pretty(&report).unwrap_or_default());
            if let Some(dir) = &f.out {
                let _ = chscale::record::write_json(&dir.join("error.json"), &report);
            }
            ExitCode::from(code)
        }
    }
}
