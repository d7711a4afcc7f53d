use clap::{Parser, Subcommand};
use lvfront::config::{self, ExperimentFile};
use lvfront::experiments::{run, Operation};
use lvfront::report::Status;
use std::path::PathBuf;
use std::process::ExitCode;

/// Periodic competition-diffusion front experiments.
///
/// Exit status: 0 when every check passes, 2 when a check fails, 3 on a
/// solver or configuration error.
#[derive(Parser)]
#[command(name = "lvfront", version)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    /// Experiment document (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; defaults to the document's `out`, then `out/<verb>`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (results are bitwise reproducible with 1).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Grid overrides, e.g. `h=0.05,L=60,m=2048`.
    #[arg(long, global = true)]
    grid: Option<String>,
    /// Sample counts `<run>,<discard>`.
    #[arg(long, global = true)]
    periods: Option<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Verb {
    /// Bistability conditions and boundary stability of a system.
    CheckAssumptions,
    /// Periodic logistic states and their period limits.
    Logistic,
    /// Coexistence orbits, Floquet exponents, separatrices.
    Kinetics,
    /// Plain front simulation with snapshots.
    Simulate,
    /// Wave speed for each period in the list.
    Speed,
    /// Deviation from the homogenized speed as T decreases.
    LimitsSmall,
    /// Deviation from the mean frozen speed as T increases.
    LimitsLarge,
    /// Sign of the speed under ordered coefficients.
    SignCriteria,
    /// Opposite signs at a small and a large period.
    SignChange,
    /// Residual checks of eigenfunctions, barriers and a converged wave.
    Residuals,
}

impl Verb {
    fn op(self) -> Operation {
        match self {
            Verb::CheckAssumptions => Operation::CheckAssumptions,
            Verb::Logistic => Operation::Logistic,
            Verb::Kinetics => Operation::Kinetics,
            Verb::Simulate => Operation::Simulate,
            Verb::Speed => Operation::Speed,
            Verb::LimitsSmall => Operation::LimitsSmall,
            Verb::LimitsLarge => Operation::LimitsLarge,
            Verb::SignCriteria => Operation::SignCriteria,
            Verb::SignChange => Operation::SignChange,
            Verb::Residuals => Operation::Residuals,
        }
    }
}

fn prepare(cli: &Cli) -> Result<ExperimentFile, String> {
    let path = cli.config.as_ref().ok_or("--config is required")?;
    let mut cfg = config::load(path).map_err(|e| e.to_string())?;
    if let Some(g) = &cli.grid {
        cfg.apply_grid(g).map_err(|e| e.to_string())?;
    }
    if let Some(p) = &cli.periods {
        cfg.apply_periods(p).map_err(|e| e.to_string())?;
    }
    if let Some(n) = cli.threads {
        cfg.experiment.threads = n;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let op = cli.verb.op();
    let cfg = match prepare(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.experiment.out.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(op.verb()));
    let report = run(op, &cfg);
    for c in &report.checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if let Some(e) = &report.error {
        eprintln!("error: {e}");
    }
    let mut status = report.status;
    match report.write(&out) {
        Ok(files) => println!("wrote {} files to {}", files.len(), out.display()),
        Err(e) => {
            eprintln!("error: cannot write {}: {e}", out.display());
            status = Status::Error;
        }
    }
    println!("status: {status:?}");
    ExitCode::from(status.exit_code() as u8)
}
