use clap::Parser;
use czforge::experiments::{run_scenario, ExperimentConfig, RunOptions, Scenario};
use czforge::CzError;
use std::path::PathBuf;
use std::process::ExitCode;

/// Simulation and pulse optimization of a fast tunable-coupler CZ gate.
#[derive(Debug, Parser)]
#[command(name = "czforge", version)]
struct Cli {
    /// Scenario: cz-demo, sweep-hold, sweep-delta, spectator, optimize, spectrum
    scenario: String,
    /// Path to the JSON experiment config
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides run.out_dir)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Integration sampling step in ns (overrides run.dt)
    #[arg(long)]
    dt: Option<f64>,
    /// Overwrite outputs produced from a different config
    #[arg(long)]
    force: bool,
}

fn run(cli: &Cli) -> czforge::Result<bool> {
    let scenario = Scenario::parse(&cli.scenario)?;
    let raw = std::fs::read(&cli.config).map_err(|e| {
        CzError::Config(format!("cannot read config {}: {e}", cli.config.display()))
    })?;
    let cfg: ExperimentConfig = serde_json::from_slice(&raw)?;
    if cfg.scenario.name != scenario.name() {
        return Err(CzError::Config(format!(
            "CLI scenario {:?} does not match config scenario {:?}",
            scenario.name(),
            cfg.scenario.name
        )));
    }
    let opts = RunOptions {
        out_dir: cli.out.as_ref().map(|p| p.display().to_string()),
        dt: cli.dt,
        force: cli.force,
    };
    let outcome = run_scenario(&cfg, &raw, &opts)?;
    for path in &outcome.outputs {
        println!("wrote {}", path.display());
    }
    Ok(outcome.converged)
}

fn main() -> ExitCode {
    // rayon already parallelizes over cases; nested BLAS threading only
    // oversubscribes the small eigenproblems
    if std::env::var_os("OPENBLAS_NUM_THREADS").is_none() {
        std::env::set_var("OPENBLAS_NUM_THREADS", "1");
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(
            e.kind(),
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
        ) =>
        {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        // usage errors count as config errors
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(3);
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("optimization did not converge; partial results written");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                CzError::Config(_)
                | CzError::Json(_)
                | CzError::ParameterDomain(_)
                | CzError::SingleWell { .. }
                | CzError::InvalidPulse(_) => 3,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}
