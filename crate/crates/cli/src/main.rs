//! `anelastic` — batch front door for the degenerate-density channel
//! solver.
//!
//! Every subcommand reads one TOML config (defaults apply when no file
//! is given), runs one experiment, writes CSV/JSON/snapshot outputs plus
//! a reproducibility manifest under the output directory, and exits with
//!
//! * `0` — every asserted property of the experiment held,
//! * `1` — the experiment ran but a property failed,
//! * `2` — config error (bad file, unknown key, violated invariant,
//!   malformed snapshot, bad I/O),
//! * `3` — numerical abort (instability guard, time-step bound,
//!   factorization failure).

mod config;
mod experiments;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use anelastic_core::SolverError;
use config::RunConfig;

const EXIT_HELP: &str = "Exit codes:\n  0  all asserted properties passed\n  1  property failure\n  2  config error\n  3  numerical abort (instability, step bound, factorization)\n\nSet ANELASTIC_OUTPUT_ROOT to relocate all outputs.";

#[derive(Parser)]
#[command(
    name = "anelastic",
    version,
    about = "Spectral channel-flow experiments with a degenerate density",
    after_help = EXIT_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML config file; omit to use built-in defaults.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override one config key (dotted path), e.g. --set dt=5e-4 or
    /// --set tolerances.constraint=1e-8. Repeatable; applied before
    /// validation.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and check constraint preservation.
    #[command(name = "run")]
    Run(CommonArgs),
    /// Drive the density floor toward zero; check uniform bounds.
    #[command(name = "sweep-eps")]
    SweepEps(CommonArgs),
    /// Refine the velocity space; check the defect integral shrinks.
    #[command(name = "sweep-m")]
    SweepM(CommonArgs),
    /// Weighted-inequality ratio sweep with closed-form spot checks.
    #[command(name = "hardy")]
    Hardy(CommonArgs),
    /// Perturbation growth: determinism, quadratic scaling, dt-robustness.
    #[command(name = "stability")]
    Stability(CommonArgs),
    /// Forced-solution refinement study against an exact decaying flow.
    #[command(name = "manufactured")]
    Manufactured(CommonArgs),
    /// Long-horizon run; check boundedness and monotone energy decay.
    #[command(name = "global2d")]
    Global2d(CommonArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Run(_) => "run",
            Command::SweepEps(_) => "sweep-eps",
            Command::SweepM(_) => "sweep-m",
            Command::Hardy(_) => "hardy",
            Command::Stability(_) => "stability",
            Command::Manufactured(_) => "manufactured",
            Command::Global2d(_) => "global2d",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Run(a)
            | Command::SweepEps(a)
            | Command::SweepM(a)
            | Command::Hardy(a)
            | Command::Stability(a)
            | Command::Manufactured(a)
            | Command::Global2d(a) => a,
        }
    }
}

/// Load, override, and validate the config, reporting every violation.
fn load_config(args: &CommonArgs) -> Result<RunConfig, Vec<String>> {
    let text = match &args.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| vec![format!("cannot read config {}: {e}", path.display())])?,
        None => String::new(),
    };
    config::parse_config(&text, &args.set)
}

fn dispatch(name: &str, cfg: &RunConfig, dir: &Path) -> Result<bool> {
    match name {
        "run" => experiments::run(cfg, dir),
        "sweep-eps" => experiments::sweep_eps(cfg, dir),
        "sweep-m" => experiments::sweep_m(cfg, dir),
        "hardy" => experiments::hardy(cfg, dir),
        "stability" => experiments::stability(cfg, dir),
        "manufactured" => experiments::manufactured(cfg, dir),
        "global2d" => experiments::global2d(cfg, dir),
        _ => unreachable!("clap restricts subcommand names"),
    }
}

/// Config problems exit 2; numerical aborts exit 3.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<SolverError>() {
        Some(
            SolverError::Instability { .. }
            | SolverError::TimeStepBound { .. }
            | SolverError::Factorization { .. },
        ) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    let cfg = match load_config(cli.command.args()) {
        Ok(cfg) => cfg,
        Err(violations) => {
            eprintln!("config error:");
            for v in &violations {
                eprintln!("  - {v}");
            }
            return ExitCode::from(2);
        }
    };

    let dir = match output::prepare_dir(&cfg, name) {
        Ok(dir) => dir,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = output::write_manifest(&dir, &cfg, name) {
        eprintln!("config error: {e:#}");
        return ExitCode::from(2);
    }

    match dispatch(name, &cfg, &dir) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("{name}: property failure (details in {})", dir.display());
            ExitCode::from(1)
        }
        Err(e) => {
            let code = exit_code_for(&e);
            eprintln!(
                "{name}: {}: {e:#}",
                if code == 3 { "numerical abort" } else { "config error" }
            );
            ExitCode::from(code)
        }
    }
}
