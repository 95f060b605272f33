//! `congestion run | diagnose | convergence | validate-config`.
//!
//! Exit status: 0 on success, 1 when an enabled check fails, 2 on usage,
//! config or runtime errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use congestion_experiments::{
    cmd_convergence, cmd_diagnose, cmd_run, parse_config, DiagnosticKind, ExperimentConfig, ExperimentError,
};

#[derive(Parser)]
#[command(name = "congestion", version, about = "Brinkman and Darcy growth runs with energy diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every member of the schedule and store the trajectories.
    Run(Common),
    /// Evaluate the enabled diagnostics on stored trajectories.
    Diagnose(Common),
    /// Run the sweep arms and fit convergence rates.
    Convergence(Common),
    /// Parse the config and report every issue.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`. For `diagnose` this is
    /// where the trajectories were written.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweep members.
    #[arg(long)]
    jobs: Option<usize>,
    /// Enable a diagnostic on top of the config (repeatable).
    #[arg(long = "check", value_name = "NAME", value_parser = parse_kind)]
    check: Vec<DiagnosticKind>,
    /// Disable a diagnostic from the config (repeatable).
    #[arg(long = "no-check", value_name = "NAME", value_parser = parse_kind)]
    no_check: Vec<DiagnosticKind>,
}

fn parse_kind(s: &str) -> Result<DiagnosticKind, String> {
    DiagnosticKind::from_name(s)
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, ExperimentError> {
    let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
    Ok(parse_config(&text)?)
}

fn prepare(common: &Common) -> Result<ExperimentConfig, ExperimentError> {
    let mut config = load(&common.config)?;
    if let Some(out) = &common.out {
        config.output = out.clone();
    }
    config.diagnostics.enabled.extend(common.check.iter().copied());
    for k in &common.no_check {
        config.diagnostics.enabled.remove(k);
    }
    Ok(config)
}

fn in_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, ExperimentError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| ExperimentError::Usage(e.to_string()))?;
    Ok(pool.install(f))
}

fn status(passed: bool) -> ExitCode {
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn execute(cli: Cli) -> Result<ExitCode, ExperimentError> {
    match cli.command {
        Command::ValidateConfig { config } => {
            let c = load(&config)?;
            println!("ok: scenario `{}`, {} cells per axis, t_end {}", c.scenario, c.grid.cells_per_axis(), c.run.t_end);
            Ok(ExitCode::SUCCESS)
        }
        Command::Run(common) => {
            let config = prepare(&common)?;
            let outcome = in_pool(common.jobs, || cmd_run(&config))??;
            for m in &outcome.members {
                let tag = if m.bounds.passed() { "ok" } else { "FAIL" };
                println!("{tag:<4} {} ({} steps, {} frames) -> {}", m.key, m.steps, m.frames, m.dir.display());
                if !m.bounds.passed() {
                    print!("{}", m.bounds);
                }
            }
            Ok(status(outcome.passed()))
        }
        Command::Diagnose(common) => {
            let config = prepare(&common)?;
            let dir = common.out.clone().unwrap_or_else(|| config.output.clone());
            let outcome = in_pool(common.jobs, || cmd_diagnose(&config, &dir))??;
            for m in &outcome.members {
                println!("== {}", m.key);
                for d in &m.diagnoses {
                    println!("-- {}", d.kind.name());
                    if let Some(r) = &d.report {
                        for t in &r.terms {
                            println!("     {:<24} {:+.9e}", t.name, t.value);
                        }
                    }
                    print!("{}", d.checks);
                }
            }
            Ok(status(outcome.passed()))
        }
        Command::Convergence(common) => {
            let config = prepare(&common)?;
            let outcome = in_pool(common.jobs, || cmd_convergence(&config))??;
            for t in &outcome.tables {
                print!("{}", t.to_csv());
                print!("{}", t.fits_csv());
            }
            if let Some(d) = &outcome.diagram {
                let tag = if d.passed() { "ok" } else { "FAIL" };
                println!("{tag} diagram: relative L1 {:.4e} (tol {})", d.relative, d.tol);
            }
            Ok(status(outcome.passed()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
