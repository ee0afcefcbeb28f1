use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use d2dcache_cli::{write_atomic, CliError, Mode, Preset, SimBudget, Sweep, SweepSpec};

#[derive(Parser)]
#[command(name = "d2dcache", version, about = "Download-delay sweeps for MDS-coded D2D caching")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the analytical model over a sweep.
    Analytic(Common),
    /// Simulate every point of a sweep.
    Simulate(Simulated),
    /// Run both and check the simulation against the model.
    Compare(Simulated),
}

#[derive(Args)]
#[group(id = "source", required = true, multiple = true, args = ["preset", "config"])]
struct Common {
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// JSON object whose keys override the preset, or a full sweep without one.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Simulated {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = SimBudget::default().seed)]
    seed: u64,
    /// Measured requests per replication.
    #[arg(long, default_value_t = SimBudget::default().requests)]
    requests: u64,
    #[arg(long, default_value_t = SimBudget::default().replications)]
    reps: usize,
    #[arg(long, default_value_t = SimBudget::default().warmup_requests)]
    warmup: u64,
    /// Per-request trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

fn load_spec(c: &Common) -> Result<SweepSpec, CliError> {
    let text = c
        .config
        .as_ref()
        .map(|p| std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display()))))
        .transpose()?;
    match (c.preset, text) {
        (Some(p), Some(t)) => p.spec().overridden(&t),
        (Some(p), None) => Ok(p.spec()),
        (None, Some(t)) => SweepSpec::from_json(&t),
        (None, None) => unreachable!("clap requires a preset or a config"),
    }
}

fn emit(path: Option<&PathBuf>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => write_atomic(p, bytes),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (common, mode, budget, trace) = match &cli.command {
        Command::Analytic(c) => (c, Mode::Analytic, SimBudget::default(), None),
        Command::Simulate(s) | Command::Compare(s) => {
            let mode = if matches!(cli.command, Command::Simulate(_)) { Mode::Simulate } else { Mode::Compare };
            let budget = SimBudget { seed: s.seed, requests: s.requests, replications: s.reps, warmup_requests: s.warmup };
            (&s.common, mode, budget, s.trace.as_ref())
        }
    };
    let spec = load_spec(common)?;
    let sweep = Sweep::run(spec, mode, budget, trace.is_some())?;
    emit(common.out.as_ref(), &sweep.to_csv()?)?;
    if let (Some(path), Some(bytes)) = (trace, sweep.trace_csv()?) {
        write_atomic(path, &bytes)?;
    }
    if mode == Mode::Compare {
        for r in &sweep.results {
            let Some(report) = &r.report else { continue };
            let p = &r.point;
            eprintln!(
                "{} = {}, ({}, {}), F = {}: {}",
                sweep.spec.axis,
                p.axis_value,
                p.code.length,
                p.code.k,
                p.popularity.cached_files(),
                if report.passed() { "pass" } else { "FAIL" }
            );
            for c in report.failures() {
                eprintln!("    {c}");
            }
        }
        let failed = sweep.failed_points();
        if failed > 0 {
            return Err(CliError::Comparison { failed, total: sweep.results.len() });
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
