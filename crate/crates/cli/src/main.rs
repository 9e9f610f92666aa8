use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use c3p_cli::{run_experiment, trace_csv, verify, workers_from_env, CliError, ExperimentConfig, VerifyOptions};
use c3p_core::SchedulerKind;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "c3p", version, about = "Coded computation offloading simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a sweep and write runs.csv, theory.csv, aggregate.csv and improvement.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the config's `out` field.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the verifier battery and write verify.csv.
    Verify {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = VerifyOptions::default().seed)]
        seed: u64,
    },
    /// Dump the event log of one run at the config's first sweep point.
    Trace {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "c3p")]
        scheduler: String,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn io_err(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<u8, CliError> {
    match cmd {
        Cmd::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = out
                .or_else(|| cfg.out.clone())
                .ok_or_else(|| CliError::Config("no output directory: pass --out or set `out`".into()))?;
            let res = run_experiment(&cfg, workers_from_env()?)?;
            res.write(&dir)?;
            eprintln!("{} runs written to {}", res.runs.len(), dir.display());
            Ok(0)
        }
        Cmd::Verify { out, seed } => {
            let report = verify(&VerifyOptions { seed, ..VerifyOptions::default() })?;
            print!("{}", report.render());
            report.write(&out)?;
            Ok(if report.passed() { 0 } else { 3 })
        }
        Cmd::Trace { config, seed, scheduler, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let kind: SchedulerKind =
                scheduler.parse().map_err(|e: c3p_core::runner::RunError| CliError::Config(e.to_string()))?;
            let csv = trace_csv(&cfg, seed, kind)?;
            match out {
                Some(p) => fs::write(&p, csv).map_err(|e| io_err(&p, e))?,
                None => print!("{csv}"),
            }
            Ok(0)
        }
    }
}
