use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use twostate_cli::verify::{self, Check};
use twostate_cli::{run, CliError, ScenarioConfig};

#[derive(Parser)]
#[command(name = "twostate", version, about = "Two-state formalism scenarios and cross-checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a scenario config and write its trajectory CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_path` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run randomized closed-form vs oracle checks.
    Verify {
        #[arg(long, value_enum)]
        scenario: Check,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        trials: usize,
    },
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("error: {}", e.to_string().replace('\n', " "));
    ExitCode::from(e.exit_code())
}

fn run_config(config: PathBuf, out: Option<PathBuf>) -> ExitCode {
    let cfg = match ScenarioConfig::load(&config) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let Some(path) = out.or_else(|| cfg.output_path.as_ref().map(PathBuf::from)) else {
        return fail(&CliError::Config("output_path: required when --out is absent".into()));
    };
    let output = match run(&cfg) {
        Ok(o) => o,
        Err(e) => return fail(&e),
    };
    if let Err(e) = output.table.write(&path) {
        return fail(&e);
    }
    for w in &output.warnings {
        eprintln!("warning: {w}");
    }
    for line in &output.summary {
        println!("{line}");
    }
    for f in &output.failures {
        eprintln!("error: {f}");
    }
    if output.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run_verify(scenario: Check, seed: u64, trials: usize) -> ExitCode {
    if trials == 0 {
        return fail(&CliError::Config("trials: must be at least 1".into()));
    }
    let mut ok = true;
    for check in verify::expand(&[scenario]) {
        let report = verify::run_check(check, seed, trials);
        for line in report.lines() {
            println!("{line}");
        }
        for f in report.failure_lines() {
            eprintln!("error: {f}");
        }
        ok &= report.passed();
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, out } => run_config(config, out),
        Command::Verify { scenario, seed, trials } => run_verify(scenario, seed, trials),
    }
}
