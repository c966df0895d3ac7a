use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ldp_core::error::LdpError;
use ldp_core::harness::run::{error_json, run_experiment, Command, RunOptions};
use serde_json::json;

/// Large deviation experiments for SDEs with discontinuous coefficients.
#[derive(Debug, Parser)]
#[command(name = "ldp", version)]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Tabulate raw and modified coefficients, S, Sigma and B_bar.
    Coeffs,
    /// Action of a path given as a `t,f` CSV.
    Action {
        #[arg(long)]
        path: PathBuf,
    },
    /// Minimize the action over the configured event.
    Minimize,
    /// Sample terminal values and one path per epsilon.
    Simulate,
    /// Estimate the event along the epsilon ladder and compare with the minimal action.
    Verify,
}

fn fail(kind: &str, message: String) -> ExitCode {
    println!(
        "{}",
        json!({ "error": { "kind": kind, "message": message } })
    );
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            return fail(
                "UsageError",
                e.kind().to_string() + ": " + e.to_string().trim(),
            )
        }
    };
    let Some(config) = cli.config else {
        return fail("UsageError", "--config <file> is required".into());
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            return fail("UsageError", format!("cannot start {n} threads: {e}"));
        }
    }
    let command = match cli.command {
        Cmd::Coeffs => Command::Coeffs,
        Cmd::Action { path } => Command::Action { path },
        Cmd::Minimize => Command::Minimize,
        Cmd::Simulate => Command::Simulate,
        Cmd::Verify => Command::Verify,
    };
    let opts = RunOptions {
        seed: cli.seed,
        out: cli.out,
    };
    match run_experiment(&command, &config, &opts) {
        Ok(out) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&out).expect("summary serializes")
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            println!("{}", error_json(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 for bad input, 1 for everything else.
fn exit_code(e: &LdpError) -> u8 {
    match e {
        LdpError::Config { .. }
        | LdpError::Model(_)
        | LdpError::InvalidEvent(_)
        | LdpError::InvalidArgument(_) => 2,
        _ => 1,
    }
}
