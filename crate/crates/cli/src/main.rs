//! `qvul`: benchmark generation, transpilation, vulnerability analysis and
//! success-rate estimation from the command line.

mod commands;
mod inputs;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "qvul",
    version,
    about = "Quantum circuit vulnerability analysis and success-rate estimation"
)]
struct Cli {
    /// Worker threads for suite and oracle work (defaults to all cores).
    #[arg(long, global = true, env = "QVUL_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a benchmark circuit as OpenQASM.
    Bench(commands::bench::BenchArgs),
    /// Map a logical circuit onto a device.
    Transpile(commands::bench::TranspileArgs),
    /// Schedule, book and mark un-ACE cells; export the booking table.
    Analyze(commands::analyze::AnalyzeArgs),
    /// ESP, QVF, UQVF and 1-CQV for one or more compiled circuits.
    Estimate(commands::estimate::EstimateArgs),
    /// Best-weight sweeps and depth-binned weight models.
    #[command(subcommand)]
    Weight(commands::weight::WeightCommand),
    /// Monte Carlo fault injection under calibrated noise.
    Oracle(commands::oracle::OracleArgs),
    /// Compare ESP and 1-CQV against the oracle over a suite.
    Compare(commands::oracle::CompareArgs),
}

/// 1 when the inputs were fine but an estimate could not be produced,
/// 2 for anything wrong with the inputs themselves.
fn exit_code(err: &anyhow::Error) -> u8 {
    use qvul_core::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Routing(_) | E::Oracle(_) | E::MissingCalibration(_) => 1,
                _ => 2,
            };
        }
    }
    2
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads.filter(|&n| n > 0) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    let result = match cli.command {
        Command::Bench(a) => commands::bench::run_bench(a),
        Command::Transpile(a) => commands::bench::run_transpile(a),
        Command::Analyze(a) => commands::analyze::run(a),
        Command::Estimate(a) => commands::estimate::run(a),
        Command::Weight(c) => commands::weight::run(c),
        Command::Oracle(a) => commands::oracle::run_oracle(a),
        Command::Compare(a) => commands::oracle::run_compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
