//! Batch harness for vortex-filament equilibrium sweeps.
//!
//! Subcommands:
//! * `run`    — execute a β sweep from a TOML config into an output directory
//! * `resume` — continue an interrupted sweep from its checkpoints
//! * `verify` — run the oracle cross-check suite (exit 1 on any failure)
//! * `table`  — re-emit the analysis tables from stored records
//!
//! Exit codes: 0 success, 1 verification failure, 2 bad config or IO.

mod config;
mod sweep;
mod table;
mod verify;

use clap::{Args, Parser, Subcommand};
use config::{Overrides, SweepConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "vortexmc", version, about = "Vortex-filament equilibrium sweep harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a β sweep described by a TOML config file.
    Run(RunArgs),
    /// Continue a previously interrupted sweep (same config required).
    Resume(RunArgs),
    /// Run the oracle verification suite.
    Verify,
    /// Re-emit results.tsv and curves_long.tsv from stored records.
    Table {
        /// Output directory of a previous run.
        #[arg(long)]
        output_dir: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Sweep configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override run.output_dir.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Override run.master_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override run.workers (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Override the burn-in sweep cap (measurement then starts regardless,
    /// with the run flagged unequilibrated if the mean had not settled).
    #[arg(long)]
    max_sweeps: Option<u64>,
    /// Stop every chain once it reaches this sweep count, checkpointing for
    /// later `resume`. Intended for scripted interruption tests.
    #[arg(long)]
    halt_after: Option<u64>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            output_dir: self.output_dir.clone(),
            seed: self.seed,
            workers: self.workers,
            max_sweeps: self.max_sweeps,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => run_or_resume(args, false),
        Command::Resume(args) => run_or_resume(args, true),
        Command::Verify => run_verify(),
        Command::Table { output_dir } => run_table(output_dir),
    }
}

fn run_or_resume(args: RunArgs, resume: bool) -> ExitCode {
    let cfg = match SweepConfig::load(&args.config, &args.overrides()) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    println!(
        "{} sweep: {} beta values, output {}, seed {}",
        if resume { "resuming" } else { "running" },
        cfg.betas.len(),
        cfg.run.output_dir.display(),
        cfg.run.master_seed
    );
    match sweep::run_sweep(&cfg, resume, args.halt_after) {
        Ok(outcome) => {
            if outcome.halted > 0 {
                println!(
                    "halted {} chain(s) at the requested sweep mark; continue with `vortexmc resume`",
                    outcome.halted
                );
                return ExitCode::SUCCESS;
            }
            for r in &outcome.records {
                println!(
                    "beta {:<10.6} R2 {:>12.6e} (pred {:>12.6e})  eq={} sweeps={} [{:.1}s]",
                    r.beta,
                    r.observables.r2_mc,
                    r.r2_3d_pred,
                    r.equilibrated as u8,
                    r.sweeps_run,
                    r.wall_time_s
                );
            }
            match table::emit_tables(&outcome.records, &cfg.run.output_dir) {
                Ok((results, curves)) => {
                    println!("wrote {} and {}", results.display(), curves.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error writing tables: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run_verify() -> ExitCode {
    let results = verify::run_all();
    let mut all_pass = true;
    for r in &results {
        println!("check {}: {} ({})", r.name, if r.pass { "PASS" } else { "FAIL" }, r.detail);
        all_pass &= r.pass;
    }
    if all_pass {
        println!("verify: all {} checks passed", results.len());
        ExitCode::SUCCESS
    } else {
        println!("verify: FAILURES present");
        ExitCode::from(1)
    }
}

fn run_table(output_dir: PathBuf) -> ExitCode {
    match sweep::load_records(&output_dir).and_then(|records| {
        if records.is_empty() {
            return Err(vortexmc::Error::Format("no records found".into()));
        }
        table::emit_tables(&records, &output_dir)
    }) {
        Ok((results, curves)) => {
            println!("wrote {} and {}", results.display(), curves.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
