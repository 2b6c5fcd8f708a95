//! Command-line entry point: train, resume, eval, replay, export-plot.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use harl_arena::envs::TrajectoryLog;
use harl_arena::harness::{
    export_plots_from_csv, init_worker_pool, load_checkpoint, tournament_between, RunConfig,
    RunSummary, Trainer,
};

#[derive(Parser)]
#[command(
    name = "harl-arena",
    version,
    about = "Adversarial multi-team training over a 2D disc arena"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the configured curriculum end to end with periodic snapshots.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the per-stage update budget.
        #[arg(long)]
        updates: Option<usize>,
    },
    /// Continue a run from a checkpoint.
    Resume {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Override the per-stage update budget.
        #[arg(long)]
        updates: Option<usize>,
    },
    /// Win-rate tournament between two checkpoints' current policies.
    Eval {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Number of evaluation instances.
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the report as a small CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a recorded trajectory log to CSV.
    Replay {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Regenerate SVG plots from exported metrics CSVs.
    ExportPlot {
        /// Directory containing metrics.csv and eval.csv.
        #[arg(long)]
        metrics: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn print_summary(summary: &RunSummary, out_dir: &str) {
    for stage in &summary.stages {
        println!(
            "stage {} ({}): {} updates, gate {}",
            stage.stage,
            stage.task.as_str(),
            stage.updates_used,
            if stage.gate_met { "met" } else { "not met" }
        );
    }
    if let Some(report) = &summary.final_tournament {
        println!("final tournament: {}", report.summary());
    }
    println!("outputs written to {out_dir}");
}

fn run(cli: Cli) -> harl_arena::Result<()> {
    init_worker_pool();
    match cli.command {
        Command::Train {
            config,
            seed,
            out,
            updates,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(out) = out {
                cfg.out_dir = out.to_string_lossy().into_owned();
            }
            if let Some(updates) = updates {
                cfg.total_updates = updates;
            }
            let mut trainer = Trainer::new(cfg)?;
            let summary = trainer.run()?;
            print_summary(&summary, &trainer.config.out_dir);
            Ok(())
        }
        Command::Resume {
            checkpoint,
            updates,
        } => {
            let ckpt = load_checkpoint(&checkpoint)?;
            let mut trainer = Trainer::from_checkpoint(ckpt)?;
            if let Some(updates) = updates {
                trainer.config.total_updates = updates;
            }
            let summary = trainer.run()?;
            print_summary(&summary, &trainer.config.out_dir);
            Ok(())
        }
        Command::Eval { a, b, n, seed, out } => {
            let ckpt_a = load_checkpoint(&a)?;
            let ckpt_b = load_checkpoint(&b)?;
            let report = tournament_between(&ckpt_a, &ckpt_b, n, seed)?;
            println!("{}", report.summary());
            if let Some(out) = out {
                let csv = format!(
                    "wins,losses,ties,n_instances,win_rate\n{},{},{},{},{}\n",
                    report.side_a.wins,
                    report.side_a.losses,
                    report.side_a.ties,
                    report.n_instances,
                    report.win_rate
                );
                std::fs::write(out, csv)?;
            }
            Ok(())
        }
        Command::Replay { log, out } => {
            let log = TrajectoryLog::load(&log)?;
            std::fs::write(&out, log.to_csv())?;
            println!(
                "replayed {} steps of task {} to {}",
                log.steps.len(),
                log.task.as_str(),
                out.display()
            );
            Ok(())
        }
        Command::ExportPlot { metrics, out } => {
            let out = out.unwrap_or_else(|| metrics.clone());
            export_plots_from_csv(&metrics, &out)?;
            println!("plots written to {}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
