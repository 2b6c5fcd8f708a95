//! Operational shell: run configuration, checkpoints, tournaments, metrics
//! export, and the training orchestrator behind the CLI.

mod checkpoint;
mod config;
mod metrics;
mod svg;
mod tournament;
mod trainer;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use config::{NetConfig, RunConfig};
pub use metrics::{parse_csv, EvalRow, MetricsHistory, TeamRow, UpdateRow};
pub use svg::line_plot;
pub use tournament::{run_episode, run_tournament, EpisodeReport, SideCounts, WinRateReport};
pub use trainer::{
    evaluate_stage, export_plots_from_csv, init_worker_pool, tournament_between, RunSummary,
    StageReport, Trainer,
};
