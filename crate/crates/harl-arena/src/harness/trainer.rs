//! End-to-end run orchestration: stages, evaluation, gating, snapshots,
//! and resume.

use std::cell::RefCell;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::curriculum::{advance, transfer_checkpoint, AdvanceDecision, EvalMetrics};
use crate::envs::{EnvBatch, TaskTag};
use crate::error::{ArenaError, Result};
use crate::harl::{run_regime, PolicyNet, RegimeHooks, TeamLearner};
use crate::harness::checkpoint::{save_checkpoint, Checkpoint};
use crate::harness::config::RunConfig;
use crate::harness::metrics::MetricsHistory;
use crate::harness::svg::line_plot;
use crate::harness::tournament::{run_episode, run_tournament, WinRateReport};
use crate::seeding::{derive_seed, derive_seed2};

/// How one stage ended.
#[derive(Clone, Debug)]
pub struct StageReport {
    pub stage: usize,
    pub task: TaskTag,
    pub updates_used: usize,
    pub gate_met: bool,
}

/// End-of-run summary.
#[derive(Clone, Debug, Default)]
pub struct RunSummary {
    pub stages: Vec<StageReport>,
    pub final_tournament: Option<WinRateReport>,
}

/// Mutable training state; one instance drives a whole run (fresh or
/// resumed).
pub struct Trainer {
    pub config: RunConfig,
    pub learners: Vec<TeamLearner>,
    pub initial_policies: Vec<Vec<PolicyNet>>,
    pub stage: usize,
    pub update_in_stage: usize,
    pub global_update: usize,
    pub history: MetricsHistory,
    pub stage_evals: Vec<EvalMetrics>,
    pub run_complete: bool,
    /// Restored env states when resuming mid-stage.
    pending_env_states: Vec<crate::envs::EnvState>,
}

struct Shared {
    history: MetricsHistory,
    stage_evals: Vec<EvalMetrics>,
    global_update: usize,
}

impl Trainer {
    pub fn new(config: RunConfig) -> Result<Trainer> {
        config.validate()?;
        let learners = config.build_learners()?;
        let initial_policies = learners.iter().map(|l| l.policies.clone()).collect();
        Ok(Trainer {
            config,
            learners,
            initial_policies,
            stage: 0,
            update_in_stage: 0,
            global_update: 0,
            history: MetricsHistory::default(),
            stage_evals: Vec::new(),
            run_complete: false,
            pending_env_states: Vec::new(),
        })
    }

    pub fn from_checkpoint(ckpt: Checkpoint) -> Result<Trainer> {
        let config = ckpt.config()?;
        Ok(Trainer {
            config,
            learners: ckpt.learners,
            initial_policies: ckpt.initial_policies,
            stage: ckpt.stage,
            update_in_stage: ckpt.update_in_stage,
            global_update: ckpt.global_update,
            history: ckpt.history,
            stage_evals: ckpt.stage_evals,
            run_complete: ckpt.run_complete,
            pending_env_states: ckpt.env_states,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        self.checkpoint_with_states(self.pending_env_states.clone())
    }

    fn checkpoint_with_states(&self, env_states: Vec<crate::envs::EnvState>) -> Checkpoint {
        Checkpoint {
            config_toml: self.config.to_toml(),
            config_digest: self.config.digest(),
            stage: self.stage,
            update_in_stage: self.update_in_stage,
            global_update: self.global_update,
            learners: self.learners.clone(),
            initial_policies: self.initial_policies.clone(),
            env_states,
            history: self.history.clone(),
            stage_evals: self.stage_evals.clone(),
            run_complete: self.run_complete,
        }
    }

    fn out_dir(&self) -> PathBuf {
        PathBuf::from(&self.config.out_dir)
    }

    /// Deterministic evaluation of the current policies on a stage:
    /// mean-return/episode statistics on the stage task, plus a win-rate
    /// tournament against the initial snapshot on adversarial tasks.
    pub fn evaluate_stage(&self, stage: usize, learners: &[TeamLearner]) -> Result<EvalMetrics> {
        evaluate_stage(&self.config, &self.initial_policies, stage, learners)
    }
}

/// See [`Trainer::evaluate_stage`].
pub fn evaluate_stage(
    config: &RunConfig,
    initial_policies: &[Vec<PolicyNet>],
    stage: usize,
    learners: &[TeamLearner],
) -> Result<EvalMetrics> {

        let env = config.stage_env(stage)?;
        let obs = config.obs_context(stage)?;
        let task = env.task;
        let n_eval = config.eval_instances;
        let eval_seed = derive_seed(config.seed, 0xEA11);

        let policies: Vec<&PolicyNet> = learners
            .iter()
            .flat_map(|l| l.policies.iter())
            .collect();

        let episodes: Vec<_> = (0..n_eval)
            .into_par_iter()
            .map(|i| run_episode(&env, &obs, &policies, derive_seed2(eval_seed, i as u64, 1)))
            .collect::<Result<_>>()?;

        let mut metrics = EvalMetrics::default();
        let n_teams = env.n_teams();
        let mut mean_return_all = 0.0;
        for ti in 0..n_teams {
            let mean: f64 =
                episodes.iter().map(|e| e.team_returns[ti]).sum::<f64>() / episodes.len() as f64;
            metrics.push(format!("mean_episode_return_{ti}"), mean);
            mean_return_all += mean / n_teams as f64;
        }
        metrics.push("mean_episode_return", mean_return_all);
        let mean_len: f64 = episodes
            .iter()
            .map(|e| e.terminal.steps as f64)
            .sum::<f64>()
            / episodes.len() as f64;
        metrics.push("mean_episode_len", mean_len);
        match task {
            TaskTag::BlockPush => {
                let (out, slots) = episodes.iter().fold((0usize, 0usize), |(o, s), e| {
                    (
                        o + e.terminal.block_out.iter().filter(|&&b| b).count(),
                        s + e.terminal.block_out.len(),
                    )
                });
                metrics.push("block_out_rate", out as f64 / slots.max(1) as f64);
            }
            TaskTag::WalkToPoint => {
                let (reached, slots) = episodes.iter().fold((0usize, 0usize), |(r, s), e| {
                    (
                        r + e.terminal.reached.iter().filter(|&&b| b).count(),
                        s + e.terminal.reached.len(),
                    )
                });
                metrics.push("reach_rate", reached as f64 / slots.max(1) as f64);
            }
            TaskTag::SumoAdversarial | TaskTag::LaserTag => {
                let current: Vec<Vec<PolicyNet>> =
                    learners.iter().map(|l| l.policies.clone()).collect();
                let report = run_tournament(
                    &current,
                    initial_policies,
                    &env,
                    &obs,
                    n_eval,
                    derive_seed(config.seed, 0x70AA),
                    "initial-snapshot",
                )?;
                metrics.push("win_rate_vs_initial", report.win_rate);
                metrics.push(
                    "tie_rate_vs_initial",
                    report.side_a.ties as f64 / report.n_instances as f64,
                );
            }
        }
        Ok(metrics)
}

impl Trainer {
    fn run_stage(&mut self) -> Result<StageReport> {
        let stage = self.stage;
        let config = self.config.clone();
        let env = config.stage_env(stage)?;
        let obs = config.obs_context(stage)?;
        let task = env.task;
        let budget = config.stage_updates(stage);
        let stage_seed = derive_seed2(config.seed, 0x57A6E, stage as u64);

        let mut batch = if self.pending_env_states.is_empty() {
            EnvBatch::new(
                env.clone(),
                obs.clone(),
                config.n_envs,
                derive_seed2(config.seed, 0xE0, stage as u64),
            )?
        } else {
            let states = std::mem::take(&mut self.pending_env_states);
            EnvBatch::from_states(env.clone(), obs.clone(), states)?
        };

        let shared = RefCell::new(Shared {
            history: std::mem::take(&mut self.history),
            stage_evals: std::mem::take(&mut self.stage_evals),
            global_update: self.global_update,
        });
        let start_update = self.update_in_stage;
        let out_dir = self.out_dir();
        let plan = config.curriculum.clone();

        // Closures capture only clones and `shared`, so `self.learners`
        // can be borrowed mutably by the regime loop.
        let initial_policies = self.initial_policies.clone();
        let mut consecutive_stops = 0usize;

        let mut hooks = RegimeHooks {
            eval_cadence: config.eval_cadence,
            snapshot_cadence: config.snapshot_cadence,
            on_update: Box::new(|record| {
                let mut sh = shared.borrow_mut();
                let global = sh.global_update;
                sh.history.push_update(stage, global, record);
                sh.global_update += 1;
                Ok(())
            }),
            eval: Box::new(|learners, _in_stage_update| {
                let metrics = evaluate_stage(&config, &initial_policies, stage, learners)?;
                let mut sh = shared.borrow_mut();
                let global = sh.global_update;
                sh.history.push_eval(stage, global, metrics.clone());
                sh.stage_evals.push(metrics.clone());
                // Stop when the gate opens or a win-rate early stop holds.
                let decision = advance(&sh.stage_evals, &plan, stage)?;
                let mut stop = decision != AdvanceDecision::Stay;
                if let Some(threshold) = config.stop_win_rate {
                    if task.is_adversarial() {
                        if metrics
                            .get("win_rate_vs_initial")
                            .map(|v| v >= threshold)
                            .unwrap_or(false)
                        {
                            consecutive_stops += 1;
                        } else {
                            consecutive_stops = 0;
                        }
                        if consecutive_stops >= 2 {
                            stop = true;
                        }
                    }
                }
                Ok(Some((metrics, stop)))
            }),
            snapshot: Box::new(|learners, batch, in_stage_update| {
                let sh = shared.borrow();
                let ckpt = Checkpoint {
                    config_toml: config.to_toml(),
                    config_digest: config.digest(),
                    stage,
                    update_in_stage: in_stage_update,
                    global_update: sh.global_update,
                    learners: learners.to_vec(),
                    initial_policies: initial_policies.clone(),
                    env_states: batch.states.clone(),
                    history: sh.history.clone(),
                    stage_evals: sh.stage_evals.clone(),
                    run_complete: false,
                };
                let path = out_dir.join(format!("snapshot-u{}.ckpt", sh.global_update));
                save_checkpoint(&path, &ckpt)
            }),
        };

        let span = run_regime(
            config.regime,
            &mut self.learners,
            &mut batch,
            &config.happo,
            config.horizon,
            budget,
            start_update,
            stage_seed,
            &mut hooks,
        )?;
        drop(hooks);

        let shared = shared.into_inner();
        self.history = shared.history;
        self.stage_evals = shared.stage_evals;
        self.global_update = shared.global_update;
        self.update_in_stage = start_update + span.updates.len();
        self.pending_env_states = batch.states.clone();

        let gate_met = advance(&self.stage_evals, &plan, stage)? != AdvanceDecision::Stay;
        Ok(StageReport {
            stage,
            task,
            updates_used: self.update_in_stage,
            gate_met,
        })
    }

    /// Drive the run to completion: every remaining stage, the final
    /// tournament, metrics files, and the final checkpoint.
    pub fn run(&mut self) -> Result<RunSummary> {
        let out = self.out_dir();
        std::fs::create_dir_all(&out)?;
        if self.global_update == 0 && self.stage == 0 && self.update_in_stage == 0 {
            save_checkpoint(&out.join("initial.ckpt"), &self.checkpoint())?;
        }

        let mut summary = RunSummary::default();
        let n_stages = self.config.curriculum.stages.len();
        while !self.run_complete {
            let report = self.run_stage()?;
            let last_stage = self.stage + 1 == n_stages;
            if !report.gate_met {
                eprintln!(
                    "note: stage {} ({}) ended at its update budget without meeting its gate",
                    report.stage,
                    report.task.as_str()
                );
            }
            summary.stages.push(report);
            if last_stage {
                self.run_complete = true;
            } else {
                let ckpt = self.checkpoint();
                let moved =
                    transfer_checkpoint(&ckpt, self.stage, self.stage + 1, &self.config.curriculum)?;
                *self = Trainer::from_checkpoint(moved)?;
            }
        }

        // Final tournament on the last adversarial stage.
        let final_stage = n_stages - 1;
        let final_task = self.config.curriculum.stages[final_stage].task;
        if final_task.is_adversarial() {
            let env = self.config.stage_env(final_stage)?;
            let obs = self.config.obs_context(final_stage)?;
            let current: Vec<Vec<PolicyNet>> =
                self.learners.iter().map(|l| l.policies.clone()).collect();
            let report = run_tournament(
                &current,
                &self.initial_policies,
                &env,
                &obs,
                self.config.final_eval_instances,
                derive_seed(self.config.seed, 0xF1AA),
                "initial-snapshot",
            )?;
            let mut metrics = EvalMetrics::default();
            metrics.push("final_win_rate_vs_initial", report.win_rate);
            let global = self.global_update;
            self.history.push_eval(final_stage, global, metrics);
            summary.final_tournament = Some(report);
        }

        save_checkpoint(&out.join("final.ckpt"), &self.checkpoint())?;
        self.export_outputs(&out)?;
        Ok(summary)
    }

    /// Write metrics CSVs and the SVG renderings.
    pub fn export_outputs(&self, dir: &Path) -> Result<()> {
        self.history.export(dir)?;
        let win_series: Vec<(f64, f64)> = self
            .history
            .win_rate_series()
            .into_iter()
            .map(|(u, v)| (u as f64, v))
            .collect();
        let svg = line_plot(
            "win rate vs initial snapshot",
            "update",
            "win rate",
            &[("trained", &win_series)],
        );
        std::fs::write(dir.join("win_rate.svg"), svg)?;

        let n_teams = self
            .history
            .updates
            .first()
            .map(|r| r.teams.len())
            .unwrap_or(0);
        let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
        for ti in 0..n_teams {
            let pts: Vec<(f64, f64)> = self
                .history
                .updates
                .iter()
                .filter(|r| r.teams[ti].mean_return.is_finite())
                .map(|r| (r.update as f64, r.teams[ti].mean_return))
                .collect();
            series.push((format!("team {ti}"), pts));
        }
        let series_refs: Vec<(&str, &[(f64, f64)])> = series
            .iter()
            .map(|(n, p)| (n.as_str(), p.as_slice()))
            .collect();
        let svg = line_plot("mean episode return", "update", "return", &series_refs);
        std::fs::write(dir.join("return.svg"), svg)?;
        Ok(())
    }
}

/// Regenerate the SVG plots from previously exported CSV files.
pub fn export_plots_from_csv(metrics_dir: &Path, out_dir: &Path) -> Result<()> {
    use crate::harness::metrics::parse_csv;
    std::fs::create_dir_all(out_dir)?;

    let eval_text = std::fs::read_to_string(metrics_dir.join("eval.csv"))?;
    let (cols, rows) = parse_csv(&eval_text)?;
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for (ci, col) in cols.iter().enumerate().skip(2) {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r[ci].is_finite())
            .map(|r| (r[0], r[ci]))
            .collect();
        if !pts.is_empty() {
            series.push((col.clone(), pts));
        }
    }
    let series_refs: Vec<(&str, &[(f64, f64)])> = series
        .iter()
        .map(|(n, p)| (n.as_str(), p.as_slice()))
        .collect();
    let svg = line_plot("evaluation metrics", "update", "value", &series_refs);
    std::fs::write(out_dir.join("eval.svg"), svg)?;

    let metrics_text = std::fs::read_to_string(metrics_dir.join("metrics.csv"))?;
    let (cols, rows) = parse_csv(&metrics_text)?;
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for (ci, col) in cols.iter().enumerate() {
        if col.starts_with("mean_return_") {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r[ci].is_finite())
                .map(|r| (r[0], r[ci]))
                .collect();
            series.push((col.clone(), pts));
        }
    }
    let series_refs: Vec<(&str, &[(f64, f64)])> = series
        .iter()
        .map(|(n, p)| (n.as_str(), p.as_slice()))
        .collect();
    let svg = line_plot("mean episode return", "update", "return", &series_refs);
    std::fs::write(out_dir.join("return.svg"), svg)?;
    Ok(())
}

/// Cap the rayon worker pool from `HARL_ARENA_THREADS` (once, before any
/// parallel work). Silently keeps the default pool when unset or already
/// initialized.
pub fn init_worker_pool() {
    if let Ok(value) = std::env::var("HARL_ARENA_THREADS") {
        if let Ok(n) = value.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

/// Convenience used by the `eval` subcommand: tournament between the
/// current policies of two checkpoints on checkpoint A's final-stage task.
pub fn tournament_between(
    a: &Checkpoint,
    b: &Checkpoint,
    n_instances: usize,
    seed: u64,
) -> Result<WinRateReport> {
    let config = a.config()?;
    let stage = config
        .curriculum
        .stages
        .iter()
        .rposition(|s| s.task.is_adversarial())
        .ok_or_else(|| ArenaError::Config("config has no adversarial stage to evaluate".into()))?;
    let env = config.stage_env(stage)?;
    let obs = config.obs_context(stage)?;
    let side_a: Vec<Vec<PolicyNet>> = a.learners.iter().map(|l| l.policies.clone()).collect();
    let side_b: Vec<Vec<PolicyNet>> = b.learners.iter().map(|l| l.policies.clone()).collect();
    run_tournament(&side_a, &side_b, &env, &obs, n_instances, seed, "checkpoint-b")
}
