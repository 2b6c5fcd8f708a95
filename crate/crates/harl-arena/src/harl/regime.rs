//! Training regimes: simultaneous updates and alternating leapfrog.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curriculum::EvalMetrics;
use crate::envs::EnvBatch;
use crate::error::{ArenaError, Result};
use crate::harl::learner::{HappoConfig, TeamLearner};
use crate::harl::rollout::collect_rollouts;
use crate::harl::update::{happo_update, UpdateStats};
use crate::seeding::derive_seed2;

/// Which teams update each cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Regime {
    /// Every team's actors and critic update every cycle.
    Simultaneous,
    /// Exactly one team is unfrozen at a time, rotating every
    /// `interval_updates` updates (its critic freezes with it).
    Leapfrog { interval_updates: usize },
}

impl Regime {
    /// Frozen flags for all teams at a given update index.
    pub fn frozen_flags(&self, update: usize, n_teams: usize) -> Vec<bool> {
        match self {
            Regime::Simultaneous => vec![false; n_teams],
            Regime::Leapfrog { interval_updates } => {
                let unfrozen = (update / interval_updates) % n_teams;
                (0..n_teams).map(|t| t != unfrozen).collect()
            }
        }
    }

    pub fn validate(&self, n_teams: usize) -> Result<()> {
        if let Regime::Leapfrog { interval_updates } = self {
            if *interval_updates == 0 {
                return Err(ArenaError::Config("leapfrog interval must be >= 1".into()));
            }
            if n_teams < 2 {
                return Err(ArenaError::Config("leapfrog needs at least 2 teams".into()));
            }
        }
        Ok(())
    }
}

/// One update's record in the training history.
#[derive(Clone, Debug)]
pub struct UpdateRecord {
    pub update: usize,
    pub frozen: Vec<bool>,
    /// Mean completed-episode return per team over this collection window
    /// (NaN when no episode finished).
    pub mean_return: Vec<f64>,
    pub episodes: usize,
    pub stats: UpdateStats,
}

/// Per-update records plus evaluation snapshots `(after_update, metrics)`.
#[derive(Clone, Debug, Default)]
pub struct TrainHistory {
    pub updates: Vec<UpdateRecord>,
    pub evals: Vec<(usize, EvalMetrics)>,
}

/// Periodic callbacks driven by [`run_regime`].
///
/// `on_update` fires after every update with its record. `eval` runs every
/// `eval_cadence` updates (and once before training at update 0);
/// returning `Ok(None)` records nothing, and the boolean in a `Some` result
/// requests an early stop. `snapshot` runs every `snapshot_cadence` updates
/// and once more at the end when the final update is not on the cadence.
pub struct RegimeHooks<'a> {
    pub eval_cadence: usize,
    pub snapshot_cadence: usize,
    #[allow(clippy::type_complexity)]
    pub on_update: Box<dyn FnMut(&UpdateRecord) -> Result<()> + 'a>,
    #[allow(clippy::type_complexity)]
    pub eval: Box<dyn FnMut(&[TeamLearner], usize) -> Result<Option<(EvalMetrics, bool)>> + 'a>,
    #[allow(clippy::type_complexity)]
    pub snapshot: Box<dyn FnMut(&[TeamLearner], &EnvBatch, usize) -> Result<()> + 'a>,
}

impl<'a> RegimeHooks<'a> {
    /// Hooks that never evaluate or snapshot.
    pub fn none() -> RegimeHooks<'static> {
        RegimeHooks {
            eval_cadence: usize::MAX,
            snapshot_cadence: usize::MAX,
            on_update: Box::new(|_| Ok(())),
            eval: Box::new(|_, _| Ok(None)),
            snapshot: Box::new(|_, _, _| Ok(())),
        }
    }
}

/// Drive `total_updates` collect/update cycles under the given regime,
/// starting from `start_update` (non-zero when resuming). Returns the
/// history of this span.
#[allow(clippy::too_many_arguments)]
pub fn run_regime(
    regime: Regime,
    learners: &mut Vec<TeamLearner>,
    batch: &mut EnvBatch,
    cfg: &HappoConfig,
    horizon: usize,
    total_updates: usize,
    start_update: usize,
    run_seed: u64,
    hooks: &mut RegimeHooks,
) -> Result<TrainHistory> {
    regime.validate(learners.len())?;
    cfg.validate()?;
    let mut history = TrainHistory::default();

    if start_update == 0 {
        if let Some((metrics, _)) = (hooks.eval)(learners, 0)? {
            history.evals.push((0, metrics));
        }
    }

    let mut last_snapshot = start_update;
    for update in start_update..total_updates {
        let frozen = regime.frozen_flags(update, learners.len());
        for (learner, &f) in learners.iter_mut().zip(frozen.iter()) {
            learner.frozen = f;
        }

        let collect_seed = derive_seed2(run_seed, update as u64, 0xC0);
        let buffer = {
            let mut buffer = collect_rollouts(learners, batch, horizon, collect_seed)?;
            buffer.finalize(cfg)?;
            buffer
        };
        let mut update_rng = ChaCha8Rng::seed_from_u64(derive_seed2(run_seed, update as u64, 0xAB));
        let stats = happo_update(learners, &buffer, cfg, &mut update_rng)?;

        let mean_return: Vec<f64> = buffer
            .stats
            .returns
            .iter()
            .map(|rs| {
                if rs.is_empty() {
                    f64::NAN
                } else {
                    rs.iter().sum::<f64>() / rs.len() as f64
                }
            })
            .collect();
        let record = UpdateRecord {
            update,
            frozen,
            mean_return,
            episodes: buffer.stats.episodes,
            stats,
        };
        (hooks.on_update)(&record)?;
        history.updates.push(record);

        let done_count = update + 1;
        let mut stop = false;
        if hooks.eval_cadence != usize::MAX && done_count % hooks.eval_cadence == 0 {
            if let Some((metrics, stop_now)) = (hooks.eval)(learners, done_count)? {
                history.evals.push((done_count, metrics));
                stop = stop_now;
            }
        }
        if hooks.snapshot_cadence != usize::MAX && done_count % hooks.snapshot_cadence == 0 {
            (hooks.snapshot)(learners, batch, done_count)?;
            last_snapshot = done_count;
        }
        if stop {
            if hooks.snapshot_cadence != usize::MAX && last_snapshot != done_count {
                (hooks.snapshot)(learners, batch, done_count)?;
            }
            return Ok(history);
        }
    }

    if hooks.snapshot_cadence != usize::MAX && last_snapshot != total_updates {
        (hooks.snapshot)(learners, batch, total_updates)?;
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leapfrog_rotation_schedule() {
        let regime = Regime::Leapfrog { interval_updates: 5 };
        for update in 0..20 {
            let flags = regime.frozen_flags(update, 2);
            let unfrozen: Vec<usize> = flags
                .iter()
                .enumerate()
                .filter(|(_, f)| !**f)
                .map(|(i, _)| i)
                .collect();
            assert_eq!(unfrozen.len(), 1);
            let expected = if (update / 5) % 2 == 0 { 0 } else { 1 };
            assert_eq!(unfrozen[0], expected, "update {update}");
        }
    }

    #[test]
    fn simultaneous_never_freezes() {
        let regime = Regime::Simultaneous;
        for update in 0..10 {
            assert!(regime.frozen_flags(update, 3).iter().all(|f| !f));
        }
    }

    #[test]
    fn leapfrog_needs_two_teams() {
        assert!(Regime::Leapfrog { interval_updates: 5 }.validate(1).is_err());
        assert!(Regime::Leapfrog { interval_updates: 0 }.validate(2).is_err());
        assert!(Regime::Simultaneous.validate(1).is_ok());
    }
}
