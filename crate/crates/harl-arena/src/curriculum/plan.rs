//! Stage plans and automatic stage-advance gating.

use serde::{Deserialize, Serialize};

use crate::envs::{RewardConfig, TaskTag};
use crate::error::{ArenaError, Result};

/// Gate controlling when training moves past a stage: a named evaluation
/// metric must reach `threshold` for `patience` consecutive evaluations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdvanceGate {
    pub metric: String,
    pub threshold: f64,
    #[serde(default = "default_patience")]
    pub patience: usize,
}

fn default_patience() -> usize {
    1
}

/// One curriculum stage: a task, its reward scalars, the advance gate, and
/// an update budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    pub task: TaskTag,
    /// Stage-specific reward scalars; the run-level reward config applies
    /// when absent.
    #[serde(default)]
    pub reward: Option<RewardConfig>,
    pub gate: AdvanceGate,
    /// Cap on updates spent in this stage; the run-level total applies when
    /// absent.
    #[serde(default)]
    pub max_updates: Option<usize>,
}

impl StageSpec {
    /// The reward config this stage runs with, given the run-level base.
    pub fn effective_reward(&self, base: &RewardConfig) -> RewardConfig {
        self.reward.clone().unwrap_or_else(|| base.clone())
    }
}

/// An ordered stage list plus the width of the reserved always-zero
/// observation tail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurriculumPlan {
    pub stages: Vec<StageSpec>,
    #[serde(default = "default_zero_buffer_width")]
    pub zero_buffer_width: usize,
}

fn default_zero_buffer_width() -> usize {
    50
}

impl CurriculumPlan {
    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(ArenaError::Config("curriculum plan needs at least one stage".into()));
        }
        for (i, stage) in self.stages.iter().enumerate() {
            if let Some(reward) = &stage.reward {
                reward.validate()?;
            }
            if !stage.gate.threshold.is_finite() {
                return Err(ArenaError::Config(format!("stage {i} gate threshold must be finite")));
            }
            if stage.gate.patience == 0 {
                return Err(ArenaError::Config(format!("stage {i} gate patience must be >= 1")));
            }
        }
        Ok(())
    }

    /// Single-stage plan with no buffer, handy for tests and tournaments.
    pub fn single(task: TaskTag, reward: RewardConfig) -> CurriculumPlan {
        CurriculumPlan {
            stages: vec![StageSpec {
                task,
                reward: Some(reward),
                gate: AdvanceGate {
                    metric: "mean_episode_return".into(),
                    threshold: f64::INFINITY,
                    patience: 1,
                },
                max_updates: None,
            }],
            zero_buffer_width: 0,
        }
    }
}

/// One evaluation's named metric values, in recording order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalMetrics {
    pub values: Vec<(String, f64)>,
}

impl EvalMetrics {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }

    pub fn push(&mut self, name: impl Into<String>, value: f64) {
        self.values.push((name.into(), value));
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdvanceDecision {
    Stay,
    Advance,
    Done,
}

/// Decide whether to stay in, advance past, or finish after the current
/// stage given the evaluation history recorded while training it.
pub fn advance(
    history: &[EvalMetrics],
    plan: &CurriculumPlan,
    current_stage: usize,
) -> Result<AdvanceDecision> {
    let stage = plan
        .stages
        .get(current_stage)
        .ok_or_else(|| ArenaError::Config(format!("stage index {current_stage} out of range")))?;
    let gate = &stage.gate;
    if !history.is_empty() && !history.iter().any(|m| m.get(&gate.metric).is_some()) {
        return Err(ArenaError::Config(format!(
            "gating metric '{}' missing from evaluation history",
            gate.metric
        )));
    }
    if history.len() < gate.patience {
        return Ok(AdvanceDecision::Stay);
    }
    let tail = &history[history.len() - gate.patience..];
    let met = tail
        .iter()
        .all(|m| m.get(&gate.metric).map(|v| v >= gate.threshold).unwrap_or(false));
    if !met {
        return Ok(AdvanceDecision::Stay);
    }
    if current_stage + 1 == plan.stages.len() {
        Ok(AdvanceDecision::Done)
    } else {
        Ok(AdvanceDecision::Advance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan_two_stages() -> CurriculumPlan {
        CurriculumPlan {
            stages: vec![
                StageSpec {
                    task: TaskTag::WalkToPoint,
                    reward: None,
                    gate: AdvanceGate {
                        metric: "mean_episode_return".into(),
                        threshold: 5.0,
                        patience: 3,
                    },
                    max_updates: None,
                },
                StageSpec {
                    task: TaskTag::BlockPush,
                    reward: None,
                    gate: AdvanceGate {
                        metric: "block_out_rate".into(),
                        threshold: 0.7,
                        patience: 1,
                    },
                    max_updates: None,
                },
            ],
            zero_buffer_width: 50,
        }
    }

    fn record(name: &str, v: f64) -> EvalMetrics {
        let mut m = EvalMetrics::default();
        m.push(name, v);
        m
    }

    #[test]
    fn one_hit_with_patience_three_stays() {
        let plan = plan_two_stages();
        let history = vec![
            record("mean_episode_return", 2.0),
            record("mean_episode_return", 6.0),
        ];
        assert_eq!(advance(&history, &plan, 0).unwrap(), AdvanceDecision::Stay);
    }

    #[test]
    fn three_consecutive_hits_advance() {
        let plan = plan_two_stages();
        let history = vec![
            record("mean_episode_return", 1.0),
            record("mean_episode_return", 5.5),
            record("mean_episode_return", 6.0),
            record("mean_episode_return", 5.0),
        ];
        assert_eq!(advance(&history, &plan, 0).unwrap(), AdvanceDecision::Advance);
    }

    #[test]
    fn final_stage_reports_done() {
        let plan = plan_two_stages();
        let history = vec![record("block_out_rate", 0.9)];
        assert_eq!(advance(&history, &plan, 1).unwrap(), AdvanceDecision::Done);
    }

    #[test]
    fn unknown_metric_is_a_config_error() {
        let plan = plan_two_stages();
        let history = vec![record("something_else", 1.0)];
        assert!(advance(&history, &plan, 0).is_err());
    }

    #[test]
    fn non_consecutive_hits_stay() {
        let plan = plan_two_stages();
        let history = vec![
            record("mean_episode_return", 6.0),
            record("mean_episode_return", 1.0),
            record("mean_episode_return", 6.0),
        ];
        assert_eq!(advance(&history, &plan, 0).unwrap(), AdvanceDecision::Stay);
    }
}
