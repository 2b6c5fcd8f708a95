//! On-policy rollout storage.
//!
//! Arrays are time-major: sample `s = t * n_envs + env`. Every per-team and
//! per-agent field shares the leading `horizon * n_envs` extent.

use crate::error::{ArenaError, Result};
use crate::harl::gae::compute_gae;
use crate::harl::learner::HappoConfig;

/// One agent's trajectory slices.
#[derive(Clone, Debug, Default)]
pub struct AgentRollout {
    pub obs_dim: usize,
    pub act_dim: usize,
    /// `[samples * obs_dim]`
    pub obs: Vec<f64>,
    /// `[samples * act_dim]`
    pub actions: Vec<f64>,
    /// Behavior policy log-probabilities at collection time.
    pub log_probs: Vec<f64>,
}

impl AgentRollout {
    pub fn obs_at(&self, s: usize) -> &[f64] {
        &self.obs[s * self.obs_dim..(s + 1) * self.obs_dim]
    }

    pub fn action_at(&self, s: usize) -> &[f64] {
        &self.actions[s * self.act_dim..(s + 1) * self.act_dim]
    }
}

/// One team's trajectories plus its reward/value stream.
#[derive(Clone, Debug, Default)]
pub struct TeamRollout {
    pub agents: Vec<AgentRollout>,
    pub critic_dim: usize,
    /// Concatenated team observation per sample, `[samples * critic_dim]`.
    pub team_obs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub dones: Vec<bool>,
    /// Value bootstrap per environment at the rollout horizon.
    pub bootstrap: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl TeamRollout {
    pub fn team_obs_at(&self, s: usize) -> &[f64] {
        &self.team_obs[s * self.critic_dim..(s + 1) * self.critic_dim]
    }
}

/// Per-episode accounting gathered during collection, used for training
/// metrics and stage gates.
#[derive(Clone, Debug, Default)]
pub struct EpisodeStats {
    /// Completed-episode returns per team.
    pub returns: Vec<Vec<f64>>,
    pub episodes: usize,
    /// Block-push: blocks pushed out / (agents x episodes).
    pub blocks_out: usize,
    pub block_slots: usize,
    /// Walk-to-point: goals reached / (agents x episodes).
    pub reached: usize,
    pub reach_slots: usize,
}

/// Trajectories for every team over one collection window.
#[derive(Clone, Debug)]
pub struct RolloutBuffer {
    pub horizon: usize,
    pub n_envs: usize,
    pub teams: Vec<TeamRollout>,
    pub stats: EpisodeStats,
    finalized: bool,
}

impl RolloutBuffer {
    pub fn new(horizon: usize, n_envs: usize, teams: Vec<TeamRollout>) -> RolloutBuffer {
        RolloutBuffer {
            horizon,
            n_envs,
            teams,
            stats: EpisodeStats::default(),
            finalized: false,
        }
    }

    pub fn samples(&self) -> usize {
        self.horizon * self.n_envs
    }

    pub fn is_finalized(&self) -> bool {
        self.finalized
    }

    /// Verify leading extents and finiteness.
    pub fn check_shapes(&self) -> Result<()> {
        let s = self.samples();
        for (ti, team) in self.teams.iter().enumerate() {
            if team.rewards.len() != s || team.values.len() != s || team.dones.len() != s {
                return Err(ArenaError::shape(
                    format!("team {ti} streams"),
                    s,
                    team.rewards.len(),
                ));
            }
            if team.bootstrap.len() != self.n_envs {
                return Err(ArenaError::shape(
                    format!("team {ti} bootstrap"),
                    self.n_envs,
                    team.bootstrap.len(),
                ));
            }
            if team.team_obs.len() != s * team.critic_dim {
                return Err(ArenaError::shape(
                    format!("team {ti} critic obs"),
                    s * team.critic_dim,
                    team.team_obs.len(),
                ));
            }
            for (ai, agent) in team.agents.iter().enumerate() {
                if agent.obs.len() != s * agent.obs_dim
                    || agent.actions.len() != s * agent.act_dim
                    || agent.log_probs.len() != s
                {
                    return Err(ArenaError::shape(
                        format!("team {ti} agent {ai} trajectories"),
                        s,
                        agent.log_probs.len(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Compute advantages and returns. In the shared-critic ablation mode
    /// every team's reward stream is first replaced by the cross-team mean,
    /// which is exactly what collapses the value signal in zero-sum play.
    pub fn finalize(&mut self, cfg: &HappoConfig) -> Result<()> {
        self.check_shapes()?;
        if cfg.shared_critic_ablation {
            let s = self.samples();
            let n_teams = self.teams.len() as f64;
            let mean: Vec<f64> = (0..s)
                .map(|i| self.teams.iter().map(|t| t.rewards[i]).sum::<f64>() / n_teams)
                .collect();
            for team in self.teams.iter_mut() {
                team.rewards = mean.clone();
            }
        }
        for team in self.teams.iter_mut() {
            let (adv, ret) = compute_gae(
                &team.rewards,
                &team.values,
                &team.dones,
                &team.bootstrap,
                self.n_envs,
                cfg.discount,
                cfg.gae_lambda,
            )?;
            if !adv.iter().all(|v| v.is_finite()) {
                return Err(ArenaError::non_finite("advantages"));
            }
            team.advantages = adv;
            team.returns = ret;
        }
        self.finalized = true;
        Ok(())
    }
}
