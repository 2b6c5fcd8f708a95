//! Per-agent policies, per-team critics, and the trainer configuration.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{Reader, Writer};
use crate::error::{ArenaError, Result};
use crate::numcore::{
    gaussian_sample, init_mlp, mlp_forward, AdamState, AdamVec, GaussianHead, MlpParams,
    LOG_STD_MAX, LOG_STD_MIN,
};

/// Gaussian policy: an MLP producing the action mean plus free,
/// state-independent log standard deviations.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyNet {
    pub mlp: MlpParams,
    pub log_std: Vec<f64>,
}

impl PolicyNet {
    /// `dims` runs input width through hiddens to the action dimension.
    /// The output layer uses a small gain so initial actions stay near
    /// zero.
    pub fn init(dims: &[usize], init_log_std: f64, rng: &mut ChaCha8Rng) -> Result<PolicyNet> {
        let mlp = init_mlp(dims, 0.01, rng)?;
        let action_dim = *dims.last().expect("dims non-empty");
        Ok(PolicyNet {
            mlp,
            log_std: vec![init_log_std.clamp(LOG_STD_MIN, LOG_STD_MAX); action_dim],
        })
    }

    pub fn action_dim(&self) -> usize {
        self.log_std.len()
    }

    pub fn head(&self, obs: &[f64]) -> Result<GaussianHead> {
        let mean = mlp_forward(&self.mlp, obs)?;
        GaussianHead::new(mean, self.log_std.clone())
    }

    /// Deterministic action: the policy mean.
    pub fn act_mean(&self, obs: &[f64]) -> Result<Vec<f64>> {
        mlp_forward(&self.mlp, obs)
    }

    /// Stochastic action with its log-probability.
    pub fn act_sample(&self, obs: &[f64], rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, f64)> {
        let head = self.head(obs)?;
        let action = gaussian_sample(&head, rng);
        let logp = crate::numcore::gaussian_log_prob(&head, &action)?;
        Ok((action, logp))
    }

    pub fn write(&self, w: &mut Writer) {
        self.mlp.write(w);
        w.put_f64s(&self.log_std);
    }

    pub fn read(r: &mut Reader) -> Result<PolicyNet> {
        let mlp = MlpParams::read(r)?;
        let log_std = r.get_f64s()?;
        Ok(PolicyNet { mlp, log_std })
    }
}

/// Scalar-output value network over a team's concatenated observation.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticNet {
    pub mlp: MlpParams,
}

impl CriticNet {
    pub fn init(dims: &[usize], rng: &mut ChaCha8Rng) -> Result<CriticNet> {
        if dims.last() != Some(&1) {
            return Err(ArenaError::Contract("critic output must be scalar".into()));
        }
        Ok(CriticNet {
            mlp: init_mlp(dims, 1.0, rng)?,
        })
    }

    pub fn value(&self, obs: &[f64]) -> Result<f64> {
        Ok(mlp_forward(&self.mlp, obs)?[0])
    }

    pub fn write(&self, w: &mut Writer) {
        self.mlp.write(w);
    }

    pub fn read(r: &mut Reader) -> Result<CriticNet> {
        Ok(CriticNet {
            mlp: MlpParams::read(r)?,
        })
    }
}

/// One team's learnable state: a policy per agent, the team critic, and
/// their optimizer moments. Frozen learners act but never update.
#[derive(Clone, Debug, PartialEq)]
pub struct TeamLearner {
    pub team_id: usize,
    pub policies: Vec<PolicyNet>,
    pub policy_optims: Vec<(AdamState, AdamVec)>,
    pub critic: CriticNet,
    pub critic_optim: AdamState,
    pub frozen: bool,
}

impl TeamLearner {
    pub fn new(team_id: usize, policies: Vec<PolicyNet>, critic: CriticNet) -> TeamLearner {
        let policy_optims = policies
            .iter()
            .map(|p| (AdamState::new(&p.mlp), AdamVec::new(p.log_std.len())))
            .collect();
        let critic_optim = AdamState::new(&critic.mlp);
        TeamLearner {
            team_id,
            policies,
            policy_optims,
            critic,
            critic_optim,
            frozen: false,
        }
    }

    /// Reset all optimizer moments (used on curriculum transfer).
    pub fn reset_optimizers(&mut self) {
        for (m, v) in self.policy_optims.iter_mut() {
            m.reset();
            v.reset();
        }
        self.critic_optim.reset();
    }

    pub fn write(&self, w: &mut Writer) {
        w.put_u64(self.team_id as u64);
        w.put_u64(self.policies.len() as u64);
        for p in &self.policies {
            p.write(w);
        }
        for (m, v) in &self.policy_optims {
            m.write(w);
            v.write(w);
        }
        self.critic.write(w);
        self.critic_optim.write(w);
        w.put_bool(self.frozen);
    }

    pub fn read(r: &mut Reader) -> Result<TeamLearner> {
        let team_id = r.get_u64()? as usize;
        let n = r.get_u64()? as usize;
        let mut policies = Vec::with_capacity(n);
        for _ in 0..n {
            policies.push(PolicyNet::read(r)?);
        }
        let mut policy_optims = Vec::with_capacity(n);
        for _ in 0..n {
            let m = AdamState::read(r)?;
            let v = AdamVec::read(r)?;
            policy_optims.push((m, v));
        }
        let critic = CriticNet::read(r)?;
        let critic_optim = AdamState::read(r)?;
        let frozen = r.get_bool()?;
        Ok(TeamLearner {
            team_id,
            policies,
            policy_optims,
            critic,
            critic_optim,
            frozen,
        })
    }
}

/// Which observations feed each team's critic.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticInputMode {
    /// Concatenation of all same-team agents' observations (centralized
    /// training, decentralized execution); opponent internals are excluded.
    #[default]
    TeamObservationConcat,
}

/// Trainer hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HappoConfig {
    pub clip_epsilon: f64,
    pub discount: f64,
    pub gae_lambda: f64,
    pub epochs: usize,
    pub minibatches: usize,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub normalize_advantages: bool,
    pub max_grad_norm: f64,
    pub critic_input: CriticInputMode,
    /// Train a single critic on the cross-team mean reward instead of one
    /// per team; exists to demonstrate zero-sum value collapse.
    pub shared_critic_ablation: bool,
}

impl Default for HappoConfig {
    fn default() -> Self {
        HappoConfig {
            clip_epsilon: 0.2,
            discount: 0.99,
            gae_lambda: 0.95,
            epochs: 4,
            minibatches: 4,
            value_coef: 0.5,
            entropy_coef: 0.01,
            actor_lr: 3e-4,
            critic_lr: 1e-3,
            normalize_advantages: true,
            max_grad_norm: 0.5,
            critic_input: CriticInputMode::TeamObservationConcat,
            shared_critic_ablation: false,
        }
    }
}

impl HappoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 1.0) {
            return Err(ArenaError::Config("clip_epsilon must be in (0, 1)".into()));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(ArenaError::Config("discount must be in (0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(ArenaError::Config("gae_lambda must be in [0, 1]".into()));
        }
        if self.epochs == 0 || self.minibatches == 0 {
            return Err(ArenaError::Config("epochs and minibatches must be >= 1".into()));
        }
        if self.actor_lr <= 0.0 || self.critic_lr <= 0.0 {
            return Err(ArenaError::Config("learning rates must be positive".into()));
        }
        Ok(())
    }
}
