//! Run configuration: one human-readable TOML file with sections mirroring
//! the domain types. Unknown keys are hard errors.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::curriculum::{make_layout, CurriculumPlan, ObservationLayout};
use crate::envs::{validate_teams, Env, EnvConfig, ObsContext, TeamSpec};
use crate::error::{ArenaError, Result};
use crate::harl::{CriticNet, HappoConfig, PolicyNet, Regime, TeamLearner};
use crate::seeding::derive_seed;
use rand_chacha::ChaCha8Rng;

/// Network architecture shared by actors and critics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetConfig {
    pub hidden: Vec<usize>,
    pub init_log_std: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            hidden: vec![64, 64],
            init_log_std: 0.0,
        }
    }
}

/// Full run description. Every field not given in the file takes the
/// documented default; unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
    #[serde(default = "default_n_envs")]
    pub n_envs: usize,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_total_updates")]
    pub total_updates: usize,
    #[serde(default = "default_eval_cadence")]
    pub eval_cadence: usize,
    /// Instances per evaluation during training.
    #[serde(default = "default_eval_instances")]
    pub eval_instances: usize,
    /// Instances for the final win-rate tournament.
    #[serde(default = "default_final_eval_instances")]
    pub final_eval_instances: usize,
    #[serde(default = "default_snapshot_cadence")]
    pub snapshot_cadence: usize,
    /// Stop an adversarial stage early once the win rate against the
    /// initial snapshot holds at or above this for two evaluations.
    #[serde(default)]
    pub stop_win_rate: Option<f64>,
    #[serde(default = "default_regime")]
    pub regime: Regime,
    #[serde(default)]
    pub env: EnvConfig,
    #[serde(default)]
    pub happo: HappoConfig,
    #[serde(default)]
    pub net: NetConfig,
    pub teams: Vec<TeamSpec>,
    pub curriculum: CurriculumPlan,
}

fn default_out_dir() -> String {
    "runs/out".into()
}
fn default_n_envs() -> usize {
    64
}
fn default_horizon() -> usize {
    128
}
fn default_total_updates() -> usize {
    500
}
fn default_eval_cadence() -> usize {
    25
}
fn default_eval_instances() -> usize {
    200
}
fn default_final_eval_instances() -> usize {
    1000
}
fn default_snapshot_cadence() -> usize {
    100
}
fn default_regime() -> Regime {
    Regime::Simultaneous
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| ArenaError::Config(format!("config parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_envs == 0 {
            return Err(ArenaError::Config("n_envs must be >= 1".into()));
        }
        if self.horizon == 0 {
            return Err(ArenaError::Config("horizon must be >= 1".into()));
        }
        if self.eval_instances == 0 || self.final_eval_instances == 0 {
            return Err(ArenaError::Config("eval instance counts must be >= 1".into()));
        }
        if self.eval_cadence == 0 || self.snapshot_cadence == 0 {
            return Err(ArenaError::Config("cadences must be >= 1".into()));
        }
        validate_teams(&self.teams)?;
        self.env.validate()?;
        self.happo.validate()?;
        self.curriculum.validate()?;
        self.regime.validate(self.teams.len())?;
        if self.net.hidden.is_empty() {
            return Err(ArenaError::Config("net.hidden needs at least one layer".into()));
        }
        for stage in &self.curriculum.stages {
            if stage.task.is_adversarial() && self.teams.len() != 2 {
                return Err(ArenaError::Config(format!(
                    "stage '{}' needs exactly 2 teams",
                    stage.task.as_str()
                )));
            }
        }
        Ok(())
    }

    /// Digest of the canonical serialized form, embedded in checkpoints.
    pub fn digest(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update(self.to_toml().as_bytes());
        hasher.finalize().into()
    }

    /// Observation layouts for every agent in spec order.
    pub fn layouts(&self) -> Result<Vec<ObservationLayout>> {
        let mut out = Vec::new();
        for team in &self.teams {
            for mi in 0..team.agents.len() {
                out.push(make_layout(&self.curriculum, &self.teams, team.team_id, mi)?);
            }
        }
        Ok(out)
    }

    /// The environment for one curriculum stage (stage rewards override the
    /// run-level reward section).
    pub fn stage_env(&self, stage: usize) -> Result<Env> {
        let spec = self
            .curriculum
            .stages
            .get(stage)
            .ok_or_else(|| ArenaError::Config(format!("stage {stage} out of range")))?;
        let mut cfg = self.env.clone();
        cfg.reward = spec.effective_reward(&self.env.reward);
        Env::new(self.teams.clone(), spec.task, cfg)
    }

    pub fn obs_context(&self, stage: usize) -> Result<ObsContext> {
        Ok(ObsContext {
            layouts: self.layouts()?,
            stage,
        })
    }

    /// Freshly initialized learners: one policy per agent over the padded
    /// observation width, one critic per team over the team's concatenated
    /// width.
    pub fn build_learners(&self) -> Result<Vec<TeamLearner>> {
        use rand::SeedableRng;
        let layouts = self.layouts()?;
        let mut learners = Vec::with_capacity(self.teams.len());
        let mut global = 0usize;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, 0x1217));
        for team in &self.teams {
            let mut policies = Vec::with_capacity(team.agents.len());
            let mut critic_dim = 0usize;
            for agent in &team.agents {
                let obs_dim = layouts[global].total_width;
                critic_dim += obs_dim;
                let mut dims = vec![obs_dim];
                dims.extend_from_slice(&self.net.hidden);
                dims.push(agent.action_dim());
                policies.push(PolicyNet::init(&dims, self.net.init_log_std, &mut rng)?);
                global += 1;
            }
            let mut dims = vec![critic_dim];
            dims.extend_from_slice(&self.net.hidden);
            dims.push(1);
            let critic = CriticNet::init(&dims, &mut rng)?;
            learners.push(TeamLearner::new(team.team_id, policies, critic));
        }
        Ok(learners)
    }

    /// Effective update budget for a stage.
    pub fn stage_updates(&self, stage: usize) -> usize {
        self.curriculum.stages[stage]
            .max_updates
            .unwrap_or(self.total_updates)
    }
}
