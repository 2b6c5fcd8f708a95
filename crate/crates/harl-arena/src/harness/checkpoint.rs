//! Self-describing binary checkpoints with integrity hashing.
//!
//! A checkpoint embeds the full run config (TOML text), so `resume` and
//! `eval` need no external files. The payload ends with its SHA-256; any
//! corrupted byte fails the load.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::codec::{Reader, Writer};
use crate::curriculum::EvalMetrics;
use crate::envs::EnvState;
use crate::error::{ArenaError, Result};
use crate::harl::{PolicyNet, TeamLearner};
use crate::harness::config::RunConfig;
use crate::harness::metrics::MetricsHistory;

const MAGIC: u64 = 0x48_41_52_4C_43_4B_50_54; // "HARLCKPT"
const VERSION: u32 = 1;

/// Complete trainer state at an update boundary.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub config_toml: String,
    pub config_digest: [u8; 32],
    pub stage: usize,
    /// Updates completed within the current stage.
    pub update_in_stage: usize,
    /// Updates completed across all stages (metrics row index).
    pub global_update: usize,
    pub learners: Vec<TeamLearner>,
    /// Pre-training policy snapshot per team, the fixed tournament baseline.
    pub initial_policies: Vec<Vec<PolicyNet>>,
    /// Environment instances of the current stage batch (bodies, latches,
    /// and per-instance RNG streams).
    pub env_states: Vec<EnvState>,
    pub history: MetricsHistory,
    /// Evaluations recorded while training the current stage (gating input).
    pub stage_evals: Vec<EvalMetrics>,
    pub run_complete: bool,
}

impl Checkpoint {
    pub fn config(&self) -> Result<RunConfig> {
        let cfg = RunConfig::from_toml(&self.config_toml)?;
        if cfg.digest() != self.config_digest {
            return Err(ArenaError::Format(
                "checkpoint config digest mismatch".into(),
            ));
        }
        Ok(cfg)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.put_u64(MAGIC);
        w.put_u32(VERSION);
        w.put_str(&self.config_toml);
        w.put_bytes(&self.config_digest);
        w.put_u64(self.stage as u64);
        w.put_u64(self.update_in_stage as u64);
        w.put_u64(self.global_update as u64);
        w.put_u64(self.learners.len() as u64);
        for learner in &self.learners {
            learner.write(&mut w);
        }
        w.put_u64(self.initial_policies.len() as u64);
        for team in &self.initial_policies {
            w.put_u64(team.len() as u64);
            for p in team {
                p.write(&mut w);
            }
        }
        w.put_u64(self.env_states.len() as u64);
        for state in &self.env_states {
            state.write(&mut w);
        }
        self.history.write(&mut w);
        w.put_u64(self.stage_evals.len() as u64);
        for m in &self.stage_evals {
            w.put_u64(m.values.len() as u64);
            for (name, value) in &m.values {
                w.put_str(name);
                w.put_f64(*value);
            }
        }
        w.put_bool(self.run_complete);

        let mut bytes = w.into_bytes();
        let digest: [u8; 32] = Sha256::digest(&bytes).into();
        bytes.extend_from_slice(&digest);
        bytes
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
        if bytes.len() < 32 {
            return Err(ArenaError::Format("truncated checkpoint".into()));
        }
        let (payload, trailer) = bytes.split_at(bytes.len() - 32);
        let digest: [u8; 32] = Sha256::digest(payload).into();
        if digest != trailer {
            return Err(ArenaError::Format(
                "checkpoint integrity hash mismatch".into(),
            ));
        }
        let mut r = Reader::new(payload);
        if r.get_u64()? != MAGIC {
            return Err(ArenaError::Format("not a checkpoint file".into()));
        }
        let version = r.get_u32()?;
        if version != VERSION {
            return Err(ArenaError::Format(format!(
                "unsupported checkpoint version {version}"
            )));
        }
        let config_toml = r.get_str()?;
        let digest_bytes = r.get_bytes()?;
        let mut config_digest = [0u8; 32];
        config_digest.copy_from_slice(&digest_bytes);
        let stage = r.get_u64()? as usize;
        let update_in_stage = r.get_u64()? as usize;
        let global_update = r.get_u64()? as usize;

        // Team/arena structure context for env-state decoding.
        let config = RunConfig::from_toml(&config_toml)?;
        let stage_env = config.stage_env(stage)?;

        let n_learners = r.get_u64()? as usize;
        let mut learners = Vec::with_capacity(n_learners);
        for _ in 0..n_learners {
            learners.push(TeamLearner::read(&mut r)?);
        }
        let n_teams = r.get_u64()? as usize;
        let mut initial_policies = Vec::with_capacity(n_teams);
        for _ in 0..n_teams {
            let n = r.get_u64()? as usize;
            let mut team = Vec::with_capacity(n);
            for _ in 0..n {
                team.push(PolicyNet::read(&mut r)?);
            }
            initial_policies.push(team);
        }
        let n_states = r.get_u64()? as usize;
        let mut env_states = Vec::with_capacity(n_states);
        for _ in 0..n_states {
            env_states.push(EnvState::read(&mut r, stage_env.cfg.arena, &config.teams)?);
        }
        let history = MetricsHistory::read(&mut r)?;
        let n_evals = r.get_u64()? as usize;
        let mut stage_evals = Vec::with_capacity(n_evals);
        for _ in 0..n_evals {
            let n = r.get_u64()? as usize;
            let mut m = EvalMetrics::default();
            for _ in 0..n {
                let name = r.get_str()?;
                let value = r.get_f64()?;
                m.push(name, value);
            }
            stage_evals.push(m);
        }
        let run_complete = r.get_bool()?;
        Ok(Checkpoint {
            config_toml,
            config_digest,
            stage,
            update_in_stage,
            global_update,
            learners,
            initial_policies,
            env_states,
            history,
            stage_evals,
            run_complete,
        })
    }
}

/// Write a checkpoint; the round trip is bit-exact for every parameter,
/// optimizer moment, and RNG state.
pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, ckpt.to_bytes())?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path)?;
    Checkpoint::from_bytes(&bytes)
}
