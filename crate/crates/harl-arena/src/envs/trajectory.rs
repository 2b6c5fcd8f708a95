//! Binary trajectory logs for replay.
//!
//! Container layout: magic, version, header (task tag, spec digest, dt,
//! seed), then per-step records (actions per agent, rewards per team, done
//! flag). Replaying the recorded actions against a fresh reset from the
//! same seed reproduces rewards bit-exactly because stepping is pure.

use std::path::Path;

use crate::codec::{Reader, Writer};
use crate::envs::env::Env;
use crate::envs::spec::{spec_digest, TaskTag};
use crate::envs::state::EnvState;
use crate::error::{ArenaError, Result};

const MAGIC: u32 = 0x41_52_54_4C; // "ARTL"
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryStep {
    pub actions: Vec<Vec<f64>>,
    pub team_rewards: Vec<f64>,
    pub done: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryLog {
    pub task: TaskTag,
    pub spec_hash: u64,
    pub dt: f64,
    pub seed: u64,
    pub steps: Vec<TrajectoryStep>,
}

impl TrajectoryLog {
    /// Record one full episode driven by `act`, which maps the current
    /// state to one action per agent.
    pub fn record_episode(
        env: &Env,
        seed: u64,
        mut act: impl FnMut(&EnvState) -> Result<Vec<Vec<f64>>>,
    ) -> Result<TrajectoryLog> {
        let mut state = env.reset(seed)?;
        let mut steps = Vec::new();
        loop {
            let actions = act(&state)?;
            let outcome = env.step(&mut state, &actions)?;
            steps.push(TrajectoryStep {
                actions,
                team_rewards: outcome.team_rewards,
                done: outcome.done,
            });
            if outcome.done {
                break;
            }
        }
        Ok(TrajectoryLog {
            task: env.task,
            spec_hash: spec_digest(&env.teams, env.task),
            dt: env.cfg.reward.dt,
            seed,
            steps,
        })
    }

    /// Re-run the logged actions from the logged seed and return the
    /// rewards the environment produces now (bit-equal to the log for an
    /// unchanged spec).
    pub fn replay_rewards(&self, env: &Env) -> Result<Vec<Vec<f64>>> {
        if spec_digest(&env.teams, env.task) != self.spec_hash {
            return Err(ArenaError::Contract(
                "trajectory log was recorded with a different spec".into(),
            ));
        }
        let mut state = env.reset(self.seed)?;
        let mut rewards = Vec::with_capacity(self.steps.len());
        for step in &self.steps {
            let outcome = env.step(&mut state, &step.actions)?;
            rewards.push(outcome.team_rewards.clone());
            if outcome.done != step.done {
                return Err(ArenaError::Contract("replay diverged from log".into()));
            }
            if outcome.done {
                break;
            }
        }
        Ok(rewards)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.put_u32(MAGIC);
        w.put_u32(VERSION);
        w.put_u8(self.task.code());
        w.put_u64(self.spec_hash);
        w.put_f64(self.dt);
        w.put_u64(self.seed);
        w.put_u64(self.steps.len() as u64);
        for step in &self.steps {
            w.put_u64(step.actions.len() as u64);
            for a in &step.actions {
                w.put_f64s(a);
            }
            w.put_f64s(&step.team_rewards);
            w.put_bool(step.done);
        }
        w.into_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<TrajectoryLog> {
        let mut r = Reader::new(bytes);
        if r.get_u32()? != MAGIC {
            return Err(ArenaError::Format("not a trajectory log".into()));
        }
        let version = r.get_u32()?;
        if version != VERSION {
            return Err(ArenaError::Format(format!(
                "unsupported trajectory version {version}"
            )));
        }
        let task = TaskTag::from_code(r.get_u8()?)?;
        let spec_hash = r.get_u64()?;
        let dt = r.get_f64()?;
        let seed = r.get_u64()?;
        let n_steps = r.get_u64()? as usize;
        let mut steps = Vec::with_capacity(n_steps);
        for _ in 0..n_steps {
            let n_agents = r.get_u64()? as usize;
            let mut actions = Vec::with_capacity(n_agents);
            for _ in 0..n_agents {
                actions.push(r.get_f64s()?);
            }
            let team_rewards = r.get_f64s()?;
            let done = r.get_bool()?;
            steps.push(TrajectoryStep {
                actions,
                team_rewards,
                done,
            });
        }
        Ok(TrajectoryLog {
            task,
            spec_hash,
            dt,
            seed,
            steps,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<TrajectoryLog> {
        let bytes = std::fs::read(path)?;
        Self::from_bytes(&bytes)
    }

    /// Render the log as CSV rows: step, flattened actions, per-team
    /// rewards, done.
    pub fn to_csv(&self) -> String {
        let n_teams = self.steps.first().map(|s| s.team_rewards.len()).unwrap_or(0);
        let n_action = self
            .steps
            .first()
            .map(|s| s.actions.iter().map(|a| a.len()).sum::<usize>())
            .unwrap_or(0);
        let mut out = String::from("step");
        for k in 0..n_action {
            out.push_str(&format!(",action{k}"));
        }
        for t in 0..n_teams {
            out.push_str(&format!(",reward_team{t}"));
        }
        out.push_str(",done\n");
        for (i, step) in self.steps.iter().enumerate() {
            out.push_str(&i.to_string());
            for a in step.actions.iter().flat_map(|a| a.iter()) {
                out.push_str(&format!(",{a}"));
            }
            for r in &step.team_rewards {
                out.push_str(&format!(",{r}"));
            }
            out.push_str(if step.done { ",1\n" } else { ",0\n" });
        }
        out
    }
}
