//! Vectorized batches of independent environment instances.

use rayon::prelude::*;

use crate::curriculum::ObservationLayout;
use crate::envs::env::{Env, StepOutcome};
use crate::envs::observe::build_observation;
use crate::envs::state::EnvState;
use crate::error::Result;
use crate::seeding::derive_seed;

/// Which stage's slots are live, and each agent's layout.
#[derive(Clone, Debug)]
pub struct ObsContext {
    pub layouts: Vec<ObservationLayout>,
    pub stage: usize,
}

impl ObsContext {
    pub fn obs_dim(&self, agent: usize) -> usize {
        self.layouts[agent].total_width
    }
}

/// A batch of instances stepped in lockstep. Instances are independent
/// values; stepping fans out across the rayon pool and results merge by
/// instance index, so the batch is deterministic for any thread count.
pub struct EnvBatch {
    pub env: Env,
    pub obs: ObsContext,
    pub states: Vec<EnvState>,
    /// Cached observations, `[instance][agent][dim]`, refreshed on reset
    /// and after every step (post-auto-reset when an episode ends).
    pub current_obs: Vec<Vec<Vec<f64>>>,
}

impl EnvBatch {
    pub fn new(env: Env, obs: ObsContext, n_instances: usize, master_seed: u64) -> Result<EnvBatch> {
        let states: Vec<EnvState> = (0..n_instances)
            .map(|i| env.reset(derive_seed(master_seed, i as u64)))
            .collect::<Result<_>>()?;
        let mut batch = EnvBatch {
            env,
            obs,
            states,
            current_obs: Vec::new(),
        };
        batch.refresh_observations()?;
        Ok(batch)
    }

    /// Rebuild a batch around restored instance states (checkpoint resume).
    pub fn from_states(env: Env, obs: ObsContext, states: Vec<EnvState>) -> Result<EnvBatch> {
        let mut batch = EnvBatch {
            env,
            obs,
            states,
            current_obs: Vec::new(),
        };
        batch.refresh_observations()?;
        Ok(batch)
    }

    pub fn n_instances(&self) -> usize {
        self.states.len()
    }

    fn observe_instance(&self, state: &EnvState) -> Result<Vec<Vec<f64>>> {
        (0..self.env.n_agents())
            .map(|agent| {
                build_observation(
                    state,
                    &self.env.teams,
                    self.env.task,
                    &self.env.cfg,
                    agent,
                    &self.obs.layouts[agent],
                    self.obs.stage,
                )
            })
            .collect()
    }

    pub fn refresh_observations(&mut self) -> Result<()> {
        self.current_obs = self
            .states
            .par_iter()
            .map(|s| self.observe_instance(s))
            .collect::<Result<_>>()?;
        Ok(())
    }

    /// Step every instance; finished episodes auto-reset (continuing their
    /// own RNG stream) and the cached observation comes from the fresh
    /// episode, while the returned rewards/done belong to the terminal step.
    pub fn step(&mut self, actions: &[Vec<Vec<f64>>]) -> Result<Vec<StepOutcome>> {
        let env = &self.env;
        let obs_results: Vec<(StepOutcome, Vec<Vec<f64>>, EnvState)> = self
            .states
            .par_iter()
            .zip(actions.par_iter())
            .map(|(state, action)| -> Result<_> {
                let mut next = state.clone();
                let outcome = env.step(&mut next, action)?;
                if outcome.done {
                    next = env.reset_from_rng(next.rng.clone())?;
                }
                let obs = (0..env.n_agents())
                    .map(|agent| {
                        build_observation(
                            &next,
                            &env.teams,
                            env.task,
                            &env.cfg,
                            agent,
                            &self.obs.layouts[agent],
                            self.obs.stage,
                        )
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((outcome, obs, next))
            })
            .collect::<Result<_>>()?;

        let mut outcomes = Vec::with_capacity(obs_results.len());
        for (i, (outcome, obs, next)) in obs_results.into_iter().enumerate() {
            self.states[i] = next;
            self.current_obs[i] = obs;
            outcomes.push(outcome);
        }
        Ok(outcomes)
    }

    /// Concatenated observation of one team's agents in one instance (the
    /// critic input).
    pub fn team_observation(&self, instance: usize, team_id: usize) -> Vec<f64> {
        let mut out = Vec::new();
        let index = crate::envs::spec::agent_index(&self.env.teams);
        for (g, &(ti, _)) in index.iter().enumerate() {
            if ti == team_id {
                out.extend_from_slice(&self.current_obs[instance][g]);
            }
        }
        out
    }
}
