//! On-policy rollout collection over a vectorized environment batch.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::envs::{agent_index, EnvBatch, TaskTag};
use crate::error::{ArenaError, Result};
use crate::harl::buffer::{AgentRollout, EpisodeStats, RolloutBuffer, TeamRollout};
use crate::harl::learner::TeamLearner;
use crate::seeding::derive_seed2;

struct InstanceSample {
    actions: Vec<Vec<f64>>,
    log_probs: Vec<f64>,
    values: Vec<f64>,
    team_obs: Vec<Vec<f64>>,
}

/// Collect `horizon` steps from every instance. Each agent samples from its
/// own policy; each team's critic scores the team's concatenated
/// observation; finished episodes auto-reset. Sampling noise comes from one
/// generator per instance derived from `seed`, so collection is
/// deterministic for any worker count.
///
/// Learners are read-only here: frozen and unfrozen teams alike only act.
pub fn collect_rollouts(
    learners: &[TeamLearner],
    batch: &mut EnvBatch,
    horizon: usize,
    seed: u64,
) -> Result<RolloutBuffer> {
    if horizon == 0 {
        return Err(ArenaError::Contract("horizon must be >= 1".into()));
    }
    let teams = batch.env.teams.clone();
    let task = batch.env.task;
    if learners.len() != teams.len() {
        return Err(ArenaError::shape("learners per team", teams.len(), learners.len()));
    }
    for (ti, (learner, team)) in learners.iter().zip(teams.iter()).enumerate() {
        if learner.policies.len() != team.agents.len() {
            return Err(ArenaError::shape(
                format!("team {ti} policies"),
                team.agents.len(),
                learner.policies.len(),
            ));
        }
    }

    let n_envs = batch.n_instances();
    let samples = horizon * n_envs;
    let index = agent_index(&teams);
    let n_agents = index.len();

    // Pre-size the buffer.
    let mut team_rollouts: Vec<TeamRollout> = teams
        .iter()
        .map(|team| {
            let agents: Vec<AgentRollout> = team
                .agents
                .iter()
                .enumerate()
                .map(|(mi, spec)| {
                    let global = index
                        .iter()
                        .position(|&(t, m)| t == team.team_id && m == mi)
                        .expect("agent exists");
                    let obs_dim = batch.obs.obs_dim(global);
                    AgentRollout {
                        obs_dim,
                        act_dim: spec.action_dim(),
                        obs: Vec::with_capacity(samples * obs_dim),
                        actions: Vec::with_capacity(samples * spec.action_dim()),
                        log_probs: Vec::with_capacity(samples),
                    }
                })
                .collect();
            let critic_dim = agents.iter().map(|a| a.obs_dim).sum();
            TeamRollout {
                agents,
                critic_dim,
                team_obs: Vec::with_capacity(samples * critic_dim),
                rewards: Vec::with_capacity(samples),
                values: Vec::with_capacity(samples),
                dones: Vec::with_capacity(samples),
                bootstrap: vec![0.0; n_envs],
                advantages: Vec::new(),
                returns: Vec::new(),
            }
        })
        .collect();

    let mut stats = EpisodeStats {
        returns: vec![Vec::new(); teams.len()],
        ..EpisodeStats::default()
    };
    let mut running_return = vec![vec![0.0f64; teams.len()]; n_envs];

    let mut sample_rngs: Vec<ChaCha8Rng> = (0..n_envs)
        .map(|i| ChaCha8Rng::seed_from_u64(derive_seed2(seed, i as u64, 0)))
        .collect();

    let sample_instance = |learners: &[TeamLearner],
                           batch: &EnvBatch,
                           inst: usize,
                           rng: &mut ChaCha8Rng|
     -> Result<InstanceSample> {
        let mut actions = Vec::with_capacity(n_agents);
        let mut log_probs = Vec::with_capacity(n_agents);
        for (g, &(ti, mi)) in index.iter().enumerate() {
            let policy = &learners[ti].policies[mi];
            let obs = &batch.current_obs[inst][g];
            let (action, logp) = policy.act_sample(obs, rng)?;
            actions.push(action);
            log_probs.push(logp);
        }
        let mut values = Vec::with_capacity(learners.len());
        let mut team_obs = Vec::with_capacity(learners.len());
        for (ti, learner) in learners.iter().enumerate() {
            let obs = batch.team_observation(inst, ti);
            if !obs.iter().all(|v| v.is_finite()) {
                return Err(ArenaError::non_finite(format!(
                    "observation in environment {inst}"
                )));
            }
            values.push(learner.critic.value(&obs)?);
            team_obs.push(obs);
        }
        Ok(InstanceSample {
            actions,
            log_probs,
            values,
            team_obs,
        })
    };

    for _t in 0..horizon {
        let sampled: Vec<InstanceSample> = sample_rngs
            .par_iter_mut()
            .enumerate()
            .map(|(inst, rng)| sample_instance(learners, batch, inst, rng))
            .collect::<Result<_>>()?;

        // Store pre-step data.
        for (inst, s) in sampled.iter().enumerate() {
            for (g, &(ti, mi)) in index.iter().enumerate() {
                let agent = &mut team_rollouts[ti].agents[mi];
                agent.obs.extend_from_slice(&batch.current_obs[inst][g]);
                agent.actions.extend_from_slice(&s.actions[g]);
                agent.log_probs.push(s.log_probs[g]);
            }
            for ti in 0..teams.len() {
                team_rollouts[ti].team_obs.extend_from_slice(&s.team_obs[ti]);
                team_rollouts[ti].values.push(s.values[ti]);
            }
        }

        let all_actions: Vec<Vec<Vec<f64>>> = sampled.into_iter().map(|s| s.actions).collect();
        let outcomes = batch.step(&all_actions)?;

        for (inst, outcome) in outcomes.iter().enumerate() {
            for ti in 0..teams.len() {
                team_rollouts[ti].rewards.push(outcome.team_rewards[ti]);
                team_rollouts[ti].dones.push(outcome.done);
                running_return[inst][ti] += outcome.team_rewards[ti];
            }
            if outcome.done {
                stats.episodes += 1;
                for ti in 0..teams.len() {
                    stats.returns[ti].push(running_return[inst][ti]);
                    running_return[inst][ti] = 0.0;
                }
                if let Some(term) = &outcome.terminal {
                    if task == TaskTag::BlockPush {
                        stats.blocks_out += term.block_out.iter().filter(|&&b| b).count();
                        stats.block_slots += term.block_out.len();
                    }
                    if task == TaskTag::WalkToPoint {
                        stats.reached += term.reached.iter().filter(|&&r| r).count();
                        stats.reach_slots += term.reached.len();
                    }
                }
            }
        }
    }

    // Horizon bootstrap from the critics on the post-rollout observations.
    let bootstraps: Vec<Vec<f64>> = (0..n_envs)
        .into_par_iter()
        .map(|inst| -> Result<Vec<f64>> {
            (0..teams.len())
                .map(|ti| {
                    let obs = batch.team_observation(inst, ti);
                    learners[ti].critic.value(&obs)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    for (inst, values) in bootstraps.iter().enumerate() {
        for (ti, &v) in values.iter().enumerate() {
            team_rollouts[ti].bootstrap[inst] = v;
        }
    }

    let mut buffer = RolloutBuffer::new(horizon, n_envs, team_rollouts);
    buffer.stats = stats;
    buffer.check_shapes()?;
    Ok(buffer)
}
