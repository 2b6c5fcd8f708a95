//! Sequential clipped-surrogate actor updates with per-team critic
//! regression.
//!
//! Per unfrozen team: the critic regresses to the rollout returns, then
//! each agent is updated in a freshly drawn random order. A per-sample
//! multiplier starts at 1 and, after each agent finishes its epochs, is
//! multiplied by that agent's probability ratio `exp(new_logp - old_logp)`
//! evaluated over the whole buffer; the next agent optimizes the surrogate
//! against the multiplied advantages. With a single agent per team the
//! multiplier stays 1 and the update reduces to plain clipped-surrogate
//! policy optimization.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{ArenaError, Result};
use crate::harl::buffer::{RolloutBuffer, TeamRollout};
use crate::harl::learner::{HappoConfig, TeamLearner};
use crate::harl::loss::ppo_clip_loss_grad;
use crate::numcore::{
    adam_step, adam_step_vec, mlp_backward_into, mlp_forward, GaussianHead, MlpParams,
    LOG_STD_MAX, LOG_STD_MIN,
};

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
/// Chunk size for deterministic parallel gradient accumulation: chunks are
/// reduced in index order, so results do not depend on the worker count.
const GRAD_CHUNK: usize = 512;

/// Per-team statistics from one update.
#[derive(Clone, Debug, Default)]
pub struct TeamUpdateStats {
    pub team_id: usize,
    pub updated: bool,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub adv_mean: f64,
    pub adv_std: f64,
}

#[derive(Clone, Debug, Default)]
pub struct UpdateStats {
    pub teams: Vec<TeamUpdateStats>,
}

struct ActorAccum {
    g_mlp: MlpParams,
    g_log_std: Vec<f64>,
    loss: f64,
    kl: f64,
    clipped: usize,
}

fn normalize_advantages(adv: &[f64], enabled: bool) -> (Vec<f64>, f64, f64) {
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    // Zero-variance batches skip normalization entirely.
    if !enabled || std < 1e-8 {
        (adv.to_vec(), mean, std)
    } else {
        (adv.iter().map(|a| (a - mean) / std).collect(), mean, std)
    }
}

fn global_clip(g_mlp: &mut MlpParams, g_vec: Option<&mut Vec<f64>>, max_norm: f64) {
    let mut sq = g_mlp.squared_norm();
    if let Some(v) = &g_vec {
        sq += v.iter().map(|x| x * x).sum::<f64>();
    }
    let norm = sq.sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        g_mlp.scale(scale);
        if let Some(v) = g_vec {
            v.iter_mut().for_each(|x| *x *= scale);
        }
    }
}

/// Deterministic parallel accumulation of actor gradients over one
/// minibatch. Returns the summed accumulator (not yet divided by the batch
/// size).
fn actor_minibatch_grad(
    policy_mlp: &MlpParams,
    log_std: &[f64],
    rollout: &TeamRollout,
    agent_idx: usize,
    weighted_adv: &[f64],
    indices: &[usize],
    epsilon: f64,
) -> Result<ActorAccum> {
    let agent = &rollout.agents[agent_idx];
    let chunks: Vec<ActorAccum> = indices
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| -> Result<ActorAccum> {
            let mut acc = ActorAccum {
                g_mlp: policy_mlp.zeros_like(),
                g_log_std: vec![0.0; log_std.len()],
                loss: 0.0,
                kl: 0.0,
                clipped: 0,
            };
            for &s in chunk {
                let obs = agent.obs_at(s);
                let action = agent.action_at(s);
                let lp_old = agent.log_probs[s];
                let adv = weighted_adv[s];

                let mean = mlp_forward(policy_mlp, obs)?;
                let head = GaussianHead::new(mean, log_std.to_vec())?;
                let lp_new = crate::numcore::gaussian_log_prob(&head, action)?;
                let ratio = (lp_new - lp_old).exp();
                let (loss_s, dl_dratio) = ppo_clip_loss_grad(ratio, adv, epsilon);
                acc.loss += loss_s;
                acc.kl += lp_old - lp_new;
                if (ratio - 1.0).abs() > epsilon {
                    acc.clipped += 1;
                }
                let dl_dlp = dl_dratio * ratio;
                if dl_dlp != 0.0 {
                    let (d_mean, d_log_std) = head.log_prob_grad(action)?;
                    let upstream: Vec<f64> = d_mean.iter().map(|d| d * dl_dlp).collect();
                    mlp_backward_into(policy_mlp, obs, &upstream, &mut acc.g_mlp)?;
                    for (g, d) in acc.g_log_std.iter_mut().zip(d_log_std.iter()) {
                        *g += d * dl_dlp;
                    }
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;

    let mut total = ActorAccum {
        g_mlp: policy_mlp.zeros_like(),
        g_log_std: vec![0.0; log_std.len()],
        loss: 0.0,
        kl: 0.0,
        clipped: 0,
    };
    for acc in chunks {
        total.g_mlp.for_each_with(&acc.g_mlp, |t, a| *t += a);
        for (t, a) in total.g_log_std.iter_mut().zip(acc.g_log_std.iter()) {
            *t += a;
        }
        total.loss += acc.loss;
        total.kl += acc.kl;
        total.clipped += acc.clipped;
    }
    Ok(total)
}

/// Deterministic parallel critic gradient over one minibatch: mean squared
/// error against the returns, scaled by the value coefficient.
fn critic_minibatch_grad(
    critic_mlp: &MlpParams,
    rollout: &TeamRollout,
    indices: &[usize],
    value_coef: f64,
) -> Result<(MlpParams, f64)> {
    let chunks: Vec<(MlpParams, f64)> = indices
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| -> Result<(MlpParams, f64)> {
            let mut g = critic_mlp.zeros_like();
            let mut loss = 0.0;
            for &s in chunk {
                let obs = rollout.team_obs_at(s);
                let v = mlp_forward(critic_mlp, obs)?[0];
                let err = v - rollout.returns[s];
                loss += value_coef * err * err;
                let upstream = [2.0 * value_coef * err];
                mlp_backward_into(critic_mlp, obs, &upstream, &mut g)?;
            }
            Ok((g, loss))
        })
        .collect::<Result<_>>()?;
    let mut total = critic_mlp.zeros_like();
    let mut loss = 0.0;
    for (g, l) in chunks {
        total.for_each_with(&g, |t, a| *t += a);
        loss += l;
    }
    Ok((total, loss))
}

fn check_loss(loss: f64, what: &str, minibatch: usize) -> Result<()> {
    if !loss.is_finite() {
        return Err(ArenaError::non_finite(format!(
            "{what} loss in minibatch {minibatch}; update aborted"
        )));
    }
    Ok(())
}

fn split_minibatches(indices: &mut [usize], count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    indices.shuffle(rng);
    let per = indices.len().div_ceil(count);
    indices.chunks(per).map(|c| c.to_vec()).collect()
}

/// Recompute the policy's log-probabilities over every stored sample.
fn recompute_log_probs(
    policy_mlp: &MlpParams,
    log_std: &[f64],
    rollout: &TeamRollout,
    agent_idx: usize,
) -> Result<Vec<f64>> {
    let agent = &rollout.agents[agent_idx];
    (0..agent.log_probs.len())
        .into_par_iter()
        .map(|s| {
            let mean = mlp_forward(policy_mlp, agent.obs_at(s))?;
            let head = GaussianHead::new(mean, log_std.to_vec())?;
            crate::numcore::gaussian_log_prob(&head, agent.action_at(s))
        })
        .collect()
}

/// Gradient steps regressing one critic to a rollout's returns
/// (full-batch). Returns the final mean squared error. Shared by the
/// in-update critic phase, tests, and value-collapse experiments.
pub fn fit_critic_to_returns(
    learner: &mut TeamLearner,
    rollout: &TeamRollout,
    cfg: &HappoConfig,
    steps: usize,
) -> Result<f64> {
    let indices: Vec<usize> = (0..rollout.returns.len()).collect();
    let m = indices.len() as f64;
    let mut mse = f64::INFINITY;
    for step in 0..steps {
        let (mut grad, loss) =
            critic_minibatch_grad(&learner.critic.mlp, rollout, &indices, 1.0)?;
        check_loss(loss, "critic", step)?;
        mse = loss / m;
        grad.scale(1.0 / m);
        global_clip(&mut grad, None, cfg.max_grad_norm);
        adam_step(
            &mut learner.critic.mlp,
            &grad,
            &mut learner.critic_optim,
            cfg.critic_lr,
            ADAM_BETA1,
            ADAM_BETA2,
            ADAM_EPS,
        )?;
    }
    Ok(mse)
}

/// One full update over a finalized buffer. Frozen teams are skipped
/// bit-for-bit. In the shared-critic ablation only team 0's critic trains
/// (on the cross-team mean returns baked in at finalize time).
pub fn happo_update(
    learners: &mut [TeamLearner],
    buffer: &RolloutBuffer,
    cfg: &HappoConfig,
    rng: &mut ChaCha8Rng,
) -> Result<UpdateStats> {
    cfg.validate()?;
    if !buffer.is_finalized() {
        return Err(ArenaError::Contract(
            "rollout buffer must be finalized before updating".into(),
        ));
    }
    if learners.len() != buffer.teams.len() {
        return Err(ArenaError::shape("teams in buffer", learners.len(), buffer.teams.len()));
    }

    let samples = buffer.samples();
    let mut stats = UpdateStats::default();

    for (ti, learner) in learners.iter_mut().enumerate() {
        let rollout = &buffer.teams[ti];
        let mut team_stats = TeamUpdateStats {
            team_id: learner.team_id,
            ..TeamUpdateStats::default()
        };
        if learner.frozen {
            stats.teams.push(team_stats);
            continue;
        }
        team_stats.updated = true;

        let (adv_norm, adv_mean, adv_std) =
            normalize_advantages(&rollout.advantages, cfg.normalize_advantages);
        team_stats.adv_mean = adv_mean;
        team_stats.adv_std = adv_std;

        // Critic regression to returns. In the ablation a single shared
        // critic (held by team 0) is trained.
        let train_this_critic = !cfg.shared_critic_ablation || ti == 0;
        if train_this_critic {
            let mut value_loss_acc = 0.0;
            let mut passes = 0usize;
            for _epoch in 0..cfg.epochs {
                let mut idx: Vec<usize> = (0..samples).collect();
                for (mb, minibatch) in split_minibatches(&mut idx, cfg.minibatches, rng)
                    .into_iter()
                    .enumerate()
                {
                    let m = minibatch.len() as f64;
                    let (mut grad, loss) = critic_minibatch_grad(
                        &learner.critic.mlp,
                        rollout,
                        &minibatch,
                        cfg.value_coef,
                    )?;
                    check_loss(loss, "critic", mb)?;
                    value_loss_acc += loss / m;
                    passes += 1;
                    grad.scale(1.0 / m);
                    global_clip(&mut grad, None, cfg.max_grad_norm);
                    adam_step(
                        &mut learner.critic.mlp,
                        &grad,
                        &mut learner.critic_optim,
                        cfg.critic_lr,
                        ADAM_BETA1,
                        ADAM_BETA2,
                        ADAM_EPS,
                    )?;
                }
            }
            team_stats.value_loss = value_loss_acc / passes.max(1) as f64;
        }

        // Sequential actor updates in a fresh random order with the
        // accumulated ratio multiplier.
        let n_agents = learner.policies.len();
        let mut order: Vec<usize> = (0..n_agents).collect();
        order.shuffle(rng);
        let mut multiplier = vec![1.0f64; samples];

        let mut policy_loss_acc = 0.0;
        let mut kl_acc = 0.0;
        let mut clip_acc = 0.0;
        let mut passes = 0usize;

        for &agent_idx in &order {
            let weighted: Vec<f64> = multiplier
                .iter()
                .zip(adv_norm.iter())
                .map(|(m, a)| m * a)
                .collect();

            for _epoch in 0..cfg.epochs {
                let mut idx: Vec<usize> = (0..samples).collect();
                for (mb, minibatch) in split_minibatches(&mut idx, cfg.minibatches, rng)
                    .into_iter()
                    .enumerate()
                {
                    let m = minibatch.len() as f64;
                    let policy = &learner.policies[agent_idx];
                    let acc = actor_minibatch_grad(
                        &policy.mlp,
                        &policy.log_std,
                        rollout,
                        agent_idx,
                        &weighted,
                        &minibatch,
                        cfg.clip_epsilon,
                    )?;
                    let entropy = GaussianHead::new(
                        vec![0.0; policy.log_std.len()],
                        policy.log_std.clone(),
                    )?
                    .entropy();
                    let loss = acc.loss / m - cfg.entropy_coef * entropy;
                    check_loss(loss, "policy", mb)?;
                    policy_loss_acc += acc.loss / m;
                    kl_acc += acc.kl / m;
                    clip_acc += acc.clipped as f64 / m;
                    passes += 1;

                    let mut g_mlp = acc.g_mlp;
                    g_mlp.scale(1.0 / m);
                    let mut g_log_std: Vec<f64> =
                        acc.g_log_std.iter().map(|g| g / m).collect();
                    // entropy bonus: d(-c_H * H)/d log_std_i = -c_H
                    for g in g_log_std.iter_mut() {
                        *g -= cfg.entropy_coef;
                    }
                    global_clip(&mut g_mlp, Some(&mut g_log_std), cfg.max_grad_norm);

                    let policy = &mut learner.policies[agent_idx];
                    let (opt_mlp, opt_log_std) = &mut learner.policy_optims[agent_idx];
                    adam_step(
                        &mut policy.mlp,
                        &g_mlp,
                        opt_mlp,
                        cfg.actor_lr,
                        ADAM_BETA1,
                        ADAM_BETA2,
                        ADAM_EPS,
                    )?;
                    adam_step_vec(
                        &mut policy.log_std,
                        &g_log_std,
                        opt_log_std,
                        cfg.actor_lr,
                        ADAM_BETA1,
                        ADAM_BETA2,
                        ADAM_EPS,
                    )?;
                    for ls in policy.log_std.iter_mut() {
                        *ls = ls.clamp(LOG_STD_MIN, LOG_STD_MAX);
                    }
                }
            }

            // Fold this agent's post-update ratios into the multiplier for
            // the agents still to come.
            if order.len() > 1 {
                let policy = &learner.policies[agent_idx];
                let new_lps =
                    recompute_log_probs(&policy.mlp, &policy.log_std, rollout, agent_idx)?;
                let old_lps = &rollout.agents[agent_idx].log_probs;
                for (s, m) in multiplier.iter_mut().enumerate() {
                    *m *= (new_lps[s] - old_lps[s]).exp();
                    if !m.is_finite() {
                        return Err(ArenaError::non_finite(format!(
                            "sequential ratio multiplier for sample {s}"
                        )));
                    }
                }
            }
        }

        team_stats.policy_loss = policy_loss_acc / passes.max(1) as f64;
        team_stats.approx_kl = kl_acc / passes.max(1) as f64;
        team_stats.clip_fraction = clip_acc / passes.max(1) as f64;
        team_stats.entropy = GaussianHead::new(
            vec![0.0; learner.policies[0].log_std.len()],
            learner.policies[0].log_std.clone(),
        )?
        .entropy();
        stats.teams.push(team_stats);
    }
    Ok(stats)
}

