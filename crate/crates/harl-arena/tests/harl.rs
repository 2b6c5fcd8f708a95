//! Trainer behavior: collection contracts, update contracts, freezing,
//! the sequential-update reduction to plain PPO, and zero-sum critic
//! separation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use harl_arena::curriculum::{make_layout, CurriculumPlan};
use harl_arena::envs::{
    AgentSpec, Env, EnvBatch, EnvConfig, ObsContext, RewardConfig, TaskTag, TeamSpec,
};
use harl_arena::harl::{
    collect_rollouts, compute_gae, fit_critic_to_returns, happo_update, AgentRollout, CriticNet,
    HappoConfig, PolicyNet, RolloutBuffer, TeamLearner, TeamRollout,
};
use harl_arena::numcore::{
    adam_step, adam_step_vec, gaussian_log_prob, mlp_backward, mlp_forward,
    GaussianHead,
};
use harl_arena::physics2d::{ActuationLimits, ArenaShape, ArenaSpec, BodyKind};

fn holo_agent() -> AgentSpec {
    AgentSpec {
        kind: BodyKind::Holonomic,
        radius: 0.3,
        mass: 1.0,
        limits: ActuationLimits::default(),
        flyer: false,
    }
}

fn sumo_teams() -> Vec<TeamSpec> {
    vec![
        TeamSpec {
            team_id: 0,
            agents: vec![holo_agent()],
        },
        TeamSpec {
            team_id: 1,
            agents: vec![holo_agent()],
        },
    ]
}

fn sumo_batch(n_envs: usize, seed: u64) -> (EnvBatch, Vec<TeamLearner>) {
    let teams = sumo_teams();
    let cfg = EnvConfig {
        arena: ArenaSpec {
            shape: ArenaShape::Ring { r_max: 2.5 },
            min_height: 0.0,
        },
        max_episode_len: 60,
        ..EnvConfig::default()
    };
    let env = Env::new(teams.clone(), TaskTag::SumoAdversarial, cfg).unwrap();
    let plan = CurriculumPlan::single(TaskTag::SumoAdversarial, RewardConfig::default());
    let layouts: Vec<_> = vec![
        make_layout(&plan, &teams, 0, 0).unwrap(),
        make_layout(&plan, &teams, 1, 0).unwrap(),
    ];
    let obs = ObsContext { layouts, stage: 0 };
    let obs_dim = obs.obs_dim(0);
    let batch = EnvBatch::new(env, obs, n_envs, seed).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let learners = (0..2)
        .map(|t| {
            let policy = PolicyNet::init(&[obs_dim, 16, 16, 2], 0.0, &mut rng).unwrap();
            let critic = CriticNet::init(&[obs_dim, 16, 16, 1], &mut rng).unwrap();
            TeamLearner::new(t, vec![policy], critic)
        })
        .collect();
    (batch, learners)
}

#[test]
fn collection_never_mutates_learners_and_shapes_match() {
    let (mut batch, mut learners) = sumo_batch(4, 11);
    learners[1].frozen = true;
    let before = learners.clone();
    let horizon = 7;
    let buffer = collect_rollouts(&learners, &mut batch, horizon, 99).unwrap();
    assert_eq!(learners, before, "collection must not touch learner state");

    assert_eq!(buffer.samples(), horizon * 4);
    for team in &buffer.teams {
        assert_eq!(team.rewards.len(), horizon * 4);
        assert_eq!(team.values.len(), horizon * 4);
        assert_eq!(team.dones.len(), horizon * 4);
        assert_eq!(team.bootstrap.len(), 4);
        for agent in &team.agents {
            assert_eq!(agent.log_probs.len(), horizon * 4);
            assert_eq!(agent.obs.len(), horizon * 4 * agent.obs_dim);
            assert_eq!(agent.actions.len(), horizon * 4 * agent.act_dim);
        }
    }
}

#[test]
fn stored_log_probs_match_recomputation() {
    let (mut batch, learners) = sumo_batch(3, 5);
    let buffer = collect_rollouts(&learners, &mut batch, 6, 7).unwrap();
    for (ti, team) in buffer.teams.iter().enumerate() {
        let agent = &team.agents[0];
        for s in 0..buffer.samples() {
            let head = learners[ti].policies[0].head(agent.obs_at(s)).unwrap();
            let lp = gaussian_log_prob(&head, agent.action_at(s)).unwrap();
            assert!(
                (lp - agent.log_probs[s]).abs() < 1e-12,
                "team {ti} sample {s}: {lp} vs {}",
                agent.log_probs[s]
            );
        }
    }
}

#[test]
fn collection_is_deterministic_for_fixed_seeds() {
    let (mut batch_a, learners) = sumo_batch(4, 3);
    let (mut batch_b, _) = sumo_batch(4, 3);
    let buf_a = collect_rollouts(&learners, &mut batch_a, 5, 17).unwrap();
    let buf_b = collect_rollouts(&learners, &mut batch_b, 5, 17).unwrap();
    for (ta, tb) in buf_a.teams.iter().zip(buf_b.teams.iter()) {
        assert_eq!(ta.rewards, tb.rewards);
        assert_eq!(ta.values, tb.values);
        assert_eq!(ta.agents[0].actions, tb.agents[0].actions);
    }
}

#[test]
fn zero_advantages_leave_actors_unchanged() {
    let (mut batch, mut learners) = sumo_batch(4, 21);
    let cfg = HappoConfig {
        entropy_coef: 0.0,
        ..HappoConfig::default()
    };
    let mut buffer = collect_rollouts(&learners, &mut batch, 6, 3).unwrap();
    buffer.finalize(&cfg).unwrap();
    // Force the degenerate case: every stored advantage exactly zero.
    for team in buffer.teams.iter_mut() {
        team.advantages.iter_mut().for_each(|a| *a = 0.0);
    }
    let actor_params_before: Vec<_> = learners
        .iter()
        .map(|l| l.policies[0].clone())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    happo_update(&mut learners, &buffer, &cfg, &mut rng).unwrap();
    for (l, before) in learners.iter().zip(actor_params_before.iter()) {
        assert_eq!(&l.policies[0], before, "zero advantage must be a no-op");
    }
}

#[test]
fn frozen_team_is_bit_identical_after_update() {
    let (mut batch, mut learners) = sumo_batch(4, 2);
    learners[1].frozen = true;
    let cfg = HappoConfig::default();
    let mut buffer = collect_rollouts(&learners, &mut batch, 8, 13).unwrap();
    buffer.finalize(&cfg).unwrap();
    let frozen_before = learners[1].clone();
    let unfrozen_before = learners[0].clone();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    happo_update(&mut learners, &buffer, &cfg, &mut rng).unwrap();
    assert_eq!(learners[1], frozen_before);
    assert_ne!(learners[0].policies[0], unfrozen_before.policies[0]);
}

/// Independent plain-PPO reference: same minibatch schedule, gradients
/// derived from scratch. With one agent per team the sequential ratio
/// multiplier is empty, so the trainer must match to near machine
/// precision.
#[test]
fn single_agent_update_equals_plain_ppo_reference() {
    let (mut batch, mut learners) = sumo_batch(4, 31);
    let cfg = HappoConfig {
        epochs: 2,
        minibatches: 2,
        ..HappoConfig::default()
    };
    let mut buffer = collect_rollouts(&learners, &mut batch, 8, 41).unwrap();
    buffer.finalize(&cfg).unwrap();

    let mut reference = learners.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    happo_update(&mut learners, &buffer, &cfg, &mut rng).unwrap();

    // --- reference implementation ---
    let mut ref_rng = ChaCha8Rng::seed_from_u64(123);
    let samples = buffer.samples();
    for (ti, learner) in reference.iter_mut().enumerate() {
        let rollout = &buffer.teams[ti];
        // advantage normalization
        let n = samples as f64;
        let mean = rollout.advantages.iter().sum::<f64>() / n;
        let var = rollout
            .advantages
            .iter()
            .map(|a| (a - mean) * (a - mean))
            .sum::<f64>()
            / n;
        let std = var.sqrt();
        let adv: Vec<f64> = if std < 1e-8 {
            rollout.advantages.clone()
        } else {
            rollout.advantages.iter().map(|a| (a - mean) / std).collect()
        };

        // critic phase
        for _epoch in 0..cfg.epochs {
            let mut idx: Vec<usize> = (0..samples).collect();
            idx.shuffle(&mut ref_rng);
            let per = samples.div_ceil(cfg.minibatches);
            for mb in idx.chunks(per) {
                let m = mb.len() as f64;
                let mut grad = learner.critic.mlp.zeros_like();
                for &s in mb {
                    let obs = rollout.team_obs_at(s);
                    let v = mlp_forward(&learner.critic.mlp, obs).unwrap()[0];
                    let up = [2.0 * cfg.value_coef * (v - rollout.returns[s])];
                    let (g, _) = mlp_backward(&learner.critic.mlp, obs, &up).unwrap();
                    grad.for_each_with(&g, |t, a| *t += a);
                }
                grad.scale(1.0 / m);
                let norm = grad.squared_norm().sqrt();
                if norm > cfg.max_grad_norm {
                    grad.scale(cfg.max_grad_norm / norm);
                }
                adam_step(
                    &mut learner.critic.mlp,
                    &grad,
                    &mut learner.critic_optim,
                    cfg.critic_lr,
                    0.9,
                    0.999,
                    1e-8,
                )
                .unwrap();
            }
        }

        // actor order shuffle (single agent: no rng draws, but keep parity)
        let mut order = vec![0usize];
        order.shuffle(&mut ref_rng);

        // actor phase
        for _epoch in 0..cfg.epochs {
            let mut idx: Vec<usize> = (0..samples).collect();
            idx.shuffle(&mut ref_rng);
            let per = samples.div_ceil(cfg.minibatches);
            for mb in idx.chunks(per) {
                let m = mb.len() as f64;
                let policy = &learner.policies[0];
                let ag = &rollout.agents[0];
                let mut g_mlp = policy.mlp.zeros_like();
                let mut g_ls = vec![0.0; policy.log_std.len()];
                for &s in mb {
                    let obs = ag.obs_at(s);
                    let action = ag.action_at(s);
                    let mean = mlp_forward(&policy.mlp, obs).unwrap();
                    let head = GaussianHead::new(mean, policy.log_std.clone()).unwrap();
                    let lp_new = gaussian_log_prob(&head, action).unwrap();
                    let ratio = (lp_new - ag.log_probs[s]).exp();
                    let a = adv[s];
                    // clipped-surrogate gradient wrt ratio
                    let unclipped = ratio * a;
                    let clipped = ratio.clamp(1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon) * a;
                    let dl_dratio = if unclipped <= clipped { -a } else { 0.0 };
                    let dl_dlp = dl_dratio * ratio;
                    if dl_dlp != 0.0 {
                        let (d_mean, d_ls) = head.log_prob_grad(action).unwrap();
                        let up: Vec<f64> = d_mean.iter().map(|d| d * dl_dlp).collect();
                        let (g, _) = mlp_backward(&policy.mlp, obs, &up).unwrap();
                        g_mlp.for_each_with(&g, |t, gv| *t += gv);
                        for (t, d) in g_ls.iter_mut().zip(d_ls.iter()) {
                            *t += d * dl_dlp;
                        }
                    }
                }
                g_mlp.scale(1.0 / m);
                g_ls.iter_mut().for_each(|g| *g = *g / m - cfg.entropy_coef);
                let norm = (g_mlp.squared_norm()
                    + g_ls.iter().map(|x| x * x).sum::<f64>())
                .sqrt();
                if norm > cfg.max_grad_norm {
                    let sc = cfg.max_grad_norm / norm;
                    g_mlp.scale(sc);
                    g_ls.iter_mut().for_each(|x| *x *= sc);
                }
                let policy = &mut learner.policies[0];
                let (om, ov) = &mut learner.policy_optims[0];
                adam_step(&mut policy.mlp, &g_mlp, om, cfg.actor_lr, 0.9, 0.999, 1e-8).unwrap();
                adam_step_vec(&mut policy.log_std, &g_ls, ov, cfg.actor_lr, 0.9, 0.999, 1e-8)
                    .unwrap();
                for ls in policy.log_std.iter_mut() {
                    *ls = ls.clamp(-20.0, 2.0);
                }
            }
        }
    }

    for (got, want) in learners.iter().zip(reference.iter()) {
        for (lg, lw) in got.policies[0]
            .mlp
            .layers
            .iter()
            .zip(want.policies[0].mlp.layers.iter())
        {
            for (a, b) in lg.weights.iter().zip(lw.weights.iter()) {
                assert!((a - b).abs() < 1e-12, "actor weights diverge: {a} vs {b}");
            }
        }
        for (a, b) in got.policies[0].log_std.iter().zip(want.policies[0].log_std.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        for (lg, lw) in got.critic.mlp.layers.iter().zip(want.critic.mlp.layers.iter()) {
            for (a, b) in lg.weights.iter().zip(lw.weights.iter()) {
                assert!((a - b).abs() < 1e-12, "critic weights diverge");
            }
        }
    }
}

/// Build the stateless zero-sum toy: constant observation, fixed opposing
/// rewards, one-step episodes so the true value is exactly the signed
/// reward.
fn zero_sum_toy(c: f64, samples: usize) -> RolloutBuffer {
    let team = |sign: f64| TeamRollout {
        agents: vec![AgentRollout {
            obs_dim: 1,
            act_dim: 1,
            obs: vec![1.0; samples],
            actions: vec![0.0; samples],
            log_probs: vec![0.0; samples],
        }],
        critic_dim: 1,
        team_obs: vec![1.0; samples],
        rewards: vec![sign * c; samples],
        values: vec![0.0; samples],
        dones: vec![true; samples],
        bootstrap: vec![0.0; 1],
        advantages: Vec::new(),
        returns: Vec::new(),
    };
    RolloutBuffer::new(samples, 1, vec![team(1.0), team(-1.0)])
}

#[test]
fn team_critics_separate_while_shared_critic_collapses() {
    let c = 1.0;
    let steps = 400; // fast unit-scale version; acceptance runs 2000
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cfg = HappoConfig {
        critic_lr: 1e-2,
        ..HappoConfig::default()
    };

    // Team-specific critics on their own signed rewards.
    let mut buffer = zero_sum_toy(c, 64);
    buffer.finalize(&cfg).unwrap();
    for (ti, sign) in [(0usize, 1.0), (1usize, -1.0)] {
        let mut learner = TeamLearner::new(
            ti,
            vec![PolicyNet::init(&[1, 8, 1], 0.0, &mut rng).unwrap()],
            CriticNet::init(&[1, 8, 1], &mut rng).unwrap(),
        );
        fit_critic_to_returns(&mut learner, &buffer.teams[ti], &cfg, steps).unwrap();
        let v = learner.critic.value(&[1.0]).unwrap();
        assert!(
            (v - sign * c).abs() < 0.1 * c,
            "team {ti} critic should reach {} but sits at {v}",
            sign * c
        );
    }

    // Shared critic on the averaged reward: the coupling cancels to zero.
    let shared_cfg = HappoConfig {
        shared_critic_ablation: true,
        critic_lr: 1e-2,
        ..HappoConfig::default()
    };
    let mut buffer = zero_sum_toy(c, 64);
    buffer.finalize(&shared_cfg).unwrap();
    assert!(buffer.teams[0].rewards.iter().all(|&r| r == 0.0));
    let mut shared = TeamLearner::new(
        0,
        vec![PolicyNet::init(&[1, 8, 1], 0.0, &mut rng).unwrap()],
        CriticNet::init(&[1, 8, 1], &mut rng).unwrap(),
    );
    fit_critic_to_returns(&mut shared, &buffer.teams[0], &shared_cfg, steps).unwrap();
    let v = shared.critic.value(&[1.0]).unwrap();
    assert!(v.abs() < 0.05 * c, "shared critic must collapse, got {v}");
}

/// GAE on the toy: one-step episodes make the return equal the reward and
/// the advantage equal `r - V`.
#[test]
fn toy_buffer_returns_equal_rewards() {
    let cfg = HappoConfig::default();
    let mut buffer = zero_sum_toy(2.0, 16);
    buffer.teams[0].values = vec![0.5; 16];
    buffer.finalize(&cfg).unwrap();
    for s in 0..16 {
        assert!((buffer.teams[0].returns[s] - 2.0).abs() < 1e-12);
        assert!((buffer.teams[0].advantages[s] - 1.5).abs() < 1e-12);
    }
}

#[test]
fn gae_is_reexported_and_checks_shapes() {
    let err = compute_gae(&[1.0], &[1.0, 2.0], &[false], &[0.0], 1, 0.9, 0.9);
    assert!(err.is_err());
}

#[test]
fn update_requires_finalized_buffer() {
    let (mut batch, mut learners) = sumo_batch(2, 1);
    let buffer = collect_rollouts(&learners, &mut batch, 3, 1).unwrap();
    let cfg = HappoConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(happo_update(&mut learners, &buffer, &cfg, &mut rng).is_err());
}

#[test]
fn nan_rewards_surface_as_numeric_errors() {
    let (mut batch, learners) = sumo_batch(2, 1);
    let cfg = HappoConfig::default();
    let mut buffer = collect_rollouts(&learners, &mut batch, 3, 1).unwrap();
    buffer.teams[0].rewards[0] = f64::NAN;
    let err = buffer.finalize(&cfg).unwrap_err();
    assert!(err.to_string().contains("non-finite"), "{err}");
    let _ = learners;
}

/// Adam state must be exercised: two updates from identical starts with
/// different seeds diverge (sanity that the permutation rng matters), while
/// identical seeds agree bit-for-bit.
#[test]
fn update_is_deterministic_in_the_rng() {
    let (mut batch, learners0) = sumo_batch(4, 51);
    let cfg = HappoConfig::default();
    let mut buffer = collect_rollouts(&learners0, &mut batch, 6, 2).unwrap();
    buffer.finalize(&cfg).unwrap();

    let mut a = learners0.clone();
    let mut b = learners0.clone();
    happo_update(&mut a, &buffer, &cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    happo_update(&mut b, &buffer, &cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    assert_eq!(a, b);
}
