//! Task reward functions.
//!
//! Walk-to-point and block-push are dense shaped rewards driving the skill
//! stages; the adversarial match reward is terminal-only and strictly
//! coupled between the two teams; laser tag mixes per-step chase rewards
//! with knockout events.

use crate::envs::spec::{agent_index, EnvConfig, RewardConfig, ShapingKind, TaskTag, TeamSpec};
use crate::envs::state::{EliminationStatus, EnvState};
use crate::error::{ArenaError, Result};
use crate::physics2d::ArenaShape;

/// Laser-tag per-step penalty on the tank team (invented reward shape).
pub const LASER_TANK_STEP_PENALTY: f64 = 0.01;

fn ring_radius(state: &EnvState) -> Result<f64> {
    match state.arena.shape {
        ArenaShape::Ring { r_max } => Ok(r_max),
        ArenaShape::Rect { .. } => Err(ArenaError::Contract("task requires a ring arena".into())),
    }
}

/// Walk-to-point: shaping terms plus a one-shot arrival bonus and a dense
/// distance term, `sum_i W_i + delta * 1_reached + gamma * (1 - tanh(alpha * d))`.
pub fn reward_walk_to_point(state: &EnvState, agent: usize, cfg: &RewardConfig) -> f64 {
    let body = &state.bodies[agent];
    let goal = state.goals[agent];
    let d = body.position.distance(goal);

    let mut shaping = 0.0;
    for term in &cfg.shaping {
        let value = match term.term {
            ShapingKind::VelocityTowardGoal => {
                let dir = (goal - body.position).normalized();
                body.velocity.dot(dir)
            }
            ShapingKind::ActionMagnitudePenalty => state.last_actions[agent]
                .iter()
                .map(|a| a * a)
                .sum::<f64>(),
        };
        shaping += term.weight * value;
    }

    let reached = if state.events.reached_now[agent] {
        cfg.sparse_scale
    } else {
        0.0
    };
    shaping + reached + cfg.dist_scale * (1.0 - (cfg.dist_sharpness * d).tanh())
}

/// Block-push: `(r_hat + d_hat) * dt + T + delta * (1_push_out - 1_left_ring)`
/// where `r_hat = tanh(r / r_max)` grows as the agent's block moves away
/// from the center and `d_hat = 1 - tanh(d / r_max)` rewards closing the
/// agent-block surface distance. Event indicators fire on the transition
/// step only.
pub fn reward_block_push(state: &EnvState, agent: usize, cfg: &RewardConfig) -> Result<f64> {
    let r_max = ring_radius(state)?;
    let body = &state.bodies[agent];
    let block = &state.bodies[state.n_agents() + agent];

    let block_center_dist = block.position.norm();
    let agent_block_dist = (body.position.distance(block.position) - body.radius - block.radius).max(0.0);

    let r_hat = (block_center_dist / r_max).tanh();
    let d_hat = 1.0 - (agent_block_dist / r_max).tanh();

    let mut events = 0.0;
    if state.events.block_out_now[agent] {
        events += cfg.sparse_scale;
    }
    if state.events.left_ring_now[agent] {
        events -= cfg.sparse_scale;
    }
    Ok((r_hat + d_hat) * cfg.dt + cfg.step_penalty + events)
}

/// Terminal adversarial match reward for team `i`:
/// `tie_gate * (out_j - out_i - timeout) * scale`, where `out_i` is 1 when
/// any member of team `i` has left the ring, `tie_gate` is 0 when both
/// teams went out in the same step, and `timeout` is 1 when the episode
/// ended by length. Zero on non-terminal steps (enforced by the caller).
pub fn reward_sumo(elim: &EliminationStatus, team_i: usize, cfg: &RewardConfig) -> Result<f64> {
    if elim.team_out.len() != 2 {
        return Err(ArenaError::Contract(format!(
            "adversarial match reward is defined for 2 teams, got {}",
            elim.team_out.len()
        )));
    }
    if team_i > 1 {
        return Err(ArenaError::Contract(format!("team index {team_i} not in {{0, 1}}")));
    }
    let team_j = 1 - team_i;
    let tau = if elim.tie { 0.0 } else { 1.0 };
    let l_i = elim.team_out[team_i] as u8 as f64;
    let l_j = elim.team_out[team_j] as u8 as f64;
    let phi = elim.timeout as u8 as f64;
    Ok(tau * (l_j - l_i - phi) * cfg.match_scale)
}

/// Laser-tag team rewards. The ground team earns +1 per knockout event and
/// pays a small per-step cost; the flyer team earns `exp(-dist)` to its
/// per-agent chase goal (averaged over surviving flyers) and -1 per member
/// knocked out this step.
pub fn reward_laser_tag(
    state: &EnvState,
    teams: &[TeamSpec],
    team_i: usize,
    cfg: &EnvConfig,
) -> Result<f64> {
    let _ = cfg;
    let team = teams
        .get(team_i)
        .ok_or_else(|| ArenaError::Contract(format!("team {team_i} out of range")))?;
    let index = agent_index(teams);
    let flyer_team = team.agents.iter().any(|a| a.flyer);

    let knockouts_this_step = index
        .iter()
        .enumerate()
        .filter(|(g, (ti, _))| {
            teams[*ti].agents[index[*g].1].flyer && state.events.knocked_out_now[*g]
        })
        .count() as f64;

    if flyer_team {
        let mut chase = 0.0;
        let mut alive = 0usize;
        for (g, &(ti, _)) in index.iter().enumerate() {
            if ti != team_i || state.elim.eliminated[g] {
                continue;
            }
            let dist = state.bodies[g].position.distance(state.goals[g]);
            chase += (-dist).exp();
            alive += 1;
        }
        let chase_mean = if alive > 0 { chase / alive as f64 } else { 0.0 };
        Ok(chase_mean - knockouts_this_step)
    } else {
        Ok(knockouts_this_step - LASER_TANK_STEP_PENALTY)
    }
}

/// Dispatch to the task's per-team reward. Per-agent rewards are averaged
/// over team members so team size does not change the reward scale.
pub fn team_reward(
    state: &EnvState,
    teams: &[TeamSpec],
    task: TaskTag,
    cfg: &EnvConfig,
    team_i: usize,
    terminal: bool,
) -> Result<f64> {
    match task {
        TaskTag::WalkToPoint => {
            let index = agent_index(teams);
            let members: Vec<usize> = index
                .iter()
                .enumerate()
                .filter(|(_, (ti, _))| *ti == team_i)
                .map(|(g, _)| g)
                .collect();
            let sum: f64 = members
                .iter()
                .map(|&g| reward_walk_to_point(state, g, &cfg.reward))
                .sum();
            Ok(sum / members.len() as f64)
        }
        TaskTag::BlockPush => {
            let index = agent_index(teams);
            let members: Vec<usize> = index
                .iter()
                .enumerate()
                .filter(|(_, (ti, _))| *ti == team_i)
                .map(|(g, _)| g)
                .collect();
            let mut sum = 0.0;
            for &g in &members {
                sum += reward_block_push(state, g, &cfg.reward)?;
            }
            Ok(sum / members.len() as f64)
        }
        TaskTag::SumoAdversarial => {
            if terminal {
                reward_sumo(&state.elim, team_i, &cfg.reward)
            } else {
                Ok(0.0)
            }
        }
        TaskTag::LaserTag => reward_laser_tag(state, teams, team_i, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::spec::RewardConfig;
    use crate::envs::state::{EliminationStatus, StepEvents};
    use crate::envs::EnvState;
    use crate::physics2d::{ArenaSpec, BodyKind, DiscBody, Vec2};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bare_state(bodies: Vec<DiscBody>, n_agents: usize, arena: ArenaSpec) -> EnvState {
        EnvState {
            bodies,
            arena,
            goals: vec![Vec2::ZERO; n_agents],
            elim: EliminationStatus::new(2, n_agents),
            step: 0,
            rng: ChaCha8Rng::seed_from_u64(0),
            reached: vec![false; n_agents],
            block_out: vec![false; n_agents],
            last_actions: vec![vec![0.0, 0.0]; n_agents],
            events: StepEvents::new(n_agents),
            done: false,
        }
    }

    fn no_shaping() -> RewardConfig {
        RewardConfig {
            shaping: vec![],
            ..RewardConfig::default()
        }
    }

    #[test]
    fn walk_reward_at_goal_on_arrival_step() {
        let agent = DiscBody::new(BodyKind::Holonomic, Vec2::ZERO, 0.3, 1.0).unwrap();
        let mut state = bare_state(vec![agent], 1, ArenaSpec::ring(4.0).unwrap());
        state.events.reached_now[0] = true;
        let cfg = no_shaping();
        let r = reward_walk_to_point(&state, 0, &cfg);
        assert!((r - (cfg.sparse_scale + cfg.dist_scale)).abs() < 1e-12);
    }

    #[test]
    fn walk_reward_saturates_far_away() {
        let agent = DiscBody::new(BodyKind::Holonomic, Vec2::ZERO, 0.3, 1.0).unwrap();
        let mut state = bare_state(vec![agent], 1, ArenaSpec::ring(4.0).unwrap());
        state.goals[0] = Vec2::new(1e6, 0.0);
        let r = reward_walk_to_point(&state, 0, &no_shaping());
        assert!(r.abs() < 1e-12);
    }

    /// d = 1, alpha = 1, gamma = 1, delta = 0, no shaping: 1 - tanh(1).
    #[test]
    fn walk_reward_matches_tanh_reference() {
        let agent = DiscBody::new(BodyKind::Holonomic, Vec2::ZERO, 0.3, 1.0).unwrap();
        let mut state = bare_state(vec![agent], 1, ArenaSpec::ring(4.0).unwrap());
        state.goals[0] = Vec2::new(1.0, 0.0);
        let cfg = RewardConfig {
            shaping: vec![],
            sparse_scale: 0.0,
            dist_scale: 1.0,
            dist_sharpness: 1.0,
            ..RewardConfig::default()
        };
        let r = reward_walk_to_point(&state, 0, &cfg);
        // reference value of 1 - tanh(1) ~= 0.23840584404423515
        assert!((r - 0.23840584404423515).abs() < 1e-12);
    }

    fn block_push_state(agent_pos: Vec2, block_pos: Vec2, touching: bool) -> EnvState {
        let agent = DiscBody::new(BodyKind::Holonomic, agent_pos, 0.3, 1.0).unwrap();
        let mut block = DiscBody::new(BodyKind::Holonomic, block_pos, 0.4, 2.0).unwrap();
        if touching {
            block.position = agent_pos + Vec2::new(0.7, 0.0);
        }
        bare_state(vec![agent, block], 1, ArenaSpec::ring(4.0).unwrap())
    }

    #[test]
    fn block_push_center_touching_gives_dt_plus_penalty() {
        let state = block_push_state(Vec2::new(-0.7, 0.0), Vec2::ZERO, true);
        let cfg = no_shaping();
        let r = reward_block_push(&state, 0, &cfg).unwrap();
        assert!((r - (cfg.dt + cfg.step_penalty)).abs() < 1e-12);
    }

    /// r = r_max and d = r_max: tanh terms cancel symmetrically.
    #[test]
    fn block_push_symmetric_cancellation() {
        let r_max = 4.0;
        // block at distance r_max from center; agent surface distance r_max
        // from the block (center gap r_max + both radii)
        let agent =
            DiscBody::new(BodyKind::Holonomic, Vec2::new(-2.0 * r_max - 0.7, 0.0), 0.3, 1.0).unwrap();
        let block = DiscBody::new(BodyKind::Holonomic, Vec2::new(-r_max, 0.0), 0.4, 2.0).unwrap();
        let state = bare_state(vec![agent, block], 1, ArenaSpec::ring(r_max).unwrap());
        let cfg = no_shaping();
        let r = reward_block_push(&state, 0, &cfg).unwrap();
        assert!((r - (cfg.dt + cfg.step_penalty)).abs() < 1e-12, "r = {r}");
    }

    #[test]
    fn block_push_event_terms() {
        let mut state = block_push_state(Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0), false);
        let cfg = no_shaping();
        let base = reward_block_push(&state, 0, &cfg).unwrap();

        state.events.block_out_now[0] = true;
        let push_out = reward_block_push(&state, 0, &cfg).unwrap();
        assert!((push_out - base - cfg.sparse_scale).abs() < 1e-12);

        state.events.left_ring_now[0] = true;
        let both = reward_block_push(&state, 0, &cfg).unwrap();
        assert!((both - base).abs() < 1e-12, "events cancel");

        state.events.block_out_now[0] = false;
        let left_only = reward_block_push(&state, 0, &cfg).unwrap();
        assert!((left_only - base + cfg.sparse_scale).abs() < 1e-12);
    }

    fn elim(l0: bool, l1: bool, tie: bool, timeout: bool) -> EliminationStatus {
        EliminationStatus {
            team_out: vec![l0, l1],
            tie,
            timeout,
            eliminated: vec![],
        }
    }

    #[test]
    fn sumo_win_is_plus_kappa() {
        let cfg = RewardConfig::default();
        let e = elim(false, true, false, false);
        assert_eq!(reward_sumo(&e, 0, &cfg).unwrap(), cfg.match_scale);
        assert_eq!(reward_sumo(&e, 1, &cfg).unwrap(), -cfg.match_scale);
    }

    #[test]
    fn sumo_simultaneous_elimination_is_zero() {
        let cfg = RewardConfig::default();
        let e = elim(true, true, true, false);
        assert_eq!(reward_sumo(&e, 0, &cfg).unwrap(), 0.0);
        assert_eq!(reward_sumo(&e, 1, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn sumo_timeout_penalizes_both() {
        let cfg = RewardConfig {
            match_scale: 1.0,
            ..RewardConfig::default()
        };
        let e = elim(false, false, false, true);
        assert_eq!(reward_sumo(&e, 0, &cfg).unwrap(), -1.0);
        assert_eq!(reward_sumo(&e, 1, &cfg).unwrap(), -1.0);
    }

    #[test]
    fn sumo_rejects_bad_team_index() {
        let cfg = RewardConfig::default();
        let e = elim(false, false, false, false);
        assert!(reward_sumo(&e, 2, &cfg).is_err());
    }

    /// Antisymmetry whenever tie and timeout are both absent.
    #[test]
    fn sumo_antisymmetric_over_random_states() {
        let cfg = RewardConfig {
            match_scale: 2.5,
            ..RewardConfig::default()
        };
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let l0 = rng.gen_bool(0.5);
            let l1 = rng.gen_bool(0.5);
            let tie = l0 && l1 && rng.gen_bool(0.5);
            let e = elim(l0, l1, tie, false);
            let r0 = reward_sumo(&e, 0, &cfg).unwrap();
            let r1 = reward_sumo(&e, 1, &cfg).unwrap();
            assert_eq!(r0, -r1);
        }
    }
}
