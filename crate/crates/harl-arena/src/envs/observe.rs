//! Per-agent observation features and their slot declarations.

use crate::curriculum::{pad_observation, ObservationLayout};
use crate::envs::spec::{agent_index, EnvConfig, TaskTag, TeamSpec};
use crate::envs::state::EnvState;
use crate::error::{ArenaError, Result};
use crate::physics2d::{ArenaShape, Vec2};

/// The feature slots one agent observes in a given task, in declaration
/// order. Common slots come first; task-specific slots follow. Slot names
/// for other agents are keyed by team and member index so layouts stay
/// stable across stages.
pub fn feature_slots(
    task: TaskTag,
    teams: &[TeamSpec],
    team_id: usize,
    member_id: usize,
) -> Result<Vec<(String, usize)>> {
    let team = teams
        .get(team_id)
        .ok_or_else(|| ArenaError::Config(format!("team {team_id} out of range")))?;
    let agent = team
        .agents
        .get(member_id)
        .ok_or_else(|| ArenaError::Config(format!("agent {member_id} out of range")))?;

    let mut slots: Vec<(String, usize)> = vec![
        ("self_vel".into(), 2),
        ("self_heading".into(), 2),
        ("goal_rel".into(), 2),
        ("arena_r".into(), 1),
        ("center_dist".into(), 1),
    ];
    match task {
        TaskTag::WalkToPoint => {}
        TaskTag::BlockPush => {
            slots.push(("block_rel".into(), 2));
            slots.push(("block_vel".into(), 2));
        }
        TaskTag::SumoAdversarial | TaskTag::LaserTag => {
            for (mi, _) in team.agents.iter().enumerate() {
                if mi == member_id {
                    continue;
                }
                slots.push((format!("mate{mi}_rel"), 2));
                slots.push((format!("mate{mi}_vel"), 2));
            }
            for (ti, other) in teams.iter().enumerate() {
                if ti == team_id {
                    continue;
                }
                for (mi, _) in other.agents.iter().enumerate() {
                    slots.push((format!("opp{ti}_{mi}_rel"), 2));
                    slots.push((format!("opp{ti}_{mi}_vel"), 2));
                }
            }
            if task == TaskTag::LaserTag && agent.flyer {
                slots.push(("self_alt".into(), 1));
                slots.push(("self_climb".into(), 1));
            }
        }
    }
    Ok(slots)
}

fn arena_radius_feature(state: &EnvState) -> f64 {
    match state.arena.shape {
        ArenaShape::Ring { r_max } => r_max,
        ArenaShape::Rect { width, height } => 0.5 * width.min(height),
    }
}

/// Assemble one agent's fixed-width observation for the given stage. Active
/// slots are written in layout order; inactive and buffer slots read exact
/// zeros. Slots that are active but have no referent in the current task
/// (e.g. block features carried into the adversarial stage) read zeros.
pub fn build_observation(
    state: &EnvState,
    teams: &[TeamSpec],
    task: TaskTag,
    cfg: &EnvConfig,
    agent: usize,
    layout: &ObservationLayout,
    stage: usize,
) -> Result<Vec<f64>> {
    let index = agent_index(teams);
    let (team_id, member_id) = *index
        .get(agent)
        .ok_or_else(|| ArenaError::Config(format!("agent index {agent} out of range")))?;
    let body = &state.bodies[agent];
    let goal = state.goals[agent];

    let mut feats: Vec<(String, Vec<f64>)> = Vec::with_capacity(layout.slots.len());
    let active = layout.active_names(stage);
    let is_active = |name: &str| active.iter().any(|n| *n == name);

    if is_active("self_vel") {
        feats.push(("self_vel".into(), vec![body.velocity.x, body.velocity.y]));
    }
    if is_active("self_heading") {
        feats.push((
            "self_heading".into(),
            vec![body.heading.sin(), body.heading.cos()],
        ));
    }
    if is_active("goal_rel") {
        let rel = goal - body.position;
        feats.push(("goal_rel".into(), vec![rel.x, rel.y]));
    }
    if is_active("arena_r") {
        feats.push(("arena_r".into(), vec![arena_radius_feature(state)]));
    }
    if is_active("center_dist") {
        feats.push(("center_dist".into(), vec![body.position.norm()]));
    }
    if is_active("block_rel") || is_active("block_vel") {
        // The block is the body after the agents when the task has one.
        let (rel, vel) = if task == TaskTag::BlockPush {
            let block = &state.bodies[state.n_agents()];
            (block.position - body.position, block.velocity)
        } else {
            (Vec2::ZERO, Vec2::ZERO)
        };
        if is_active("block_rel") {
            feats.push(("block_rel".into(), vec![rel.x, rel.y]));
        }
        if is_active("block_vel") {
            feats.push(("block_vel".into(), vec![vel.x, vel.y]));
        }
    }
    for (other_global, &(ti, mi)) in index.iter().enumerate() {
        if other_global == agent {
            continue;
        }
        let (rel_name, vel_name) = if ti == team_id {
            (format!("mate{mi}_rel"), format!("mate{mi}_vel"))
        } else {
            (format!("opp{ti}_{mi}_rel"), format!("opp{ti}_{mi}_vel"))
        };
        let other = &state.bodies[other_global];
        if is_active(&rel_name) {
            let rel = other.position - body.position;
            feats.push((rel_name, vec![rel.x, rel.y]));
        }
        if is_active(&vel_name) {
            feats.push((vel_name, vec![other.velocity.x, other.velocity.y]));
        }
    }
    if is_active("self_alt") {
        feats.push(("self_alt".into(), vec![body.altitude]));
    }
    if is_active("self_climb") {
        feats.push(("self_climb".into(), vec![body.climb_rate]));
    }

    let _ = (cfg, member_id);
    let borrowed: Vec<(&str, &[f64])> = feats
        .iter()
        .map(|(n, v)| (n.as_str(), v.as_slice()))
        .collect();
    pad_observation(&borrowed, layout, stage)
}
