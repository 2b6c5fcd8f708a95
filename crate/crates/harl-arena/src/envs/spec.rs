//! Task, team, and reward configuration types.

use serde::{Deserialize, Serialize};

use crate::error::{ArenaError, Result};
use crate::physics2d::{ActuationLimits, ArenaShape, ArenaSpec, BodyKind, Vec2};

/// The four built-in tasks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskTag {
    WalkToPoint,
    BlockPush,
    SumoAdversarial,
    LaserTag,
}

impl TaskTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            TaskTag::WalkToPoint => "walk_to_point",
            TaskTag::BlockPush => "block_push",
            TaskTag::SumoAdversarial => "sumo_adversarial",
            TaskTag::LaserTag => "laser_tag",
        }
    }

    pub fn code(&self) -> u8 {
        match self {
            TaskTag::WalkToPoint => 0,
            TaskTag::BlockPush => 1,
            TaskTag::SumoAdversarial => 2,
            TaskTag::LaserTag => 3,
        }
    }

    pub fn from_code(code: u8) -> Result<TaskTag> {
        Ok(match code {
            0 => TaskTag::WalkToPoint,
            1 => TaskTag::BlockPush,
            2 => TaskTag::SumoAdversarial,
            3 => TaskTag::LaserTag,
            other => return Err(ArenaError::Format(format!("unknown task code {other}"))),
        })
    }

    /// Adversarial tasks pit two teams against each other.
    pub fn is_adversarial(&self) -> bool {
        matches!(self, TaskTag::SumoAdversarial | TaskTag::LaserTag)
    }
}

/// One agent's body template and action interface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub kind: BodyKind,
    pub radius: f64,
    pub mass: f64,
    #[serde(default)]
    pub limits: ActuationLimits,
    /// Flight-capable agents get a third throttle action channel and an
    /// altitude state.
    #[serde(default)]
    pub flyer: bool,
}

impl AgentSpec {
    pub fn action_dim(&self) -> usize {
        match self.kind {
            BodyKind::Static => 0,
            _ => {
                if self.flyer {
                    3
                } else {
                    2
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.radius <= 0.0 || self.mass <= 0.0 {
            return Err(ArenaError::Config(
                "agent radius and mass must be positive".into(),
            ));
        }
        if self.flyer && self.kind != BodyKind::Holonomic {
            return Err(ArenaError::Config(
                "flyers must use holonomic bodies".into(),
            ));
        }
        Ok(())
    }
}

/// A team: id plus its member agents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeamSpec {
    pub team_id: usize,
    pub agents: Vec<AgentSpec>,
}

/// Validate that team ids are contiguous from zero and every team has at
/// least one agent.
pub fn validate_teams(teams: &[TeamSpec]) -> Result<()> {
    if teams.is_empty() {
        return Err(ArenaError::Config("at least one team is required".into()));
    }
    for (i, team) in teams.iter().enumerate() {
        if team.team_id != i {
            return Err(ArenaError::Config(format!(
                "team ids must be contiguous from 0, got {} at index {i}",
                team.team_id
            )));
        }
        if team.agents.is_empty() {
            return Err(ArenaError::Config(format!("team {i} has no agents")));
        }
        for agent in &team.agents {
            agent.validate()?;
        }
    }
    Ok(())
}

/// Total number of agents across all teams.
pub fn agent_count(teams: &[TeamSpec]) -> usize {
    teams.iter().map(|t| t.agents.len()).sum()
}

/// Flattened `(team, member)` index pairs in global agent order.
pub fn agent_index(teams: &[TeamSpec]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (ti, t) in teams.iter().enumerate() {
        for mi in 0..t.agents.len() {
            out.push((ti, mi));
        }
    }
    out
}

/// Dense shaping terms for the walk-to-point stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapingKind {
    /// Dot product of velocity with the unit vector toward the goal.
    VelocityTowardGoal,
    /// Negative squared norm of the commanded action.
    ActionMagnitudePenalty,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapingTerm {
    pub weight: f64,
    pub term: ShapingKind,
}

/// Reward scalars shared by the staged tasks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardConfig {
    /// Dense shaping terms summed into the walk-to-point reward.
    pub shaping: Vec<ShapingTerm>,
    /// Sparse event scale (goal reached, block out, ring left).
    pub sparse_scale: f64,
    /// Dense goal-distance reward scale.
    pub dist_scale: f64,
    /// Sharpness of the goal-distance falloff.
    pub dist_sharpness: f64,
    /// Fixed per-step penalty for the block-push stage; must be <= 0.
    pub step_penalty: f64,
    /// Terminal reward magnitude for the adversarial stage; must be > 0.
    pub match_scale: f64,
    /// Control timestep in seconds, scales the dense block-push terms.
    pub dt: f64,
    /// Goal counts as reached when the agent center is closer than this.
    pub reach_radius: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            shaping: vec![
                ShapingTerm {
                    weight: 0.1,
                    term: ShapingKind::VelocityTowardGoal,
                },
                ShapingTerm {
                    weight: -0.01,
                    term: ShapingKind::ActionMagnitudePenalty,
                },
            ],
            sparse_scale: 10.0,
            dist_scale: 1.0,
            dist_sharpness: 1.0,
            step_penalty: -0.005,
            match_scale: 1.0,
            dt: 1.0 / 60.0,
            reach_radius: 0.25,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        if self.match_scale <= 0.0 {
            return Err(ArenaError::Config("match_scale must be > 0".into()));
        }
        if self.step_penalty > 0.0 {
            return Err(ArenaError::Config("step_penalty must be <= 0".into()));
        }
        if self.dist_sharpness <= 0.0 {
            return Err(ArenaError::Config("dist_sharpness must be > 0".into()));
        }
        if self.dt <= 0.0 {
            return Err(ArenaError::Config("dt must be > 0".into()));
        }
        Ok(())
    }
}

/// Everything an environment instance needs besides the team specs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    pub arena: ArenaSpec,
    pub reward: RewardConfig,
    pub max_episode_len: usize,
    /// Linear drag coefficient applied to all dynamic bodies (1/s).
    pub drag: f64,
    /// Collision restitution; 0 keeps pushing contests in sustained contact.
    pub restitution: f64,
    /// Walk-to-point goals are sampled with distance in this band.
    pub goal_band: (f64, f64),
    /// A flyer within this distance of an active ray is knocked out.
    pub knockout_radius: f64,
    /// Rays tag flyers only at or below this altitude.
    pub ray_height: f64,
    /// Initial flyer altitude.
    pub spawn_altitude: f64,
    /// Planar offset from a paired opponent defining each flyer's chase goal.
    pub flyer_goal_offset: (f64, f64),
    /// Pushable block dimensions for the block-push task.
    pub block_radius: f64,
    pub block_mass: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            arena: ArenaSpec {
                shape: ArenaShape::Ring { r_max: 4.0 },
                min_height: 0.0,
            },
            reward: RewardConfig::default(),
            max_episode_len: 600,
            drag: 0.5,
            restitution: 0.0,
            goal_band: (1.0, 3.0),
            knockout_radius: 0.3,
            ray_height: 3.0,
            spawn_altitude: 2.0,
            flyer_goal_offset: (0.0, 2.0),
            block_radius: 0.4,
            block_mass: 2.0,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        self.reward.validate()?;
        if self.max_episode_len == 0 {
            return Err(ArenaError::Config("max_episode_len must be >= 1".into()));
        }
        if self.goal_band.0 < 0.0 || self.goal_band.1 < self.goal_band.0 {
            return Err(ArenaError::Config("goal_band must satisfy 0 <= d_min <= d_max".into()));
        }
        Ok(())
    }

    pub fn flyer_goal_offset_vec(&self) -> Vec2 {
        Vec2::new(self.flyer_goal_offset.0, self.flyer_goal_offset.1)
    }
}

/// A stable 64-bit digest of the team structure, embedded in trajectory
/// logs so replays reject mismatched specs.
pub fn spec_digest(teams: &[TeamSpec], task: TaskTag) -> u64 {
    // FNV-1a over the structural fields.
    let mut h: u64 = 0xcbf29ce484222325;
    let mut eat = |byte: u8| {
        h ^= byte as u64;
        h = h.wrapping_mul(0x100000001b3);
    };
    eat(task.code());
    for team in teams {
        eat(0xFE);
        for agent in &team.agents {
            eat(match agent.kind {
                BodyKind::Holonomic => 1,
                BodyKind::DifferentialDrive => 2,
                BodyKind::Static => 3,
            });
            eat(agent.flyer as u8);
            for v in [agent.radius, agent.mass] {
                for b in v.to_le_bytes() {
                    eat(b);
                }
            }
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn holo(radius: f64) -> AgentSpec {
        AgentSpec {
            kind: BodyKind::Holonomic,
            radius,
            mass: 1.0,
            limits: ActuationLimits::default(),
            flyer: false,
        }
    }

    #[test]
    fn team_ids_must_be_contiguous() {
        let teams = vec![TeamSpec {
            team_id: 1,
            agents: vec![holo(0.3)],
        }];
        assert!(validate_teams(&teams).is_err());
    }

    #[test]
    fn empty_team_is_rejected() {
        let teams = vec![TeamSpec {
            team_id: 0,
            agents: vec![],
        }];
        assert!(validate_teams(&teams).is_err());
    }

    #[test]
    fn reward_config_invariants() {
        let mut cfg = RewardConfig::default();
        cfg.validate().unwrap();
        cfg.match_scale = 0.0;
        assert!(cfg.validate().is_err());
        cfg.match_scale = 1.0;
        cfg.step_penalty = 0.1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn digest_changes_with_structure() {
        let teams_a = vec![TeamSpec {
            team_id: 0,
            agents: vec![holo(0.3)],
        }];
        let teams_b = vec![TeamSpec {
            team_id: 0,
            agents: vec![holo(0.4)],
        }];
        assert_ne!(
            spec_digest(&teams_a, TaskTag::WalkToPoint),
            spec_digest(&teams_b, TaskTag::WalkToPoint)
        );
        assert_ne!(
            spec_digest(&teams_a, TaskTag::WalkToPoint),
            spec_digest(&teams_a, TaskTag::BlockPush)
        );
    }
}
