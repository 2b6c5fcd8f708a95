//! Multi-team task environments over the disc arena.
//!
//! Four tasks share one state/step machinery: walk-to-point and block-push
//! are the skill stages of the sumo curriculum, sumo is the terminal
//! adversarial stage, and laser tag is a planar pursuit task with
//! flight-capable agents and heading-locked knockout rays. Rewards,
//! termination rules, and zero-padded fixed-width observations all live
//! here.

mod batch;
mod env;
mod observe;
mod rewards;
mod spec;
mod state;
mod trajectory;

pub use batch::{EnvBatch, ObsContext};
pub use env::{Env, StepOutcome, TerminalSummary};
pub use observe::{build_observation, feature_slots};
pub use rewards::{reward_block_push, reward_laser_tag, reward_sumo, reward_walk_to_point};
pub use spec::{
    agent_count, agent_index, spec_digest, validate_teams, AgentSpec, EnvConfig, RewardConfig,
    ShapingKind, ShapingTerm, TaskTag, TeamSpec,
};
pub use state::{EliminationStatus, EnvState, StepEvents};
pub use trajectory::{TrajectoryLog, TrajectoryStep};
