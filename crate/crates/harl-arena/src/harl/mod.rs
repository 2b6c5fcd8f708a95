//! Multi-team trainer: on-policy rollout collection, generalized advantage
//! estimation, team-specific critics, clipped-surrogate actor updates with
//! the sequential ratio-corrected ordering, and the simultaneous / leapfrog
//! adversarial regimes.
//!
//! Each team owns one critic trained only on that team's reward stream, so
//! strictly coupled zero-sum rewards keep producing non-trivial advantage
//! signals; a shared-critic ablation (one critic regressed on the cross-team
//! mean reward) exists to demonstrate the value collapse that motivates the
//! separation.

mod buffer;
mod gae;
mod learner;
mod loss;
mod regime;
mod rollout;
mod update;

pub use buffer::{AgentRollout, RolloutBuffer, TeamRollout};
pub use gae::compute_gae;
pub use learner::{CriticNet, HappoConfig, PolicyNet, TeamLearner};
pub use loss::{ppo_clip_loss, ppo_clip_loss_grad};
pub use regime::{run_regime, Regime, RegimeHooks, TrainHistory, UpdateRecord};
pub use rollout::collect_rollouts;
pub use update::{fit_critic_to_returns, happo_update, TeamUpdateStats, UpdateStats};
