//! Adversarial multi-team reinforcement learning over a vectorized 2D
//! disc-physics arena.
//!
//! The crate is organized in layers:
//!
//! - [`numcore`] — minimal feed-forward networks, Gaussian policy heads, and
//!   an Adam optimizer with analytically verified gradients.
//! - [`physics2d`] — deterministic fixed-timestep rigid-disc dynamics with
//!   impulse collision resolution and ray-proximity queries.
//! - [`envs`] — the multi-team task environments (walk-to-point, block-push,
//!   adversarial sumo, laser tag) with their reward functions and
//!   fixed-width observation construction.
//! - [`harl`] — the multi-team trainer: rollout collection, generalized
//!   advantage estimation, team-specific critics, clipped-surrogate
//!   sequential actor updates, and the simultaneous / leapfrog regimes.
//! - [`curriculum`] — stage plans, the constant-width zero-buffer
//!   observation contract, and checkpoint transfer between stages.
//! - [`harness`] — run configuration, checkpoint persistence, win-rate
//!   tournaments, metrics export, and the CLI entry points.
//!
//! Everything is seeded and deterministic: identical `(config, seed)` pairs
//! produce byte-identical metrics files and checkpoints.

pub mod codec;
pub mod curriculum;
pub mod envs;
pub mod error;
pub mod harl;
pub mod harness;
pub mod numcore;
pub mod physics2d;
pub mod seeding;

pub use error::{ArenaError, Result};
