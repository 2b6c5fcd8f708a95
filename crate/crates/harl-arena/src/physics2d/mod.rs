//! Deterministic fixed-timestep 2D rigid-disc dynamics.
//!
//! Integration (semi-implicit Euler with linear drag), single-pass impulse
//! collision resolution with positional projection, circular-arena excursion
//! tests, rectangular containment, and ray-proximity queries. Everything is
//! pure state-in/state-out `f64`, so a batch of environment instances can be
//! stepped in parallel with no shared mutable state.

mod body;
mod collision;
mod dynamics;
mod queries;
mod vec2;

pub use body::{ActuationLimits, ArenaShape, ArenaSpec, BodyKind, DiscBody, Ray};
pub use collision::{resolve_collisions, resolve_collisions_masked};
pub use dynamics::{apply_action, integrate, integrate_masked, wrap_angle, Actuation};
pub use queries::{clamp_to_rect, point_ray_distance, ring_excursion, Excursion};
pub use vec2::Vec2;
