//! Minimal feed-forward networks, Gaussian policy heads, and an Adam
//! optimizer.
//!
//! This is the numeric substrate for every actor and critic in the crate.
//! Everything is `f64`, scalar, and allocation-predictable; gradients are
//! hand-derived reverse mode and checked against central finite differences
//! in the test suite.

mod adam;
mod gaussian;
mod mlp;

pub use adam::{adam_step, adam_step_vec, AdamState, AdamVec};
pub use gaussian::{gaussian_log_prob, gaussian_sample, GaussianHead, LOG_STD_MAX, LOG_STD_MIN};
pub use mlp::{init_mlp, mlp_backward, mlp_backward_into, mlp_forward, Activation, Linear, MlpParams};
