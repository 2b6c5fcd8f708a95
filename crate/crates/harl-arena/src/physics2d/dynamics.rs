//! Action-to-force mapping and semi-implicit Euler integration.

use crate::error::{ArenaError, Result};
use crate::physics2d::body::{ActuationLimits, BodyKind, DiscBody};
use crate::physics2d::vec2::Vec2;

/// Forces produced by one control step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Actuation {
    pub force: Vec2,
    pub torque: f64,
    pub lift: f64,
}

impl Actuation {
    pub const ZERO: Actuation = Actuation {
        force: Vec2::ZERO,
        torque: 0.0,
        lift: 0.0,
    };
}

/// Wrap an angle to (-pi, pi].
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut t = theta % two_pi;
    if t <= -std::f64::consts::PI {
        t += two_pi;
    } else if t > std::f64::consts::PI {
        t -= two_pi;
    }
    t
}

/// Convert a unitless command vector to clamped forces for this body kind.
///
/// - `Holonomic` expects 2 channels: a planar force direction whose norm is
///   clamped to 1 and scaled by `max_force`.
/// - `DifferentialDrive` expects 2 channels: left/right wheel commands in
///   [-1, 1], each scaled by `max_wheel_thrust`; the pair yields a forward
///   force along the heading plus a torque `(right - left) * axle_width / 2`.
/// - `Static` expects 0 channels and produces nothing.
pub fn apply_action(body: &DiscBody, action: &[f64], limits: &ActuationLimits) -> Result<Actuation> {
    match body.kind {
        BodyKind::Holonomic => {
            if action.len() != 2 {
                return Err(ArenaError::shape("holonomic action", 2, action.len()));
            }
            let cmd = Vec2::new(action[0], action[1]).clamp_norm(1.0);
            Ok(Actuation {
                force: cmd * limits.max_force,
                torque: 0.0,
                lift: 0.0,
            })
        }
        BodyKind::DifferentialDrive => {
            if action.len() != 2 {
                return Err(ArenaError::shape("differential drive action", 2, action.len()));
            }
            let left = action[0].clamp(-1.0, 1.0) * limits.max_wheel_thrust;
            let right = action[1].clamp(-1.0, 1.0) * limits.max_wheel_thrust;
            let forward = Vec2::from_angle(body.heading) * (left + right);
            Ok(Actuation {
                force: forward,
                torque: (right - left) * limits.axle_width * 0.5,
                lift: 0.0,
            })
        }
        BodyKind::Static => {
            if !action.is_empty() {
                return Err(ArenaError::shape("static body action", 0, action.len()));
            }
            Ok(Actuation::ZERO)
        }
    }
}

/// Semi-implicit Euler with explicit linear drag: velocities update first,
/// then positions advance with the new velocities. Static bodies are
/// untouched.
pub fn integrate(bodies: &mut [DiscBody], actuations: &[Actuation], dt: f64, drag: f64) -> Result<()> {
    let mask = vec![true; bodies.len()];
    integrate_masked(bodies, actuations, dt, drag, &mask)
}

/// [`integrate`] restricted to bodies whose mask entry is true; masked-out
/// bodies keep their exact state (used for eliminated agents).
pub fn integrate_masked(
    bodies: &mut [DiscBody],
    actuations: &[Actuation],
    dt: f64,
    drag: f64,
    active: &[bool],
) -> Result<()> {
    if dt <= 0.0 {
        return Err(ArenaError::Contract(format!("dt must be positive, got {dt}")));
    }
    if actuations.len() != bodies.len() {
        return Err(ArenaError::shape("integrate forces", bodies.len(), actuations.len()));
    }
    for (i, (body, act)) in bodies.iter_mut().zip(actuations.iter()).enumerate() {
        if !active[i] || body.kind == BodyKind::Static {
            continue;
        }
        if !act.force.is_finite() || !act.torque.is_finite() || !act.lift.is_finite() {
            return Err(ArenaError::non_finite(format!("force on body {i}")));
        }
        let inv_m = 1.0 / body.mass;
        body.velocity = body.velocity * (1.0 - drag * dt) + act.force * (inv_m * dt);
        body.position += body.velocity * dt;

        let inv_i = 1.0 / body.moment_of_inertia();
        body.angular_velocity = body.angular_velocity * (1.0 - drag * dt) + act.torque * inv_i * dt;
        body.heading = wrap_angle(body.heading + body.angular_velocity * dt);

        body.climb_rate = body.climb_rate * (1.0 - drag * dt) + act.lift * inv_m * dt;
        body.altitude += body.climb_rate * dt;
    }
    Ok(())
}
