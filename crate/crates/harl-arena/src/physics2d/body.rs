//! Disc bodies, arena geometry, and laser-tag rays.

use serde::{Deserialize, Serialize};

use crate::error::{ArenaError, Result};
use crate::physics2d::vec2::Vec2;

/// How a body turns commands into forces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyKind {
    /// Direct planar force command (2 channels).
    Holonomic,
    /// Left/right wheel thrusts converted to forward force plus torque.
    DifferentialDrive,
    /// Immovable; takes no actions and never moves.
    Static,
}

/// Per-kind command-to-force limits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActuationLimits {
    /// Max planar force magnitude for holonomic bodies (N).
    pub max_force: f64,
    /// Max per-wheel thrust for differential-drive bodies (N).
    pub max_wheel_thrust: f64,
    /// Wheel separation for the differential-drive torque arm (m).
    pub axle_width: f64,
    /// Max vertical lift force for altitude-capable bodies (N).
    pub max_lift: f64,
}

impl Default for ActuationLimits {
    fn default() -> Self {
        ActuationLimits {
            max_force: 6.0,
            max_wheel_thrust: 3.0,
            axle_width: 0.4,
            max_lift: 4.0,
        }
    }
}

/// A rigid disc in the plane. Altitude is an extra scalar used only by
/// flight-capable bodies; it never affects planar integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscBody {
    pub position: Vec2,
    pub velocity: Vec2,
    /// Wrapped to (-pi, pi].
    pub heading: f64,
    pub angular_velocity: f64,
    pub altitude: f64,
    pub climb_rate: f64,
    pub radius: f64,
    pub mass: f64,
    pub kind: BodyKind,
}

impl DiscBody {
    pub fn new(kind: BodyKind, position: Vec2, radius: f64, mass: f64) -> Result<Self> {
        if radius <= 0.0 {
            return Err(ArenaError::Contract(format!("radius must be positive, got {radius}")));
        }
        if mass <= 0.0 {
            return Err(ArenaError::Contract(format!("mass must be positive, got {mass}")));
        }
        Ok(DiscBody {
            position,
            velocity: Vec2::ZERO,
            heading: 0.0,
            angular_velocity: 0.0,
            altitude: 0.0,
            climb_rate: 0.0,
            radius,
            mass,
            kind,
        })
    }

    /// Disc moment of inertia about its center, `m r^2 / 2`.
    pub fn moment_of_inertia(&self) -> f64 {
        0.5 * self.mass * self.radius * self.radius
    }

    pub fn inverse_mass(&self) -> f64 {
        match self.kind {
            BodyKind::Static => 0.0,
            _ => 1.0 / self.mass,
        }
    }
}

/// Arena footprints. Rings are centered on the origin; rectangles are
/// axis-aligned and origin-centered.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArenaShape {
    Ring { r_max: f64 },
    Rect { width: f64, height: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArenaSpec {
    pub shape: ArenaShape,
    /// Minimum flight altitude before a flying body counts as downed.
    pub min_height: f64,
}

impl ArenaSpec {
    pub fn ring(r_max: f64) -> Result<Self> {
        if r_max <= 0.0 {
            return Err(ArenaError::Contract(format!("ring radius must be positive, got {r_max}")));
        }
        Ok(ArenaSpec {
            shape: ArenaShape::Ring { r_max },
            min_height: 0.0,
        })
    }

    pub fn rect(width: f64, height: f64, min_height: f64) -> Result<Self> {
        if width <= 0.0 || height <= 0.0 {
            return Err(ArenaError::Contract(format!(
                "rect dimensions must be positive, got {width}x{height}"
            )));
        }
        if min_height < 0.0 {
            return Err(ArenaError::Contract("min_height must be >= 0".into()));
        }
        Ok(ArenaSpec {
            shape: ArenaShape::Rect { width, height },
            min_height,
        })
    }
}

/// A half-line in the plane with an on/off state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: Vec2,
    pub direction: Vec2,
    pub active: bool,
}

impl Ray {
    pub fn new(origin: Vec2, direction: Vec2, active: bool) -> Result<Self> {
        if (direction.norm() - 1.0).abs() > 1e-9 {
            return Err(ArenaError::Contract(format!(
                "ray direction must be unit length, |d| = {}",
                direction.norm()
            )));
        }
        Ok(Ray {
            origin,
            direction,
            active,
        })
    }

    /// Ray anchored at a body's rim, aligned with its heading.
    pub fn from_heading(origin: Vec2, heading: f64, active: bool) -> Self {
        Ray {
            origin,
            direction: Vec2::from_angle(heading),
            active,
        }
    }
}
