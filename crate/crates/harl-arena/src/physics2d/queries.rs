//! Arena excursion tests, rectangular containment, and ray distance.

use crate::error::{ArenaError, Result};
use crate::physics2d::body::{ArenaShape, ArenaSpec, DiscBody, Ray};
use crate::physics2d::vec2::Vec2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Excursion {
    Inside,
    Out,
}

/// Center-based ring exit test: a body is out iff its center is strictly
/// beyond the ring radius. Checked after integration each step.
pub fn ring_excursion(body: &DiscBody, arena: &ArenaSpec) -> Result<Excursion> {
    match arena.shape {
        ArenaShape::Ring { r_max } => {
            if body.position.norm() > r_max {
                Ok(Excursion::Out)
            } else {
                Ok(Excursion::Inside)
            }
        }
        ArenaShape::Rect { .. } => Err(ArenaError::Contract(
            "ring_excursion requires a ring arena".into(),
        )),
    }
}

/// Distance from a point to the half-line `{origin + t * direction, t >= 0}`.
pub fn point_ray_distance(ray: &Ray, point: Vec2) -> Result<f64> {
    if !ray.active {
        return Err(ArenaError::Contract("ray is inactive".into()));
    }
    let rel = point - ray.origin;
    let t = rel.dot(ray.direction).max(0.0);
    let closest = ray.origin + ray.direction * t;
    Ok(point.distance(closest))
}

/// Keep a body inside an origin-centered rectangle, zeroing the velocity
/// component that pointed out of the wall it hit.
pub fn clamp_to_rect(body: &mut DiscBody, width: f64, height: f64) {
    let half_w = width * 0.5 - body.radius;
    let half_h = height * 0.5 - body.radius;
    if body.position.x < -half_w {
        body.position.x = -half_w;
        body.velocity.x = body.velocity.x.max(0.0);
    } else if body.position.x > half_w {
        body.position.x = half_w;
        body.velocity.x = body.velocity.x.min(0.0);
    }
    if body.position.y < -half_h {
        body.position.y = -half_h;
        body.velocity.y = body.velocity.y.max(0.0);
    } else if body.position.y > half_h {
        body.position.y = half_h;
        body.velocity.y = body.velocity.y.min(0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics2d::body::BodyKind;

    fn body_at(x: f64, y: f64) -> DiscBody {
        DiscBody::new(BodyKind::Holonomic, Vec2::new(x, y), 0.3, 1.0).unwrap()
    }

    #[test]
    fn origin_is_inside() {
        let arena = ArenaSpec::ring(4.0).unwrap();
        assert_eq!(ring_excursion(&body_at(0.0, 0.0), &arena).unwrap(), Excursion::Inside);
    }

    #[test]
    fn just_past_the_boundary_is_out() {
        let arena = ArenaSpec::ring(4.0).unwrap();
        assert_eq!(ring_excursion(&body_at(4.01, 0.0), &arena).unwrap(), Excursion::Out);
    }

    #[test]
    fn exactly_on_the_boundary_is_inside() {
        let arena = ArenaSpec::ring(4.0).unwrap();
        assert_eq!(ring_excursion(&body_at(4.0, 0.0), &arena).unwrap(), Excursion::Inside);
        assert_eq!(ring_excursion(&body_at(0.0, -4.0), &arena).unwrap(), Excursion::Inside);
    }

    #[test]
    fn rect_arena_is_a_contract_error() {
        let arena = ArenaSpec::rect(20.0, 10.0, 0.5).unwrap();
        assert!(ring_excursion(&body_at(0.0, 0.0), &arena).is_err());
    }

    #[test]
    fn point_on_ray_has_zero_distance() {
        let ray = Ray::new(Vec2::new(1.0, 1.0), Vec2::new(0.0, 1.0), true).unwrap();
        let d = point_ray_distance(&ray, Vec2::new(1.0, 4.0)).unwrap();
        assert!(d.abs() < 1e-12);
    }

    #[test]
    fn perpendicular_offset_is_the_distance() {
        let ray = Ray::new(Vec2::ZERO, Vec2::new(1.0, 0.0), true).unwrap();
        let d = point_ray_distance(&ray, Vec2::new(3.0, 0.8)).unwrap();
        assert!((d - 0.8).abs() < 1e-12);
    }

    /// Behind the origin the closest point is the origin itself; verified
    /// against a dense sweep of the ray parameter.
    #[test]
    fn behind_origin_matches_parameter_sweep() {
        let ray = Ray::new(Vec2::new(0.5, -0.25), Vec2::from_angle(0.85), true).unwrap();
        let point = ray.origin - ray.direction * 2.0 + Vec2::new(0.3, -0.4);

        let mut best = f64::INFINITY;
        let steps = 400_000;
        for k in 0..=steps {
            let t = 100.0 * k as f64 / steps as f64;
            let d = point.distance(ray.origin + ray.direction * t);
            best = best.min(d);
        }
        let got = point_ray_distance(&ray, point).unwrap();
        assert!((got - best).abs() < 1e-6, "got {got}, sweep {best}");
        assert!((got - point.distance(ray.origin)).abs() < 1e-12);
    }

    #[test]
    fn inactive_ray_is_a_contract_error() {
        let ray = Ray::new(Vec2::ZERO, Vec2::new(1.0, 0.0), false).unwrap();
        assert!(point_ray_distance(&ray, Vec2::ZERO).is_err());
    }

    #[test]
    fn non_unit_direction_is_rejected() {
        assert!(Ray::new(Vec2::ZERO, Vec2::new(1.0, 1.0), true).is_err());
    }

    #[test]
    fn rect_clamp_stops_at_walls() {
        let mut b = body_at(10.4, -5.3);
        b.velocity = Vec2::new(3.0, -2.0);
        clamp_to_rect(&mut b, 20.0, 10.0);
        assert_eq!(b.position, Vec2::new(9.7, -4.7));
        assert_eq!(b.velocity, Vec2::new(0.0, 0.0));
    }
}
