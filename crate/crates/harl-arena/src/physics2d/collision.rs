//! Pairwise impulse collision resolution for discs.

use crate::physics2d::body::{BodyKind, DiscBody};
use crate::physics2d::vec2::Vec2;

/// Resolve every overlapping pair in index order: positional projection
/// split by inverse mass removes penetration, then a normal impulse with
/// the given restitution is applied. Pairs separating along the contact
/// normal receive no impulse. Static bodies act as infinite mass.
pub fn resolve_collisions(bodies: &mut [DiscBody], restitution: f64) {
    let mask = vec![true; bodies.len()];
    resolve_collisions_masked(bodies, restitution, &mask);
}

/// [`resolve_collisions`] restricted to active bodies. Inactive bodies are
/// skipped entirely (they neither move nor deflect others). Bodies whose
/// altitudes differ by more than the sum of their radii pass over each
/// other without contact.
pub fn resolve_collisions_masked(bodies: &mut [DiscBody], restitution: f64, active: &[bool]) {
    let n = bodies.len();
    for i in 0..n {
        for j in (i + 1)..n {
            if !active[i] || !active[j] {
                continue;
            }
            if bodies[i].kind == BodyKind::Static && bodies[j].kind == BodyKind::Static {
                continue;
            }
            if (bodies[i].altitude - bodies[j].altitude).abs() > bodies[i].radius + bodies[j].radius {
                continue;
            }

            let delta = bodies[j].position - bodies[i].position;
            let dist = delta.norm();
            let overlap = bodies[i].radius + bodies[j].radius - dist;
            if overlap <= 0.0 {
                continue;
            }
            // Coincident centers: pick a fixed axis so resolution stays
            // deterministic.
            let normal = if dist > 0.0 {
                delta / dist
            } else {
                Vec2::new(1.0, 0.0)
            };

            let w_i = bodies[i].inverse_mass();
            let w_j = bodies[j].inverse_mass();
            let w_sum = w_i + w_j;
            if w_sum == 0.0 {
                continue;
            }

            bodies[i].position += normal * (-overlap * w_i / w_sum);
            bodies[j].position += normal * (overlap * w_j / w_sum);

            let rel_vel = (bodies[j].velocity - bodies[i].velocity).dot(normal);
            if rel_vel >= 0.0 {
                continue; // already separating
            }
            let impulse = -(1.0 + restitution) * rel_vel / w_sum;
            bodies[i].velocity += normal * (-impulse * w_i);
            bodies[j].velocity += normal * (impulse * w_j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn disc(x: f64, y: f64, vx: f64, vy: f64, r: f64, m: f64) -> DiscBody {
        let mut b = DiscBody::new(BodyKind::Holonomic, Vec2::new(x, y), r, m).unwrap();
        b.velocity = Vec2::new(vx, vy);
        b
    }

    #[test]
    fn equal_mass_head_on_elastic_exchange() {
        let mut bodies = [
            disc(-0.25, 0.0, 1.0, 0.0, 0.3, 2.0),
            disc(0.25, 0.0, -1.0, 0.0, 0.3, 2.0),
        ];
        resolve_collisions(&mut bodies, 1.0);
        assert!((bodies[0].velocity.x - (-1.0)).abs() < 1e-12);
        assert!((bodies[1].velocity.x - 1.0).abs() < 1e-12);
        assert!(bodies[0].velocity.y.abs() < 1e-12);
        // penetration removed
        let gap = bodies[1].position.x - bodies[0].position.x;
        assert!(gap >= 0.6 - 1e-9);
    }

    /// Independent textbook impulse oracle for a single off-center pair.
    #[test]
    fn off_center_pair_matches_impulse_oracle() {
        let a = disc(0.0, 0.0, 1.2, -0.3, 0.4, 1.0);
        let b = disc(0.5, 0.3, -0.8, 0.1, 0.35, 2.5);
        let e = 0.6;

        // oracle: j = -(1 + e) (v_b - v_a).n / (1/m_a + 1/m_b)
        let n = (b.position - a.position).normalized();
        let rel = (b.velocity - a.velocity).dot(n);
        let j = -(1.0 + e) * rel / (1.0 / a.mass + 1.0 / b.mass);
        let va_want = a.velocity - n * (j / a.mass);
        let vb_want = b.velocity + n * (j / b.mass);

        let mut bodies = [a, b];
        resolve_collisions(&mut bodies, e);
        assert!((bodies[0].velocity - va_want).norm() < 1e-12);
        assert!((bodies[1].velocity - vb_want).norm() < 1e-12);
    }

    #[test]
    fn momentum_conserved_and_energy_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..2000 {
            let a = disc(
                rng.gen_range(-0.2..0.2),
                rng.gen_range(-0.2..0.2),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(0.2..0.5),
                rng.gen_range(0.5..3.0),
            );
            let b = disc(
                rng.gen_range(-0.2..0.2),
                rng.gen_range(-0.2..0.2),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(0.2..0.5),
                rng.gen_range(0.5..3.0),
            );
            let e = rng.gen_range(0.0..=1.0);
            let p_before = a.velocity * a.mass + b.velocity * b.mass;
            let ke_before = 0.5 * a.mass * a.velocity.norm_squared()
                + 0.5 * b.mass * b.velocity.norm_squared();

            let mut bodies = [a, b];
            resolve_collisions(&mut bodies, e);

            let p_after = bodies[0].velocity * bodies[0].mass + bodies[1].velocity * bodies[1].mass;
            let ke_after = 0.5 * bodies[0].mass * bodies[0].velocity.norm_squared()
                + 0.5 * bodies[1].mass * bodies[1].velocity.norm_squared();

            assert!((p_before - p_after).norm() < 1e-9);
            assert!(ke_after <= ke_before + 1e-9);
        }
    }

    #[test]
    fn static_body_keeps_zero_velocity() {
        let wall = DiscBody::new(BodyKind::Static, Vec2::new(0.5, 0.0), 0.3, 1.0).unwrap();
        let mover = disc(0.0, 0.0, 2.0, 0.0, 0.3, 1.0);
        let mut bodies = [mover, wall];
        resolve_collisions(&mut bodies, 0.0);
        assert_eq!(bodies[1].velocity, Vec2::ZERO);
        assert_eq!(bodies[1].position, Vec2::new(0.5, 0.0));
        // inelastic bounce off infinite mass: mover stops along the normal
        assert!(bodies[0].velocity.x.abs() < 1e-12);
    }

    #[test]
    fn separating_pairs_are_left_alone() {
        let a = disc(0.0, 0.0, -1.0, 0.0, 0.4, 1.0);
        let b = disc(0.5, 0.0, 1.0, 0.0, 0.4, 1.0);
        let mut bodies = [a, b];
        resolve_collisions(&mut bodies, 1.0);
        // positions projected apart but velocities untouched
        assert_eq!(bodies[0].velocity, a.velocity);
        assert_eq!(bodies[1].velocity, b.velocity);
        assert!(bodies[0].position.distance(bodies[1].position) >= 0.8 - 1e-9);
    }

    #[test]
    fn no_penetration_remains_after_resolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let a = disc(0.0, 0.0, 0.0, 0.0, rng.gen_range(0.2..0.5), 1.0);
            let off = Vec2::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3));
            let b = disc(off.x, off.y, 0.0, 0.0, rng.gen_range(0.2..0.5), 1.0);
            let mut bodies = [a, b];
            resolve_collisions(&mut bodies, 0.0);
            let gap = bodies[0].position.distance(bodies[1].position)
                - (bodies[0].radius + bodies[1].radius);
            assert!(gap > -1e-6, "penetration {gap}");
        }
    }

    #[test]
    fn altitude_gap_prevents_contact() {
        let mut low = disc(0.0, 0.0, 1.0, 0.0, 0.3, 1.0);
        let mut high = disc(0.2, 0.0, -1.0, 0.0, 0.3, 1.0);
        high.altitude = 2.0;
        low.altitude = 0.0;
        let mut bodies = [low, high];
        resolve_collisions(&mut bodies, 0.0);
        assert_eq!(bodies[0].velocity, Vec2::new(1.0, 0.0));
        assert_eq!(bodies[1].velocity, Vec2::new(-1.0, 0.0));
    }
}
