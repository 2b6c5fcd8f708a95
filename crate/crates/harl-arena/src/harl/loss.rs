//! Clipped-surrogate policy loss.

/// Negated clipped surrogate (a loss to minimize):
/// `-min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A)`.
pub fn ppo_clip_loss(ratio: f64, advantage: f64, epsilon: f64) -> f64 {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - epsilon, 1.0 + epsilon) * advantage;
    -unclipped.min(clipped)
}

/// Loss value and its derivative with respect to the ratio. When the
/// clipped branch is strictly smaller the ratio sits outside the clip band,
/// so its derivative is zero there; ties take the unclipped branch.
pub fn ppo_clip_loss_grad(ratio: f64, advantage: f64, epsilon: f64) -> (f64, f64) {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - epsilon, 1.0 + epsilon) * advantage;
    if unclipped <= clipped {
        (-unclipped, -advantage)
    } else {
        (-clipped, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_ratio_passes_advantage_through() {
        assert_eq!(ppo_clip_loss(1.0, 3.25, 0.2), -3.25);
        assert_eq!(ppo_clip_loss(1.0, -0.5, 0.2), 0.5);
    }

    #[test]
    fn clip_binds_from_above_for_positive_advantage() {
        let loss = ppo_clip_loss(1.5, 1.0, 0.2);
        assert!((loss - (-1.2)).abs() < 1e-12);
    }

    #[test]
    fn clip_binds_from_below_for_negative_advantage() {
        let loss = ppo_clip_loss(0.5, -1.0, 0.2);
        assert!((loss - 0.8).abs() < 1e-12);
    }

    #[test]
    fn gradient_vanishes_only_on_the_clipped_branch() {
        // positive advantage, ratio above band: clipped branch selected
        let (_, g) = ppo_clip_loss_grad(1.5, 1.0, 0.2);
        assert_eq!(g, 0.0);
        // ratio inside the band: unclipped branch
        let (_, g) = ppo_clip_loss_grad(1.1, 1.0, 0.2);
        assert_eq!(g, -1.0);
        // negative advantage, ratio above band: unclipped branch is the
        // minimum (pessimistic bound keeps the gradient alive)
        let (_, g) = ppo_clip_loss_grad(1.5, -1.0, 0.2);
        assert_eq!(g, 1.0);
        // negative advantage, ratio below band: clipped branch, zero grad
        let (_, g) = ppo_clip_loss_grad(0.5, -1.0, 0.2);
        assert_eq!(g, 0.0);
    }

    #[test]
    fn finite_difference_check_where_differentiable() {
        let h = 1e-7;
        for &(ratio, adv) in &[(0.9, 1.3), (1.05, -0.4), (1.4, 2.0), (0.6, -1.5)] {
            let (_, g) = ppo_clip_loss_grad(ratio, adv, 0.2);
            let fd = (ppo_clip_loss(ratio + h, adv, 0.2) - ppo_clip_loss(ratio - h, adv, 0.2))
                / (2.0 * h);
            assert!((g - fd).abs() < 1e-6, "ratio {ratio}, adv {adv}: {g} vs {fd}");
        }
    }
}
