//! Generalized advantage estimation.

use crate::error::{ArenaError, Result};

/// Reverse-scan GAE over time-major arrays (`s = t * n_envs + env`).
///
/// `delta_t = r_t + discount * V_{t+1} * (1 - done_t) - V_t`
/// `A_t = delta_t + discount * lambda * (1 - done_t) * A_{t+1}`
///
/// with `V_T` taken from `bootstrap` per environment. Done flags cut credit
/// across episode boundaries. Returns are `A_t + V_t`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap: &[f64],
    n_envs: usize,
    discount: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let s = rewards.len();
    if values.len() != s || dones.len() != s {
        return Err(ArenaError::shape("gae streams", s, values.len()));
    }
    if n_envs == 0 || s % n_envs != 0 {
        return Err(ArenaError::Contract(format!(
            "sample count {s} does not divide into {n_envs} environments"
        )));
    }
    if bootstrap.len() != n_envs {
        return Err(ArenaError::shape("gae bootstrap", n_envs, bootstrap.len()));
    }
    let horizon = s / n_envs;
    let mut advantages = vec![0.0; s];
    let mut returns = vec![0.0; s];
    for env in 0..n_envs {
        let mut running = 0.0;
        for t in (0..horizon).rev() {
            let idx = t * n_envs + env;
            let not_done = if dones[idx] { 0.0 } else { 1.0 };
            let next_value = if t + 1 == horizon {
                bootstrap[env]
            } else {
                values[(t + 1) * n_envs + env]
            };
            let delta = rewards[idx] + discount * next_value * not_done - values[idx];
            running = delta + discount * lambda * not_done * running;
            advantages[idx] = running;
            returns[idx] = running + values[idx];
        }
    }
    Ok((advantages, returns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Brute-force O(T^2) reference: direct weighted sum of deltas with
    /// episode cuts.
    pub fn gae_oracle(
        rewards: &[f64],
        values: &[f64],
        dones: &[bool],
        bootstrap: &[f64],
        n_envs: usize,
        discount: f64,
        lambda: f64,
    ) -> (Vec<f64>, Vec<f64>) {
        let s = rewards.len();
        let horizon = s / n_envs;
        let mut adv = vec![0.0; s];
        let mut ret = vec![0.0; s];
        for env in 0..n_envs {
            for t in 0..horizon {
                let mut acc = 0.0;
                let mut coef = 1.0;
                for k in t..horizon {
                    let idx = k * n_envs + env;
                    let not_done = if dones[idx] { 0.0 } else { 1.0 };
                    let next_value = if k + 1 == horizon {
                        bootstrap[env]
                    } else {
                        values[(k + 1) * n_envs + env]
                    };
                    let delta = rewards[idx] + discount * next_value * not_done - values[idx];
                    acc += coef * delta;
                    if dones[idx] {
                        break;
                    }
                    coef *= discount * lambda;
                }
                let idx = t * n_envs + env;
                adv[idx] = acc;
                ret[idx] = acc + values[idx];
            }
        }
        (adv, ret)
    }

    /// Single terminal step: the advantage is the bare `r - V`.
    #[test]
    fn single_done_step_is_reward_minus_value() {
        let (adv, ret) =
            compute_gae(&[2.0], &[0.5], &[true], &[99.0], 1, 0.99, 0.95).unwrap();
        assert_eq!(adv, vec![1.5]);
        assert_eq!(ret, vec![2.0]);
    }

    /// lambda = 1, discount = 1, no dones: telescoping gives the
    /// Monte-Carlo return minus the value, checked symbolically at T = 3.
    #[test]
    fn telescoping_monte_carlo_case() {
        let rewards = [1.0, 2.0, 3.0];
        let values = [10.0, 20.0, 30.0];
        let dones = [false, false, false];
        let bootstrap = [40.0];
        let (adv, _) = compute_gae(&rewards, &values, &dones, &bootstrap, 1, 1.0, 1.0).unwrap();
        // A_t = sum_{k >= t} r_k + V_boot - V_t
        assert!((adv[0] - (1.0 + 2.0 + 3.0 + 40.0 - 10.0)).abs() < 1e-12);
        assert!((adv[1] - (2.0 + 3.0 + 40.0 - 20.0)).abs() < 1e-12);
        assert!((adv[2] - (3.0 + 40.0 - 30.0)).abs() < 1e-12);
    }

    #[test]
    fn matches_brute_force_oracle_on_random_sequences() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for case in 0..200 {
            let horizon = rng.gen_range(1..=32);
            let n_envs = rng.gen_range(1..=4);
            let s = horizon * n_envs;
            let rewards: Vec<f64> = (0..s).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let values: Vec<f64> = (0..s).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let dones: Vec<bool> = (0..s).map(|_| rng.gen_bool(0.15)).collect();
            let bootstrap: Vec<f64> = (0..n_envs).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let discount = rng.gen_range(0.5..1.0);
            let lambda = rng.gen_range(0.0..1.0);

            let (adv, ret) =
                compute_gae(&rewards, &values, &dones, &bootstrap, n_envs, discount, lambda)
                    .unwrap();
            let (adv_o, ret_o) =
                gae_oracle(&rewards, &values, &dones, &bootstrap, n_envs, discount, lambda);
            for i in 0..s {
                assert!((adv[i] - adv_o[i]).abs() < 1e-10, "case {case} adv[{i}]");
                assert!((ret[i] - ret_o[i]).abs() < 1e-10, "case {case} ret[{i}]");
            }
        }
    }

    #[test]
    fn shape_mismatches_are_rejected() {
        assert!(compute_gae(&[1.0, 2.0], &[0.0], &[false, false], &[0.0], 1, 0.9, 0.9).is_err());
        assert!(compute_gae(&[1.0, 2.0, 3.0], &[0.0; 3], &[false; 3], &[0.0], 2, 0.9, 0.9).is_err());
    }
}
