//! Diagonal-Gaussian policy head with a state-independent log standard
//! deviation.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{ArenaError, Result};

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;

const LN_2PI: f64 = 1.8378770664093453; // ln(2 * pi)

/// Mean produced by a policy network plus the free log-std parameters.
/// `log_std` is clamped to `[LOG_STD_MIN, LOG_STD_MAX]` on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianHead {
    pub mean: Vec<f64>,
    pub log_std: Vec<f64>,
}

impl GaussianHead {
    pub fn new(mean: Vec<f64>, log_std: Vec<f64>) -> Result<Self> {
        if mean.is_empty() {
            return Err(ArenaError::Contract("action dimension must be >= 1".into()));
        }
        if mean.len() != log_std.len() {
            return Err(ArenaError::shape("gaussian head log_std", mean.len(), log_std.len()));
        }
        let log_std = log_std
            .into_iter()
            .map(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX))
            .collect();
        Ok(GaussianHead { mean, log_std })
    }

    pub fn action_dim(&self) -> usize {
        self.mean.len()
    }

    /// Differential entropy, `sum_i log_std_i + d/2 (1 + ln 2pi)`.
    pub fn entropy(&self) -> f64 {
        let d = self.mean.len() as f64;
        self.log_std.iter().sum::<f64>() + 0.5 * d * (1.0 + LN_2PI)
    }

    /// Gradients of `log_prob(action)` with respect to the mean and log-std.
    pub fn log_prob_grad(&self, action: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if action.len() != self.mean.len() {
            return Err(ArenaError::shape("gaussian action", self.mean.len(), action.len()));
        }
        let mut d_mean = vec![0.0; self.mean.len()];
        let mut d_log_std = vec![0.0; self.mean.len()];
        for i in 0..self.mean.len() {
            let std = self.log_std[i].exp();
            let z = (action[i] - self.mean[i]) / std;
            d_mean[i] = z / std;
            d_log_std[i] = z * z - 1.0;
        }
        Ok((d_mean, d_log_std))
    }
}

/// Sum over dimensions of the diagonal-Gaussian log-density at `action`.
pub fn gaussian_log_prob(head: &GaussianHead, action: &[f64]) -> Result<f64> {
    if action.len() != head.mean.len() {
        return Err(ArenaError::shape("gaussian action", head.mean.len(), action.len()));
    }
    let mut lp = 0.0;
    for i in 0..head.mean.len() {
        let log_std = head.log_std[i];
        let z = (action[i] - head.mean[i]) / log_std.exp();
        lp += -0.5 * LN_2PI - log_std - 0.5 * z * z;
    }
    Ok(lp)
}

/// Draw `mean + exp(log_std) * n`, `n ~ N(0, I)`, from the given generator.
pub fn gaussian_sample(head: &GaussianHead, rng: &mut ChaCha8Rng) -> Vec<f64> {
    head.mean
        .iter()
        .zip(head.log_std.iter())
        .map(|(&m, &ls)| {
            let n: f64 = StandardNormal.sample(rng);
            m + ls.exp() * n
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn density_at_the_mode() {
        let head = GaussianHead::new(vec![0.7], vec![0.0]).unwrap();
        let lp = gaussian_log_prob(&head, &[0.7]).unwrap();
        assert!((lp - (-0.5 * LN_2PI)).abs() < 1e-12);
        assert!((lp - (-0.9189385332046727)).abs() < 1e-10);
    }

    #[test]
    fn one_sigma_analytic_case() {
        let head = GaussianHead::new(vec![0.0], vec![0.0]).unwrap();
        let lp = gaussian_log_prob(&head, &[1.0]).unwrap();
        assert!((lp - (-0.5 * LN_2PI - 0.5)).abs() < 1e-12);
        assert!((lp - (-1.4189385332046727)).abs() < 1e-10);
    }

    /// exp(log_prob) must integrate to 1 over a fine grid.
    #[test]
    fn density_integrates_to_one() {
        let head = GaussianHead::new(vec![0.35], vec![-0.4]).unwrap();
        let std = head.log_std[0].exp();
        let (lo, hi) = (head.mean[0] - 10.0 * std, head.mean[0] + 10.0 * std);
        let n = 20_000;
        let dx = (hi - lo) / n as f64;
        let mut mass = 0.0;
        for k in 0..=n {
            let x = lo + k as f64 * dx;
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            mass += w * gaussian_log_prob(&head, &[x]).unwrap().exp() * dx;
        }
        assert!((mass - 1.0).abs() < 1e-3, "mass {mass}");
    }

    #[test]
    fn log_prob_maximized_at_mean() {
        let head = GaussianHead::new(vec![0.2, -0.5], vec![0.1, -0.3]).unwrap();
        let at_mean = gaussian_log_prob(&head, &[0.2, -0.5]).unwrap();
        for i in -10..=10 {
            for j in -10..=10 {
                let a = [0.2 + i as f64 * 0.17, -0.5 + j as f64 * 0.23];
                let lp = gaussian_log_prob(&head, &a).unwrap();
                assert!(lp <= at_mean + 1e-12);
            }
        }
    }

    #[test]
    fn clamp_floor_collapses_to_mean() {
        let head = GaussianHead::new(vec![1.5, -2.0], vec![-50.0, -21.0]).unwrap();
        assert_eq!(head.log_std, vec![LOG_STD_MIN, LOG_STD_MIN]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = gaussian_sample(&head, &mut rng);
        assert!((s[0] - 1.5).abs() < 1e-8);
        assert!((s[1] + 2.0).abs() < 1e-8);
    }

    #[test]
    fn sampling_is_deterministic_for_fixed_seed() {
        let head = GaussianHead::new(vec![0.0, 1.0], vec![0.3, -0.2]).unwrap();
        let a = gaussian_sample(&head, &mut ChaCha8Rng::seed_from_u64(9));
        let b = gaussian_sample(&head, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn law_of_large_numbers() {
        let head = GaussianHead::new(vec![0.8], vec![0.25]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let n = 100_000;
        let sum: f64 = (0..n).map(|_| gaussian_sample(&head, &mut rng)[0]).sum();
        let mean = sum / n as f64;
        let sigma = head.log_std[0].exp();
        let tol = 4.0 * sigma / (n as f64).sqrt();
        assert!((mean - 0.8).abs() < tol, "mean {mean}, tol {tol}");
    }

    #[test]
    fn grad_matches_finite_differences() {
        let head = GaussianHead::new(vec![0.3, -0.9], vec![0.2, -0.7]).unwrap();
        let action = [0.9, -0.1];
        let (d_mean, d_log_std) = head.log_prob_grad(&action).unwrap();
        let h = 1e-6;
        for i in 0..2 {
            let mut plus = head.clone();
            plus.mean[i] += h;
            let mut minus = head.clone();
            minus.mean[i] -= h;
            let fd = (gaussian_log_prob(&plus, &action).unwrap()
                - gaussian_log_prob(&minus, &action).unwrap())
                / (2.0 * h);
            assert!((fd - d_mean[i]).abs() < 1e-6);

            let mut plus = head.clone();
            plus.log_std[i] += h;
            let mut minus = head.clone();
            minus.log_std[i] -= h;
            let fd = (gaussian_log_prob(&plus, &action).unwrap()
                - gaussian_log_prob(&minus, &action).unwrap())
                / (2.0 * h);
            assert!((fd - d_log_std[i]).abs() < 1e-6);
        }
    }
}
