//! Forward-diffusion noise schedule.

use crate::scalar::Real;

/// Strictly increasing noise rates with cached `ᾱ` cumulative products.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule<R> {
    pub k_steps: usize,
    pub beta: Vec<R>,
    pub alpha: Vec<R>,
    pub alpha_bar: Vec<R>,
}

impl<R: Real> NoiseSchedule<R> {
    /// Linear ramp from `beta_min` to `beta_max` over `k_steps` timesteps.
    pub fn linear(k_steps: usize, beta_min: f64, beta_max: f64) -> Self {
        assert!(k_steps >= 2, "need at least two timesteps");
        assert!(0.0 < beta_min && beta_min < beta_max && beta_max < 1.0);
        let mut beta = Vec::with_capacity(k_steps);
        for k in 0..k_steps {
            let frac = k as f64 / (k_steps - 1) as f64;
            beta.push(R::of(beta_min + (beta_max - beta_min) * frac));
        }
        let alpha: Vec<R> = beta.iter().map(|&b| R::one() - b).collect();
        let mut alpha_bar = Vec::with_capacity(k_steps);
        let mut prod = R::one();
        for &a in &alpha {
            prod *= a;
            alpha_bar.push(prod);
        }
        NoiseSchedule { k_steps, beta, alpha, alpha_bar }
    }

    pub fn default_linear() -> Self {
        Self::linear(50, 1e-4, 2e-2)
    }

    /// Checks the structural invariants the rest of the prior relies on.
    pub fn validate(&self) -> bool {
        let inc = self.beta.windows(2).all(|w| w[0] < w[1]);
        let in_range = self.beta.iter().all(|&b| b > R::zero() && b < R::one());
        let dec = self.alpha_bar.windows(2).all(|w| w[0] > w[1]);
        let bar_range = self.alpha_bar.iter().all(|&a| a > R::zero() && a < R::one());
        let mut prod = R::one();
        let consistent = self.alpha.iter().zip(&self.alpha_bar).all(|(&a, &ab)| {
            prod *= a;
            (prod - ab).abs() <= R::of(1e-15) * prod.abs().max(R::one())
        });
        inc && in_range && dec && bar_range && consistent
    }
}

/// How the paired Monte-Carlo draws are constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AntitheticMode {
    /// Paired noise `(ε, −ε)` at a shared uniformly drawn timestep.
    #[default]
    Noise,
    /// Paired timesteps `(k, K−1−k)` sharing one noise draw.
    Timestep,
}

impl AntitheticMode {
    pub fn name(&self) -> &'static str {
        match self {
            AntitheticMode::Noise => "noise",
            AntitheticMode::Timestep => "timestep",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "noise" => Some(AntitheticMode::Noise),
            "timestep" => Some(AntitheticMode::Timestep),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedule_is_valid() {
        let s = NoiseSchedule::<f64>::default_linear();
        assert_eq!(s.k_steps, 50);
        assert!(s.validate());
        assert!((s.beta[0] - 1e-4).abs() < 1e-18);
        assert!((s.beta[49] - 2e-2).abs() < 1e-18);
    }

    #[test]
    fn alpha_bar_is_cumulative_product() {
        let s = NoiseSchedule::<f64>::linear(10, 1e-3, 0.1);
        let mut prod = 1.0;
        for k in 0..10 {
            prod *= 1.0 - s.beta[k];
            assert!((s.alpha_bar[k] - prod).abs() < 1e-15);
        }
    }
}
