//! Training configuration and ablation switches.

use crate::prior::AntitheticMode;
use crate::scalar::Real;

/// Which pieces of the stack a run exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ablation {
    /// Everything on: diffusion prior, command conditioning, augmentation,
    /// symmetry loss, constraint penalty, full curriculum.
    #[default]
    Full,
    /// No mirror/yaw augmentation, zero-filled prior conditioning, no
    /// symmetry loss.
    NoSacc,
    /// No constraint penalty and no end-of-episode zero override.
    NoConstraints,
    /// MLP discriminator with the unbounded logit reward instead of the
    /// diffusion prior.
    VanillaAmp,
}

impl Ablation {
    pub fn name(&self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::NoSacc => "no_sacc",
            Ablation::NoConstraints => "no_constraints",
            Ablation::VanillaAmp => "vanilla_amp",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "full" => Some(Ablation::Full),
            "no_sacc" => Some(Ablation::NoSacc),
            "no_constraints" => Some(Ablation::NoConstraints),
            "vanilla_amp" => Some(Ablation::VanillaAmp),
            _ => None,
        }
    }

    pub fn sacc_enabled(&self) -> bool {
        !matches!(self, Ablation::NoSacc)
    }

    pub fn constraints_enabled(&self) -> bool {
        !matches!(self, Ablation::NoConstraints)
    }

    pub fn uses_diffusion_prior(&self) -> bool {
        !matches!(self, Ablation::VanillaAmp)
    }
}

/// Hyperparameters of the training loop.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig<R> {
    pub iterations: usize,
    pub n_envs: usize,
    pub horizon: usize,
    /// Reward mixing weights.
    pub omega_task: R,
    pub omega_diff: R,
    /// PPO.
    pub eps_clip: R,
    pub epochs: usize,
    pub minibatch: usize,
    pub gamma: R,
    pub gae_lambda: R,
    pub ent_coef: R,
    pub vf_coef: R,
    pub lr_policy: R,
    pub lr_prior: R,
    /// Mirror-symmetry regularization weight.
    pub lambda_sym: R,
    /// Discriminator co-training.
    pub disc_steps: usize,
    pub disc_batch: usize,
    pub replay_capacity: usize,
    /// Monte-Carlo pairs: reward evaluation vs discriminator training.
    pub n_mc_reward: usize,
    pub n_mc_train: usize,
    /// Network sizes.
    pub policy_hidden: Vec<usize>,
    pub denoiser_hidden: Vec<usize>,
    pub amp_hidden: Vec<usize>,
    /// Noise schedule.
    pub k_steps: usize,
    pub beta_min: f64,
    pub beta_max: f64,
    pub antithetic: AntitheticMode,
    /// Baseline gradient-penalty weight.
    pub gp_weight: R,
    /// Constraint limits `d_i` and the λ schedule.
    pub cost_limits: [R; 3],
    pub lambda0: R,
    pub lambda_growth: R,
    pub lambda_period: R,
    pub lambda_max: R,
    /// Command curriculum ramp (iterations to reach the full envelope).
    pub curriculum_iters: usize,
    /// Evaluate FGD against the expert set every this many iterations
    /// (0 = never).
    pub fgd_every: usize,
    pub ablation: Ablation,
    /// Instance noise injected into both discriminator batches, in units of
    /// the per-dimension dataset std (0 disables). Blurs the decision
    /// boundary so the bounded reward keeps a usable gradient.
    pub disc_input_noise: f64,
    /// Skip discriminator steps while its BCE is below this floor
    /// (0 disables). Keeps the classifier at a fixed operating point instead
    /// of saturating.
    pub disc_loss_floor: f64,
    /// Prior pre-training steps against synthetic hard negatives before any
    /// RL (0 disables): mismatched commands, velocity-inconsistent ghosts,
    /// heavily noised features and standing-under-command samples.
    pub prior_pretrain_steps: usize,
    /// Yaw-offset range of the expert augmentation (radians).
    pub augment_max_yaw: f64,
    /// Iterations at the start that update only the critics, freezing the
    /// actor while value estimates calibrate (0 disables).
    pub value_warmup_iters: usize,
    /// Supervised actor warm-start epochs over the expert transitions
    /// before any RL (0 disables).
    pub bc_epochs: usize,
    pub lr_bc: R,
    /// Weight of the ongoing imitation anchor in each policy update
    /// (0 disables): an MSE pull of the actor mean toward the expert's next
    /// joint positions on expert states, so RL churn cannot erase the gait.
    pub bc_reg_weight: R,
    pub bc_reg_batch: usize,
    /// Initial log standard deviation of the actor.
    pub log_std_init: R,
    /// Use mean actions during collection; a test rig, not a training mode.
    pub deterministic_rollouts: bool,
}

impl<R: Real> Default for TrainConfig<R> {
    fn default() -> Self {
        TrainConfig {
            iterations: 100,
            n_envs: 8,
            horizon: 256,
            omega_task: R::of(0.5),
            omega_diff: R::of(0.5),
            eps_clip: R::of(0.2),
            epochs: 4,
            minibatch: 512,
            gamma: R::of(0.99),
            gae_lambda: R::of(0.95),
            ent_coef: R::of(0.005),
            vf_coef: R::of(0.5),
            lr_policy: R::of(3e-4),
            lr_prior: R::of(1e-3),
            lambda_sym: R::of(0.5),
            disc_steps: 4,
            disc_batch: 256,
            replay_capacity: 100_000,
            n_mc_reward: 4,
            n_mc_train: 1,
            policy_hidden: vec![64, 64],
            denoiser_hidden: vec![256, 256],
            amp_hidden: vec![128, 128],
            k_steps: 50,
            beta_min: 1e-4,
            beta_max: 2e-2,
            antithetic: AntitheticMode::Noise,
            gp_weight: R::of(1.0),
            cost_limits: [R::zero(), R::zero(), R::of(0.5)],
            lambda0: R::of(0.1),
            lambda_growth: R::of(2.0),
            lambda_period: R::of(200.0),
            lambda_max: R::of(10.0),
            curriculum_iters: 30,
            fgd_every: 10,
            ablation: Ablation::Full,
            disc_input_noise: 0.0,
            disc_loss_floor: 0.0,
            prior_pretrain_steps: 0,
            augment_max_yaw: std::f64::consts::PI,
            value_warmup_iters: 0,
            bc_epochs: 0,
            lr_bc: R::of(1e-3),
            bc_reg_weight: R::zero(),
            bc_reg_batch: 64,
            log_std_init: R::of(-1.0),
            deterministic_rollouts: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ablation_names_roundtrip() {
        for a in [Ablation::Full, Ablation::NoSacc, Ablation::NoConstraints, Ablation::VanillaAmp] {
            assert_eq!(Ablation::parse(a.name()), Some(a));
        }
        assert_eq!(Ablation::parse("bogus"), None);
    }

    #[test]
    fn default_weights_sum_to_one() {
        let cfg = TrainConfig::<f64>::default();
        assert_eq!(cfg.omega_task + cfg.omega_diff, 1.0);
        assert!(cfg.gamma > 0.0 && cfg.gamma < 1.0);
        assert!(cfg.gae_lambda > 0.0 && cfg.gae_lambda < 1.0);
    }
}
