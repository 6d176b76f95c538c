//! Baseline MLP discriminator with the classic unbounded logit reward.
//!
//! Kept deliberately faithful: the reward is the raw logit, so far-from-data
//! inputs produce rewards of arbitrary magnitude. The softplus hidden
//! activation keeps the logit unbounded in the input (a saturating activation
//! would cap it and mask the instability the baseline exists to show).

use rayon::prelude::*;

use crate::motion::{Transition, VelocityCommand};
use crate::nn::{Activation, Mlp, MlpGrad};
use crate::rng::Stream;
use crate::scalar::Real;
use crate::{COMMAND_DIM, TRANSITION_DIM};

use super::denoiser::PriorBatch;
use super::PriorError;

/// Classifier weights over `[transition ‖ command]` plus the shared
/// normalization statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct AmpDiscriminatorParams<R> {
    pub net: Mlp<R>,
    pub norm_mean: Vec<R>,
    pub norm_std: Vec<R>,
    /// Weight of the expert-sample gradient penalty in the BCE update.
    pub grad_penalty_weight: R,
}

impl<R: Real> AmpDiscriminatorParams<R> {
    pub fn init(
        hidden: &[usize],
        norm_mean: Vec<R>,
        norm_std: Vec<R>,
        grad_penalty_weight: R,
        rng: &mut Stream,
    ) -> Self {
        assert_eq!(norm_mean.len(), TRANSITION_DIM);
        assert_eq!(norm_std.len(), TRANSITION_DIM);
        let mut dims = vec![TRANSITION_DIM + COMMAND_DIM];
        dims.extend_from_slice(hidden);
        dims.push(1);
        let mut net = Mlp::init(&dims, Activation::Softplus, rng);
        net.zero_output_layer();
        AmpDiscriminatorParams { net, norm_mean, norm_std, grad_penalty_weight }
    }

    pub fn init_unit_stats(hidden: &[usize], gp_weight: R, rng: &mut Stream) -> Self {
        Self::init(
            hidden,
            vec![R::zero(); TRANSITION_DIM],
            vec![R::one(); TRANSITION_DIM],
            gp_weight,
            rng,
        )
    }

    fn assemble_input(&self, x: &Transition<R>, cmd: &VelocityCommand<R>) -> Vec<R> {
        let mut input = Vec::with_capacity(TRANSITION_DIM + COMMAND_DIM);
        for (v, (m, s)) in x.flatten().iter().zip(self.norm_mean.iter().zip(&self.norm_std)) {
            input.push((*v - *m) / *s);
        }
        input.extend_from_slice(&cmd.flatten());
        input
    }

    pub fn logit(&self, x: &Transition<R>, cmd: &VelocityCommand<R>) -> R {
        self.net.forward(&self.assemble_input(x, cmd))[0]
    }
}

#[inline]
fn stable_sigmoid<R: Real>(u: R) -> R {
    if u >= R::zero() {
        R::one() / (R::one() + (-u).exp())
    } else {
        let e = u.exp();
        e / (R::one() + e)
    }
}

/// The baseline's stylistic reward: `log D − log(1−D)`, which for a sigmoid
/// classifier is exactly the raw logit. Intentionally unbounded.
pub fn amp_logit_reward<R: Real>(
    x: &Transition<R>,
    cmd: &VelocityCommand<R>,
    params: &AmpDiscriminatorParams<R>,
) -> R {
    params.logit(x, cmd)
}

const D_CLAMP: f64 = 1e-7;

/// Standard sigmoid BCE with an optional gradient penalty on expert samples.
/// Returns the loss and its gradient w.r.t. the classifier weights.
pub fn amp_bce_update<R: Real>(
    expert_batch: &PriorBatch<R>,
    agent_batch: &PriorBatch<R>,
    params: &AmpDiscriminatorParams<R>,
) -> Result<(R, MlpGrad<R>), PriorError> {
    if expert_batch.is_empty() || agent_batch.is_empty() {
        return Err(PriorError::EmptyBatch);
    }
    let n_expert = R::of(expert_batch.len() as f64);
    let n_agent = R::of(agent_batch.len() as f64);
    let lo = R::of(D_CLAMP);
    let hi = R::one() - lo;
    let gp = params.grad_penalty_weight;

    let tasks: Vec<(Vec<R>, bool)> = expert_batch
        .iter()
        .map(|(x, c)| (params.assemble_input(x, c), true))
        .chain(agent_batch.iter().map(|(x, c)| (params.assemble_input(x, c), false)))
        .collect();

    let chunks: Vec<Result<(R, MlpGrad<R>), PriorError>> = tasks
        .par_chunks(32)
        .map(|chunk| {
            let mut grad = MlpGrad::zeros_like(&params.net);
            let mut loss = R::zero();
            for (input, is_expert) in chunk {
                let (out, cache) = params.net.forward_cached(input);
                let logit = out[0];
                if !logit.is_finite() {
                    return Err(PriorError::NonFinite);
                }
                let d = stable_sigmoid(logit).max(lo).min(hi);
                let (term, dlogit) = if *is_expert {
                    (-d.ln() / n_expert, (d - R::one()) / n_expert)
                } else {
                    (-(R::one() - d).ln() / n_agent, d / n_agent)
                };
                loss += term;
                params.net.backward(&cache, &[dlogit], &mut grad);
                if *is_expert && gp > R::zero() {
                    let g_in = params.net.input_gradient(input);
                    let sq: R = g_in.iter().map(|&v| v * v).sum();
                    loss += gp * sq / n_expert;
                    // ∇_θ ‖∇ₓf‖² = 2·∇_θ((∇ₓf)·v) with v = ∇ₓf held fixed.
                    params.net.grad_of_directional_derivative(
                        input,
                        &g_in,
                        &mut grad,
                        R::of(2.0) * gp / n_expert,
                    );
                }
            }
            Ok((loss, grad))
        })
        .collect();

    let mut total = R::zero();
    let mut grad = MlpGrad::zeros_like(&params.net);
    for c in chunks {
        let (l, g) = c?;
        total += l;
        grad.add(&g);
    }
    Ok((total, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Adam;
    use crate::rng::StreamId;

    fn sample(seed: u64, shift: f64) -> (Transition<f64>, VelocityCommand<f64>) {
        let mut rng = Stream::new(seed, StreamId::Other(77));
        let flat: Vec<f64> = (0..TRANSITION_DIM).map(|_| shift + rng.normal()).collect();
        (Transition::from_flat(&flat, 0.02), VelocityCommand::new(0.5, 0.0, 0.0))
    }

    #[test]
    fn zero_logit_zero_reward() {
        let mut rng = Stream::new(0, StreamId::AmpInit);
        let params = AmpDiscriminatorParams::init_unit_stats(&[16], 0.0, &mut rng);
        // Output layer is zero-initialized, so the logit is identically 0.
        let (x, cmd) = sample(1, 0.0);
        assert_eq!(amp_logit_reward(&x, &cmd, &params), 0.0);
    }

    #[test]
    fn logit_is_inverse_sigmoid_of_d() {
        // D = 0.731059 corresponds to r = 1.0.
        let d: f64 = 0.731059;
        let r = (d / (1.0 - d)).ln();
        assert!((r - 1.0).abs() < 1e-5);
    }

    #[test]
    fn init_loss_is_ln_two() {
        let mut rng = Stream::new(2, StreamId::AmpInit);
        let params = AmpDiscriminatorParams::init_unit_stats(&[16], 0.0, &mut rng);
        let expert: Vec<_> = (0..8).map(|i| sample(i, 0.0)).collect();
        let agent: Vec<_> = (20..28).map(|i| sample(i, 0.0)).collect();
        let (loss, _) = amp_bce_update(&expert, &agent, &params).unwrap();
        assert!((loss - 2.0 * (2.0f64).ln()).abs() < 0.1, "loss {loss}");
    }

    #[test]
    fn gradient_matches_finite_differences_with_penalty() {
        let mut rng = Stream::new(3, StreamId::AmpInit);
        let mut params = AmpDiscriminatorParams::init_unit_stats(&[4], 0.5, &mut rng);
        // Non-zero output layer so gradients are informative.
        let flat: Vec<f64> =
            params.net.flatten_params().iter().map(|_| 0.3 * rng.normal()).collect();
        params.net.set_params(&flat);
        let expert = vec![sample(5, 1.0)];
        let agent = vec![sample(6, -1.0)];
        let (_, grad) = amp_bce_update(&expert, &agent, &params).unwrap();
        let g = grad.flatten();
        let theta = params.net.flatten_params();
        let h = 1e-5;
        let mut g_fd = vec![0.0; g.len()];
        for k in 0..g.len() {
            let mut probe = params.clone();
            let mut tp = theta.clone();
            tp[k] += h;
            probe.net.set_params(&tp);
            let (up, _) = amp_bce_update(&expert, &agent, &probe).unwrap();
            tp[k] -= 2.0 * h;
            probe.net.set_params(&tp);
            let (dn, _) = amp_bce_update(&expert, &agent, &probe).unwrap();
            g_fd[k] = (up - dn) / (2.0 * h);
        }
        let num: f64 = g.iter().zip(&g_fd).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let den: f64 = g_fd.iter().map(|b| b * b).sum::<f64>().sqrt();
        assert!(num / den.max(1e-12) <= 1e-4, "rel err {}", num / den);
    }

    #[test]
    fn separable_clusters_reach_low_loss_and_unbounded_logits() {
        let mut rng = Stream::new(4, StreamId::AmpInit);
        let params_init = AmpDiscriminatorParams::init_unit_stats(&[32], 0.0, &mut rng);
        let mut params = params_init;
        let expert: Vec<_> = (0..32).map(|i| sample(i, 1.0)).collect();
        let agent: Vec<_> = (100..132).map(|i| sample(i, -1.0)).collect();
        let mut opt = Adam::new(params.net.param_count(), 1e-2);
        let mut loss = f64::INFINITY;
        for _ in 0..500 {
            let (l, grad) = amp_bce_update(&expert, &agent, &params).unwrap();
            loss = l;
            let mut flat = params.net.flatten_params();
            opt.step(&mut flat, &grad.flatten());
            params.net.set_params(&flat);
        }
        assert!(loss < 0.1, "final loss {loss}");
        // Trained baseline: logits explode on far-OOD inputs.
        let mut rng = Stream::new(5, StreamId::Other(80));
        let mut worst: f64 = 0.0;
        for _ in 0..64 {
            let flat: Vec<f64> = (0..TRANSITION_DIM).map(|_| rng.uniform_in(-10.0, 10.0)).collect();
            let x = Transition::from_flat(&flat, 0.02);
            let r = amp_logit_reward(&x, &VelocityCommand::zero(), &params);
            worst = worst.max(r.abs());
        }
        assert!(worst > 10.0, "max |logit| on OOD inputs only {worst}");
    }
}
