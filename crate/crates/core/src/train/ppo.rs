//! Clipped-ratio PPO losses and the reward mixer.

use crate::scalar::Real;
use crate::JOINT_COUNT;

use super::policy::{PolicyGrad, PolicyParams};
use super::TrainConfig;

/// `ω_task · r_task + ω_diff · r_diff`.
pub fn mix_reward<R: Real>(r_task: R, r_diff: R, cfg: &TrainConfig<R>) -> R {
    cfg.omega_task * r_task + cfg.omega_diff * r_diff
}

/// A minibatch view over rollout rows. Advantages are expected to be
/// normalized (zero mean, unit std) before they arrive here.
pub struct MiniBatch<'a, R> {
    pub obs: &'a [Vec<R>],
    pub actions: &'a [[R; JOINT_COUNT]],
    pub old_log_probs: &'a [R],
    pub advantages: &'a [R],
    pub returns: &'a [R],
    pub cost_advantages: &'a [[R; 3]],
    pub cost_returns: &'a [[R; 3]],
}

impl<R> MiniBatch<'_, R> {
    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }
}

/// Loss components of one surrogate evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpoReport<R> {
    pub actor_loss: R,
    pub critic_loss: R,
    pub cost_critic_loss: R,
    pub entropy: R,
    /// Fraction of samples on a clipped branch.
    pub clip_fraction: R,
}

/// Clipped-ratio policy loss, squared-error value losses and the Gaussian
/// entropy, together with the gradient of
/// `actor + vf_coef·(critic + cost_critic) − ent_coef·entropy`.
pub fn ppo_surrogate<R: Real>(
    mb: &MiniBatch<R>,
    params: &PolicyParams<R>,
    eps_clip: R,
    vf_coef: R,
    ent_coef: R,
) -> (PpoReport<R>, PolicyGrad<R>) {
    assert!(!mb.is_empty());
    let n = R::of(mb.len() as f64);
    let mut grad = PolicyGrad::zeros_like(params);
    let mut actor_loss = R::zero();
    let mut critic_loss = R::zero();
    let mut cost_critic_loss = R::zero();
    let mut clipped = 0usize;

    let lo = R::one() - eps_clip;
    let hi = R::one() + eps_clip;
    let two = R::of(2.0);

    for i in 0..mb.len() {
        let obs = &mb.obs[i];
        let action = &mb.actions[i];
        let adv = mb.advantages[i];

        // Actor forward with cache; ratio against the behavior policy.
        let (mean_out, actor_cache) = params.actor.forward_cached(obs);
        let mean: [R; JOINT_COUNT] = std::array::from_fn(|j| mean_out[j]);
        let logp = params.log_prob_given_mean(&mean, action);
        let ratio = (logp - mb.old_log_probs[i]).exp();
        let clipped_ratio = ratio.max(lo).min(hi);
        let unclipped = ratio * adv;
        let clipped_term = clipped_ratio * adv;
        // min(ρÂ, clip(ρ)Â); gradient flows only through the winning branch,
        // and only when that branch depends on ρ.
        let (term, pass_grad) = if unclipped <= clipped_term {
            (unclipped, true)
        } else {
            (clipped_term, ratio >= lo && ratio <= hi)
        };
        if ratio < lo || ratio > hi {
            clipped += 1;
        }
        actor_loss += -term / n;
        if pass_grad {
            // d(−ρÂ/n)/dθ = −Â/n · ρ · ∇logπ.
            let coef = -adv * ratio / n;
            // ∇_mean logπ = (a − μ)/σ²; ∇_logσ logπ = z² − 1.
            let mut dmean = [R::zero(); JOINT_COUNT];
            for j in 0..JOINT_COUNT {
                let ls = params.clamped_log_std(j);
                let sigma = ls.exp();
                let z = (action[j] - mean[j]) / sigma;
                dmean[j] = coef * z / sigma;
                // Clamp pass-through: no gradient outside the clamp range.
                if params.log_std[j] > R::of(-4.0) && params.log_std[j] < R::of(1.0) {
                    grad.log_std[j] += coef * (z * z - R::one());
                }
            }
            params.actor.backward(&actor_cache, &dmean, &mut grad.actor);
        }

        // Critic squared error.
        let (v_out, v_cache) = params.critic.forward_cached(obs);
        let v_err = v_out[0] - mb.returns[i];
        critic_loss += v_err * v_err / n;
        params.critic.backward(&v_cache, &[vf_coef * two * v_err / n], &mut grad.critic);

        // Cost critics, one squared error per channel.
        let (c_out, c_cache) = params.cost_critic.forward_cached(obs);
        let mut dcost = [R::zero(); 3];
        for k in 0..3 {
            let e = c_out[k] - mb.cost_returns[i][k];
            cost_critic_loss += e * e / n;
            dcost[k] = vf_coef * two * e / n;
        }
        params.cost_critic.backward(&c_cache, &dcost, &mut grad.cost_critic);
    }

    // Entropy bonus: d(−ent_coef·H)/d logσ_j = −ent_coef inside the clamp.
    let entropy = params.entropy();
    for j in 0..JOINT_COUNT {
        if params.log_std[j] > R::of(-4.0) && params.log_std[j] < R::of(1.0) {
            grad.log_std[j] -= ent_coef;
        }
    }

    let report = PpoReport {
        actor_loss,
        critic_loss,
        cost_critic_loss,
        entropy,
        clip_fraction: R::of(clipped as f64) / n,
    };
    (report, grad)
}

/// The scalar objective whose gradient `ppo_surrogate` returns; used by the
/// finite-difference checks.
pub fn ppo_objective<R: Real>(
    mb: &MiniBatch<R>,
    params: &PolicyParams<R>,
    eps_clip: R,
    vf_coef: R,
    ent_coef: R,
) -> R {
    let (rep, _) = ppo_surrogate(mb, params, eps_clip, vf_coef, ent_coef);
    rep.actor_loss + vf_coef * (rep.critic_loss + rep.cost_critic_loss) - ent_coef * rep.entropy
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Stream, StreamId};
    use crate::train::policy::OBS_DIM;

    struct Owned {
        obs: Vec<Vec<f64>>,
        actions: Vec<[f64; JOINT_COUNT]>,
        old_log_probs: Vec<f64>,
        advantages: Vec<f64>,
        returns: Vec<f64>,
        cost_advantages: Vec<[f64; 3]>,
        cost_returns: Vec<[f64; 3]>,
    }

    impl Owned {
        fn random(params: &PolicyParams<f64>, n: usize, seed: u64) -> Owned {
            let mut rng = Stream::new(seed, StreamId::Other(60));
            let mut o = Owned {
                obs: Vec::new(),
                actions: Vec::new(),
                old_log_probs: Vec::new(),
                advantages: Vec::new(),
                returns: Vec::new(),
                cost_advantages: Vec::new(),
                cost_returns: Vec::new(),
            };
            for _ in 0..n {
                let obs: Vec<f64> = (0..OBS_DIM).map(|_| 0.3 * rng.normal()).collect();
                let (action, lp) = params.sample_action(&obs, &mut rng);
                o.obs.push(obs);
                o.actions.push(action);
                o.old_log_probs.push(lp);
                o.advantages.push(rng.normal());
                o.returns.push(rng.normal());
                o.cost_advantages.push([rng.normal(), rng.normal(), rng.normal()]);
                o.cost_returns.push([rng.normal(), rng.normal(), rng.normal()]);
            }
            // Normalize advantages like the caller would.
            let m = o.advantages.iter().sum::<f64>() / n as f64;
            let s = (o.advantages.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / n as f64)
                .sqrt()
                .max(1e-8);
            for a in &mut o.advantages {
                *a = (*a - m) / s;
            }
            o
        }

        fn view(&self) -> MiniBatch<'_, f64> {
            MiniBatch {
                obs: &self.obs,
                actions: &self.actions,
                old_log_probs: &self.old_log_probs,
                advantages: &self.advantages,
                returns: &self.returns,
                cost_advantages: &self.cost_advantages,
                cost_returns: &self.cost_returns,
            }
        }
    }

    #[test]
    fn mix_reward_arithmetic() {
        let mut cfg = TrainConfig::<f64>::default();
        cfg.omega_task = 1.0;
        cfg.omega_diff = 0.0;
        assert_eq!(mix_reward(1.5, 0.7, &cfg), 1.5);
        cfg.omega_task = 0.0;
        cfg.omega_diff = 1.0;
        assert_eq!(mix_reward(1.5, 0.7, &cfg), 0.7);
        cfg.omega_task = 0.5;
        cfg.omega_diff = 0.5;
        assert_eq!(mix_reward(1.5, 0.5, &cfg), 1.0);
    }

    #[test]
    fn fresh_params_give_unit_ratios_and_zero_actor_loss() {
        let mut rng = Stream::new(0, StreamId::PolicyInit);
        let params = PolicyParams::<f64>::init(&[8], &mut rng);
        let data = Owned::random(&params, 64, 5);
        let (rep, _) = ppo_surrogate(&data.view(), &params, 0.2, 0.5, 0.0);
        // Ratios are exactly 1; actor loss = −mean(Â) = 0 under normalization.
        assert!(rep.actor_loss.abs() < 1e-9, "actor loss {}", rep.actor_loss);
        assert_eq!(rep.clip_fraction, 0.0);
    }

    #[test]
    fn clipping_inactive_matches_plain_surrogate() {
        let mut rng = Stream::new(1, StreamId::PolicyInit);
        let params = PolicyParams::<f64>::init(&[8], &mut rng);
        let data = Owned::random(&params, 32, 6);
        // With identical params every ratio is 1 < 1 ± ε, so the clipped and
        // unclipped objectives coincide: loss == −mean(ρÂ) == −mean(Â).
        let (rep, _) = ppo_surrogate(&data.view(), &params, 0.2, 0.5, 0.0);
        let plain: f64 =
            -data.advantages.iter().sum::<f64>() / data.advantages.len() as f64;
        assert!((rep.actor_loss - plain).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = Stream::new(2, StreamId::PolicyInit);
        let mut params = PolicyParams::<f64>::init(&[4], &mut rng);
        // Perturb actor output layer so means are nonzero.
        let mut flat = params.flatten_params();
        let mut prng = Stream::new(3, StreamId::Other(61));
        for v in &mut flat {
            *v += 0.05 * prng.normal();
        }
        params.set_params(&flat);

        let data = Owned::random(&params, 8, 7);
        // Slightly shift old log-probs so ratios differ from 1 but stay
        // well inside the clip band (the objective is smooth there).
        let mut data = data;
        for lp in &mut data.old_log_probs {
            *lp += 0.02;
        }
        let (_, grad) = ppo_surrogate(&data.view(), &params, 0.2, 0.5, 0.01);
        let g = grad.flatten();

        let theta = params.flatten_params();
        let h = 1e-6;
        let mut g_fd = vec![0.0; g.len()];
        for k in 0..g.len() {
            let mut probe = params.clone();
            let mut tp = theta.clone();
            tp[k] += h;
            probe.set_params(&tp);
            let up = ppo_objective(&data.view(), &probe, 0.2, 0.5, 0.01);
            tp[k] -= 2.0 * h;
            probe.set_params(&tp);
            let dn = ppo_objective(&data.view(), &probe, 0.2, 0.5, 0.01);
            g_fd[k] = (up - dn) / (2.0 * h);
        }
        let num: f64 = g.iter().zip(&g_fd).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let den: f64 = g_fd.iter().map(|b| b * b).sum::<f64>().sqrt();
        assert!(num / den.max(1e-12) <= 1e-4, "rel err {}", num / den);
    }
}
