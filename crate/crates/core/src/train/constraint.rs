//! Adaptive asymmetric constraint penalty with scheduled coefficients.

use crate::scalar::Real;
use crate::JOINT_COUNT;

use super::policy::{PolicyGrad, PolicyParams};
use super::ppo::MiniBatch;

/// Per-constraint bookkeeping: episodic cost estimates, limits, margins,
/// normalization statistics and the scheduled penalty coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintLedger<R> {
    /// Safety limits `d_i` (allowed undiscounted episodic cost).
    pub limits: [R; 3],
    /// Current penalty coefficients `λ_i`.
    pub lambda: [R; 3],
    pub lambda0: R,
    pub growth: R,
    pub period: R,
    pub lambda_max: R,
    /// Batch estimate of undiscounted episodic cost `Ĵ_i`.
    pub ep_cost: [R; 3],
    /// Pre-normalization cost-advantage statistics per constraint.
    pub adv_mean: [R; 3],
    pub adv_sigma: [R; 3],
}

impl<R: Real> ConstraintLedger<R> {
    pub fn new(limits: [R; 3], lambda0: R, growth: R, period: R, lambda_max: R) -> Self {
        ConstraintLedger {
            limits,
            lambda: [lambda0; 3],
            lambda0,
            growth,
            period,
            lambda_max,
            ep_cost: [R::zero(); 3],
            adv_mean: [R::zero(); 3],
            adv_sigma: [R::one(); 3],
        }
    }

    /// Margin `v̄_i = (Ĵ_i − d_i) / (σ_i + 1e-8)`: the episodic-cost excess
    /// expressed in units of the pre-normalization advantage spread.
    pub fn margin(&self, i: usize) -> R {
        (self.ep_cost[i] - self.limits[i]) / (self.adv_sigma[i] + R::of(1e-8))
    }
}

/// `λ_i^(t) = min(λ_max, λ_0 · g^(t/T_λ))`, monotone nondecreasing in `t`.
pub fn schedule_lambda<R: Real>(ledger: &mut ConstraintLedger<R>, iteration: usize) {
    let t = R::of(iteration as f64);
    let lam = (ledger.lambda0 * ledger.growth.powf(t / ledger.period)).min(ledger.lambda_max);
    ledger.lambda = [lam; 3];
}

/// `Σ_i λ_i · max(0, C_surr^(i) + v̄_i)` with the clipped cost surrogate
/// `C_surr^(i) = mean_j max(ρ_j Âc_j, clip(ρ_j) Âc_j)` over normalized cost
/// advantages. The ReLU gate contributes no gradient for constraint `i`
/// whenever `C_surr^(i) + v̄_i ≤ 0`.
pub fn constraint_penalty<R: Real>(
    mb: &MiniBatch<R>,
    params: &PolicyParams<R>,
    ledger: &ConstraintLedger<R>,
    eps_clip: R,
) -> (R, PolicyGrad<R>) {
    assert!(!mb.is_empty());
    let n = R::of(mb.len() as f64);
    let lo = R::one() - eps_clip;
    let hi = R::one() + eps_clip;

    // Pass 1: surrogates (and each sample's selected branch).
    let mut surr = [R::zero(); 3];
    let mut ratios = Vec::with_capacity(mb.len());
    let mut means = Vec::with_capacity(mb.len());
    for i in 0..mb.len() {
        let mean = params.actor_mean(&mb.obs[i]);
        let logp = params.log_prob_given_mean(&mean, &mb.actions[i]);
        let ratio = (logp - mb.old_log_probs[i]).exp();
        for k in 0..3 {
            let a = mb.cost_advantages[i][k];
            let unclipped = ratio * a;
            let clipped = ratio.max(lo).min(hi) * a;
            surr[k] += unclipped.max(clipped) / n;
        }
        ratios.push(ratio);
        means.push(mean);
    }

    let mut gates = [false; 3];
    let mut penalty = R::zero();
    for k in 0..3 {
        let gated = surr[k] + ledger.margin(k);
        if gated > R::zero() {
            gates[k] = true;
            penalty += ledger.lambda[k] * gated;
        }
    }

    let mut grad = PolicyGrad::zeros_like(params);
    if !gates.iter().any(|&g| g) {
        return (penalty, grad);
    }

    // Pass 2: gradient through the open gates only. The pessimistic max
    // picks the unclipped branch when it dominates; the clipped branch only
    // carries gradient while the clip is inactive.
    for i in 0..mb.len() {
        let ratio = ratios[i];
        let mean = &means[i];
        let mut coef = R::zero();
        for k in 0..3 {
            if !gates[k] {
                continue;
            }
            let a = mb.cost_advantages[i][k];
            let unclipped = ratio * a;
            let clipped_ratio = ratio.max(lo).min(hi);
            let clipped = clipped_ratio * a;
            let pass = if unclipped >= clipped {
                true
            } else {
                ratio >= lo && ratio <= hi
            };
            if pass {
                coef += ledger.lambda[k] * a * ratio / n;
            }
        }
        if coef == R::zero() {
            continue;
        }
        // coef · ∇logπ through the actor mean and log-std.
        let (mean_out, cache) = params.actor.forward_cached(&mb.obs[i]);
        debug_assert!(mean_out.iter().zip(mean.iter()).all(|(a, b)| a == b));
        let mut dmean = [R::zero(); JOINT_COUNT];
        for j in 0..JOINT_COUNT {
            let ls = params.clamped_log_std(j);
            let sigma = ls.exp();
            let z = (mb.actions[i][j] - mean[j]) / sigma;
            dmean[j] = coef * z / sigma;
            if params.log_std[j] > R::of(-4.0) && params.log_std[j] < R::of(1.0) {
                grad.log_std[j] += coef * (z * z - R::one());
            }
        }
        params.actor.backward(&cache, &dmean, &mut grad.actor);
    }
    (penalty, grad)
}
