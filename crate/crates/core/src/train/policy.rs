//! Gaussian actor, value critic and per-constraint cost critics.

use crate::motion::{LocomotorState, VelocityCommand};
use crate::nn::{Activation, Mlp, MlpGrad};
use crate::rng::Stream;
use crate::scalar::Real;
use crate::{COMMAND_DIM, JOINT_COUNT, STATE_DIM};

/// Policy observation width: state plus smoothed command.
pub const OBS_DIM: usize = STATE_DIM + COMMAND_DIM;

const LOG_STD_MIN: f64 = -4.0;
const LOG_STD_MAX: f64 = 1.0;

/// Actor/critic parameter bundle. The actor maps the observation to a mean
/// action; exploration noise has a state-independent log standard deviation,
/// clamped to `[-4, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams<R> {
    pub actor: Mlp<R>,
    pub log_std: [R; JOINT_COUNT],
    pub critic: Mlp<R>,
    /// One scalar output per constraint channel.
    pub cost_critic: Mlp<R>,
}

/// Gradient with the same layout as [`PolicyParams::flatten_params`].
#[derive(Debug, Clone)]
pub struct PolicyGrad<R> {
    pub actor: MlpGrad<R>,
    pub log_std: [R; JOINT_COUNT],
    pub critic: MlpGrad<R>,
    pub cost_critic: MlpGrad<R>,
}

impl<R: Real> PolicyGrad<R> {
    pub fn zeros_like(p: &PolicyParams<R>) -> Self {
        PolicyGrad {
            actor: MlpGrad::zeros_like(&p.actor),
            log_std: [R::zero(); JOINT_COUNT],
            critic: MlpGrad::zeros_like(&p.critic),
            cost_critic: MlpGrad::zeros_like(&p.cost_critic),
        }
    }

    pub fn add(&mut self, other: &PolicyGrad<R>) {
        self.actor.add(&other.actor);
        for (a, b) in self.log_std.iter_mut().zip(&other.log_std) {
            *a += *b;
        }
        self.critic.add(&other.critic);
        self.cost_critic.add(&other.cost_critic);
    }

    pub fn scale(&mut self, s: R) {
        self.actor.scale(s);
        for v in &mut self.log_std {
            *v *= s;
        }
        self.critic.scale(s);
        self.cost_critic.scale(s);
    }

    pub fn flatten(&self) -> Vec<R> {
        let mut out = self.actor.flatten();
        out.extend_from_slice(&self.log_std);
        out.extend(self.critic.flatten());
        out.extend(self.cost_critic.flatten());
        out
    }

    pub fn norm(&self) -> R {
        self.flatten().iter().map(|&x| x * x).sum::<R>().sqrt()
    }
}

impl<R: Real> PolicyParams<R> {
    /// Actor output layer starts at zero so the initial policy is the zero
    /// action with σ = e^{-1}.
    pub fn init(hidden: &[usize], rng: &mut Stream) -> Self {
        let mut actor_dims = vec![OBS_DIM];
        actor_dims.extend_from_slice(hidden);
        actor_dims.push(JOINT_COUNT);
        let mut actor = Mlp::init(&actor_dims, Activation::Tanh, rng);
        actor.zero_output_layer();

        let mut critic_dims = vec![OBS_DIM];
        critic_dims.extend_from_slice(hidden);
        critic_dims.push(1);
        let critic = Mlp::init(&critic_dims, Activation::Tanh, rng);

        let mut cost_dims = vec![OBS_DIM];
        cost_dims.extend_from_slice(hidden);
        cost_dims.push(3);
        let cost_critic = Mlp::init(&cost_dims, Activation::Tanh, rng);

        PolicyParams { actor, log_std: [R::of(-1.0); JOINT_COUNT], critic, cost_critic }
    }

    pub fn obs(state: &LocomotorState<R>, cmd: &VelocityCommand<R>) -> Vec<R> {
        let mut o = Vec::with_capacity(OBS_DIM);
        o.extend_from_slice(&state.flatten());
        o.extend_from_slice(&cmd.flatten());
        o
    }

    pub fn actor_mean(&self, obs: &[R]) -> [R; JOINT_COUNT] {
        let out = self.actor.forward(obs);
        std::array::from_fn(|i| out[i])
    }

    pub fn value(&self, obs: &[R]) -> R {
        self.critic.forward(obs)[0]
    }

    pub fn cost_values(&self, obs: &[R]) -> [R; 3] {
        let out = self.cost_critic.forward(obs);
        [out[0], out[1], out[2]]
    }

    pub fn std(&self) -> [R; JOINT_COUNT] {
        std::array::from_fn(|i| self.clamped_log_std(i).exp())
    }

    #[inline]
    pub fn clamped_log_std(&self, j: usize) -> R {
        self.log_std[j].max(R::of(LOG_STD_MIN)).min(R::of(LOG_STD_MAX))
    }

    /// Samples an action and returns its log-probability.
    pub fn sample_action(&self, obs: &[R], rng: &mut Stream) -> ([R; JOINT_COUNT], R) {
        let mean = self.actor_mean(obs);
        let mut action = [R::zero(); JOINT_COUNT];
        for j in 0..JOINT_COUNT {
            let sigma = self.clamped_log_std(j).exp();
            action[j] = mean[j] + sigma * rng.normal_r::<R>();
        }
        let lp = self.log_prob_given_mean(&mean, &action);
        (action, lp)
    }

    /// Diagonal-Gaussian log-density of `action` under the actor at `obs`.
    pub fn log_prob(&self, obs: &[R], action: &[R; JOINT_COUNT]) -> R {
        let mean = self.actor_mean(obs);
        self.log_prob_given_mean(&mean, action)
    }

    pub fn log_prob_given_mean(&self, mean: &[R; JOINT_COUNT], action: &[R; JOINT_COUNT]) -> R {
        let half_ln_2pi = R::of(0.5 * (2.0 * std::f64::consts::PI).ln());
        let mut lp = R::zero();
        for j in 0..JOINT_COUNT {
            let ls = self.clamped_log_std(j);
            let sigma = ls.exp();
            let z = (action[j] - mean[j]) / sigma;
            lp += -R::of(0.5) * z * z - ls - half_ln_2pi;
        }
        lp
    }

    /// Differential entropy of the diagonal Gaussian (state-independent).
    pub fn entropy(&self) -> R {
        let half_ln_2pi_e = R::of(0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln());
        (0..JOINT_COUNT).map(|j| self.clamped_log_std(j) + half_ln_2pi_e).sum()
    }

    pub fn param_count(&self) -> usize {
        self.actor.param_count() + JOINT_COUNT + self.critic.param_count() + self.cost_critic.param_count()
    }

    pub fn flatten_params(&self) -> Vec<R> {
        let mut out = self.actor.flatten_params();
        out.extend_from_slice(&self.log_std);
        out.extend(self.critic.flatten_params());
        out.extend(self.cost_critic.flatten_params());
        out
    }

    pub fn set_params(&mut self, flat: &[R]) {
        let na = self.actor.param_count();
        self.actor.set_params(&flat[..na]);
        let mut off = na;
        for j in 0..JOINT_COUNT {
            self.log_std[j] = flat[off + j];
        }
        off += JOINT_COUNT;
        let nc = self.critic.param_count();
        self.critic.set_params(&flat[off..off + nc]);
        off += nc;
        let nk = self.cost_critic.param_count();
        self.cost_critic.set_params(&flat[off..off + nk]);
        assert_eq!(off + nk, flat.len());
    }

    pub fn is_finite(&self) -> bool {
        self.actor.is_finite()
            && self.log_std.iter().all(|x| x.is_finite())
            && self.critic.is_finite()
            && self.cost_critic.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamId;

    #[test]
    fn initial_policy_is_zero_mean() {
        let mut rng = Stream::new(0, StreamId::PolicyInit);
        let p = PolicyParams::<f64>::init(&[16, 16], &mut rng);
        let obs = vec![0.3; OBS_DIM];
        assert_eq!(p.actor_mean(&obs), [0.0; JOINT_COUNT]);
    }

    #[test]
    fn log_prob_matches_gaussian_density() {
        let mut rng = Stream::new(1, StreamId::PolicyInit);
        let p = PolicyParams::<f64>::init(&[8], &mut rng);
        let obs = vec![0.1; OBS_DIM];
        let mean = p.actor_mean(&obs);
        let action = [0.05; JOINT_COUNT];
        let sigma = (-1.0f64).exp();
        let want: f64 = (0..JOINT_COUNT)
            .map(|j| {
                let z = (action[j] - mean[j]) / sigma;
                -0.5 * z * z - (-1.0) - 0.5 * (2.0 * std::f64::consts::PI).ln()
            })
            .sum();
        assert!((p.log_prob(&obs, &action) - want).abs() < 1e-12);
    }

    #[test]
    fn flatten_roundtrip() {
        let mut rng = Stream::new(2, StreamId::PolicyInit);
        let mut p = PolicyParams::<f64>::init(&[8], &mut rng);
        let flat = p.flatten_params();
        let mut q = p.clone();
        q.set_params(&flat);
        assert_eq!(p, q);
        let mut flat2 = flat.clone();
        flat2[0] += 1.0;
        p.set_params(&flat2);
        assert_ne!(p, q);
    }

    #[test]
    fn entropy_is_sum_of_log_stds_plus_constant() {
        let mut rng = Stream::new(3, StreamId::PolicyInit);
        let p = PolicyParams::<f64>::init(&[8], &mut rng);
        let c = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
        assert!((p.entropy() - 8.0 * (-1.0 + c)).abs() < 1e-12);
    }

    #[test]
    fn log_std_clamp_respected() {
        let mut rng = Stream::new(4, StreamId::PolicyInit);
        let mut p = PolicyParams::<f64>::init(&[8], &mut rng);
        p.log_std[0] = -10.0;
        p.log_std[1] = 5.0;
        assert_eq!(p.clamped_log_std(0), -4.0);
        assert_eq!(p.clamped_log_std(1), 1.0);
    }
}
