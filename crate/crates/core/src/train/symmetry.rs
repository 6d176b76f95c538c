//! Structural mirror-symmetry regularization of the actor and critic.

use crate::motion::{LocomotorState, MorphologyMap, VelocityCommand};
use crate::scalar::Real;
use crate::{JOINT_COUNT, STATE_DIM};

use super::policy::{PolicyGrad, PolicyParams};

/// Mirrors a policy observation `[state ‖ command]` in place of mirroring the
/// two parts separately.
pub fn mirror_obs<R: Real>(obs: &[R], m: &MorphologyMap) -> Vec<R> {
    let state = LocomotorState::from_flat(&obs[..STATE_DIM]);
    let cmd = VelocityCommand::from_flat(&obs[STATE_DIM..]);
    let ms = crate::motion::mirror_state(&state, m);
    let mc = crate::motion::mirror_command(&cmd, m);
    PolicyParams::<R>::obs(&ms, &mc)
}

/// Batch-averaged mirror-symmetry loss
/// `λ_sym · ( ‖π(o) − M_a π(M o)‖² + ‖V(o) − V(M o)‖² )`.
///
/// Gradient flows through both actor evaluations but only the first value
/// term; the mirrored value is treated as a constant target.
pub fn symmetry_loss<R: Real>(
    obs_batch: &[Vec<R>],
    params: &PolicyParams<R>,
    morph: &MorphologyMap,
    lambda_sym: R,
) -> (R, PolicyGrad<R>) {
    assert!(!obs_batch.is_empty());
    let n = R::of(obs_batch.len() as f64);
    let two = R::of(2.0);
    let mut grad = PolicyGrad::zeros_like(params);
    let mut loss = R::zero();
    for obs in obs_batch {
        let mobs = mirror_obs(obs, morph);

        let (mean_out, cache) = params.actor.forward_cached(obs);
        let (mmean_out, mcache) = params.actor.forward_cached(&mobs);
        let mmean: [R; JOINT_COUNT] = std::array::from_fn(|j| mmean_out[j]);
        let mirrored_action = crate::motion::mirror_action(&mmean, morph);
        let diff: Vec<R> =
            (0..JOINT_COUNT).map(|j| mean_out[j] - mirrored_action[j]).collect();
        loss += lambda_sym * diff.iter().map(|&d| d * d).sum::<R>() / n;
        // d/dπ(o): +2λd; d/dπ(Mo): −2λ Mᵀ d (the mirror is a signed
        // involutory permutation, so Mᵀ applies the same table).
        let dout: Vec<R> = diff.iter().map(|&d| lambda_sym * two * d / n).collect();
        params.actor.backward(&cache, &dout, &mut grad.actor);
        let dout_arr: [R; JOINT_COUNT] = std::array::from_fn(|j| -dout[j]);
        let dmirr = crate::motion::mirror_action(&dout_arr, morph);
        params.actor.backward(&mcache, &dmirr, &mut grad.actor);

        let (v_out, v_cache) = params.critic.forward_cached(obs);
        let v_mirror = params.critic.forward(&mobs)[0];
        let dv = v_out[0] - v_mirror;
        loss += lambda_sym * dv * dv / n;
        params.critic.backward(&v_cache, &[lambda_sym * two * dv / n], &mut grad.critic);
    }
    (loss, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, Layer, Mlp};
    use crate::rng::{Stream, StreamId};
    use crate::train::policy::OBS_DIM;

    /// Obs-space mirror as an explicit signed permutation matrix, for tying
    /// weights in the equivariant construction.
    fn obs_mirror_columns(m: &MorphologyMap) -> Vec<(usize, f64)> {
        // out[i] = sign_i * in[src_i]
        let mut map = vec![(0usize, 1.0f64); OBS_DIM];
        map[0] = (0, m.state_sign[0]);
        map[1] = (1, m.state_sign[1]);
        map[2] = (2, m.state_sign[2]);
        map[3] = (3, m.state_sign[3]);
        for i in 0..JOINT_COUNT {
            map[4 + i] = (4 + m.swap[i], m.joint_sign[i]);
            map[12 + i] = (12 + m.swap[i], m.joint_sign[i]);
        }
        map[20] = (20, m.cmd_sign[0]);
        map[21] = (21, m.cmd_sign[1]);
        map[22] = (22, m.cmd_sign[2]);
        map
    }

    /// Single-linear-layer actor tied as A ← (A + M_a A M_in)/2 and critic
    /// tied as c ← (c + c M_in)/2: exactly equivariant / invariant.
    fn tied_policy(seed: u64) -> (PolicyParams<f64>, MorphologyMap) {
        let m = MorphologyMap::default();
        let mut rng = Stream::new(seed, StreamId::PolicyInit);
        let mut p = PolicyParams::<f64>::init(&[8], &mut rng);

        let in_map = obs_mirror_columns(&m);
        // Random linear actor, then symmetrize.
        let mut a = vec![0.0f64; JOINT_COUNT * OBS_DIM];
        for v in &mut a {
            *v = rng.normal();
        }
        let mut tied = vec![0.0f64; JOINT_COUNT * OBS_DIM];
        for o in 0..JOINT_COUNT {
            for c in 0..OBS_DIM {
                // (M_a A M_in)[o][c] = sign_o · A[swap_o][src_c] · sign_c
                let (src_c, sign_c) = in_map[c];
                let term = m.joint_sign[o] * a[m.swap[o] * OBS_DIM + src_c] * sign_c;
                tied[o * OBS_DIM + c] = 0.5 * (a[o * OBS_DIM + c] + term);
            }
        }
        p.actor = Mlp {
            layers: vec![Layer { w: tied, b: vec![0.0; JOINT_COUNT], n_in: OBS_DIM, n_out: JOINT_COUNT }],
            activation: Activation::Tanh,
        };
        // Invariant critic: c ← (c + c M_in)/2.
        let mut cvec = vec![0.0f64; OBS_DIM];
        for v in &mut cvec {
            *v = rng.normal();
        }
        let mut ctied = vec![0.0f64; OBS_DIM];
        for c in 0..OBS_DIM {
            let (s, sign) = in_map[c];
            ctied[c] = 0.5 * (cvec[c] + cvec[s] * sign);
        }
        p.critic = Mlp {
            layers: vec![Layer { w: ctied, b: vec![0.7], n_in: OBS_DIM, n_out: 1 }],
            activation: Activation::Tanh,
        };
        (p, m)
    }

    fn random_obs(n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = Stream::new(seed, StreamId::Other(62));
        (0..n).map(|_| (0..OBS_DIM).map(|_| rng.normal()).collect()).collect()
    }

    #[test]
    fn equivariant_network_has_zero_loss_and_gradient() {
        let (p, m) = tied_policy(1);
        let obs = random_obs(16, 2);
        let (loss, grad) = symmetry_loss(&obs, &p, &m, 0.5);
        assert!(loss < 1e-24, "loss {loss}");
        assert!(grad.norm() < 1e-11, "grad norm {}", grad.norm());
    }

    #[test]
    fn mirror_symmetric_input_reduces_to_actor_asymmetry() {
        // Zero state + forward command is a fixed point of the obs mirror, so
        // the loss reduces to λ‖π(o) − M_a π(o)‖² (critic term vanishes).
        let m = MorphologyMap::default();
        let mut rng = Stream::new(3, StreamId::PolicyInit);
        let mut p = PolicyParams::<f64>::init(&[8], &mut rng);
        let mut flat = p.flatten_params();
        for v in &mut flat {
            *v += 0.1 * rng.normal();
        }
        p.set_params(&flat);

        let mut obs = vec![0.0f64; OBS_DIM];
        obs[STATE_DIM] = 1.0; // forward command
        let (loss, _) = symmetry_loss(&[obs.clone()], &p, &m, 1.0);
        let mean = p.actor_mean(&obs);
        let mirrored = crate::motion::mirror_action(&mean, &m);
        let want: f64 = (0..JOINT_COUNT).map(|j| (mean[j] - mirrored[j]).powi(2)).sum();
        assert!((loss - want).abs() < 1e-12, "{loss} vs {want}");
    }

    /// Scalar-arithmetic oracle on a one-hidden-unit actor.
    #[test]
    fn one_hidden_unit_oracle() {
        let m = MorphologyMap::default();
        let mut rng = Stream::new(4, StreamId::PolicyInit);
        let mut p = PolicyParams::<f64>::init(&[1], &mut rng);
        // Hand-set tiny weights: w1 (1×23), b1, w2 (8×1), b2.
        let w1: Vec<f64> = (0..OBS_DIM).map(|i| 0.01 * (i as f64 + 1.0)).collect();
        let b1 = 0.1;
        let w2: Vec<f64> = (0..JOINT_COUNT).map(|j| 0.2 - 0.03 * j as f64).collect();
        let b2: Vec<f64> = (0..JOINT_COUNT).map(|j| 0.05 * j as f64).collect();
        p.actor.layers[0].w = w1.clone();
        p.actor.layers[0].b = vec![b1];
        p.actor.layers[1].w = w2.clone();
        p.actor.layers[1].b = b2.clone();
        // Critic: single linear layer over obs for easy hand computation.
        let cw: Vec<f64> = (0..OBS_DIM).map(|i| 0.02 * (i as f64)).collect();
        p.critic = Mlp {
            layers: vec![Layer { w: cw.clone(), b: vec![0.3], n_in: OBS_DIM, n_out: 1 }],
            activation: Activation::Tanh,
        };

        let obs: Vec<f64> = (0..OBS_DIM).map(|i| 0.1 * ((i % 5) as f64 - 2.0)).collect();
        let (loss, _) = symmetry_loss(&[obs.clone()], &p, &m, 0.5);

        // Oracle built from raw arithmetic.
        let mobs = mirror_obs(&obs, &m);
        let pre = |o: &[f64]| -> f64 { o.iter().zip(&w1).map(|(a, b)| a * b).sum::<f64>() + b1 };
        let act = |o: &[f64]| -> Vec<f64> {
            let h = pre(o).tanh();
            (0..JOINT_COUNT).map(|j| w2[j] * h + b2[j]).collect()
        };
        let pm = act(&obs);
        let pmm_raw = act(&mobs);
        let mut pmm_arr = [0.0f64; JOINT_COUNT];
        pmm_arr.copy_from_slice(&pmm_raw);
        let pmm = crate::motion::mirror_action(&pmm_arr, &m);
        let actor_term: f64 = (0..JOINT_COUNT).map(|j| (pm[j] - pmm[j]).powi(2)).sum();
        let val = |o: &[f64]| -> f64 { o.iter().zip(&cw).map(|(a, b)| a * b).sum::<f64>() + 0.3 };
        let critic_term = (val(&obs) - val(&mobs)).powi(2);
        let want = 0.5 * (actor_term + critic_term);
        assert!((loss - want).abs() < 1e-9, "{loss} vs {want}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = MorphologyMap::default();
        let mut rng = Stream::new(5, StreamId::PolicyInit);
        let mut p = PolicyParams::<f64>::init(&[4], &mut rng);
        let mut flat = p.flatten_params();
        for v in &mut flat {
            *v += 0.05 * rng.normal();
        }
        p.set_params(&flat);
        let obs = random_obs(4, 6);
        let (_, grad) = symmetry_loss(&obs, &p, &m, 0.5);
        let g = grad.flatten();
        let theta = p.flatten_params();
        let h = 1e-6;
        let mut g_fd = vec![0.0; g.len()];
        for k in 0..g.len() {
            let mut probe = p.clone();
            let mut tp = theta.clone();
            tp[k] += h;
            probe.set_params(&tp);
            // The mirrored critic evaluation is detached: replicate by
            // re-running the full loss (the value target moves with θ in the
            // true loss, so compare against the detached objective instead).
            let up = detached_objective(&obs, &probe, &m, 0.5, &p);
            tp[k] -= 2.0 * h;
            probe.set_params(&tp);
            let dn = detached_objective(&obs, &probe, &m, 0.5, &p);
            g_fd[k] = (up - dn) / (2.0 * h);
        }
        let num: f64 = g.iter().zip(&g_fd).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let den: f64 = g_fd.iter().map(|b| b * b).sum::<f64>().sqrt();
        assert!(num / den.max(1e-12) <= 1e-4, "rel err {}", num / den);
    }

    /// The objective whose gradient `symmetry_loss` returns: the mirrored
    /// value evaluation is frozen at the base parameters.
    fn detached_objective(
        obs_batch: &[Vec<f64>],
        probe: &PolicyParams<f64>,
        m: &MorphologyMap,
        lambda: f64,
        frozen: &PolicyParams<f64>,
    ) -> f64 {
        let n = obs_batch.len() as f64;
        let mut loss = 0.0;
        for obs in obs_batch {
            let mobs = mirror_obs(obs, m);
            let mean = probe.actor_mean(obs);
            let mmean = probe.actor_mean(&mobs);
            let mirrored = crate::motion::mirror_action(&mmean, m);
            loss +=
                lambda * (0..JOINT_COUNT).map(|j| (mean[j] - mirrored[j]).powi(2)).sum::<f64>() / n;
            let dv = probe.value(obs) - frozen.value(&mobs);
            loss += lambda * dv * dv / n;
        }
        loss
    }
}
