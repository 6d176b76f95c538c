//! Generalized advantage estimation.

use crate::scalar::Real;

/// Standard GAE(γ, λ) over one trajectory segment with bootstrap truncation
/// at dones. `last_value` bootstraps the value beyond the final step (use 0
/// if the segment ended exactly at a terminal).
///
/// Returns `(advantages, returns)` with `returns = advantages + values`.
pub fn gae<R: Real>(
    rewards: &[R],
    values: &[R],
    dones: &[bool],
    last_value: R,
    gamma: R,
    lambda: R,
) -> (Vec<R>, Vec<R>) {
    let n = rewards.len();
    assert_eq!(values.len(), n);
    assert_eq!(dones.len(), n);
    let mut adv = vec![R::zero(); n];
    let mut carry = R::zero();
    for t in (0..n).rev() {
        let not_done = if dones[t] { R::zero() } else { R::one() };
        let next_value = if t + 1 < n { values[t + 1] } else { last_value };
        let delta = rewards[t] + gamma * next_value * not_done - values[t];
        carry = delta + gamma * lambda * not_done * carry;
        adv[t] = carry;
    }
    let ret: Vec<R> = adv.iter().zip(values).map(|(&a, &v)| a + v).collect();
    (adv, ret)
}

/// Normalizes in place to zero mean and unit std, returning the
/// pre-normalization `(mean, std)`. The std is floored at 1e-8.
pub fn normalize_in_place<R: Real>(xs: &mut [R]) -> (R, R) {
    let mean = crate::scalar::mean(xs);
    let std = crate::scalar::std_dev(xs).max(R::of(1e-8));
    for x in xs.iter_mut() {
        *x = (*x - mean) / std;
    }
    (mean, std)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Stream, StreamId};

    #[test]
    fn constant_reward_at_fixed_point_value_gives_zero_advantage() {
        let gamma = 0.99;
        let r = 0.7;
        let v = r / (1.0 - gamma);
        let n = 50;
        let (adv, ret) = gae::<f64>(
            &vec![r; n],
            &vec![v; n],
            &vec![false; n],
            v,
            gamma,
            0.95,
        );
        for a in adv {
            assert!(a.abs() < 1e-9, "advantage {a}");
        }
        for rt in ret {
            assert!((rt - v).abs() < 1e-9);
        }
    }

    #[test]
    fn single_step_episode_is_reward_minus_value() {
        let (adv, ret) = gae::<f64>(&[2.0], &[0.5], &[true], 123.0, 0.99, 0.95);
        assert!((adv[0] - 1.5).abs() < 1e-12);
        assert!((ret[0] - 2.0).abs() < 1e-12);
    }

    /// Brute-force oracle: A_t = Σ_l (γλ)^l δ_{t+l}, cut at dones.
    fn oracle(
        rewards: &[f64],
        values: &[f64],
        dones: &[bool],
        last_value: f64,
        gamma: f64,
        lambda: f64,
    ) -> Vec<f64> {
        let n = rewards.len();
        let delta: Vec<f64> = (0..n)
            .map(|t| {
                let nv = if dones[t] {
                    0.0
                } else if t + 1 < n {
                    values[t + 1]
                } else {
                    last_value
                };
                rewards[t] + gamma * nv - values[t]
            })
            .collect();
        (0..n)
            .map(|t| {
                let mut acc = 0.0;
                let mut w = 1.0;
                for l in t..n {
                    acc += w * delta[l];
                    if dones[l] {
                        break;
                    }
                    w *= gamma * lambda;
                }
                acc
            })
            .collect()
    }

    #[test]
    fn matches_bruteforce_oracle_on_random_sequences() {
        let mut rng = Stream::new(7, StreamId::Other(90));
        for _ in 0..50 {
            let n = 20;
            let rewards: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let values: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let dones: Vec<bool> = (0..n).map(|_| rng.coin(0.15)).collect();
            let last_value = rng.normal();
            let (adv, _) = gae(&rewards, &values, &dones, last_value, 0.99, 0.95);
            let want = oracle(&rewards, &values, &dones, last_value, 0.99, 0.95);
            for (a, w) in adv.iter().zip(&want) {
                assert!((a - w).abs() < 1e-9, "{a} vs {w}");
            }
        }
    }

    #[test]
    fn normalization_statistics() {
        let mut rng = Stream::new(8, StreamId::Other(91));
        let mut xs: Vec<f64> = (0..512).map(|_| 3.0 + 2.0 * rng.normal()).collect();
        let (mean, std) = normalize_in_place(&mut xs);
        assert!((mean - 3.0).abs() < 0.5);
        assert!((std - 2.0).abs() < 0.5);
        let m2 = xs.iter().sum::<f64>() / xs.len() as f64;
        let s2 = (xs.iter().map(|x| (x - m2) * (x - m2)).sum::<f64>() / xs.len() as f64).sqrt();
        assert!(m2.abs() < 1e-6);
        assert!((s2 - 1.0).abs() < 1e-6);
    }
}
