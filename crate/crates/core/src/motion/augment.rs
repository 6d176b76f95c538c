//! Geometric expert-batch augmentation: random mirroring plus a fresh yaw
//! offset per sample.

use crate::rng::Stream;
use crate::scalar::Real;

use super::mirror::{mirror_command, mirror_transition, yaw_rotate_transition};
use super::state::{MorphologyMap, Transition, VelocityCommand};

/// Augmentation knobs; tests pin behavior by degenerating them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentOptions {
    pub mirror_prob: f64,
    /// Yaw offsets are drawn uniformly from `[-max_yaw, max_yaw]`.
    pub max_yaw: f64,
}

impl Default for AugmentOptions {
    fn default() -> Self {
        AugmentOptions { mirror_prob: 0.5, max_yaw: std::f64::consts::PI }
    }
}

/// Each sample is independently mirrored with probability `mirror_prob`,
/// then yaw-rotated by a fresh uniform offset. Batch size is preserved.
pub fn augment_expert_batch<R: Real>(
    batch: &[(Transition<R>, VelocityCommand<R>)],
    m: &MorphologyMap,
    rng: &mut Stream,
    opts: &AugmentOptions,
) -> Vec<(Transition<R>, VelocityCommand<R>)> {
    batch
        .iter()
        .map(|(x, cmd)| {
            let (x, cmd) = if rng.coin(opts.mirror_prob) {
                (mirror_transition(x, m), mirror_command(cmd, m))
            } else {
                (*x, *cmd)
            };
            let delta = R::of(rng.uniform_in(-opts.max_yaw, opts.max_yaw));
            yaw_rotate_transition(&x, &cmd, delta)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::state::LocomotorState;
    use crate::rng::StreamId;

    fn forward_sample() -> (Transition<f64>, VelocityCommand<f64>) {
        let mut s = LocomotorState::zero();
        s.vx = 1.0;
        s.vy = 0.2;
        s.q[0] = 0.3;
        (Transition { s0: s, s1: s, dt: 0.02 }, VelocityCommand::new(1.0, 0.2, 0.0))
    }

    #[test]
    fn never_mirror_zero_yaw_is_identity() {
        let batch = vec![forward_sample(); 4];
        let mut rng = Stream::new(0, StreamId::Augment);
        let opts = AugmentOptions { mirror_prob: 0.0, max_yaw: 0.0 };
        let out = augment_expert_batch(&batch, &MorphologyMap::default(), &mut rng, &opts);
        assert_eq!(out, batch);
    }

    #[test]
    fn always_mirror_zero_yaw_matches_elementwise_ops() {
        let batch = vec![forward_sample(); 3];
        let m = MorphologyMap::default();
        let mut rng = Stream::new(0, StreamId::Augment);
        let opts = AugmentOptions { mirror_prob: 1.0, max_yaw: 0.0 };
        let out = augment_expert_batch(&batch, &m, &mut rng, &opts);
        for ((x, c), (ox, oc)) in batch.iter().zip(&out) {
            assert_eq!(mirror_transition(x, &m), *ox);
            assert_eq!(mirror_command(c, &m), *oc);
        }
    }

    #[test]
    fn batch_size_preserved() {
        let batch = vec![forward_sample(); 17];
        let mut rng = Stream::new(9, StreamId::Augment);
        let out =
            augment_expert_batch(&batch, &MorphologyMap::default(), &mut rng, &AugmentOptions::default());
        assert_eq!(out.len(), batch.len());
    }

    /// Monte-Carlo check of the symmetrization claim: over many augmented
    /// copies of a single forward transition, lateral velocity means vanish.
    #[test]
    fn symmetrization_centers_vy() {
        let sample = forward_sample();
        let n = 100_000usize;
        let batch = vec![sample; n];
        let mut rng = Stream::new(123, StreamId::Augment);
        let out =
            augment_expert_batch(&batch, &MorphologyMap::default(), &mut rng, &AugmentOptions::default());
        let vys: Vec<f64> = out.iter().map(|(x, _)| x.s0.vy).collect();
        let mean = vys.iter().sum::<f64>() / n as f64;
        let var = vys.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let stderr = (var / n as f64).sqrt();
        assert!(mean.abs() < 3.0 * stderr, "mean vy {mean} exceeds 3 SE {stderr}");
    }
}
