//! Command sampling, EMA smoothing and the end-of-episode zero override.

use crate::motion::{CommandEnvelope, VelocityCommand};
use crate::rng::Stream;
use crate::scalar::Real;

/// Uniform omnidirectional command inside the envelope scaled by the
/// curriculum stage (clamped to `[0, 1]`). Includes negative vx and pure
/// lateral draws.
pub fn sample_raw_command<R: Real>(
    rng: &mut Stream,
    curriculum_stage: f64,
    envelope: &CommandEnvelope<R>,
) -> VelocityCommand<R> {
    let stage = curriculum_stage.clamp(0.0, 1.0);
    let draw = |rng: &mut Stream, bound: R| {
        let b = bound.to64() * stage;
        R::of(rng.uniform_in(-b, b))
    };
    VelocityCommand {
        vx: draw(rng, envelope.vx_max),
        vy: draw(rng, envelope.vy_max),
        wz: draw(rng, envelope.wz_max),
    }
}

/// First-order EMA step: `prev + α (target − prev)`, componentwise.
pub fn smooth_command<R: Real>(
    prev: &VelocityCommand<R>,
    target: &VelocityCommand<R>,
    alpha: R,
) -> VelocityCommand<R> {
    VelocityCommand {
        vx: prev.vx + alpha * (target.vx - prev.vx),
        vy: prev.vy + alpha * (target.vy - prev.vy),
        wz: prev.wz + alpha * (target.wz - prev.wz),
    }
}

/// The raw command to track at step `t`: zero inside the terminal window
/// (before smoothing, so the EMA decays compliantly), the raw draw otherwise.
pub fn episode_command_schedule<R: Real>(
    t: usize,
    episode_len: usize,
    zero_window: usize,
    raw: &VelocityCommand<R>,
) -> VelocityCommand<R> {
    debug_assert!(t < episode_len);
    if t + zero_window >= episode_len {
        VelocityCommand::zero()
    } else {
        *raw
    }
}
