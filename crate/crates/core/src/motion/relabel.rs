//! Hindsight pseudo-command extraction.

use crate::scalar::Real;

use super::state::{LocomotorState, VelocityCommand};
use super::MotionError;

/// Assigns each frame a pseudo-command: the centered moving average of the
/// realized torso velocities `(vx, vy, wz)` over `window` steps, with the
/// window clamped at the clip edges. Output length equals clip length.
pub fn relabel_commands<R: Real>(
    clip: &[LocomotorState<R>],
    window: usize,
) -> Result<Vec<VelocityCommand<R>>, MotionError> {
    if clip.is_empty() {
        return Err(MotionError::EmptyClip);
    }
    if window == 0 || window > clip.len() {
        return Err(MotionError::BadWindow { window, len: clip.len() });
    }
    // Prefix sums over the three velocity channels.
    let n = clip.len();
    let mut pref = vec![[R::zero(); 3]; n + 1];
    for (i, s) in clip.iter().enumerate() {
        pref[i + 1][0] = pref[i][0] + s.vx;
        pref[i + 1][1] = pref[i][1] + s.vy;
        pref[i + 1][2] = pref[i][2] + s.wz;
    }
    let half_lo = (window - 1) / 2;
    let half_hi = window / 2;
    let mut out = Vec::with_capacity(n);
    for t in 0..n {
        let lo = t.saturating_sub(half_lo);
        let hi = (t + half_hi).min(n - 1);
        let count = R::of((hi - lo + 1) as f64);
        out.push(VelocityCommand {
            vx: (pref[hi + 1][0] - pref[lo][0]) / count,
            vy: (pref[hi + 1][1] - pref[lo][1]) / count,
            wz: (pref[hi + 1][2] - pref[lo][2]) / count,
        });
    }
    Ok(out)
}
