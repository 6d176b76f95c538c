//! Core domain types of the planar quadruped abstraction.

use crate::scalar::Real;
use crate::{COMMAND_DIM, JOINT_COUNT, STATE_DIM, TRANSITION_DIM};

/// Canonical joint ordering used everywhere, including the dataset file.
pub const JOINT_NAMES: [&str; JOINT_COUNT] = [
    "FL_hip", "FL_knee", "FR_hip", "FR_knee", "RL_hip", "RL_knee", "RR_hip", "RR_knee",
];

pub const FL_HIP: usize = 0;
pub const FL_KNEE: usize = 1;
pub const FR_HIP: usize = 2;
pub const FR_KNEE: usize = 3;
pub const RL_HIP: usize = 4;
pub const RL_KNEE: usize = 5;
pub const RR_HIP: usize = 6;
pub const RR_KNEE: usize = 7;

/// Proprioceptive state in the heading-decoupled local base frame.
///
/// Flattened layout: `[vx, vy, wz, roll, q0..q7, dq0..dq7]` (20 numbers).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LocomotorState<R> {
    /// Base forward velocity (m/s).
    pub vx: R,
    /// Base lateral velocity (m/s).
    pub vy: R,
    /// Yaw rate (rad/s).
    pub wz: R,
    /// Roll angle (rad).
    pub roll: R,
    /// Joint positions (rad), canonical order.
    pub q: [R; JOINT_COUNT],
    /// Joint velocities (rad/s), canonical order.
    pub dq: [R; JOINT_COUNT],
}

impl<R: Real> LocomotorState<R> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn flatten(&self) -> [R; STATE_DIM] {
        let mut out = [R::zero(); STATE_DIM];
        out[0] = self.vx;
        out[1] = self.vy;
        out[2] = self.wz;
        out[3] = self.roll;
        out[4..12].copy_from_slice(&self.q);
        out[12..20].copy_from_slice(&self.dq);
        out
    }

    pub fn from_flat(v: &[R]) -> Self {
        assert_eq!(v.len(), STATE_DIM);
        let mut q = [R::zero(); JOINT_COUNT];
        let mut dq = [R::zero(); JOINT_COUNT];
        q.copy_from_slice(&v[4..12]);
        dq.copy_from_slice(&v[12..20]);
        LocomotorState { vx: v[0], vy: v[1], wz: v[2], roll: v[3], q, dq }
    }

    pub fn is_finite(&self) -> bool {
        self.flatten().iter().all(|x| x.is_finite())
    }

    /// All components finite and `|roll| ≤ π`.
    pub fn is_valid(&self) -> bool {
        self.is_finite() && self.roll.abs() <= R::PI()
    }
}

/// Consecutive state pair, the sole input domain of the stylistic prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition<R> {
    pub s0: LocomotorState<R>,
    pub s1: LocomotorState<R>,
    /// Control period (s); constant within a dataset.
    pub dt: R,
}

impl<R: Real> Transition<R> {
    pub fn flatten(&self) -> [R; TRANSITION_DIM] {
        let mut out = [R::zero(); TRANSITION_DIM];
        out[..STATE_DIM].copy_from_slice(&self.s0.flatten());
        out[STATE_DIM..].copy_from_slice(&self.s1.flatten());
        out
    }

    pub fn from_flat(v: &[R], dt: R) -> Self {
        assert_eq!(v.len(), TRANSITION_DIM);
        Transition {
            s0: LocomotorState::from_flat(&v[..STATE_DIM]),
            s1: LocomotorState::from_flat(&v[STATE_DIM..]),
            dt,
        }
    }
}

/// User-intent velocity command `(vx, vy, ωz)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VelocityCommand<R> {
    pub vx: R,
    pub vy: R,
    pub wz: R,
}

impl<R: Real> VelocityCommand<R> {
    pub fn new(vx: R, vy: R, wz: R) -> Self {
        VelocityCommand { vx, vy, wz }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn flatten(&self) -> [R; COMMAND_DIM] {
        [self.vx, self.vy, self.wz]
    }

    pub fn from_flat(v: &[R]) -> Self {
        assert_eq!(v.len(), COMMAND_DIM);
        VelocityCommand { vx: v[0], vy: v[1], wz: v[2] }
    }

    pub fn magnitude(&self) -> R {
        (self.vx * self.vx + self.vy * self.vy + self.wz * self.wz).sqrt()
    }
}

/// Componentwise command bounds; the default envelope covers the speeds the
/// gait bands exercise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommandEnvelope<R> {
    pub vx_max: R,
    pub vy_max: R,
    pub wz_max: R,
}

impl<R: Real> Default for CommandEnvelope<R> {
    fn default() -> Self {
        CommandEnvelope { vx_max: R::of(3.5), vy_max: R::of(1.0), wz_max: R::of(1.5) }
    }
}

impl<R: Real> CommandEnvelope<R> {
    pub fn contains(&self, cmd: &VelocityCommand<R>) -> bool {
        cmd.vx.abs() <= self.vx_max && cmd.vy.abs() <= self.vy_max && cmd.wz.abs() <= self.wz_max
    }
}

/// Sagittal-plane mirror tables: which joints swap and which components
/// flip sign. Signs of swapped pairs must multiply to +1 so that a double
/// application is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct MorphologyMap {
    /// Contralateral joint permutation (FL↔FR, RL↔RR).
    pub swap: [usize; JOINT_COUNT],
    /// Per-joint sign applied after permutation.
    pub joint_sign: [f64; JOINT_COUNT],
    /// Signs on `(vx, vy, wz, roll)`.
    pub state_sign: [f64; 4],
    /// Signs on `(vx, vy, ωz)` of the command.
    pub cmd_sign: [f64; 3],
}

impl Default for MorphologyMap {
    fn default() -> Self {
        MorphologyMap {
            swap: [FR_HIP, FR_KNEE, FL_HIP, FL_KNEE, RR_HIP, RR_KNEE, RL_HIP, RL_KNEE],
            // Pitch joints are mirror-symmetric on this morphology.
            joint_sign: [1.0; JOINT_COUNT],
            state_sign: [1.0, -1.0, -1.0, -1.0],
            cmd_sign: [1.0, -1.0, -1.0],
        }
    }
}

impl MorphologyMap {
    /// Checks the involution invariants on the tables themselves.
    pub fn is_involution(&self) -> bool {
        (0..JOINT_COUNT).all(|i| self.swap[self.swap[i]] == i)
            && (0..JOINT_COUNT).all(|i| (self.joint_sign[i] * self.joint_sign[self.swap[i]] - 1.0).abs() < 1e-12)
            && self.state_sign.iter().all(|s| s.abs() == 1.0)
            && self.cmd_sign.iter().all(|s| s.abs() == 1.0)
    }
}

/// One expert clip: a state sequence with provenance tags and, once
/// relabeled, a parallel pseudo-command sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Clip<R> {
    pub gait: super::Gait,
    /// Commanded generator speed (m/s), provenance only.
    pub speed: f64,
    pub states: Vec<LocomotorState<R>>,
    pub commands: Option<Vec<VelocityCommand<R>>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_roundtrip_is_exact() {
        let mut s = LocomotorState::<f64>::zero();
        s.vx = 1.25;
        s.roll = -0.5;
        s.q[3] = 0.125;
        s.dq[7] = -2.5;
        let f = s.flatten();
        assert_eq!(f.len(), STATE_DIM);
        assert_eq!(LocomotorState::from_flat(&f), s);
    }

    #[test]
    fn transition_dim_is_forty() {
        let t = Transition { s0: LocomotorState::<f64>::zero(), s1: LocomotorState::zero(), dt: 0.02 };
        assert_eq!(t.flatten().len(), TRANSITION_DIM);
    }

    #[test]
    fn default_morphology_is_involution() {
        assert!(MorphologyMap::default().is_involution());
    }

    #[test]
    fn roll_bound_checked() {
        let mut s = LocomotorState::<f64>::zero();
        s.roll = 3.5;
        assert!(!s.is_valid());
        s.roll = 3.0;
        assert!(s.is_valid());
    }
}
