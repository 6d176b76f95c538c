//! Scripted expert clips.
//!
//! The generator stands in for mocap: analytic hip/knee trajectories driven
//! by per-gait phase tables, a base velocity that tracks the commanded speed
//! with seeded noise, and small lateral/yaw/roll signals. Those side signals
//! are zero-mean as a process but carry a seeded per-clip offset, so any
//! finite dataset realizes the directional tilt that mirror augmentation
//! later cancels. The rectified knee profile mimics stance/swing asymmetry;
//! it is cosmetic, not physics.

use crate::rng::{Stream, StreamId};
use crate::scalar::Real;
use crate::JOINT_COUNT;

use super::state::{Clip, LocomotorState};
use super::MotionError;

/// Gait styles, banded by commanded speed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gait {
    Walk,
    Trot,
    Bound,
}

impl Gait {
    pub fn name(&self) -> &'static str {
        match self {
            Gait::Walk => "walk",
            Gait::Trot => "trot",
            Gait::Bound => "bound",
        }
    }

    pub fn parse(s: &str) -> Option<Gait> {
        match s {
            "walk" => Some(Gait::Walk),
            "trot" => Some(Gait::Trot),
            "bound" => Some(Gait::Bound),
            _ => None,
        }
    }

    /// Leg phase offsets (fraction of a cycle) in order FL, FR, RL, RR.
    pub fn phase_table(&self) -> [f64; 4] {
        match self {
            Gait::Walk => [0.0, 0.5, 0.75, 0.25],
            Gait::Trot => [0.0, 0.5, 0.5, 0.0],
            Gait::Bound => [0.0, 0.0, 0.5, 0.5],
        }
    }

    /// Speed band the gait is generated for.
    pub fn speed_band(&self) -> (f64, f64) {
        match self {
            Gait::Walk => (0.0, 1.0),
            Gait::Trot => (1.0, 3.0),
            Gait::Bound => (3.0, f64::INFINITY),
        }
    }

    pub fn accepts(&self, speed: f64) -> bool {
        let (lo, hi) = self.speed_band();
        match self {
            Gait::Walk => speed > lo && speed < hi,
            Gait::Trot => speed >= lo && speed <= hi,
            Gait::Bound => speed > lo && speed.is_finite(),
        }
    }
}

/// Generator knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub dt: f64,
    /// Stride frequency: `f = freq_base + freq_per_speed · speed` (Hz).
    pub freq_base: f64,
    pub freq_per_speed: f64,
    /// Hip amplitude: `A_h = hip_amp_base + hip_amp_per_speed · speed` (rad).
    pub hip_amp_base: f64,
    pub hip_amp_per_speed: f64,
    /// Knee amplitude (rad) and phase lead χ of the rectified knee sine.
    pub knee_amp: f64,
    pub knee_phase: f64,
    /// Amplitude of the seeded wobble on base vx (m/s).
    pub vx_noise_amp: f64,
    /// Sinusoid amplitudes of the small side signals.
    pub vy_amp: f64,
    pub wz_amp: f64,
    pub roll_amp: f64,
    /// Per-clip constant offsets are drawn uniformly within these bounds.
    pub vy_bias: f64,
    pub wz_bias: f64,
    pub roll_bias: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            dt: 0.02,
            freq_base: 1.2,
            freq_per_speed: 0.4,
            hip_amp_base: 0.18,
            hip_amp_per_speed: 0.08,
            knee_amp: 0.35,
            knee_phase: std::f64::consts::FRAC_PI_2,
            vx_noise_amp: 0.05,
            vy_amp: 0.05,
            wz_amp: 0.06,
            roll_amp: 0.03,
            vy_bias: 0.05,
            wz_bias: 0.08,
            roll_bias: 0.03,
        }
    }
}

/// Generates one clip, bit-reproducible for fixed `(gait, speed, duration, seed)`.
pub fn synth_expert<R: Real>(
    gait: Gait,
    speed: f64,
    duration: f64,
    seed: u64,
    cfg: &SynthConfig,
) -> Result<Clip<R>, MotionError> {
    if !gait.accepts(speed) {
        return Err(MotionError::SpeedOutsideGaitBand { gait: gait.name(), speed });
    }
    let steps = (duration / cfg.dt).round() as usize;
    if steps < 2 {
        return Err(MotionError::ClipTooShort);
    }
    let mut rng = Stream::new(seed, StreamId::DataSynth);

    let freq = cfg.freq_base + cfg.freq_per_speed * speed;
    let hip_amp = cfg.hip_amp_base + cfg.hip_amp_per_speed * speed;
    let omega = 2.0 * std::f64::consts::PI * freq;
    let leg_phase: Vec<f64> = gait
        .phase_table()
        .iter()
        .map(|p| p * 2.0 * std::f64::consts::PI)
        .collect();

    // Seeded noise parameters (drawn once per clip).
    let wobble_phase_a = rng.uniform_in(0.0, 2.0 * std::f64::consts::PI);
    let wobble_phase_b = rng.uniform_in(0.0, 2.0 * std::f64::consts::PI);
    let wobble_freq_a = rng.uniform_in(0.15, 0.45);
    let wobble_freq_b = rng.uniform_in(0.5, 1.1);
    let side = |rng: &mut Stream, bias: f64| -> (f64, f64, f64) {
        let b = rng.uniform_in(-bias, bias);
        let f = rng.uniform_in(0.15, 0.5);
        let p = rng.uniform_in(0.0, 2.0 * std::f64::consts::PI);
        (b, f, p)
    };
    let (vy_b, vy_f, vy_p) = side(&mut rng, cfg.vy_bias);
    let (wz_b, wz_f, wz_p) = side(&mut rng, cfg.wz_bias);
    let (roll_b, roll_f, roll_p) = side(&mut rng, cfg.roll_bias);

    let two_pi = 2.0 * std::f64::consts::PI;
    let mut states = Vec::with_capacity(steps);
    for step in 0..steps {
        let t = step as f64 * cfg.dt;
        let mut q = [R::zero(); JOINT_COUNT];
        let mut dq = [R::zero(); JOINT_COUNT];
        for leg in 0..4 {
            let hip_arg = omega * t + leg_phase[leg];
            q[2 * leg] = R::of(hip_amp * hip_arg.sin());
            dq[2 * leg] = R::of(hip_amp * omega * hip_arg.cos());
            let knee_arg = hip_arg + cfg.knee_phase;
            let knee_sin = knee_arg.sin();
            if knee_sin > 0.0 {
                q[2 * leg + 1] = R::of(cfg.knee_amp * knee_sin);
                dq[2 * leg + 1] = R::of(cfg.knee_amp * omega * knee_arg.cos());
            }
        }
        let wobble = 0.5
            * ((two_pi * wobble_freq_a * t + wobble_phase_a).sin()
                + (two_pi * wobble_freq_b * t + wobble_phase_b).sin());
        let vx = speed + cfg.vx_noise_amp * wobble;
        let vy = vy_b + cfg.vy_amp * (two_pi * vy_f * t + vy_p).sin();
        let wz = wz_b + cfg.wz_amp * (two_pi * wz_f * t + wz_p).sin();
        let roll = roll_b + cfg.roll_amp * (two_pi * roll_f * t + roll_p).sin();
        states.push(LocomotorState {
            vx: R::of(vx),
            vy: R::of(vy),
            wz: R::of(wz),
            roll: R::of(roll),
            q,
            dq,
        });
    }
    Ok(Clip { gait, speed, states, commands: None })
}
