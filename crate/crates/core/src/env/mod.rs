//! Deterministic planar-quadruped plant.
//!
//! PD-actuated joint dynamics with a fixed linear joint-to-body coupling.
//! Each leg transmits force in proportion to a smooth stance gate on its hip
//! velocity (a leg sweeping backward is loaded, a swinging leg is not —
//! the same convention as the stance proxy), which is what lets periodic
//! gait patterns produce net base motion. The coupling rows are constructed
//! mirror-equivariantly: the forward row is left/right symmetric, the lateral
//! and yaw rows antisymmetric, so mirroring state, action and command
//! commutes with the step function.
//!
//! Cost channels measure pre-clip torque excess and post-integration
//! position/velocity excess: the plant itself is protected by clipping, but
//! violations stay observable for the constraint machinery.

mod command;

pub use command::{episode_command_schedule, sample_raw_command, smooth_command};

use crate::motion::{CommandEnvelope, LocomotorState, VelocityCommand};
use crate::rng::Stream;
use crate::scalar::Real;
use crate::JOINT_COUNT;

/// Per-joint actuator bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ActuatorLimits<R> {
    pub q_lim: [R; JOINT_COUNT],
    pub dq_lim: [R; JOINT_COUNT],
    pub tau_lim: [R; JOINT_COUNT],
}

impl<R: Real> ActuatorLimits<R> {
    pub fn uniform(q: f64, dq: f64, tau: f64) -> Self {
        ActuatorLimits {
            q_lim: [R::of(q); JOINT_COUNT],
            dq_lim: [R::of(dq); JOINT_COUNT],
            tau_lim: [R::of(tau); JOINT_COUNT],
        }
    }
}

impl<R: Real> Default for ActuatorLimits<R> {
    fn default() -> Self {
        Self::uniform(0.8, 12.0, 6.0)
    }
}

/// Plant and curriculum constants.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig<R> {
    /// Control period (s).
    pub dt: R,
    pub kp: R,
    pub kd: R,
    /// Joint inertia and viscous damping.
    pub inertia: R,
    pub damping: R,
    pub limits: ActuatorLimits<R>,
    /// Forward-row gain of the coupling matrix (hip sweep → vx).
    pub drive_vx: R,
    /// Lateral-row gain (left/right hip differential → vy).
    pub drive_vy: R,
    /// Yaw-row gain (front/rear × left/right differential → ωz).
    pub drive_wz: R,
    /// Componentwise base drag.
    pub drag: [R; 3],
    /// Softness (rad/s) of the stance gate on hip velocity.
    pub gate_vel_width: R,
    /// Roll relaxation rate and coupling to left/right loaded-hip asymmetry.
    pub roll_relax: R,
    pub roll_couple: R,
    /// Tracking-kernel widths of the task reward.
    pub sigma_v: R,
    pub sigma_w: R,
    /// Episode length and terminal zero-command window (steps).
    pub episode_len: usize,
    pub zero_cmd_window: usize,
    /// First-order EMA coefficient for command smoothing.
    pub alpha_cmd: R,
    /// Raw commands are resampled every this many steps within an episode.
    pub cmd_resample_steps: usize,
    pub envelope: CommandEnvelope<R>,
    /// Observation noise scale seen by the policy (state stays clean).
    pub obs_noise: R,
    /// Reset perturbation scale.
    pub reset_scale: R,
}

impl<R: Real> Default for EnvConfig<R> {
    fn default() -> Self {
        EnvConfig {
            dt: R::of(0.02),
            kp: R::of(30.0),
            kd: R::of(1.2),
            inertia: R::of(0.05),
            damping: R::of(0.2),
            limits: ActuatorLimits::default(),
            drive_vx: R::of(1.2),
            drive_vy: R::of(1.0),
            drive_wz: R::of(1.0),
            drag: [R::of(3.0), R::of(3.0), R::of(3.0)],
            gate_vel_width: R::of(0.5),
            roll_relax: R::of(8.0),
            roll_couple: R::of(0.05),
            sigma_v: R::of(0.25),
            sigma_w: R::of(0.25),
            episode_len: 1000,
            zero_cmd_window: 100,
            alpha_cmd: R::of(0.05),
            cmd_resample_steps: 300,
            envelope: CommandEnvelope::default(),
            obs_noise: R::zero(),
            reset_scale: R::of(0.05),
        }
    }
}

impl<R: Real> EnvConfig<R> {
    /// The fixed 3×8 coupling matrix, row-major. Row 0 (vx) is left/right
    /// symmetric; rows 1 (vy) and 2 (ωz) are antisymmetric, which is what the
    /// mirror-equivariance property needs. Knee columns are zero; force comes
    /// from hip sweep of loaded legs.
    pub fn coupling(&self) -> [[R; JOINT_COUNT]; 3] {
        let z = R::zero();
        let h = self.drive_vx;
        let p = self.drive_vy;
        let g = self.drive_wz;
        // Leg order within joints: FL(0,1) FR(2,3) RL(4,5) RR(6,7).
        [
            [-h, z, -h, z, -h, z, -h, z],
            [p, z, -p, z, p, z, -p, z],
            [g, z, -g, z, -g, z, g, z],
        ]
    }
}

/// One control step's outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput<R> {
    pub next: LocomotorState<R>,
    pub r_task: R,
    /// `(position, velocity, torque)` violation magnitudes, all ≥ 0.
    pub costs: [R; 3],
    /// `flags[i]` ⇔ `costs[i] > 0`.
    pub flags: [bool; 3],
    /// Pre-clip commanded torques.
    pub torques_raw: [R; JOINT_COUNT],
    /// Applied (clipped) torques.
    pub torques: [R; JOINT_COUNT],
    /// Stance proxy per leg, FL FR RL RR.
    pub stance: [bool; 4],
    /// Set when the action was non-finite; the episode must terminate.
    pub failed: bool,
}

#[inline]
fn clip<R: Real>(x: R, lim: R) -> R {
    x.max(-lim).min(lim)
}

#[inline]
fn gate<R: Real>(hip_vel: R, cfg: &EnvConfig<R>) -> R {
    let u = -hip_vel / cfg.gate_vel_width;
    if u >= R::zero() {
        R::one() / (R::one() + (-u).exp())
    } else {
        let e = u.exp();
        e / (R::one() + e)
    }
}

/// Advances the plant by one control period. Pure and deterministic.
pub fn step<R: Real>(
    s: &LocomotorState<R>,
    action: &[R; JOINT_COUNT],
    cmd: &VelocityCommand<R>,
    cfg: &EnvConfig<R>,
) -> StepOutput<R> {
    if action.iter().any(|a| !a.is_finite()) {
        return StepOutput {
            next: *s,
            r_task: R::zero(),
            costs: [R::zero(); 3],
            flags: [false; 3],
            torques_raw: [R::zero(); JOINT_COUNT],
            torques: [R::zero(); JOINT_COUNT],
            stance: [false; 4],
            failed: true,
        };
    }
    let dt = cfg.dt;
    let mut torques_raw = [R::zero(); JOINT_COUNT];
    let mut torques = [R::zero(); JOINT_COUNT];
    let mut dq_next = [R::zero(); JOINT_COUNT];
    let mut q_next = [R::zero(); JOINT_COUNT];
    let hard_stop = R::of(1.05);
    for j in 0..JOINT_COUNT {
        let tau_raw = cfg.kp * (action[j] - s.q[j]) - cfg.kd * s.dq[j];
        let tau = clip(tau_raw, cfg.limits.tau_lim[j]);
        torques_raw[j] = tau_raw;
        torques[j] = tau;
        dq_next[j] = s.dq[j] + dt * (tau - cfg.damping * s.dq[j]) / cfg.inertia;
        q_next[j] = clip(s.q[j] + dt * dq_next[j], cfg.limits.q_lim[j] * hard_stop);
    }

    // Stance gates from post-update hip velocities.
    let mut load = [R::zero(); 4];
    for (leg, l) in load.iter_mut().enumerate() {
        *l = gate(dq_next[2 * leg], cfg);
    }
    let coupling = cfg.coupling();
    let mut accel = [R::zero(); 3];
    for (row, acc) in coupling.iter().zip(accel.iter_mut()) {
        let mut a = R::zero();
        for j in 0..JOINT_COUNT {
            a += row[j] * load[j / 2] * dq_next[j];
        }
        *acc = a;
    }
    let vx = s.vx + dt * (accel[0] - cfg.drag[0] * s.vx);
    let vy = s.vy + dt * (accel[1] - cfg.drag[1] * s.vy);
    let wz = s.wz + dt * (accel[2] - cfg.drag[2] * s.wz);

    // Roll relaxes toward level plus a loaded-hip left/right asymmetry term.
    let asym = load[0] * dq_next[0] + load[2] * dq_next[4]
        - load[1] * dq_next[2]
        - load[3] * dq_next[6];
    let roll = s.roll + dt * (-cfg.roll_relax * s.roll + cfg.roll_couple * asym);

    let mut costs = [R::zero(); 3];
    for j in 0..JOINT_COUNT {
        costs[0] += (q_next[j].abs() - cfg.limits.q_lim[j]).max(R::zero());
        costs[1] += (dq_next[j].abs() - cfg.limits.dq_lim[j]).max(R::zero());
        costs[2] += (torques_raw[j].abs() - cfg.limits.tau_lim[j]).max(R::zero());
    }
    let flags = [costs[0] > R::zero(), costs[1] > R::zero(), costs[2] > R::zero()];

    let next = LocomotorState { vx, vy, wz, roll, q: q_next, dq: dq_next };
    let ev = (vx - cmd.vx) * (vx - cmd.vx) + (vy - cmd.vy) * (vy - cmd.vy);
    let ew = (wz - cmd.wz) * (wz - cmd.wz);
    let r_task = (-ev / (cfg.sigma_v * cfg.sigma_v)).exp()
        + R::of(0.5) * (-ew / (cfg.sigma_w * cfg.sigma_w)).exp();

    StepOutput {
        stance: stance_proxy(&next),
        next,
        r_task,
        costs,
        flags,
        torques_raw,
        torques,
        failed: false,
    }
}

/// Stance proxy: a leg is in stance iff its hip sweeps backward
/// (`dq_hip < 0`, strict).
pub fn stance_proxy<R: Real>(s: &LocomotorState<R>) -> [bool; 4] {
    [
        s.dq[0] < R::zero(),
        s.dq[2] < R::zero(),
        s.dq[4] < R::zero(),
        s.dq[6] < R::zero(),
    ]
}

/// Small random perturbation around the zero state, within `reset_scale`.
pub fn reset<R: Real>(rng: &mut Stream, cfg: &EnvConfig<R>) -> LocomotorState<R> {
    let scale = cfg.reset_scale.to64();
    let mut flat = [R::zero(); crate::STATE_DIM];
    for v in &mut flat {
        *v = rng.uniform_in_r(-scale, scale);
    }
    LocomotorState::from_flat(&flat)
}
