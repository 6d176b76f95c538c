//! Sagittal-plane mirror operators and planar yaw rotation.
//!
//! All of these are total linear involutions/isometries; tests pin the
//! involution and isometry properties at machine precision.

use crate::scalar::Real;
use crate::JOINT_COUNT;

use super::state::{LocomotorState, MorphologyMap, Transition, VelocityCommand};

/// Mirror a state: joints permuted by `swap` and scaled by `joint_sign`,
/// base components scaled by `state_sign`. Joint velocities transform the
/// same way as positions.
pub fn mirror_state<R: Real>(s: &LocomotorState<R>, m: &MorphologyMap) -> LocomotorState<R> {
    let mut q = [R::zero(); JOINT_COUNT];
    let mut dq = [R::zero(); JOINT_COUNT];
    for i in 0..JOINT_COUNT {
        let sign = R::of(m.joint_sign[i]);
        q[i] = sign * s.q[m.swap[i]];
        dq[i] = sign * s.dq[m.swap[i]];
    }
    LocomotorState {
        vx: R::of(m.state_sign[0]) * s.vx,
        vy: R::of(m.state_sign[1]) * s.vy,
        wz: R::of(m.state_sign[2]) * s.wz,
        roll: R::of(m.state_sign[3]) * s.roll,
        q,
        dq,
    }
}

/// Mirror a velocity command: `(vx, −vy, −ωz)` under the default tables.
pub fn mirror_command<R: Real>(v: &VelocityCommand<R>, m: &MorphologyMap) -> VelocityCommand<R> {
    VelocityCommand {
        vx: R::of(m.cmd_sign[0]) * v.vx,
        vy: R::of(m.cmd_sign[1]) * v.vy,
        wz: R::of(m.cmd_sign[2]) * v.wz,
    }
}

/// Mirror an action (target joint positions): same permutation and signs as
/// the joint block of the state.
pub fn mirror_action<R: Real>(a: &[R; JOINT_COUNT], m: &MorphologyMap) -> [R; JOINT_COUNT] {
    let mut out = [R::zero(); JOINT_COUNT];
    for i in 0..JOINT_COUNT {
        out[i] = R::of(m.joint_sign[i]) * a[m.swap[i]];
    }
    out
}

/// Mirror both endpoints of a transition.
pub fn mirror_transition<R: Real>(x: &Transition<R>, m: &MorphologyMap) -> Transition<R> {
    Transition { s0: mirror_state(&x.s0, m), s1: mirror_state(&x.s1, m), dt: x.dt }
}

/// Rotate the planar velocity pairs of both states and the command by `delta`
/// radians. Yaw rate, roll and the joint blocks are untouched.
pub fn yaw_rotate_transition<R: Real>(
    x: &Transition<R>,
    cmd: &VelocityCommand<R>,
    delta: R,
) -> (Transition<R>, VelocityCommand<R>) {
    debug_assert!(delta.abs() <= R::PI() + R::of(1e-12));
    let (sin, cos) = delta.sin_cos();
    let rot = |vx: R, vy: R| (cos * vx - sin * vy, sin * vx + cos * vy);

    let mut out = *x;
    let (vx0, vy0) = rot(x.s0.vx, x.s0.vy);
    out.s0.vx = vx0;
    out.s0.vy = vy0;
    let (vx1, vy1) = rot(x.s1.vx, x.s1.vy);
    out.s1.vx = vx1;
    out.s1.vy = vy1;

    let (cvx, cvy) = rot(cmd.vx, cmd.vy);
    (out, VelocityCommand { vx: cvx, vy: cvy, wz: cmd.wz })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::state::{FL_HIP, FR_HIP, FL_KNEE, FR_KNEE};
    use proptest::prelude::*;

    fn m() -> MorphologyMap {
        MorphologyMap::default()
    }

    fn rand_state(vals: &[f64; 20]) -> LocomotorState<f64> {
        LocomotorState::from_flat(vals)
    }

    #[test]
    fn zero_state_is_fixed_point() {
        let z = LocomotorState::<f64>::zero();
        assert_eq!(mirror_state(&z, &m()), z);
    }

    #[test]
    fn hand_applied_permutation_table() {
        // vy=0.3, wz=0.1, q[FL_hip]=0.2, all else 0.
        let mut s = LocomotorState::<f64>::zero();
        s.vy = 0.3;
        s.wz = 0.1;
        s.q[FL_HIP] = 0.2;
        let r = mirror_state(&s, &m());
        assert_eq!(r.vy, -0.3);
        assert_eq!(r.wz, -0.1);
        assert_eq!(r.q[FR_HIP], 0.2 * m().joint_sign[FR_HIP]);
        assert_eq!(r.q[FL_HIP], 0.0);
        assert_eq!(r.vx, 0.0);
        assert_eq!(r.roll, 0.0);
    }

    #[test]
    fn command_signs() {
        let morph = m();
        let fwd = VelocityCommand::new(1.0, 0.0, 0.0);
        assert_eq!(mirror_command(&fwd, &morph), fwd);
        let lat = VelocityCommand::new(0.0, 1.0, 0.5);
        assert_eq!(mirror_command(&lat, &morph), VelocityCommand::new(0.0, -1.0, -0.5));
        assert_eq!(mirror_command(&mirror_command(&lat, &morph), &morph), lat);
    }

    #[test]
    fn action_unit_vector_moves_contralaterally() {
        let morph = m();
        let mut a = [0.0f64; JOINT_COUNT];
        a[FL_KNEE] = 1.0;
        let r = mirror_action(&a, &morph);
        assert_eq!(r[FR_KNEE], morph.joint_sign[FR_KNEE]);
        assert_eq!(r[FL_KNEE], 0.0);
        assert_eq!(mirror_action(&mirror_action(&a, &morph), &morph), a);
        assert_eq!(mirror_action(&[0.0; JOINT_COUNT], &morph), [0.0; JOINT_COUNT]);
    }

    #[test]
    fn yaw_zero_is_identity_and_pi_flips() {
        let mut s0 = LocomotorState::<f64>::zero();
        s0.vx = 1.0;
        let x = Transition { s0, s1: s0, dt: 0.02 };
        let cmd = VelocityCommand::new(1.0, 0.0, 0.0);
        let (x0, c0) = yaw_rotate_transition(&x, &cmd, 0.0);
        assert_eq!(x0, x);
        assert_eq!(c0, cmd);
        let (xpi, _) = yaw_rotate_transition(&x, &cmd, std::f64::consts::PI);
        assert!((xpi.s0.vx + 1.0).abs() < 1e-12);
        assert!(xpi.s0.vy.abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn mirror_is_involution(vals in proptest::array::uniform20(-3.0f64..3.0)) {
            let s = rand_state(&vals);
            let morph = m();
            let back = mirror_state(&mirror_state(&s, &morph), &morph);
            for (a, b) in back.flatten().iter().zip(s.flatten().iter()) {
                prop_assert_eq!(a, b);
            }
        }

        #[test]
        fn yaw_preserves_speed_and_rest(
            vals in proptest::array::uniform20(-3.0f64..3.0),
            delta in -std::f64::consts::PI..std::f64::consts::PI,
        ) {
            let s = rand_state(&vals);
            let x = Transition { s0: s, s1: s, dt: 0.02 };
            let cmd = VelocityCommand::new(0.7, -0.2, 0.4);
            let (rx, rc) = yaw_rotate_transition(&x, &cmd, delta);
            let speed = (s.vx * s.vx + s.vy * s.vy).sqrt();
            let rspeed = (rx.s0.vx * rx.s0.vx + rx.s0.vy * rx.s0.vy).sqrt();
            prop_assert!((speed - rspeed).abs() < 1e-12);
            prop_assert_eq!(rx.s0.wz, s.wz);
            prop_assert_eq!(rx.s0.roll, s.roll);
            prop_assert_eq!(rx.s0.q, s.q);
            prop_assert_eq!(rx.s0.dq, s.dq);
            prop_assert_eq!(rc.wz, cmd.wz);
        }
    }
}
