use gaitlab_core::env::{smooth_command, step, EnvConfig};
use gaitlab_core::io::{load_checkpoint, load_run_config, Checkpoint};
use gaitlab_core::metrics::count_safety_violations;
use gaitlab_core::motion::{LocomotorState, VelocityCommand};
use gaitlab_core::rng::{Stream, StreamId};
use gaitlab_core::train::PolicyParams;

#[test]
fn sprint_modes() {
    let cfg = load_run_config(std::path::Path::new(&std::env::var("SPRINT_CFG").unwrap())).unwrap();
    let env_cfg: EnvConfig<f64> = cfg.env.clone();
    for (label, path) in [("full", std::env::var("SPRINT_FULL").unwrap()), ("nocon", std::env::var("SPRINT_NOCON").unwrap())] {
        let Checkpoint::Run { policy, .. } = load_checkpoint(std::path::Path::new(&path)).unwrap() else { panic!() };
        for sampled in [false, true] {
            let mut rng = Stream::new(0, StreamId::Eval);
            let target = VelocityCommand::new(3.0, 0.0, 0.0);
            let mut cmd = VelocityCommand::zero();
            let mut s = LocomotorState::<f64>::zero();
            let mut outs = Vec::new();
            let mut vx_acc = 0.0;
            for _ in 0..750 {
                cmd = smooth_command(&cmd, &target, env_cfg.alpha_cmd);
                let obs = PolicyParams::obs(&s, &cmd);
                let a = if sampled { policy.sample_action(&obs, &mut rng).0 } else { policy.actor_mean(&obs) };
                let o = step(&s, &a, &cmd, &env_cfg);
                s = o.next;
                vx_acc += s.vx;
                outs.push(o);
            }
            let v = count_safety_violations(&outs, &env_cfg.limits);
            println!("{label} sampled={sampled}: torque viol steps = {}, mean vx = {:.2}", v[2], vx_acc / 750.0);
        }
    }
}
