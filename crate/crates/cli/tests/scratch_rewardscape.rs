use gaitlab_core::env::{step, EnvConfig};
use gaitlab_core::io::{load_checkpoint, load_run_config, Checkpoint};
use gaitlab_core::motion::{read_dataset, LocomotorState, Transition, VelocityCommand};
use gaitlab_core::prior::style_reward;
use gaitlab_core::rng::{Stream, StreamId};
use gaitlab_core::train::{PolicyParams, PriorSnapshot};

fn mean_reward(
    prior: &gaitlab_core::prior::DenoiserParams<f64>,
    xs: &[Transition<f64>],
    cmd: VelocityCommand<f64>,
    n_mc: usize,
) -> (f64, f64) {
    let mut rng = Stream::new(7, StreamId::RewardDraws);
    let vals: Vec<f64> =
        xs.iter().map(|x| style_reward(x, &cmd, prior, &mut rng, n_mc).unwrap()).collect();
    let m = vals.iter().sum::<f64>() / vals.len() as f64;
    let v = vals.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / vals.len() as f64;
    (m, v.sqrt())
}

#[test]
fn reward_landscape() {
    let cfg = load_run_config(std::path::Path::new(&std::env::var("SCAPE_CFG").unwrap_or("/tmp/cal/e11.cfg".into()))).unwrap();
    let ck = load_checkpoint(std::path::Path::new(&std::env::var("SCAPE_CKPT").unwrap_or("/tmp/cal/e11_init/checkpoint.json".into()))).unwrap();
    let Checkpoint::Run { policy, prior: PriorSnapshot::Diffusion(prior), .. } = ck else { panic!() };
    let env_cfg: EnvConfig<f64> = cfg.env.clone();
    let ds = read_dataset::<f64>(std::path::Path::new("/tmp/smoke/dataset.json")).unwrap();

    // (a) expert with true commands
    let expert: Vec<(Transition<f64>, VelocityCommand<f64>)> = ds.all_transitions();
    let mut rng = Stream::new(1, StreamId::RewardDraws);
    let ev: Vec<f64> = expert.iter().step_by(7).take(200)
        .map(|(x, c)| style_reward(x, c, &prior, &mut rng, 2).unwrap()).collect();
    println!("expert w/ true cmd: mean {:.3}", ev.iter().sum::<f64>() / ev.len() as f64);

    // BC rollout at its natural gait (~1.65)
    let mut s = LocomotorState::<f64>::zero();
    let cmd06 = VelocityCommand::new(0.6, 0.0, 0.0);
    let mut gait: Vec<Transition<f64>> = Vec::new();
    for t in 0..800 {
        let obs = PolicyParams::obs(&s, &cmd06);
        let a = policy.actor_mean(&obs);
        let o = step(&s, &a, &cmd06, &env_cfg);
        if t > 200 { gait.push(Transition { s0: s, s1: o.next, dt: env_cfg.dt }); }
        s = o.next;
    }
    let realized_vx = gait.iter().map(|x| x.s1.vx).sum::<f64>() / gait.len() as f64;
    println!("BC gait realized vx = {realized_vx:.2}");
    for (label, c) in [("cmd=0.6", cmd06), ("cmd=realized", VelocityCommand::new(realized_vx, 0.0, 0.0)), ("cmd=0", VelocityCommand::zero())] {
        let (m, sd) = mean_reward(&prior, &gait, c, 2);
        println!("BC gait | {label}: r_diff mean {m:.3} sd {sd:.3}");
    }

    // standing
    let stand: Vec<Transition<f64>> = (0..200).map(|_| {
        let z = LocomotorState::<f64>::zero();
        Transition { s0: z, s1: z, dt: env_cfg.dt }
    }).collect();
    for (label, c) in [("cmd=0.6", cmd06), ("cmd=0", VelocityCommand::zero())] {
        let (m, sd) = mean_reward(&prior, &stand, c, 2);
        println!("standing | {label}: r_diff mean {m:.3} sd {sd:.3}");
    }
}
