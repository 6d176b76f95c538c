//! Subcommand implementations.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context};

use gaitlab_core::env::{step, EnvConfig};
use gaitlab_core::io::{
    load_checkpoint, load_report, load_run_config, merge_reports, run_config_to_string,
    save_checkpoint, save_report, Checkpoint, EvalReport, RunConfig,
};
use gaitlab_core::metrics::{
    count_safety_violations, fgd, footfall_stats, pca_embed, tracking_eval, Agent, AgentControl,
    OracleAgent, ProfileOutcome, ProfileReport, TrackingReport,
};
use gaitlab_core::motion::{
    build_expert_dataset, read_dataset, write_dataset, LocomotorState, MotionDataset, Transition,
    VelocityCommand,
};
use gaitlab_core::rng::{Stream, StreamId};
use gaitlab_core::train::{
    train_iteration, Ablation, IterationMetrics, TrainState,
};

use crate::manifest::{file_sha256, manifest_to_string, RunManifest};
use crate::plot;

static INTERRUPTED: AtomicBool = AtomicBool::new(false);

extern "C" fn on_sigint(_sig: libc::c_int) {
    INTERRUPTED.store(true, Ordering::SeqCst);
}

fn install_sigint_handler() {
    unsafe {
        libc::signal(libc::SIGINT, on_sigint as *const () as libc::sighandler_t);
    }
}

/// Resolves the configuration: explicit flag, then `GAITLAB_CONFIG`, then
/// built-in defaults.
fn resolve_config(flag: Option<PathBuf>) -> anyhow::Result<RunConfig> {
    let path = flag.or_else(|| std::env::var_os("GAITLAB_CONFIG").map(PathBuf::from));
    match path {
        Some(p) => load_run_config(&p).with_context(|| format!("loading config {}", p.display())),
        None => Ok(RunConfig::default()),
    }
}

pub fn gen_data(config: Option<PathBuf>, seed: u64, out: &Path) -> anyhow::Result<()> {
    let cfg = resolve_config(config)?;
    let dataset: MotionDataset<f64> =
        build_expert_dataset(&cfg.data, seed).context("building expert dataset")?;
    write_dataset(&dataset, out).with_context(|| format!("writing {}", out.display()))?;
    let backward = dataset
        .clips
        .iter()
        .filter(|c| {
            let n = c.states.len() as f64;
            c.states.iter().map(|s| s.vx).sum::<f64>() / n < 0.0
        })
        .count();
    println!(
        "wrote {} clips ({} transitions) to {}",
        dataset.clips.len(),
        dataset.transition_count(),
        out.display()
    );
    println!(
        "bias summary: forward-dominant fraction {:.2}, backward clips {}",
        dataset.forward_dominant_fraction(),
        backward
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn train(
    config: Option<PathBuf>,
    dataset_path: &Path,
    ablation: &str,
    seed: u64,
    out: &Path,
    iterations: Option<usize>,
    checkpoint_every: usize,
) -> anyhow::Result<()> {
    install_sigint_handler();
    let mut cfg = resolve_config(config)?;
    let Some(ablation) = Ablation::parse(ablation) else {
        bail!("unknown ablation `{ablation}` (expected full|no_sacc|no_constraints|vanilla_amp)");
    };
    cfg.train.ablation = ablation;
    if let Some(iters) = iterations {
        cfg.train.iterations = iters;
    }
    let dataset: MotionDataset<f64> =
        read_dataset(dataset_path).with_context(|| format!("reading {}", dataset_path.display()))?;
    std::fs::create_dir_all(out)?;

    let manifest = RunManifest {
        seed,
        ablation: ablation.name().to_string(),
        iterations: cfg.train.iterations,
        config_text: run_config_to_string(&cfg),
        dataset_sha256: file_sha256(dataset_path)?,
        created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        metrics_csv: "metrics.csv".into(),
        final_checkpoint: "checkpoint.json".into(),
    };
    std::fs::write(out.join("manifest.json"), manifest_to_string(&manifest))?;

    let mut state = TrainState::new(&dataset, cfg.train.clone(), cfg.env.clone(), seed);
    let mut csv = String::from(&IterationMetrics::csv_header());
    csv.push('\n');

    let write_ckpt = |state: &TrainState<f64>, name: &str| -> anyhow::Result<()> {
        let ck = Checkpoint::Run {
            iteration: state.iteration,
            ablation,
            policy: state.policy.clone(),
            prior: state.prior.clone(),
            ledger: state.ledger.clone(),
        };
        save_checkpoint(&ck, &out.join(name))?;
        Ok(())
    };

    let total = cfg.train.iterations;
    for i in 0..total {
        match train_iteration(&mut state) {
            Ok(metrics) => {
                csv.push_str(&metrics.csv_row());
                csv.push('\n');
                if (i + 1) % 10 == 0 || i + 1 == total {
                    println!(
                        "iter {}/{}: task {:.3} diff {:.3} bce {:.3} track {:.3}",
                        i + 1,
                        total,
                        metrics.mean_task_reward,
                        metrics.mean_diff_reward,
                        metrics.bce_loss,
                        metrics.tracking_err
                    );
                }
            }
            Err(e) => {
                // Abort with a diagnostic checkpoint for post-mortem.
                write_ckpt(&state, "checkpoint_diagnostic.json")?;
                std::fs::write(out.join("metrics.csv"), &csv)?;
                bail!("training aborted at iteration {}: {e}", i + 1);
            }
        }
        if checkpoint_every > 0 && (i + 1) % checkpoint_every == 0 {
            write_ckpt(&state, &format!("checkpoint_iter_{:05}.json", i + 1))?;
        }
        if INTERRUPTED.load(Ordering::SeqCst) {
            eprintln!("interrupted; writing final checkpoint");
            break;
        }
    }
    std::fs::write(out.join("metrics.csv"), &csv)?;
    write_ckpt(&state, "checkpoint.json")?;
    println!("run complete: {}", out.display());
    Ok(())
}

/// Policy wrapper; tracking uses mean actions, the sprint protocol samples
/// from the deployed stochastic controller.
struct EvalAgent {
    inner: Checkpoint,
    sample_rng: Option<Stream>,
}

impl Agent<f64> for EvalAgent {
    fn act(&mut self, state: &LocomotorState<f64>, cmd: &VelocityCommand<f64>) -> AgentControl<f64> {
        match &mut self.inner {
            Checkpoint::Oracle => OracleAgent.act(state, cmd),
            Checkpoint::Run { policy, .. } => match &mut self.sample_rng {
                Some(rng) => {
                    let obs =
                        gaitlab_core::train::PolicyParams::obs(state, cmd);
                    let (action, _) = policy.sample_action(&obs, rng);
                    AgentControl::JointTargets(action)
                }
                None => policy.act(state, cmd),
            },
        }
    }
}

pub fn eval(
    config: Option<PathBuf>,
    checkpoint_path: &Path,
    dataset_path: &Path,
    seed: u64,
    out: &Path,
) -> anyhow::Result<()> {
    let cfg = resolve_config(config)?;
    let checkpoint = load_checkpoint(checkpoint_path)
        .with_context(|| format!("loading checkpoint {}", checkpoint_path.display()))?;
    let dataset: MotionDataset<f64> =
        read_dataset(dataset_path).with_context(|| format!("reading {}", dataset_path.display()))?;
    std::fs::create_dir_all(out)?;
    let env_cfg = cfg.env.clone();

    let variant = match &checkpoint {
        Checkpoint::Oracle => "oracle".to_string(),
        Checkpoint::Run { ablation, .. } => ablation.name().to_string(),
    };

    // Tracking over the four standard profiles, recording world trajectories.
    let mut agent = EvalAgent { inner: checkpoint, sample_rng: None };
    let mut profiles = Vec::new();
    let mut trajectories = Vec::new();
    for (name, cmd, distance) in gaitlab_core::metrics::standard_profiles::<f64>() {
        let (outcome, traj) = tracked_eval(&mut agent, &env_cfg, &cmd, distance, 60_000);
        trajectories.push((name.clone(), traj));
        profiles.push(ProfileReport {
            name,
            command: [cmd.vx, cmd.vy, cmd.wz],
            distance,
            outcome,
        });
    }
    let tracking = TrackingReport { profiles };

    // Sprint protocol: 15 s at 3 m/s with the deployed (deterministic)
    // controller; violations counted over every step.
    let sprint_target = VelocityCommand::new(3.0, 0.0, 0.0);
    let sprint_steps = (15.0 / env_cfg.dt) as usize;
    let mut outs = Vec::with_capacity(sprint_steps);
    let mut s = LocomotorState::<f64>::zero();
    let mut sprint_states = vec![s];
    let mut sprint_cmd = VelocityCommand::zero();
    for _ in 0..sprint_steps {
        // Commands ramp through the same EMA the curriculum trains with.
        sprint_cmd =
            gaitlab_core::env::smooth_command(&sprint_cmd, &sprint_target, env_cfg.alpha_cmd);
        match agent.act(&s, &sprint_cmd) {
            AgentControl::JointTargets(a) => {
                let o = step(&s, &a, &sprint_cmd, &env_cfg);
                s = o.next;
                if o.failed {
                    outs.push(o);
                    break;
                }
                outs.push(o);
            }
            AgentControl::DirectVelocity(v) => {
                s.vx = v.vx;
                s.vy = v.vy;
                s.wz = v.wz;
            }
        }
        sprint_states.push(s);
    }
    let violations = count_safety_violations(&outs, &env_cfg.limits);

    // FGD population: transitions gathered over a fixed command sweep.
    let agent_transitions = sweep_transitions(&mut agent, &env_cfg, seed);
    let (norm_mean, norm_std) = dataset.transition_stats();
    let standardize = |x: &Transition<f64>| -> Vec<f64> {
        x.flatten()
            .iter()
            .zip(norm_mean.iter().zip(&norm_std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    };
    let agent_rows: Vec<Vec<f64>> = agent_transitions.iter().map(&standardize).collect();
    let expert_all = dataset.all_transitions();
    let expert_rows: Vec<Vec<f64>> =
        expert_all.iter().take(4000).map(|(t, _)| standardize(t)).collect();
    let fgd_value = if agent_rows.is_empty() {
        f64::NAN
    } else {
        fgd(&agent_rows, &expert_rows).map(|v| v).unwrap_or(f64::NAN)
    };

    let report = EvalReport { variant, seed, tracking, fgd: fgd_value, violations };
    save_report(&report, &out.join("report.json"))?;

    // Figures: trajectories, footfall from the sprint, PCA scatter.
    plot::trajectory_plot(&trajectories, &out.join("trajectories.png"))?;
    let stats = footfall_stats(&sprint_states);
    plot::footfall_plot(&stats.intervals, &stats.support, &out.join("footfall.png"))?;
    if !agent_rows.is_empty() {
        let mut all_rows = expert_rows.clone();
        all_rows.extend(agent_rows.iter().cloned());
        if let Ok(p) = pca_embed(&all_rows, 2) {
            let split = expert_rows.len();
            let expert_pts: Vec<(f64, f64)> =
                p.projected[..split].iter().map(|r| (r[0], r[1])).collect();
            let agent_pts: Vec<(f64, f64)> =
                p.projected[split..].iter().map(|r| (r[0], r[1])).collect();
            plot::scatter_plot(
                &[("expert", expert_pts), ("agent", agent_pts)],
                &out.join("pca.png"),
            )?;
        }
    }

    println!("report written to {}", out.join("report.json").display());
    for p in &report.tracking.profiles {
        match &p.outcome {
            ProfileOutcome::Metrics { deviation, heading_drift, .. } => {
                println!("  {:>15}: dev {:.3} m, drift {:.3} rad", p.name, deviation, heading_drift)
            }
            ProfileOutcome::Fail { reason } => println!("  {:>15}: FAIL ({reason})", p.name),
        }
    }
    println!("  fgd {:.3}, violations (pos, vel, torque) = {:?}", report.fgd, report.violations);
    Ok(())
}

/// tracking_eval variant that also returns the world trajectory for plotting.
fn tracked_eval(
    agent: &mut EvalAgent,
    env_cfg: &EnvConfig<f64>,
    cmd: &VelocityCommand<f64>,
    distance: f64,
    max_steps: usize,
) -> (ProfileOutcome, Vec<(f64, f64)>) {
    // Run the shared implementation for the metrics...
    let outcome = tracking_eval(agent, env_cfg, cmd, distance, max_steps);
    // ...and re-integrate for the figure (same dynamics, deterministic).
    let dt = env_cfg.dt;
    let mut s = LocomotorState::<f64>::zero();
    let mut heading = 0.0;
    let (mut x, mut y) = (0.0, 0.0);
    let mut traj = vec![(0.0, 0.0)];
    for _ in 0..max_steps.min(30_000) {
        match agent.act(&s, cmd) {
            AgentControl::JointTargets(a) => {
                let o = step(&s, &a, cmd, env_cfg);
                if o.failed || !o.next.is_finite() {
                    break;
                }
                s = o.next;
            }
            AgentControl::DirectVelocity(v) => {
                s.vx = v.vx;
                s.vy = v.vy;
                s.wz = v.wz;
            }
        }
        heading += s.wz * dt;
        x += (heading.cos() * s.vx - heading.sin() * s.vy) * dt;
        y += (heading.sin() * s.vx + heading.cos() * s.vy) * dt;
        traj.push((x, y));
        let progress = x * cmd.vx + y * cmd.vy;
        let norm = (cmd.vx * cmd.vx + cmd.vy * cmd.vy).sqrt().max(1e-12);
        if progress / norm >= distance {
            break;
        }
    }
    (outcome, traj)
}

/// Deterministic command sweep for the FGD population.
fn sweep_transitions(
    agent: &mut EvalAgent,
    env_cfg: &EnvConfig<f64>,
    seed: u64,
) -> Vec<Transition<f64>> {
    let mut rng = Stream::new(seed, StreamId::Eval);
    let sweeps = [
        VelocityCommand::new(0.6, 0.0, 0.0),
        VelocityCommand::new(1.5, 0.0, 0.0),
        VelocityCommand::new(2.5, 0.0, 0.0),
        VelocityCommand::new(3.2, 0.0, 0.0),
        VelocityCommand::new(0.0, 0.8, 0.0),
        VelocityCommand::new(-0.8, 0.0, 0.0),
    ];
    let mut transitions = Vec::new();
    for cmd in sweeps {
        let mut s = gaitlab_core::env::reset(&mut rng, env_cfg);
        for _ in 0..400 {
            match agent.act(&s, &cmd) {
                AgentControl::JointTargets(a) => {
                    let o = step(&s, &a, &cmd, env_cfg);
                    if o.failed || !o.next.is_finite() {
                        break;
                    }
                    transitions.push(Transition { s0: s, s1: o.next, dt: env_cfg.dt });
                    s = o.next;
                }
                AgentControl::DirectVelocity(v) => {
                    let mut next = s;
                    next.vx = v.vx;
                    next.vy = v.vy;
                    next.wz = v.wz;
                    transitions.push(Transition { s0: s, s1: next, dt: env_cfg.dt });
                    s = next;
                }
            }
        }
    }
    transitions
}

pub fn compare(reports: &[PathBuf], out: Option<&Path>) -> anyhow::Result<()> {
    let mut loaded = Vec::with_capacity(reports.len());
    for p in reports {
        loaded.push(load_report(p).with_context(|| format!("loading {}", p.display()))?);
    }
    let table = merge_reports(&loaded)?;
    match out {
        Some(path) => {
            std::fs::write(path, &table)?;
            println!("wrote {}", path.display());
        }
        None => print!("{table}"),
    }
    Ok(())
}
