//! Vectorized rollout collection against a frozen prior snapshot.
//!
//! Environment instances step independently on their own RNG streams, so the
//! buffer is bit-identical regardless of how rayon schedules them; rows are
//! merged env-major.

use rayon::prelude::*;

use crate::env::{
    episode_command_schedule, reset, sample_raw_command, smooth_command, step, EnvConfig,
};
use crate::motion::{LocomotorState, Transition, VelocityCommand};
use crate::rng::Stream;
use crate::scalar::Real;
use crate::{JOINT_COUNT, STATE_DIM};

use super::config::TrainConfig;
use super::policy::PolicyParams;
use super::ppo::mix_reward;
use super::runner::PriorSnapshot;
use super::TrainError;

/// One persistent environment worker.
#[derive(Debug, Clone)]
pub struct EnvInstance<R> {
    pub state: LocomotorState<R>,
    pub t_in_episode: usize,
    pub raw_cmd: VelocityCommand<R>,
    pub smoothed_cmd: VelocityCommand<R>,
    pub rng: Stream,
    pub needs_reset: bool,
}

impl<R: Real> EnvInstance<R> {
    pub fn new(rng: Stream) -> Self {
        EnvInstance {
            state: LocomotorState::zero(),
            t_in_episode: 0,
            raw_cmd: VelocityCommand::zero(),
            smoothed_cmd: VelocityCommand::zero(),
            rng,
            needs_reset: true,
        }
    }
}

/// Fixed `horizon × n_envs` record of everything one iteration needs.
#[derive(Debug, Clone)]
pub struct RolloutBuffer<R> {
    pub n_envs: usize,
    pub horizon: usize,
    pub obs: Vec<Vec<R>>,
    /// Smoothed command the policy tracked.
    pub cmds: Vec<VelocityCommand<R>>,
    /// Conditioning command fed to the prior (zero-filled without SACC).
    pub cond_cmds: Vec<VelocityCommand<R>>,
    pub actions: Vec<[R; JOINT_COUNT]>,
    pub log_probs: Vec<R>,
    pub r_task: Vec<R>,
    pub r_diff: Vec<R>,
    pub reward: Vec<R>,
    pub values: Vec<R>,
    pub costs: Vec<[R; 3]>,
    pub cost_values: Vec<[R; 3]>,
    pub dones: Vec<bool>,
    pub failed: Vec<bool>,
    pub transitions: Vec<Transition<R>>,
    pub torques_raw: Vec<[R; JOINT_COUNT]>,
    /// Bootstrap values per env for the step after the horizon.
    pub last_values: Vec<R>,
    pub last_cost_values: Vec<[R; 3]>,
}

impl<R> RolloutBuffer<R> {
    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    /// Row range of one env's segment.
    pub fn env_rows(&self, e: usize) -> std::ops::Range<usize> {
        e * self.horizon..(e + 1) * self.horizon
    }
}

struct EnvSegment<R> {
    obs: Vec<Vec<R>>,
    cmds: Vec<VelocityCommand<R>>,
    cond_cmds: Vec<VelocityCommand<R>>,
    actions: Vec<[R; JOINT_COUNT]>,
    log_probs: Vec<R>,
    r_task: Vec<R>,
    r_diff: Vec<R>,
    reward: Vec<R>,
    values: Vec<R>,
    costs: Vec<[R; 3]>,
    cost_values: Vec<[R; 3]>,
    dones: Vec<bool>,
    failed: Vec<bool>,
    transitions: Vec<Transition<R>>,
    torques_raw: Vec<[R; JOINT_COUNT]>,
    last_value: R,
    last_cost_values: [R; 3],
}

/// Steps every environment `horizon` times under the frozen policy and prior
/// snapshots, evaluating the stylistic reward on each realized transition.
pub fn collect_rollouts<R: Real>(
    envs: &mut [EnvInstance<R>],
    policy: &PolicyParams<R>,
    prior: &PriorSnapshot<R>,
    env_cfg: &EnvConfig<R>,
    cfg: &TrainConfig<R>,
    curriculum_stage: f64,
) -> Result<RolloutBuffer<R>, TrainError> {
    if envs.is_empty() || cfg.horizon == 0 {
        return Err(TrainError::EmptyBuffer);
    }
    let horizon = cfg.horizon;
    let zero_window =
        if cfg.ablation.constraints_enabled() { env_cfg.zero_cmd_window } else { 0 };

    let segments: Vec<Result<EnvSegment<R>, TrainError>> = envs
        .par_iter_mut()
        .map(|inst| {
            let mut seg = EnvSegment {
                obs: Vec::with_capacity(horizon),
                cmds: Vec::with_capacity(horizon),
                cond_cmds: Vec::with_capacity(horizon),
                actions: Vec::with_capacity(horizon),
                log_probs: Vec::with_capacity(horizon),
                r_task: Vec::with_capacity(horizon),
                r_diff: Vec::with_capacity(horizon),
                reward: Vec::with_capacity(horizon),
                values: Vec::with_capacity(horizon),
                costs: Vec::with_capacity(horizon),
                cost_values: Vec::with_capacity(horizon),
                dones: Vec::with_capacity(horizon),
                failed: Vec::with_capacity(horizon),
                transitions: Vec::with_capacity(horizon),
                torques_raw: Vec::with_capacity(horizon),
                last_value: R::zero(),
                last_cost_values: [R::zero(); 3],
            };
            let mut last_done = false;
            for _ in 0..horizon {
                if inst.needs_reset {
                    inst.state = reset(&mut inst.rng, env_cfg);
                    inst.t_in_episode = 0;
                    inst.smoothed_cmd = VelocityCommand::zero();
                    inst.raw_cmd =
                        sample_raw_command(&mut inst.rng, curriculum_stage, &env_cfg.envelope);
                    inst.needs_reset = false;
                } else if inst.t_in_episode % env_cfg.cmd_resample_steps == 0
                    && inst.t_in_episode > 0
                {
                    inst.raw_cmd =
                        sample_raw_command(&mut inst.rng, curriculum_stage, &env_cfg.envelope);
                }
                let scheduled = episode_command_schedule(
                    inst.t_in_episode,
                    env_cfg.episode_len,
                    zero_window,
                    &inst.raw_cmd,
                );
                inst.smoothed_cmd =
                    smooth_command(&inst.smoothed_cmd, &scheduled, env_cfg.alpha_cmd);

                let obs = make_obs(&inst.state, &inst.smoothed_cmd, env_cfg, &mut inst.rng);
                let (action, log_prob) = if cfg.deterministic_rollouts {
                    let mean = policy.actor_mean(&obs);
                    let lp = policy.log_prob_given_mean(&mean, &mean);
                    (mean, lp)
                } else {
                    policy.sample_action(&obs, &mut inst.rng)
                };
                let out = step(&inst.state, &action, &inst.smoothed_cmd, env_cfg);
                let transition =
                    Transition { s0: inst.state, s1: out.next, dt: env_cfg.dt };

                let cond_cmd = if cfg.ablation.sacc_enabled() {
                    inst.smoothed_cmd
                } else {
                    VelocityCommand::zero()
                };
                let r_diff = match prior {
                    PriorSnapshot::Diffusion(p) => crate::prior::style_reward(
                        &transition,
                        &cond_cmd,
                        p,
                        &mut inst.rng,
                        cfg.n_mc_reward,
                    )?,
                    PriorSnapshot::Amp(p) => {
                        crate::prior::amp_logit_reward(&transition, &cond_cmd, p)
                    }
                };
                let reward = mix_reward(out.r_task, r_diff, cfg);

                seg.values.push(policy.value(&obs));
                seg.cost_values.push(policy.cost_values(&obs));
                seg.obs.push(obs);
                seg.cmds.push(inst.smoothed_cmd);
                seg.cond_cmds.push(cond_cmd);
                seg.actions.push(action);
                seg.log_probs.push(log_prob);
                seg.r_task.push(out.r_task);
                seg.r_diff.push(r_diff);
                seg.reward.push(reward);
                seg.costs.push(out.costs);
                seg.transitions.push(transition);
                seg.torques_raw.push(out.torques_raw);
                seg.failed.push(out.failed);

                inst.state = out.next;
                inst.t_in_episode += 1;
                let done = out.failed || inst.t_in_episode >= env_cfg.episode_len;
                if done {
                    inst.needs_reset = true;
                }
                seg.dones.push(done);
                last_done = done;
            }
            if !last_done {
                let obs = make_obs(&inst.state, &inst.smoothed_cmd, env_cfg, &mut inst.rng);
                seg.last_value = policy.value(&obs);
                seg.last_cost_values = policy.cost_values(&obs);
            }
            Ok(seg)
        })
        .collect();

    let mut buf = RolloutBuffer {
        n_envs: envs.len(),
        horizon,
        obs: Vec::new(),
        cmds: Vec::new(),
        cond_cmds: Vec::new(),
        actions: Vec::new(),
        log_probs: Vec::new(),
        r_task: Vec::new(),
        r_diff: Vec::new(),
        reward: Vec::new(),
        values: Vec::new(),
        costs: Vec::new(),
        cost_values: Vec::new(),
        dones: Vec::new(),
        failed: Vec::new(),
        transitions: Vec::new(),
        torques_raw: Vec::new(),
        last_values: Vec::new(),
        last_cost_values: Vec::new(),
    };
    for seg in segments {
        let seg = seg?;
        buf.obs.extend(seg.obs);
        buf.cmds.extend(seg.cmds);
        buf.cond_cmds.extend(seg.cond_cmds);
        buf.actions.extend(seg.actions);
        buf.log_probs.extend(seg.log_probs);
        buf.r_task.extend(seg.r_task);
        buf.r_diff.extend(seg.r_diff);
        buf.reward.extend(seg.reward);
        buf.values.extend(seg.values);
        buf.costs.extend(seg.costs);
        buf.cost_values.extend(seg.cost_values);
        buf.dones.extend(seg.dones);
        buf.failed.extend(seg.failed);
        buf.transitions.extend(seg.transitions);
        buf.torques_raw.extend(seg.torques_raw);
        buf.last_values.push(seg.last_value);
        buf.last_cost_values.push(seg.last_cost_values);
    }
    Ok(buf)
}

fn make_obs<R: Real>(
    state: &LocomotorState<R>,
    cmd: &VelocityCommand<R>,
    env_cfg: &EnvConfig<R>,
    rng: &mut Stream,
) -> Vec<R> {
    let mut obs = PolicyParams::obs(state, cmd);
    if env_cfg.obs_noise > R::zero() {
        for o in obs.iter_mut().take(STATE_DIM) {
            *o += env_cfg.obs_noise * rng.normal_r();
        }
    }
    obs
}
