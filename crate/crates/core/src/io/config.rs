//! Flat `key = value` run configuration.
//!
//! One file drives a whole run: dataset grid, plant constants, training
//! hyperparameters. Keys are dotted but the file stays flat (one assignment
//! per line, `#` comments). Unknown keys are rejected so typos fail loudly.

use std::path::Path;

use crate::env::{ActuatorLimits, EnvConfig};
use crate::motion::{DataConfig, Gait, GridEntry};
use crate::prior::AntitheticMode;
use crate::train::{Ablation, TrainConfig};

use super::IoError;

/// Everything a run needs, at the crate's default precision.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub data: DataConfig,
    pub env: EnvConfig<f64>,
    pub train: TrainConfig<f64>,
}

fn parse_grid(value: &str, key: &str) -> Result<Vec<GridEntry>, IoError> {
    let mut grid = Vec::new();
    for cell in value.split(',') {
        let cell = cell.trim();
        if cell.is_empty() {
            continue;
        }
        let (gait_name, speed) = cell.split_once(':').ok_or_else(|| IoError::BadValue {
            key: key.into(),
            message: format!("expected gait:speed, got `{cell}`"),
        })?;
        let gait = Gait::parse(gait_name.trim()).ok_or_else(|| IoError::BadValue {
            key: key.into(),
            message: format!("unknown gait `{gait_name}`"),
        })?;
        let speed: f64 = speed.trim().parse().map_err(|e| IoError::BadValue {
            key: key.into(),
            message: format!("bad speed: {e}"),
        })?;
        grid.push(GridEntry { gait, speed });
    }
    Ok(grid)
}

fn grid_to_string(grid: &[GridEntry]) -> String {
    grid.iter()
        .map(|g| format!("{}:{}", g.gait.name(), g.speed))
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_hidden(value: &str, key: &str) -> Result<Vec<usize>, IoError> {
    value
        .split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>().map_err(|e| IoError::BadValue {
                key: key.into(),
                message: format!("bad layer width: {e}"),
            })
        })
        .collect()
}

fn hidden_to_string(h: &[usize]) -> String {
    h.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

macro_rules! parse_num {
    ($value:expr, $key:expr) => {
        $value.parse().map_err(|e| IoError::BadValue {
            key: $key.to_string(),
            message: format!("{e}"),
        })?
    };
}

/// Applies one `key = value` assignment.
fn apply(cfg: &mut RunConfig, key: &str, value: &str) -> Result<(), IoError> {
    match key {
        // Dataset generator.
        "data.grid" => cfg.data.grid = parse_grid(value, key)?,
        "data.clip_duration" => cfg.data.clip_duration = parse_num!(value, key),
        "data.relabel_window" => cfg.data.relabel_window = parse_num!(value, key),
        "data.synth.dt" => cfg.data.synth.dt = parse_num!(value, key),
        "data.synth.freq_base" => cfg.data.synth.freq_base = parse_num!(value, key),
        "data.synth.freq_per_speed" => cfg.data.synth.freq_per_speed = parse_num!(value, key),
        "data.synth.hip_amp_base" => cfg.data.synth.hip_amp_base = parse_num!(value, key),
        "data.synth.hip_amp_per_speed" => {
            cfg.data.synth.hip_amp_per_speed = parse_num!(value, key)
        }
        "data.synth.knee_amp" => cfg.data.synth.knee_amp = parse_num!(value, key),
        "data.synth.knee_phase" => cfg.data.synth.knee_phase = parse_num!(value, key),
        "data.synth.vx_noise_amp" => cfg.data.synth.vx_noise_amp = parse_num!(value, key),
        "data.synth.vy_amp" => cfg.data.synth.vy_amp = parse_num!(value, key),
        "data.synth.wz_amp" => cfg.data.synth.wz_amp = parse_num!(value, key),
        "data.synth.roll_amp" => cfg.data.synth.roll_amp = parse_num!(value, key),
        "data.synth.vy_bias" => cfg.data.synth.vy_bias = parse_num!(value, key),
        "data.synth.wz_bias" => cfg.data.synth.wz_bias = parse_num!(value, key),
        "data.synth.roll_bias" => cfg.data.synth.roll_bias = parse_num!(value, key),

        // Plant.
        "env.dt" => cfg.env.dt = parse_num!(value, key),
        "env.kp" => cfg.env.kp = parse_num!(value, key),
        "env.kd" => cfg.env.kd = parse_num!(value, key),
        "env.inertia" => cfg.env.inertia = parse_num!(value, key),
        "env.damping" => cfg.env.damping = parse_num!(value, key),
        "env.q_lim" => cfg.env.limits = ActuatorLimits::uniform(
            parse_num!(value, key),
            cfg.env.limits.dq_lim[0],
            cfg.env.limits.tau_lim[0],
        ),
        "env.dq_lim" => cfg.env.limits = ActuatorLimits::uniform(
            cfg.env.limits.q_lim[0],
            parse_num!(value, key),
            cfg.env.limits.tau_lim[0],
        ),
        "env.tau_lim" => cfg.env.limits = ActuatorLimits::uniform(
            cfg.env.limits.q_lim[0],
            cfg.env.limits.dq_lim[0],
            parse_num!(value, key),
        ),
        "env.drive_vx" => cfg.env.drive_vx = parse_num!(value, key),
        "env.drive_vy" => cfg.env.drive_vy = parse_num!(value, key),
        "env.drive_wz" => cfg.env.drive_wz = parse_num!(value, key),
        "env.drag_vx" => cfg.env.drag[0] = parse_num!(value, key),
        "env.drag_vy" => cfg.env.drag[1] = parse_num!(value, key),
        "env.drag_wz" => cfg.env.drag[2] = parse_num!(value, key),
        "env.gate_vel_width" => cfg.env.gate_vel_width = parse_num!(value, key),
        "env.roll_relax" => cfg.env.roll_relax = parse_num!(value, key),
        "env.roll_couple" => cfg.env.roll_couple = parse_num!(value, key),
        "env.sigma_v" => cfg.env.sigma_v = parse_num!(value, key),
        "env.sigma_w" => cfg.env.sigma_w = parse_num!(value, key),
        "env.episode_len" => cfg.env.episode_len = parse_num!(value, key),
        "env.zero_cmd_window" => cfg.env.zero_cmd_window = parse_num!(value, key),
        "env.alpha_cmd" => cfg.env.alpha_cmd = parse_num!(value, key),
        "env.cmd_resample_steps" => cfg.env.cmd_resample_steps = parse_num!(value, key),
        "env.envelope_vx" => cfg.env.envelope.vx_max = parse_num!(value, key),
        "env.envelope_vy" => cfg.env.envelope.vy_max = parse_num!(value, key),
        "env.envelope_wz" => cfg.env.envelope.wz_max = parse_num!(value, key),
        "env.obs_noise" => cfg.env.obs_noise = parse_num!(value, key),
        "env.reset_scale" => cfg.env.reset_scale = parse_num!(value, key),

        // Trainer.
        "train.iterations" => cfg.train.iterations = parse_num!(value, key),
        "train.n_envs" => cfg.train.n_envs = parse_num!(value, key),
        "train.horizon" => cfg.train.horizon = parse_num!(value, key),
        "train.omega_task" => cfg.train.omega_task = parse_num!(value, key),
        "train.omega_diff" => cfg.train.omega_diff = parse_num!(value, key),
        "train.eps_clip" => cfg.train.eps_clip = parse_num!(value, key),
        "train.epochs" => cfg.train.epochs = parse_num!(value, key),
        "train.minibatch" => cfg.train.minibatch = parse_num!(value, key),
        "train.gamma" => cfg.train.gamma = parse_num!(value, key),
        "train.gae_lambda" => cfg.train.gae_lambda = parse_num!(value, key),
        "train.ent_coef" => cfg.train.ent_coef = parse_num!(value, key),
        "train.vf_coef" => cfg.train.vf_coef = parse_num!(value, key),
        "train.lr_policy" => cfg.train.lr_policy = parse_num!(value, key),
        "train.lr_prior" => cfg.train.lr_prior = parse_num!(value, key),
        "train.lambda_sym" => cfg.train.lambda_sym = parse_num!(value, key),
        "train.disc_steps" => cfg.train.disc_steps = parse_num!(value, key),
        "train.disc_batch" => cfg.train.disc_batch = parse_num!(value, key),
        "train.replay_capacity" => cfg.train.replay_capacity = parse_num!(value, key),
        "train.n_mc_reward" => cfg.train.n_mc_reward = parse_num!(value, key),
        "train.n_mc_train" => cfg.train.n_mc_train = parse_num!(value, key),
        "train.policy_hidden" => cfg.train.policy_hidden = parse_hidden(value, key)?,
        "train.denoiser_hidden" => cfg.train.denoiser_hidden = parse_hidden(value, key)?,
        "train.amp_hidden" => cfg.train.amp_hidden = parse_hidden(value, key)?,
        "train.k_steps" => cfg.train.k_steps = parse_num!(value, key),
        "train.beta_min" => cfg.train.beta_min = parse_num!(value, key),
        "train.beta_max" => cfg.train.beta_max = parse_num!(value, key),
        "train.antithetic" => {
            cfg.train.antithetic =
                AntitheticMode::parse(value).ok_or_else(|| IoError::BadValue {
                    key: key.into(),
                    message: format!("expected noise|timestep, got `{value}`"),
                })?
        }
        "train.gp_weight" => cfg.train.gp_weight = parse_num!(value, key),
        "train.cost_limit_pos" => cfg.train.cost_limits[0] = parse_num!(value, key),
        "train.cost_limit_vel" => cfg.train.cost_limits[1] = parse_num!(value, key),
        "train.cost_limit_torque" => cfg.train.cost_limits[2] = parse_num!(value, key),
        "train.lambda0" => cfg.train.lambda0 = parse_num!(value, key),
        "train.lambda_growth" => cfg.train.lambda_growth = parse_num!(value, key),
        "train.lambda_period" => cfg.train.lambda_period = parse_num!(value, key),
        "train.lambda_max" => cfg.train.lambda_max = parse_num!(value, key),
        "train.curriculum_iters" => cfg.train.curriculum_iters = parse_num!(value, key),
        "train.disc_input_noise" => cfg.train.disc_input_noise = parse_num!(value, key),
        "train.disc_loss_floor" => cfg.train.disc_loss_floor = parse_num!(value, key),
        "train.prior_pretrain_steps" => cfg.train.prior_pretrain_steps = parse_num!(value, key),
        "train.augment_max_yaw" => cfg.train.augment_max_yaw = parse_num!(value, key),
        "train.value_warmup_iters" => cfg.train.value_warmup_iters = parse_num!(value, key),
        "train.bc_epochs" => cfg.train.bc_epochs = parse_num!(value, key),
        "train.bc_reg_weight" => cfg.train.bc_reg_weight = parse_num!(value, key),
        "train.bc_reg_batch" => cfg.train.bc_reg_batch = parse_num!(value, key),
        "train.lr_bc" => cfg.train.lr_bc = parse_num!(value, key),
        "train.log_std_init" => cfg.train.log_std_init = parse_num!(value, key),
        "train.fgd_every" => cfg.train.fgd_every = parse_num!(value, key),
        "train.ablation" => {
            cfg.train.ablation = Ablation::parse(value).ok_or_else(|| IoError::BadValue {
                key: key.into(),
                message: format!("expected full|no_sacc|no_constraints|vanilla_amp, got `{value}`"),
            })?
        }

        other => return Err(IoError::UnknownKey(other.to_string())),
    }
    Ok(())
}

/// Parses the flat `key = value` format. Later assignments override earlier
/// ones; unknown keys are an error.
pub fn parse_run_config(text: &str) -> Result<RunConfig, IoError> {
    let mut cfg = RunConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            IoError::Format(format!("line {}: expected `key = value`, got `{raw}`", lineno + 1))
        })?;
        apply(&mut cfg, key.trim(), value.trim())?;
    }
    Ok(cfg)
}

pub fn load_run_config(path: &Path) -> Result<RunConfig, IoError> {
    parse_run_config(&std::fs::read_to_string(path)?)
}

/// Serializes the full configuration; parsing the output reproduces it.
pub fn run_config_to_string(cfg: &RunConfig) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    kv("data.grid", grid_to_string(&cfg.data.grid));
    kv("data.clip_duration", cfg.data.clip_duration.to_string());
    kv("data.relabel_window", cfg.data.relabel_window.to_string());
    kv("data.synth.dt", cfg.data.synth.dt.to_string());
    kv("data.synth.freq_base", cfg.data.synth.freq_base.to_string());
    kv("data.synth.freq_per_speed", cfg.data.synth.freq_per_speed.to_string());
    kv("data.synth.hip_amp_base", cfg.data.synth.hip_amp_base.to_string());
    kv("data.synth.hip_amp_per_speed", cfg.data.synth.hip_amp_per_speed.to_string());
    kv("data.synth.knee_amp", cfg.data.synth.knee_amp.to_string());
    kv("data.synth.knee_phase", cfg.data.synth.knee_phase.to_string());
    kv("data.synth.vx_noise_amp", cfg.data.synth.vx_noise_amp.to_string());
    kv("data.synth.vy_amp", cfg.data.synth.vy_amp.to_string());
    kv("data.synth.wz_amp", cfg.data.synth.wz_amp.to_string());
    kv("data.synth.roll_amp", cfg.data.synth.roll_amp.to_string());
    kv("data.synth.vy_bias", cfg.data.synth.vy_bias.to_string());
    kv("data.synth.wz_bias", cfg.data.synth.wz_bias.to_string());
    kv("data.synth.roll_bias", cfg.data.synth.roll_bias.to_string());
    kv("env.dt", cfg.env.dt.to_string());
    kv("env.kp", cfg.env.kp.to_string());
    kv("env.kd", cfg.env.kd.to_string());
    kv("env.inertia", cfg.env.inertia.to_string());
    kv("env.damping", cfg.env.damping.to_string());
    kv("env.q_lim", cfg.env.limits.q_lim[0].to_string());
    kv("env.dq_lim", cfg.env.limits.dq_lim[0].to_string());
    kv("env.tau_lim", cfg.env.limits.tau_lim[0].to_string());
    kv("env.drive_vx", cfg.env.drive_vx.to_string());
    kv("env.drive_vy", cfg.env.drive_vy.to_string());
    kv("env.drive_wz", cfg.env.drive_wz.to_string());
    kv("env.drag_vx", cfg.env.drag[0].to_string());
    kv("env.drag_vy", cfg.env.drag[1].to_string());
    kv("env.drag_wz", cfg.env.drag[2].to_string());
    kv("env.gate_vel_width", cfg.env.gate_vel_width.to_string());
    kv("env.roll_relax", cfg.env.roll_relax.to_string());
    kv("env.roll_couple", cfg.env.roll_couple.to_string());
    kv("env.sigma_v", cfg.env.sigma_v.to_string());
    kv("env.sigma_w", cfg.env.sigma_w.to_string());
    kv("env.episode_len", cfg.env.episode_len.to_string());
    kv("env.zero_cmd_window", cfg.env.zero_cmd_window.to_string());
    kv("env.alpha_cmd", cfg.env.alpha_cmd.to_string());
    kv("env.cmd_resample_steps", cfg.env.cmd_resample_steps.to_string());
    kv("env.envelope_vx", cfg.env.envelope.vx_max.to_string());
    kv("env.envelope_vy", cfg.env.envelope.vy_max.to_string());
    kv("env.envelope_wz", cfg.env.envelope.wz_max.to_string());
    kv("env.obs_noise", cfg.env.obs_noise.to_string());
    kv("env.reset_scale", cfg.env.reset_scale.to_string());
    kv("train.iterations", cfg.train.iterations.to_string());
    kv("train.n_envs", cfg.train.n_envs.to_string());
    kv("train.horizon", cfg.train.horizon.to_string());
    kv("train.omega_task", cfg.train.omega_task.to_string());
    kv("train.omega_diff", cfg.train.omega_diff.to_string());
    kv("train.eps_clip", cfg.train.eps_clip.to_string());
    kv("train.epochs", cfg.train.epochs.to_string());
    kv("train.minibatch", cfg.train.minibatch.to_string());
    kv("train.gamma", cfg.train.gamma.to_string());
    kv("train.gae_lambda", cfg.train.gae_lambda.to_string());
    kv("train.ent_coef", cfg.train.ent_coef.to_string());
    kv("train.vf_coef", cfg.train.vf_coef.to_string());
    kv("train.lr_policy", cfg.train.lr_policy.to_string());
    kv("train.lr_prior", cfg.train.lr_prior.to_string());
    kv("train.lambda_sym", cfg.train.lambda_sym.to_string());
    kv("train.disc_steps", cfg.train.disc_steps.to_string());
    kv("train.disc_batch", cfg.train.disc_batch.to_string());
    kv("train.replay_capacity", cfg.train.replay_capacity.to_string());
    kv("train.n_mc_reward", cfg.train.n_mc_reward.to_string());
    kv("train.n_mc_train", cfg.train.n_mc_train.to_string());
    kv("train.policy_hidden", hidden_to_string(&cfg.train.policy_hidden));
    kv("train.denoiser_hidden", hidden_to_string(&cfg.train.denoiser_hidden));
    kv("train.amp_hidden", hidden_to_string(&cfg.train.amp_hidden));
    kv("train.k_steps", cfg.train.k_steps.to_string());
    kv("train.beta_min", cfg.train.beta_min.to_string());
    kv("train.beta_max", cfg.train.beta_max.to_string());
    kv("train.antithetic", cfg.train.antithetic.name().to_string());
    kv("train.gp_weight", cfg.train.gp_weight.to_string());
    kv("train.cost_limit_pos", cfg.train.cost_limits[0].to_string());
    kv("train.cost_limit_vel", cfg.train.cost_limits[1].to_string());
    kv("train.cost_limit_torque", cfg.train.cost_limits[2].to_string());
    kv("train.lambda0", cfg.train.lambda0.to_string());
    kv("train.lambda_growth", cfg.train.lambda_growth.to_string());
    kv("train.lambda_period", cfg.train.lambda_period.to_string());
    kv("train.lambda_max", cfg.train.lambda_max.to_string());
    kv("train.curriculum_iters", cfg.train.curriculum_iters.to_string());
    kv("train.disc_input_noise", cfg.train.disc_input_noise.to_string());
    kv("train.disc_loss_floor", cfg.train.disc_loss_floor.to_string());
    kv("train.prior_pretrain_steps", cfg.train.prior_pretrain_steps.to_string());
    kv("train.augment_max_yaw", cfg.train.augment_max_yaw.to_string());
    kv("train.value_warmup_iters", cfg.train.value_warmup_iters.to_string());
    kv("train.bc_epochs", cfg.train.bc_epochs.to_string());
    kv("train.bc_reg_weight", cfg.train.bc_reg_weight.to_string());
    kv("train.bc_reg_batch", cfg.train.bc_reg_batch.to_string());
    kv("train.lr_bc", cfg.train.lr_bc.to_string());
    kv("train.log_std_init", cfg.train.log_std_init.to_string());
    kv("train.fgd_every", cfg.train.fgd_every.to_string());
    kv("train.ablation", cfg.train.ablation.name().to_string());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip_through_text() {
        let cfg = RunConfig::default();
        let text = run_config_to_string(&cfg);
        let back = parse_run_config(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = parse_run_config("env.kP = 3.0").unwrap_err();
        assert!(matches!(err, IoError::UnknownKey(_)), "{err}");
    }

    #[test]
    fn comments_and_overrides() {
        let text = "# plant\nenv.kp = 10\nenv.kp = 20 # later wins\n\ntrain.ablation = no_sacc\n";
        let cfg = parse_run_config(text).unwrap();
        assert_eq!(cfg.env.kp, 20.0);
        assert_eq!(cfg.train.ablation, Ablation::NoSacc);
    }

    #[test]
    fn grid_parsing() {
        let cfg = parse_run_config("data.grid = walk:0.5, trot:2.0, bound:3.2").unwrap();
        assert_eq!(cfg.data.grid.len(), 3);
        assert_eq!(cfg.data.grid[1].gait, Gait::Trot);
        assert_eq!(cfg.data.grid[1].speed, 2.0);
        assert!(parse_run_config("data.grid = gallop:9").is_err());
    }

    #[test]
    fn bad_values_name_the_key() {
        let err = parse_run_config("train.gamma = fast").unwrap_err();
        match err {
            IoError::BadValue { key, .. } => assert_eq!(key, "train.gamma"),
            other => panic!("{other}"),
        }
    }
}
