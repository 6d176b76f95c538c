//! Structured-text checkpoints.
//!
//! JSON with a schema version, normalization statistics, noise-schedule
//! arrays, layer shapes and flat weight arrays in declared layer order. The
//! loader validates shape consistency before accepting any weights.

use std::path::Path;

use serde_json::{json, Value};

use crate::nn::{Activation, Mlp};
use crate::prior::{AmpDiscriminatorParams, AntitheticMode, DenoiserParams, NoiseSchedule};
use crate::train::{Ablation, ConstraintLedger, PolicyParams, PriorSnapshot};
use crate::JOINT_COUNT;

use super::IoError;

pub const SCHEMA_VERSION: u64 = 1;

/// A persisted training state (or the oracle evaluation stub).
#[derive(Debug, Clone)]
pub enum Checkpoint {
    Run {
        iteration: usize,
        ablation: Ablation,
        policy: PolicyParams<f64>,
        prior: PriorSnapshot<f64>,
        ledger: ConstraintLedger<f64>,
    },
    /// Evaluation stub: an agent that realizes commands exactly.
    Oracle,
}

fn activation_name(a: Activation) -> &'static str {
    match a {
        Activation::Tanh => "tanh",
        Activation::Silu => "silu",
        Activation::Softplus => "softplus",
        Activation::Identity => "identity",
    }
}

fn parse_activation(s: &str) -> Result<Activation, IoError> {
    match s {
        "tanh" => Ok(Activation::Tanh),
        "silu" => Ok(Activation::Silu),
        "softplus" => Ok(Activation::Softplus),
        "identity" => Ok(Activation::Identity),
        other => Err(IoError::Format(format!("unknown activation `{other}`"))),
    }
}

fn net_to_json(net: &Mlp<f64>) -> Value {
    json!({
        "dims": net.dims(),
        "activation": activation_name(net.activation),
        "weights": net.flatten_params(),
    })
}

fn net_from_json(v: &Value, what: &str) -> Result<Mlp<f64>, IoError> {
    let dims: Vec<usize> = v
        .get("dims")
        .and_then(Value::as_array)
        .ok_or_else(|| IoError::Format(format!("{what}: missing dims")))?
        .iter()
        .map(|x| x.as_u64().map(|u| u as usize))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| IoError::Format(format!("{what}: bad dims")))?;
    if dims.len() < 2 {
        return Err(IoError::Format(format!("{what}: need at least 2 dims")));
    }
    let activation = parse_activation(
        v.get("activation")
            .and_then(Value::as_str)
            .ok_or_else(|| IoError::Format(format!("{what}: missing activation")))?,
    )?;
    let weights = f64_array(v.get("weights"), &format!("{what}: weights"))?;
    let mut net = Mlp::zeros(&dims, activation);
    if weights.len() != net.param_count() {
        return Err(IoError::Format(format!(
            "{what}: weight count {} does not match shape {:?} ({} expected)",
            weights.len(),
            dims,
            net.param_count()
        )));
    }
    net.set_params(&weights);
    if !net.is_finite() {
        return Err(IoError::Format(format!("{what}: non-finite weights")));
    }
    Ok(net)
}

fn f64_array(v: Option<&Value>, what: &str) -> Result<Vec<f64>, IoError> {
    v.and_then(Value::as_array)
        .ok_or_else(|| IoError::Format(format!("{what}: missing array")))?
        .iter()
        .map(|x| x.as_f64())
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| IoError::Format(format!("{what}: non-numeric entry")))
}

fn fixed3(v: Option<&Value>, what: &str) -> Result<[f64; 3], IoError> {
    let arr = f64_array(v, what)?;
    if arr.len() != 3 {
        return Err(IoError::Format(format!("{what}: expected 3 entries")));
    }
    Ok([arr[0], arr[1], arr[2]])
}

pub fn checkpoint_to_string(ck: &Checkpoint) -> String {
    let doc = match ck {
        Checkpoint::Oracle => json!({
            "schema_version": SCHEMA_VERSION,
            "kind": "oracle",
        }),
        Checkpoint::Run { iteration, ablation, policy, prior, ledger } => {
            let mut doc = json!({
                "schema_version": SCHEMA_VERSION,
                "kind": "run",
                "iteration": iteration,
                "ablation": ablation.name(),
                "policy": {
                    "actor": net_to_json(&policy.actor),
                    "log_std": policy.log_std.to_vec(),
                    "critic": net_to_json(&policy.critic),
                    "cost_critic": net_to_json(&policy.cost_critic),
                },
                "ledger": {
                    "limits": ledger.limits.to_vec(),
                    "lambda": ledger.lambda.to_vec(),
                    "lambda0": ledger.lambda0,
                    "growth": ledger.growth,
                    "period": ledger.period,
                    "lambda_max": ledger.lambda_max,
                    "ep_cost": ledger.ep_cost.to_vec(),
                    "adv_mean": ledger.adv_mean.to_vec(),
                    "adv_sigma": ledger.adv_sigma.to_vec(),
                },
            });
            match prior {
                PriorSnapshot::Diffusion(p) => {
                    doc["prior"] = json!({
                        "kind": "diffusion",
                        "norm_mean": p.norm_mean,
                        "norm_std": p.norm_std,
                        "schedule": {
                            "k_steps": p.schedule.k_steps,
                            "beta": p.schedule.beta,
                            "alpha_bar": p.schedule.alpha_bar,
                        },
                        "antithetic": p.antithetic.name(),
                        "net": net_to_json(&p.net),
                    });
                }
                PriorSnapshot::Amp(p) => {
                    doc["prior"] = json!({
                        "kind": "amp",
                        "norm_mean": p.norm_mean,
                        "norm_std": p.norm_std,
                        "grad_penalty_weight": p.grad_penalty_weight,
                        "net": net_to_json(&p.net),
                    });
                }
            }
            doc
        }
    };
    serde_json::to_string_pretty(&doc).expect("checkpoint serializes")
}

pub fn checkpoint_from_str(text: &str) -> Result<Checkpoint, IoError> {
    let doc: Value = serde_json::from_str(text)?;
    let version = doc
        .get("schema_version")
        .and_then(Value::as_u64)
        .ok_or_else(|| IoError::Format("missing schema_version".into()))?;
    if version != SCHEMA_VERSION {
        return Err(IoError::Format(format!("unsupported schema_version {version}")));
    }
    match doc.get("kind").and_then(Value::as_str) {
        Some("oracle") => Ok(Checkpoint::Oracle),
        Some("run") => {
            let iteration = doc
                .get("iteration")
                .and_then(Value::as_u64)
                .ok_or_else(|| IoError::Format("missing iteration".into()))?
                as usize;
            let ablation = doc
                .get("ablation")
                .and_then(Value::as_str)
                .and_then(Ablation::parse)
                .ok_or_else(|| IoError::Format("missing or invalid ablation".into()))?;

            let pol = doc
                .get("policy")
                .ok_or_else(|| IoError::Format("missing policy section".into()))?;
            let log_std_v = f64_array(pol.get("log_std"), "policy.log_std")?;
            if log_std_v.len() != JOINT_COUNT {
                return Err(IoError::Format("policy.log_std wrong length".into()));
            }
            let mut log_std = [0.0; JOINT_COUNT];
            log_std.copy_from_slice(&log_std_v);
            let policy = PolicyParams {
                actor: net_from_json(
                    pol.get("actor").ok_or_else(|| IoError::Format("missing actor".into()))?,
                    "policy.actor",
                )?,
                log_std,
                critic: net_from_json(
                    pol.get("critic").ok_or_else(|| IoError::Format("missing critic".into()))?,
                    "policy.critic",
                )?,
                cost_critic: net_from_json(
                    pol.get("cost_critic")
                        .ok_or_else(|| IoError::Format("missing cost_critic".into()))?,
                    "policy.cost_critic",
                )?,
            };

            let pr = doc
                .get("prior")
                .ok_or_else(|| IoError::Format("missing prior section".into()))?;
            let norm_mean = f64_array(pr.get("norm_mean"), "prior.norm_mean")?;
            let norm_std = f64_array(pr.get("norm_std"), "prior.norm_std")?;
            let net = net_from_json(
                pr.get("net").ok_or_else(|| IoError::Format("missing prior net".into()))?,
                "prior.net",
            )?;
            let prior = match pr.get("kind").and_then(Value::as_str) {
                Some("diffusion") => {
                    let sched = pr
                        .get("schedule")
                        .ok_or_else(|| IoError::Format("missing schedule".into()))?;
                    let beta = f64_array(sched.get("beta"), "schedule.beta")?;
                    let k_steps = sched
                        .get("k_steps")
                        .and_then(Value::as_u64)
                        .ok_or_else(|| IoError::Format("missing k_steps".into()))?
                        as usize;
                    if beta.len() != k_steps {
                        return Err(IoError::Format("schedule length mismatch".into()));
                    }
                    let alpha: Vec<f64> = beta.iter().map(|b| 1.0 - b).collect();
                    let mut alpha_bar = Vec::with_capacity(k_steps);
                    let mut prod = 1.0;
                    for &a in &alpha {
                        prod *= a;
                        alpha_bar.push(prod);
                    }
                    let schedule = NoiseSchedule { k_steps, beta, alpha, alpha_bar };
                    if !schedule.validate() {
                        return Err(IoError::Format("invalid noise schedule".into()));
                    }
                    let antithetic = pr
                        .get("antithetic")
                        .and_then(Value::as_str)
                        .and_then(AntitheticMode::parse)
                        .ok_or_else(|| IoError::Format("missing antithetic mode".into()))?;
                    PriorSnapshot::Diffusion(DenoiserParams {
                        net,
                        schedule,
                        norm_mean,
                        norm_std,
                        antithetic,
                    })
                }
                Some("amp") => {
                    let gp = pr
                        .get("grad_penalty_weight")
                        .and_then(Value::as_f64)
                        .ok_or_else(|| IoError::Format("missing grad_penalty_weight".into()))?;
                    PriorSnapshot::Amp(AmpDiscriminatorParams {
                        net,
                        norm_mean,
                        norm_std,
                        grad_penalty_weight: gp,
                    })
                }
                other => {
                    return Err(IoError::Format(format!("unknown prior kind {other:?}")));
                }
            };

            let lg = doc
                .get("ledger")
                .ok_or_else(|| IoError::Format("missing ledger section".into()))?;
            let ledger = ConstraintLedger {
                limits: fixed3(lg.get("limits"), "ledger.limits")?,
                lambda: fixed3(lg.get("lambda"), "ledger.lambda")?,
                lambda0: lg
                    .get("lambda0")
                    .and_then(Value::as_f64)
                    .ok_or_else(|| IoError::Format("ledger.lambda0".into()))?,
                growth: lg
                    .get("growth")
                    .and_then(Value::as_f64)
                    .ok_or_else(|| IoError::Format("ledger.growth".into()))?,
                period: lg
                    .get("period")
                    .and_then(Value::as_f64)
                    .ok_or_else(|| IoError::Format("ledger.period".into()))?,
                lambda_max: lg
                    .get("lambda_max")
                    .and_then(Value::as_f64)
                    .ok_or_else(|| IoError::Format("ledger.lambda_max".into()))?,
                ep_cost: fixed3(lg.get("ep_cost"), "ledger.ep_cost")?,
                adv_mean: fixed3(lg.get("adv_mean"), "ledger.adv_mean")?,
                adv_sigma: fixed3(lg.get("adv_sigma"), "ledger.adv_sigma")?,
            };

            Ok(Checkpoint::Run { iteration, ablation, policy, prior, ledger })
        }
        other => Err(IoError::Format(format!("unknown checkpoint kind {other:?}"))),
    }
}

pub fn save_checkpoint(ck: &Checkpoint, path: &Path) -> Result<(), IoError> {
    std::fs::write(path, checkpoint_to_string(ck))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, IoError> {
    checkpoint_from_str(&std::fs::read_to_string(path)?)
}
