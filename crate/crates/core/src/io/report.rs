//! Evaluation report files and the ablation comparison table.

use std::path::Path;

use serde_json::{json, Value};

use crate::metrics::{ProfileOutcome, ProfileReport, TrackingReport};

use super::IoError;

/// One run's evaluation: tracking per profile, FGD against the expert set,
/// violation counts over the sprint protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub variant: String,
    pub seed: u64,
    pub tracking: TrackingReport,
    pub fgd: f64,
    pub violations: [usize; 3],
}

pub fn report_to_string(r: &EvalReport) -> String {
    let profiles: Vec<Value> = r
        .tracking
        .profiles
        .iter()
        .map(|p| {
            let outcome = match &p.outcome {
                ProfileOutcome::Metrics { deviation, heading_drift, elapsed_s } => json!({
                    "status": "ok",
                    "deviation_m": deviation,
                    "heading_drift_rad": heading_drift,
                    "elapsed_s": elapsed_s,
                }),
                ProfileOutcome::Fail { reason } => json!({
                    "status": "fail",
                    "reason": reason,
                }),
            };
            json!({
                "name": p.name,
                "command": p.command,
                "distance_m": p.distance,
                "outcome": outcome,
            })
        })
        .collect();
    let doc = json!({
        "schema_version": 1,
        "variant": r.variant,
        "seed": r.seed,
        "profiles": profiles,
        "fgd": r.fgd,
        "violations": {
            "position": r.violations[0],
            "velocity": r.violations[1],
            "torque": r.violations[2],
        },
    });
    serde_json::to_string_pretty(&doc).expect("report serializes")
}

pub fn report_from_str(text: &str) -> Result<EvalReport, IoError> {
    let doc: Value = serde_json::from_str(text)?;
    let variant = doc
        .get("variant")
        .and_then(Value::as_str)
        .ok_or_else(|| IoError::Format("missing variant".into()))?
        .to_string();
    let seed = doc
        .get("seed")
        .and_then(Value::as_u64)
        .ok_or_else(|| IoError::Format("missing seed".into()))?;
    let profiles_json = doc
        .get("profiles")
        .and_then(Value::as_array)
        .ok_or_else(|| IoError::Format("missing profiles".into()))?;
    let mut profiles = Vec::with_capacity(profiles_json.len());
    for p in profiles_json {
        let name = p
            .get("name")
            .and_then(Value::as_str)
            .ok_or_else(|| IoError::Format("profile missing name".into()))?
            .to_string();
        let cmd_arr = p
            .get("command")
            .and_then(Value::as_array)
            .ok_or_else(|| IoError::Format("profile missing command".into()))?;
        if cmd_arr.len() != 3 {
            return Err(IoError::Format("profile command must have 3 entries".into()));
        }
        let command = [
            cmd_arr[0].as_f64().ok_or_else(|| IoError::Format("bad command".into()))?,
            cmd_arr[1].as_f64().ok_or_else(|| IoError::Format("bad command".into()))?,
            cmd_arr[2].as_f64().ok_or_else(|| IoError::Format("bad command".into()))?,
        ];
        let distance = p
            .get("distance_m")
            .and_then(Value::as_f64)
            .ok_or_else(|| IoError::Format("profile missing distance".into()))?;
        let o = p
            .get("outcome")
            .ok_or_else(|| IoError::Format("profile missing outcome".into()))?;
        let outcome = match o.get("status").and_then(Value::as_str) {
            Some("ok") => ProfileOutcome::Metrics {
                deviation: o
                    .get("deviation_m")
                    .and_then(Value::as_f64)
                    .ok_or_else(|| IoError::Format("missing deviation".into()))?,
                heading_drift: o
                    .get("heading_drift_rad")
                    .and_then(Value::as_f64)
                    .ok_or_else(|| IoError::Format("missing drift".into()))?,
                elapsed_s: o
                    .get("elapsed_s")
                    .and_then(Value::as_f64)
                    .ok_or_else(|| IoError::Format("missing elapsed".into()))?,
            },
            Some("fail") => ProfileOutcome::Fail {
                reason: o
                    .get("reason")
                    .and_then(Value::as_str)
                    .unwrap_or("unspecified")
                    .to_string(),
            },
            other => return Err(IoError::Format(format!("unknown outcome status {other:?}"))),
        };
        profiles.push(ProfileReport { name, command, distance, outcome });
    }
    let fgd = doc
        .get("fgd")
        .and_then(Value::as_f64)
        .ok_or_else(|| IoError::Format("missing fgd".into()))?;
    let v = doc
        .get("violations")
        .ok_or_else(|| IoError::Format("missing violations".into()))?;
    let pull = |k: &str| -> Result<usize, IoError> {
        v.get(k)
            .and_then(Value::as_u64)
            .map(|x| x as usize)
            .ok_or_else(|| IoError::Format(format!("missing violations.{k}")))
    };
    Ok(EvalReport {
        variant,
        seed,
        tracking: TrackingReport { profiles },
        fgd,
        violations: [pull("position")?, pull("velocity")?, pull("torque")?],
    })
}

pub fn save_report(r: &EvalReport, path: &Path) -> Result<(), IoError> {
    std::fs::write(path, report_to_string(r))?;
    Ok(())
}

pub fn load_report(path: &Path) -> Result<EvalReport, IoError> {
    report_from_str(&std::fs::read_to_string(path)?)
}

/// Fixed column set of the ablation comparison table.
pub const COMPARE_COLUMNS: &[&str] = &[
    "variant",
    "seed",
    "forward_dev_m",
    "forward_drift_rad",
    "fgd",
    "violations_torque",
];

/// Merges reports into one CSV table, preserving each value bit-exactly
/// (numbers are re-serialized with the shortest round-tripping form).
pub fn merge_reports(reports: &[EvalReport]) -> Result<String, IoError> {
    let mut out = COMPARE_COLUMNS.join(",");
    out.push('\n');
    for r in reports {
        let forward = r
            .tracking
            .profiles
            .iter()
            .find(|p| p.name == "forward_walk")
            .ok_or_else(|| IoError::Format("report lacks the forward_walk profile".into()))?;
        let (dev, drift) = match &forward.outcome {
            ProfileOutcome::Metrics { deviation, heading_drift, .. } => {
                (format!("{deviation}"), format!("{heading_drift}"))
            }
            ProfileOutcome::Fail { .. } => ("Fail".into(), "Fail".into()),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.variant, r.seed, dev, drift, r.fgd, r.violations[2]
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(variant: &str, dev: f64) -> EvalReport {
        EvalReport {
            variant: variant.into(),
            seed: 3,
            tracking: TrackingReport {
                profiles: vec![
                    ProfileReport {
                        name: "forward_walk".into(),
                        command: [1.0, 0.0, 0.0],
                        distance: 40.0,
                        outcome: ProfileOutcome::Metrics {
                            deviation: dev,
                            heading_drift: 0.125,
                            elapsed_s: 40.0,
                        },
                    },
                    ProfileReport {
                        name: "pure_backward".into(),
                        command: [-1.0, 0.0, 0.0],
                        distance: 5.0,
                        outcome: ProfileOutcome::Fail { reason: "timeout".into() },
                    },
                ],
            },
            fgd: 12.345678901234567,
            violations: [0, 1, 57],
        }
    }

    #[test]
    fn report_roundtrip() {
        let r = sample("full", 1.0800000000000003);
        let text = report_to_string(&r);
        let back = report_from_str(&text).unwrap();
        assert_eq!(r, back);
    }

    #[test]
    fn merge_is_bit_exact_and_ordered() {
        let a = sample("full", 1.0800000000000003);
        let b = sample("no_sacc", 25.03);
        let table = merge_reports(&[a.clone(), b.clone()]).unwrap();
        let mut lines = table.lines();
        assert_eq!(lines.next().unwrap(), COMPARE_COLUMNS.join(","));
        let row_a = lines.next().unwrap();
        assert!(row_a.starts_with("full,3,"));
        // Bit-exactness: parsing the printed value recovers the f64 exactly.
        let dev_text = row_a.split(',').nth(2).unwrap();
        assert_eq!(dev_text.parse::<f64>().unwrap().to_bits(), 1.0800000000000003f64.to_bits());
        assert_eq!(lines.next().unwrap().split(',').count(), COMPARE_COLUMNS.len());
    }

    #[test]
    fn single_report_single_row() {
        let table = merge_reports(&[sample("full", 1.0)]).unwrap();
        assert_eq!(table.lines().count(), 2);
    }

    #[test]
    fn schema_mismatch_is_an_error() {
        assert!(report_from_str("{\"schema_version\":1}").is_err());
    }
}
