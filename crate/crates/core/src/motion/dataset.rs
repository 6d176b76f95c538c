//! Expert dataset assembly and its on-disk format.
//!
//! The dataset file is UTF-8 JSON with top-level keys `dt`, `joint_order`
//! and `clips`; states are 20-number rows in the canonical order, commands
//! 3-number rows. Numbers are written at full precision (shortest
//! round-tripping decimal), so write-then-read reproduces states bit-exactly.

use std::path::Path;

use serde_json::{json, Value};

use crate::scalar::Real;
use crate::{COMMAND_DIM, STATE_DIM, TRANSITION_DIM};

use super::relabel::relabel_commands;
use super::state::{Clip, LocomotorState, Transition, VelocityCommand, JOINT_NAMES};
use super::synth::{synth_expert, Gait, SynthConfig};
use super::MotionError;

/// One generator grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridEntry {
    pub gait: Gait,
    pub speed: f64,
}

/// Expert dataset build configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct DataConfig {
    pub grid: Vec<GridEntry>,
    pub clip_duration: f64,
    /// Centered moving-average window (steps) for hindsight relabeling.
    pub relabel_window: usize,
    pub synth: SynthConfig,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            grid: vec![
                GridEntry { gait: Gait::Walk, speed: 0.5 },
                GridEntry { gait: Gait::Walk, speed: 0.8 },
                GridEntry { gait: Gait::Trot, speed: 1.5 },
                GridEntry { gait: Gait::Trot, speed: 2.0 },
                GridEntry { gait: Gait::Trot, speed: 2.5 },
                GridEntry { gait: Gait::Bound, speed: 3.2 },
            ],
            clip_duration: 10.0,
            relabel_window: 25,
            synth: SynthConfig::default(),
        }
    }
}

/// Label-free expert clips sharing one control period.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionDataset<R> {
    pub dt: R,
    pub clips: Vec<Clip<R>>,
}

impl<R: Real> MotionDataset<R> {
    /// Number of consecutive-state transitions across all clips.
    pub fn transition_count(&self) -> usize {
        self.clips.iter().map(|c| c.states.len().saturating_sub(1)).sum()
    }

    /// Transition at a flat index, paired with the pseudo-command of its
    /// first state. Panics if commands are missing (relabel first).
    pub fn transition_at(&self, mut idx: usize) -> (Transition<R>, VelocityCommand<R>) {
        for clip in &self.clips {
            let n = clip.states.len() - 1;
            if idx < n {
                let cmds = clip.commands.as_ref().expect("dataset not relabeled");
                return (
                    Transition { s0: clip.states[idx], s1: clip.states[idx + 1], dt: self.dt },
                    cmds[idx],
                );
            }
            idx -= n;
        }
        panic!("transition index out of range");
    }

    pub fn all_transitions(&self) -> Vec<(Transition<R>, VelocityCommand<R>)> {
        (0..self.transition_count()).map(|i| self.transition_at(i)).collect()
    }

    /// Per-dimension mean and standard deviation of the flattened
    /// transitions, stds floored away from zero. These statistics get frozen
    /// into the prior at build time.
    pub fn transition_stats(&self) -> (Vec<R>, Vec<R>) {
        let n = self.transition_count();
        assert!(n > 0, "no transitions");
        let mut mean = vec![R::zero(); TRANSITION_DIM];
        let mut sq = vec![R::zero(); TRANSITION_DIM];
        for i in 0..n {
            let (x, _) = self.transition_at(i);
            for (d, v) in x.flatten().iter().enumerate() {
                mean[d] += *v;
                sq[d] += *v * *v;
            }
        }
        let count = R::of(n as f64);
        let floor = R::of(1e-6);
        for d in 0..TRANSITION_DIM {
            mean[d] /= count;
            let var = (sq[d] / count - mean[d] * mean[d]).max(R::zero());
            sq[d] = var.sqrt().max(floor);
        }
        (mean, sq)
    }

    /// Fraction of clips whose mean forward velocity exceeds the lateral one —
    /// the bias summary the data generator prints.
    pub fn forward_dominant_fraction(&self) -> f64 {
        if self.clips.is_empty() {
            return 0.0;
        }
        let dominant = self
            .clips
            .iter()
            .filter(|c| {
                let n = c.states.len() as f64;
                let mvx: f64 = c.states.iter().map(|s| s.vx.to64()).sum::<f64>() / n;
                let mvy: f64 = c.states.iter().map(|s| s.vy.to64()).sum::<f64>() / n;
                mvx > mvy.abs()
            })
            .count();
        dominant as f64 / self.clips.len() as f64
    }

    pub fn validate(&self) -> Result<(), MotionError> {
        if self.clips.is_empty() {
            return Err(MotionError::EmptyGrid);
        }
        if self.clips.iter().any(|c| c.states.len() < 2) {
            return Err(MotionError::ClipTooShort);
        }
        Ok(())
    }
}

/// Composes generator clips over the configured grid and relabels them.
/// Clip seeds derive from the dataset seed and the grid index.
pub fn build_expert_dataset<R: Real>(
    cfg: &DataConfig,
    seed: u64,
) -> Result<MotionDataset<R>, MotionError> {
    if cfg.grid.is_empty() {
        return Err(MotionError::EmptyGrid);
    }
    let mut clips = Vec::with_capacity(cfg.grid.len());
    for (i, entry) in cfg.grid.iter().enumerate() {
        let mut clip: Clip<R> = synth_expert(
            entry.gait,
            entry.speed,
            cfg.clip_duration,
            seed.wrapping_add(i as u64),
            &cfg.synth,
        )?;
        clip.commands = Some(relabel_commands(&clip.states, cfg.relabel_window)?);
        clips.push(clip);
    }
    Ok(MotionDataset { dt: R::of(cfg.synth.dt), clips })
}

fn row_to_json<R: Real>(row: &[R]) -> Value {
    Value::Array(row.iter().map(|v| json!(v.to64())).collect())
}

fn json_to_row(v: &Value, dim: usize, what: &str) -> Result<Vec<f64>, MotionError> {
    let arr = v
        .as_array()
        .ok_or_else(|| MotionError::Format(format!("{what} row is not an array")))?;
    if arr.len() != dim {
        return Err(MotionError::Format(format!(
            "{what} row has {} numbers, expected {dim}",
            arr.len()
        )));
    }
    arr.iter()
        .map(|x| x.as_f64().ok_or_else(|| MotionError::Format(format!("{what} entry not a number"))))
        .collect()
}

/// Serializes the dataset to the documented JSON layout.
pub fn dataset_to_string<R: Real>(ds: &MotionDataset<R>) -> String {
    let clips: Vec<Value> = ds
        .clips
        .iter()
        .map(|c| {
            let states: Vec<Value> = c.states.iter().map(|s| row_to_json(&s.flatten())).collect();
            let mut obj = json!({
                "gait": c.gait.name(),
                "speed": c.speed,
                "states": states,
            });
            if let Some(cmds) = &c.commands {
                let rows: Vec<Value> = cmds.iter().map(|v| row_to_json(&v.flatten())).collect();
                obj["commands"] = Value::Array(rows);
            }
            obj
        })
        .collect();
    let doc = json!({
        "dt": ds.dt.to64(),
        "joint_order": JOINT_NAMES,
        "clips": clips,
    });
    serde_json::to_string_pretty(&doc).expect("dataset serializes")
}

/// Parses a dataset file, rejecting any `joint_order` that differs from the
/// canonical one.
pub fn dataset_from_str<R: Real>(text: &str) -> Result<MotionDataset<R>, MotionError> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| MotionError::Format(e.to_string()))?;
    let dt = doc
        .get("dt")
        .and_then(Value::as_f64)
        .ok_or_else(|| MotionError::Format("missing numeric `dt`".into()))?;
    let order = doc
        .get("joint_order")
        .and_then(Value::as_array)
        .ok_or_else(|| MotionError::Format("missing `joint_order`".into()))?;
    let names: Vec<&str> = order.iter().filter_map(Value::as_str).collect();
    if names != JOINT_NAMES {
        return Err(MotionError::Format(format!(
            "joint_order {names:?} differs from the canonical order"
        )));
    }
    let clips_json = doc
        .get("clips")
        .and_then(Value::as_array)
        .ok_or_else(|| MotionError::Format("missing `clips` list".into()))?;
    let mut clips = Vec::with_capacity(clips_json.len());
    for cj in clips_json {
        let gait_name = cj
            .get("gait")
            .and_then(Value::as_str)
            .ok_or_else(|| MotionError::Format("clip missing `gait`".into()))?;
        let gait = Gait::parse(gait_name)
            .ok_or_else(|| MotionError::Format(format!("unknown gait `{gait_name}`")))?;
        let speed = cj
            .get("speed")
            .and_then(Value::as_f64)
            .ok_or_else(|| MotionError::Format("clip missing numeric `speed`".into()))?;
        let states_json = cj
            .get("states")
            .and_then(Value::as_array)
            .ok_or_else(|| MotionError::Format("clip missing `states`".into()))?;
        let mut states = Vec::with_capacity(states_json.len());
        for sv in states_json {
            let row = json_to_row(sv, STATE_DIM, "state")?;
            let row_r: Vec<R> = row.iter().map(|&x| R::of(x)).collect();
            states.push(LocomotorState::from_flat(&row_r));
        }
        let commands = match cj.get("commands") {
            Some(Value::Array(rows)) => {
                let mut cmds = Vec::with_capacity(rows.len());
                for rv in rows {
                    let row = json_to_row(rv, COMMAND_DIM, "command")?;
                    cmds.push(VelocityCommand::new(R::of(row[0]), R::of(row[1]), R::of(row[2])));
                }
                if cmds.len() != states.len() {
                    return Err(MotionError::Format(
                        "commands length differs from states length".into(),
                    ));
                }
                Some(cmds)
            }
            None | Some(Value::Null) => None,
            Some(_) => return Err(MotionError::Format("`commands` is not a list".into())),
        };
        clips.push(Clip { gait, speed, states, commands });
    }
    let ds = MotionDataset { dt: R::of(dt), clips };
    ds.validate()?;
    Ok(ds)
}

pub fn write_dataset<R: Real>(ds: &MotionDataset<R>, path: &Path) -> Result<(), MotionError> {
    std::fs::write(path, dataset_to_string(ds))?;
    Ok(())
}

pub fn read_dataset<R: Real>(path: &Path) -> Result<MotionDataset<R>, MotionError> {
    dataset_from_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_grid_is_an_error() {
        let cfg = DataConfig { grid: vec![], ..DataConfig::default() };
        assert!(matches!(build_expert_dataset::<f64>(&cfg, 0), Err(MotionError::EmptyGrid)));
    }

    #[test]
    fn default_grid_yields_one_clip_per_cell() {
        let cfg = DataConfig::default();
        let ds = build_expert_dataset::<f64>(&cfg, 7).unwrap();
        assert_eq!(ds.clips.len(), cfg.grid.len());
        assert!(ds.transition_count() > 0);
        for c in &ds.clips {
            assert!(c.commands.is_some());
            assert_eq!(c.commands.as_ref().unwrap().len(), c.states.len());
        }
    }

    #[test]
    fn file_roundtrip_is_bit_exact() {
        let cfg = DataConfig {
            clip_duration: 1.0,
            grid: vec![
                GridEntry { gait: Gait::Walk, speed: 0.7 },
                GridEntry { gait: Gait::Trot, speed: 2.2 },
            ],
            ..DataConfig::default()
        };
        let ds = build_expert_dataset::<f64>(&cfg, 13).unwrap();
        let text = dataset_to_string(&ds);
        let back: MotionDataset<f64> = dataset_from_str(&text).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn wrong_joint_order_rejected() {
        let cfg = DataConfig { clip_duration: 0.5, ..DataConfig::default() };
        let ds = build_expert_dataset::<f64>(&cfg, 0).unwrap();
        let text = dataset_to_string(&ds).replace("FL_hip", "FL_abad");
        assert!(matches!(dataset_from_str::<f64>(&text), Err(MotionError::Format(_))));
    }

    #[test]
    fn stats_standardize_the_data() {
        let ds = build_expert_dataset::<f64>(&DataConfig::default(), 3).unwrap();
        let (mean, std) = ds.transition_stats();
        let n = ds.transition_count();
        // Standardizing with the reported stats recenters dim 0 (vx of s0).
        let mut acc = 0.0;
        for i in 0..n {
            let (x, _) = ds.transition_at(i);
            acc += (x.flatten()[0] - mean[0]) / std[0];
        }
        assert!((acc / n as f64).abs() < 1e-9);
        assert!(std.iter().all(|&s| s >= 1e-6));
    }

    #[test]
    fn dataset_is_forward_dominant() {
        let ds = build_expert_dataset::<f64>(&DataConfig::default(), 5).unwrap();
        assert_eq!(ds.forward_dominant_fraction(), 1.0);
    }
}

