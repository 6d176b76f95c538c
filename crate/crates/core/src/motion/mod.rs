//! States, transitions, commands, the scripted expert generator and its
//! geometric augmentations.

mod augment;
mod dataset;
mod mirror;
mod relabel;
mod state;
mod synth;

pub use augment::{augment_expert_batch, AugmentOptions};
pub use dataset::{
    build_expert_dataset, dataset_from_str, dataset_to_string, read_dataset, write_dataset,
    DataConfig, GridEntry, MotionDataset,
};
pub use mirror::{mirror_action, mirror_command, mirror_state, mirror_transition, yaw_rotate_transition};
pub use relabel::relabel_commands;
pub use state::{
    CommandEnvelope, Clip, LocomotorState, MorphologyMap, Transition, VelocityCommand, JOINT_NAMES,
};
pub use synth::{synth_expert, Gait, SynthConfig};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MotionError {
    #[error("clip is empty and cannot be relabeled")]
    EmptyClip,
    #[error("relabel window {window} invalid for clip of length {len}")]
    BadWindow { window: usize, len: usize },
    #[error("speed {speed} outside the {gait} band")]
    SpeedOutsideGaitBand { gait: &'static str, speed: f64 },
    #[error("dataset grid is empty")]
    EmptyGrid,
    #[error("clip shorter than 2 states")]
    ClipTooShort,
    #[error("dataset file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
