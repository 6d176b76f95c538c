//! Desk-scale locomotion laboratory for a planar quadruped.
//!
//! The crate wires together five subsystems:
//!
//! - [`motion`] — proprioceptive states, transitions, velocity commands,
//!   a scripted gait generator for expert clips, mirror/yaw augmentation and
//!   hindsight command relabeling, plus the on-disk dataset format.
//! - [`prior`] — a command-conditioned denoising network scored under two
//!   domain hypotheses, yielding a bounded stylistic reward in `[0, 1]`, and
//!   an MLP classifier baseline with the classic unbounded logit reward.
//! - [`env`] — a deterministic PD-actuated plant with actuator-limit cost
//!   channels, command sampling, EMA smoothing and an end-of-episode
//!   zero-command override.
//! - [`train`] — PPO with GAE, reward mixing, mirror-symmetry regularization,
//!   scheduled constraint penalties and alternating discriminator updates.
//! - [`metrics`] — Fréchet gait distance, tracking/drift evaluation, safety
//!   violation counting, footfall statistics and PCA embedding.
//!
//! All numeric code is generic over the scalar type via [`scalar::Real`];
//! the concrete aliases below fix the precision used by the CLI and tests.

pub mod env;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod motion;
pub mod nn;
pub mod prior;
pub mod rng;
pub mod scalar;
pub mod train;

pub use scalar::Real;

/// Default scalar type for the shipped binaries and acceptance suite.
pub type Scalar = f64;

pub type LocomotorState = motion::LocomotorState<Scalar>;
pub type Transition = motion::Transition<Scalar>;
pub type VelocityCommand = motion::VelocityCommand<Scalar>;
pub type MotionDataset = motion::MotionDataset<Scalar>;
pub type DenoiserParams = prior::DenoiserParams<Scalar>;
pub type AmpDiscriminatorParams = prior::AmpDiscriminatorParams<Scalar>;
pub type EnvConfig = env::EnvConfig<Scalar>;
pub type PolicyParams = train::PolicyParams<Scalar>;
pub type TrainConfig = train::TrainConfig<Scalar>;
pub type TrainState = train::TrainState<Scalar>;

/// Number of joints of the planar morphology (hip and knee pitch per leg).
pub const JOINT_COUNT: usize = 8;
/// Flattened state dimension.
pub const STATE_DIM: usize = 20;
/// Flattened transition dimension (two consecutive states).
pub const TRANSITION_DIM: usize = 2 * STATE_DIM;
/// Velocity command dimension.
pub const COMMAND_DIM: usize = 3;
