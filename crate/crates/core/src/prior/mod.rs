//! Stylistic priors over action-agnostic state transitions.
//!
//! Two reward models live here. The conditional denoiser scores a transition
//! by its denoising error under an "expert" and an "agent" hypothesis; a
//! softmax over the two errors yields a classification probability that is
//! used directly as a bounded reward in `[0, 1]`. The MLP baseline keeps the
//! classic unbounded `log D − log(1−D)` logit reward for comparison.

mod amp;
mod denoiser;
mod schedule;

pub use amp::{amp_bce_update, amp_logit_reward, AmpDiscriminatorParams};
pub use denoiser::{
    classify, denoise_loss, diffusion_bce_loss, forward_diffuse, mc_denoise_loss, style_reward,
    timestep_embedding, ConceptLabel, DenoiserParams, McDraw, PriorBatch, TIMESTEP_EMBED_DIM,
};
pub use schedule::{AntitheticMode, NoiseSchedule};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PriorError {
    #[error("diffusion timestep {k} out of range (K = {k_steps})")]
    TimestepOutOfRange { k: usize, k_steps: usize },
    #[error("denoising network produced a non-finite output")]
    NonFinite,
    #[error("batch is empty")]
    EmptyBatch,
    #[error("n_mc must be at least 1")]
    NoDraws,
}
