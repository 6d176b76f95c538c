//! Minimal dense-network machinery: hand-rolled forward/backward passes and
//! Adam. Everything downstream (denoiser, baseline classifier, actor/critic)
//! is built from these pieces so that every gradient in the crate is
//! checkable against finite differences.

mod adam;
mod mlp;

pub use adam::Adam;
pub use mlp::{Activation, Layer, Mlp, MlpGrad};
