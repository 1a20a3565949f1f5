//! Two-membrane cavity optomechanics: linearized Gaussian dynamics, classical and
//! quantum Fisher information for homodyne detection, and maximum-likelihood
//! estimation of membrane position disorder.

pub mod config;
pub mod error;
pub mod gaussian;
pub mod inference;
pub mod models;
pub mod physics;
pub mod pipeline;

pub use error::{Error, Result};
pub use physics::{Disorder, Model, OutputMode, SystemParams, UnitScale};
pub use pipeline::{Evaluation, ModelPipeline, OutputState};
