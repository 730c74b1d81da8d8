//! A2CR: advantage actor-critic with a self-supervised action-purpose
//! reasoner, on a synthetic pixel side-scroller.
//!
//! The crate is organized around the training pipeline:
//!
//! - [`tensor`]: reverse-mode autodiff, optimizer, checkpoints
//! - [`networks`]: the policy/value trunk and the reasoner classifier
//! - [`env`]: the ScrollRunner environment (pixels, 12 actions, shaped reward)
//! - [`phase_corr`]: FFT phase correlation for frame-shift estimation
//! - [`state_explore`]: the state-exploration and total-gain features
//! - [`collector`]: the exploring pool and pseudo-groundtruth labeling
//! - [`training`]: the synchronized dual training loop
//! - [`explain`]: classification, saliency, failure and exploration analysis

pub mod collector;
pub mod env;
pub mod error;
pub mod explain;
pub mod networks;
pub mod pgm;
pub mod phase_corr;
pub mod state_explore;
pub mod tensor;
pub mod training;
pub mod types;

pub use error::{Error, Result};
pub use types::{Frame, FrameStack};
