//! Class-aware key-values memory network.
//!
//! The crate is organized bottom-up:
//!
//! * [`numerics`]: dense row-major matrices, softmax/cosine kernels, Adam and seeded randomness.
//! * [`memory`]: the memory bank with class-partitioned items, read/update and persistence.
//! * [`objectives`]: item contrastive loss, triplet variant and a finite-difference checker.
//! * [`encoder`]: affine encoders and the full training step.
//! * [`synthdata`]: paired two-domain feature scenes with class boxes.
//! * [`harness`]: configuration, training loop, evaluation metrics and artifacts.

pub mod encoder;
pub mod error;
pub mod harness;
pub mod json;
pub mod memory;
pub mod numerics;
pub mod objectives;
pub mod synthdata;

pub use error::{Error, Result};
pub use numerics::Matrix;
