//! Dense kernels, the Adam optimizer and the seeded randomness contract.

mod adam;
mod matrix;
mod ops;
mod rng;

pub use adam::{adam_step, AdamParams, AdamState};
pub use matrix::Matrix;
pub(crate) use ops::cosine_unchecked;
pub use ops::{cosine_similarity, dot, l2_norm, l2_normalize, softmax_cols, softmax_in_place, softmax_rows, EPS_DIV};
pub use rng::{derive_seed, splitmix64, SeededRng};
