//! Affine content/style encoders and the training step that drives them through
//! the memory.

mod linear;
mod train;

pub use linear::{load_encoders, save_encoders, EncoderGrads, EncoderSet, EncoderSetGrads, LinearEncoder};
pub use train::{objective, train_step, Encoded, ObjectiveOutput, TrainConfig};
