//! Sinusoidal MLPs over location encodings: model, loss, gradients, Adam and
//! the training loop.

mod adam;
mod checkpoint;
mod model;
mod train;

pub use adam::{adam_step, AdamParams, AdamState};
pub use checkpoint::{from_checkpoint_bytes, load_checkpoint, save_checkpoint, to_checkpoint_bytes, CHECKPOINT_MAGIC};
pub use model::{loss, point_loss, sigmoid, siren_init, Gradients, Layer, ModelConfig, SirenModel};
pub use train::{evaluate, evaluate_features, train, train_on_features, Evaluation, TrainConfig, TrainHistory};
