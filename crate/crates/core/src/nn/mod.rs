//! Minimal dense networks: forward pass, backprop, SGD with per-layer
//! freezing, and flattening of the trainable parameters.

mod autoencoder;
mod checkpoint;
mod network;
pub(crate) mod train;

pub use autoencoder::{pretrain, Autoencoder, AutoencoderConfig, FeatureNorm, PretrainReport};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub use network::{Activation, DenseNetwork, FlatParams, Layer};
pub use train::{batch_loss, cross_entropy, gradient, mse_loss, sgd_step, softmax, Gradient, Loss, Sample};
