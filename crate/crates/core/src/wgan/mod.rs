//! Conditional Wasserstein GAN with gradient penalty.
//!
//! Dense generator and critic on batched `f64` matrices with a hand-written
//! reverse pass. The gradient penalty needs the derivative of an input
//! gradient with respect to the parameters; for these piecewise-linear
//! networks that is computed exactly with the ReLU pattern frozen.

mod adam;
mod checkpoint;
mod loss;
mod mlp;
mod network;
mod sample;
mod spread;
mod train;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint, RngState, WGCK_MAGIC, WGCK_VERSION};
pub use loss::{critic_loss, critic_loss_on, generator_loss, gradient_penalty, interpolate_samples, CriticLoss, GeneratorLoss, Penalty};
pub use mlp::{Activation, Backward, ForwardCache, Layer, Mlp, MlpGrads};
pub use network::{
    csi_width, scaled_width, Critic, CriticForward, CriticGrads, Generator, CONDITION_DIM, CRITIC_HEAD, CRITIC_TRUNK,
    DEFAULT_NOISE_DIM, GENERATOR_HIDDEN,
};
pub use sample::{noise_vector, sample_fixed, sample_variable, sample_variable_at, variable_noise};
pub use spread::{moments, spread_jvp, spread_vjp, Moments, ValueScaler};
pub use train::{fit_spread_scaler, train, training_matrices, LogRow, Model, Trainer, TrainingConfig};
