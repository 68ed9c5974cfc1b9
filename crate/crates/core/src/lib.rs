//! Site-specific massive-MIMO channel modelling: CSI tensors and their
//! on-disk format, a deterministic multipath scenario generator, a
//! conditional Wasserstein GAN with gradient penalty, a phase-aligned
//! Delaunay interpolation baseline, and the evaluation metrics used to
//! compare them.

pub mod csi;
pub mod dataset;
pub mod error;
pub mod interp;
pub mod metrics;
pub mod synth;
pub mod wgan;

pub use csi::{ArrayGeometry, CsiDataset, CsiTensor, Datapoint, PowerBasis, TensorShape};
pub use dataset::{load_dataset, save_dataset, split_train_test, ConditionScaler, SplitSpec};
pub use error::{Error, FormatError, Result};
pub use interp::{build_interpolant, Fallback, Interpolant};
pub use synth::Scenario;
pub use wgan::{Checkpoint, Model, TrainingConfig};
