//! Probabilistic prototype classifiers over sets of feature vectors.
//!
//! Each instance is a bag of vectors. Vectors are softly assigned to a
//! codebook of centers, pooled into an encoding, and classified with a
//! multinomial logistic model. Training alternates between the convex
//! weight problem and a quasi-Newton step on the centers and sharpness.

pub mod baselines;
pub mod classifier;
pub mod data;
pub mod encoding;
pub mod error;
pub mod gradients;
pub mod metrics;
pub mod optimize;
pub mod types;

pub use classifier::{Model, Posterior, Weights};
pub use error::{Error, Result};
pub use metrics::{evaluate, MetricsReport};
pub use optimize::{OptimizerConfig, TrainConfig, TrainReport};
pub use types::{Codebook, Dataset, EncodeMode, Encoding, FeatureSet, Instance, SoftLabel};
