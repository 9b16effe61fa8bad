//! Optimizers: k-means initialization, the quasi-Newton maximizer and the
//! coordinate-ascent training driver.

pub mod kmeans;
pub mod lbfgs;
pub mod train;

pub use kmeans::{kmeans_init, kmeans_points, KMeansResult};
pub use lbfgs::{quasi_newton_maximize, Maximum, OptimizerConfig, Termination};
pub use train::{
    coordinate_ascent_train, default_beta, initial_model, optimize_codebook_block,
    optimize_theta_block, BlockOutcome, TrainConfig, TrainReport, ROUND_TOLERANCE,
};
