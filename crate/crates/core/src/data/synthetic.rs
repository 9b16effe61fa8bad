//! Seeded synthetic datasets: Gaussian feature sets and random gradient-check
//! problems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::classifier::{Model, Weights};
use crate::error::{Error, Result};
use crate::types::{Codebook, Dataset, FeatureSet, Instance, SoftLabel};

/// Gaussian feature-set generator settings. One Gaussian per class.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    /// Total instances; each draws its class uniformly.
    pub n_instances: usize,
    /// Inclusive bounds on the number of vectors per instance.
    pub m_range: (usize, usize),
    pub class_means: Vec<Vec<f64>>,
    pub covariances: Vec<Vec<Vec<f64>>>,
    /// Mass moved from the true class to a uniform spread; 0 gives one-hot
    /// labels.
    pub label_smoothing: f64,
    pub seed: u64,
}

impl SyntheticConfig {
    /// Two 2-D classes: identity covariance at (0,0) and unit variances with
    /// covariance 0.95 at (2,2); 20 instances of 1 to 20 vectors each.
    pub fn figure1(seed: u64) -> Self {
        Self {
            n_instances: 20,
            m_range: (1, 20),
            class_means: vec![vec![0.0, 0.0], vec![2.0, 2.0]],
            covariances: vec![
                vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                vec![vec![1.0, 0.95], vec![0.95, 1.0]],
            ],
            label_smoothing: 0.0,
            seed,
        }
    }

    /// Four overlapping 2-D classes with smoothed labels; 400 instances of
    /// 1 to 10 vectors each.
    pub fn soft_benchmark(seed: u64) -> Self {
        let iso = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        Self {
            n_instances: 400,
            m_range: (1, 10),
            class_means: vec![
                vec![0.0, 0.0],
                vec![1.5, 0.0],
                vec![0.0, 1.5],
                vec![1.5, 1.5],
            ],
            covariances: vec![
                iso.clone(),
                vec![vec![1.0, 0.8], vec![0.8, 1.0]],
                vec![vec![1.0, -0.8], vec![-0.8, 1.0]],
                iso,
            ],
            label_smoothing: 0.3,
            seed,
        }
    }

    fn validate(&self) -> Result<Vec<Vec<Vec<f64>>>> {
        let classes = self.class_means.len();
        if classes < 2 || self.covariances.len() != classes {
            return Err(Error::InvalidParameter(
                "need one mean and one covariance per class, at least 2 classes".into(),
            ));
        }
        if self.n_instances == 0 {
            return Err(Error::InvalidParameter(
                "n_instances must be positive".into(),
            ));
        }
        let (lo, hi) = self.m_range;
        if lo == 0 || hi < lo {
            return Err(Error::InvalidParameter(format!(
                "invalid M range ({lo}, {hi})"
            )));
        }
        if !(0.0..=1.0).contains(&self.label_smoothing) {
            return Err(Error::InvalidParameter(
                "label smoothing must lie in [0, 1]".into(),
            ));
        }
        let dim = self.class_means[0].len();
        if dim == 0 || self.class_means.iter().any(|m| m.len() != dim) {
            return Err(Error::InvalidParameter(
                "class means must share a positive dimension".into(),
            ));
        }
        self.covariances.iter().map(|c| cholesky(c, dim)).collect()
    }
}

/// Lower-triangular factor of a symmetric positive-definite matrix.
fn cholesky(a: &[Vec<f64>], dim: usize) -> Result<Vec<Vec<f64>>> {
    let invalid = |why: &str| Error::InvalidParameter(format!("invalid covariance: {why}"));
    if a.len() != dim || a.iter().any(|r| r.len() != dim) {
        return Err(invalid("wrong shape"));
    }
    for i in 0..dim {
        for j in 0..i {
            if (a[i][j] - a[j][i]).abs() > 1e-12 * (1.0 + a[i][j].abs()) {
                return Err(invalid("not symmetric"));
            }
        }
    }
    let mut l = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if !(d > 0.0) {
                    return Err(invalid("not positive definite"));
                }
                l[i][j] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Ok(l)
}

/// Draws `cfg.n_instances` labeled feature sets from per-class Gaussians.
pub fn generate_figure1_toy(cfg: &SyntheticConfig) -> Result<Dataset> {
    let factors = cfg.validate()?;
    let classes = cfg.class_means.len();
    let dim = cfg.class_means[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut instances = Vec::with_capacity(cfg.n_instances);
    for n in 0..cfg.n_instances {
        let class = rng.random_range(0..classes);
        let count = rng.random_range(cfg.m_range.0..=cfg.m_range.1);
        let vectors = (0..count)
            .map(|_| {
                let noise: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                (0..dim)
                    .map(|i| {
                        cfg.class_means[class][i]
                            + (0..=i)
                                .map(|j| factors[class][i][j] * noise[j])
                                .sum::<f64>()
                    })
                    .collect()
            })
            .collect();
        let spread = cfg.label_smoothing / classes as f64;
        let mut probs = vec![spread; classes];
        probs[class] += 1.0 - cfg.label_smoothing;
        instances.push(Instance::new(
            format!("n{n}"),
            FeatureSet::new(vectors)?,
            SoftLabel::new(probs)?,
        ));
    }
    Dataset::new(dim, classes, instances)
}

/// Size of a random gradient-check problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemShape {
    pub instances: usize,
    pub max_vectors: usize,
    pub dim: usize,
    pub k: usize,
    pub classes: usize,
    pub lambda: f64,
}

impl Default for ProblemShape {
    fn default() -> Self {
        Self {
            instances: 5,
            max_vectors: 4,
            dim: 2,
            k: 3,
            classes: 2,
            lambda: 0.1,
        }
    }
}

/// A seeded random dataset and model with standard-normal features,
/// centers and weights, random soft labels and β in [0.3, 1.5).
pub fn random_problem(shape: &ProblemShape, seed: u64) -> Result<(Dataset, Model)> {
    if shape.instances == 0
        || shape.max_vectors == 0
        || shape.dim == 0
        || shape.k == 0
        || shape.classes < 2
    {
        return Err(Error::InvalidParameter(format!(
            "degenerate problem shape {shape:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = |rng: &mut ChaCha8Rng, n: usize| -> Vec<f64> {
        (0..n).map(|_| StandardNormal.sample(rng)).collect()
    };
    let mut instances = Vec::with_capacity(shape.instances);
    for n in 0..shape.instances {
        let count = rng.random_range(1..=shape.max_vectors);
        let vectors = (0..count).map(|_| normal(&mut rng, shape.dim)).collect();
        let label = if rng.random_bool(0.3) {
            SoftLabel::one_hot(rng.random_range(0..shape.classes), shape.classes)?
        } else {
            let raw: Vec<f64> = (0..shape.classes)
                .map(|_| rng.random_range(0.05..1.0))
                .collect();
            let total: f64 = raw.iter().sum();
            SoftLabel::new(raw.iter().map(|r| r / total).collect())?
        };
        instances.push(Instance::new(
            format!("r{n}"),
            FeatureSet::new(vectors)?,
            label,
        ));
    }
    let data = Dataset::new(shape.dim, shape.classes, instances)?;
    let centers = (0..shape.k).map(|_| normal(&mut rng, shape.dim)).collect();
    let beta = rng.random_range(0.3..1.5);
    let theta = (0..shape.classes)
        .map(|_| normal(&mut rng, shape.k))
        .collect();
    let model = Model::new(
        Codebook::new(centers, beta)?,
        Weights::new(theta, shape.lambda)?,
    )?;
    Ok((data, model))
}
