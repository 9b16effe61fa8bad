//! Softmax posterior over classes and the regularized log-likelihood.

use crate::encoding::encode_instance;
use crate::error::{check_dim, Error, Result};
use crate::types::{Codebook, Dataset, EncodeMode, Encoding, SoftLabel};

/// Log-probabilities are floored here before being weighted by a label.
pub const LOG_FLOOR: f64 = -700.0;

/// Softmax weights, one K-vector per class, and the L2 strength.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    theta: Vec<Vec<f64>>,
    lambda: f64,
}

impl Weights {
    pub fn new(theta: Vec<Vec<f64>>, lambda: f64) -> Result<Self> {
        if theta.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "need weights for at least 2 classes, got {}",
                theta.len()
            )));
        }
        let k = theta[0].len();
        if k == 0 {
            return Err(Error::InvalidParameter(
                "weight rows must be non-empty".into(),
            ));
        }
        for row in &theta {
            check_dim("weight row", k, row.len())?;
            if !row.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite("weights"));
            }
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and nonnegative, got {lambda}"
            )));
        }
        Ok(Self { theta, lambda })
    }

    pub fn zeros(classes: usize, k: usize, lambda: f64) -> Result<Self> {
        Self::new(vec![vec![0.0; k]; classes], lambda)
    }

    pub fn theta(&self) -> &[Vec<f64>] {
        &self.theta
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn classes(&self) -> usize {
        self.theta.len()
    }

    /// Number of prototypes each class row is defined over.
    pub fn k(&self) -> usize {
        self.theta[0].len()
    }

    /// Squared Frobenius norm, i.e. tr(ΘᵀΘ).
    pub fn squared_norm(&self) -> f64 {
        self.theta.iter().flatten().map(|v| v * v).sum()
    }

    /// Row-major copy of Θ.
    pub fn flatten(&self) -> Vec<f64> {
        self.theta.iter().flatten().copied().collect()
    }

    pub fn from_flat(flat: &[f64], classes: usize, lambda: f64) -> Result<Self> {
        if classes == 0 || !flat.len().is_multiple_of(classes) {
            return Err(Error::InvalidParameter(format!(
                "cannot split {} weights into {classes} rows",
                flat.len()
            )));
        }
        let k = flat.len() / classes;
        Self::new(flat.chunks(k).map(<[f64]>::to_vec).collect(), lambda)
    }
}

/// Class probabilities for one encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior(pub Vec<f64>);

impl Posterior {
    pub fn probs(&self) -> &[f64] {
        &self.0
    }
}

/// Codebook plus classifier: the full parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub codebook: Codebook,
    pub weights: Weights,
    /// Encoding used for every instance; standard-prototype baselines use
    /// [`EncodeMode::Hard`].
    pub mode: EncodeMode,
    /// Strength γ of an optional penalty −γ·(ln β)², off at 0.
    pub beta_penalty: f64,
}

impl Model {
    pub fn new(codebook: Codebook, weights: Weights) -> Result<Self> {
        check_dim("weights vs codebook size", codebook.len(), weights.k())?;
        Ok(Self {
            codebook,
            weights,
            mode: EncodeMode::Soft,
            beta_penalty: 0.0,
        })
    }

    pub fn with_mode(mut self, mode: EncodeMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_beta_penalty(mut self, strength: f64) -> Result<Self> {
        if !(strength.is_finite() && strength >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta penalty must be finite and nonnegative, got {strength}"
            )));
        }
        self.beta_penalty = strength;
        Ok(self)
    }

    pub fn k(&self) -> usize {
        self.codebook.len()
    }

    pub fn dim(&self) -> usize {
        self.codebook.dim()
    }

    pub fn classes(&self) -> usize {
        self.weights.classes()
    }

    pub(crate) fn check_data(&self, data: &Dataset) -> Result<()> {
        check_dim("dataset features vs model", self.dim(), data.dim())?;
        check_dim("dataset classes vs model", self.classes(), data.classes())
    }

    /// The regularizer subtracted from the log-likelihood.
    pub fn penalty(&self) -> f64 {
        let log_beta = self.codebook.beta().ln();
        self.weights.lambda() * self.weights.squared_norm()
            + self.beta_penalty * log_beta * log_beta
    }
}

/// Log-softmax of the class scores θʲ·z.
pub(crate) fn log_posterior(z: &[f64], w: &Weights) -> Vec<f64> {
    let scores: Vec<f64> = w
        .theta()
        .iter()
        .map(|row| row.iter().zip(z).map(|(t, v)| t * v).sum())
        .collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    scores.iter().map(|s| s - lse).collect()
}

pub(crate) fn posterior_unchecked(z: &[f64], w: &Weights) -> Vec<f64> {
    let scores: Vec<f64> = w
        .theta()
        .iter()
        .map(|row| row.iter().zip(z).map(|(t, v)| t * v).sum())
        .collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = p.iter().sum();
    for v in &mut p {
        *v /= total;
    }
    p
}

pub(crate) fn loglik_unchecked(z: &[f64], label: &[f64], w: &Weights) -> f64 {
    log_posterior(z, w)
        .iter()
        .zip(label)
        .filter(|(_, &p)| p > 0.0)
        .map(|(lp, p)| p * lp.max(LOG_FLOOR))
        .sum()
}

/// Softmax class posterior σ(z; Θ).
pub fn class_posterior(z: &Encoding, w: &Weights) -> Result<Posterior> {
    check_dim("encoding vs weights", w.k(), z.len())?;
    Ok(Posterior(posterior_unchecked(z.as_slice(), w)))
}

/// Σⱼ P̃ⱼ log σʲ(z; Θ) for one instance.
pub fn instance_loglik(z: &Encoding, label: &SoftLabel, w: &Weights) -> Result<f64> {
    check_dim("encoding vs weights", w.k(), z.len())?;
    check_dim("label vs weights", w.classes(), label.classes())?;
    Ok(loglik_unchecked(z.as_slice(), label.probs(), w))
}

/// Encodes every instance of `data` in index order.
pub fn encode_dataset(data: &Dataset, cb: &Codebook, mode: EncodeMode) -> Result<Vec<Encoding>> {
    data.instances()
        .iter()
        .map(|inst| encode_instance(&inst.features, cb, mode))
        .collect()
}

/// Regularized log-likelihood of the whole dataset.
pub fn dataset_objective(data: &Dataset, m: &Model) -> Result<f64> {
    m.check_data(data)?;
    let mut total = 0.0;
    for inst in data.instances() {
        let z = encode_instance(&inst.features, &m.codebook, m.mode)?;
        total += loglik_unchecked(z.as_slice(), inst.label.probs(), &m.weights);
    }
    Ok(total - m.penalty())
}
