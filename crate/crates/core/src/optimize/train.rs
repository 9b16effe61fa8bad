//! Block-coordinate ascent over the classifier weights and the codebook.

use crate::classifier::{dataset_objective, encode_dataset, loglik_unchecked, Model, Weights};
use crate::error::{Error, Result};
use crate::gradients::{grad_codebook, theta_gradient_from_encodings};
use crate::types::{squared_distance, Codebook, Dataset, EncodeMode};

use super::kmeans::{kmeans_init, KMeansResult};
use super::lbfgs::{quasi_newton_maximize, OptimizerConfig};

/// A full round must improve the objective by at least this much relative
/// to its starting value, or training stops.
pub const ROUND_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Number of prototypes.
    pub k: usize,
    pub lambda: f64,
    pub rounds: usize,
    pub seed: u64,
    /// Initial β; `None` picks 1 / (2 · mean squared distance to the
    /// k-means centers).
    pub beta_init: Option<f64>,
    pub kmeans_restarts: usize,
    /// Overrides the iteration cap of the codebook block only.
    pub codebook_max_iterations: Option<usize>,
    /// Strength of the −γ·(ln β)² penalty.
    pub beta_penalty: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            k: 2,
            lambda: 0.01,
            rounds: 20,
            seed: 0,
            beta_init: None,
            kmeans_restarts: 5,
            codebook_max_iterations: None,
            beta_penalty: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if self.rounds == 0 {
            return Err(Error::InvalidParameter("rounds must be at least 1".into()));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "invalid lambda {}",
                self.lambda
            )));
        }
        if let Some(beta) = self.beta_init {
            if !(beta.is_finite() && beta > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "beta_init must be positive, got {beta}"
                )));
            }
        }
        Ok(())
    }
}

/// Objective values recorded during training.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrainReport {
    /// Value at initialization, then after every block optimization.
    pub objective_trace: Vec<f64>,
    pub rounds: usize,
    /// True when training stopped because a round no longer improved.
    pub converged: bool,
}

/// Result of optimizing one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockOutcome {
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// 1 / (2 · mean squared distance of feature vectors to their nearest center).
pub fn default_beta(data: &Dataset, centers: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for inst in data.instances() {
        for x in inst.features.vectors() {
            total += centers
                .iter()
                .map(|c| squared_distance(c, x))
                .fold(f64::INFINITY, f64::min);
            count += 1;
        }
    }
    let mean = total / count as f64;
    if mean > 0.0 && mean.is_finite() {
        1.0 / (2.0 * mean)
    } else {
        1.0
    }
}

/// k-means centers, β from the config (or the data-driven default) and Θ = 0.
pub fn initial_model(data: &Dataset, tc: &TrainConfig) -> Result<(Model, KMeansResult)> {
    tc.validate()?;
    let km = kmeans_init(data, tc.k, tc.seed, tc.kmeans_restarts)?;
    let beta = tc
        .beta_init
        .unwrap_or_else(|| default_beta(data, &km.centers));
    let codebook = Codebook::new(km.centers.clone(), beta)?;
    let weights = Weights::zeros(data.classes(), tc.k, tc.lambda)?;
    let model = Model::new(codebook, weights)?.with_beta_penalty(tc.beta_penalty)?;
    Ok((model, km))
}

/// Maximizes the objective over Θ with encodings held fixed.
pub fn optimize_theta_block(
    data: &Dataset,
    m: &Model,
    cfg: &OptimizerConfig,
) -> Result<(Model, BlockOutcome)> {
    m.check_data(data)?;
    let encodings = encode_dataset(data, &m.codebook, m.mode)?;
    let labels: Vec<&[f64]> = data.instances().iter().map(|i| i.label.probs()).collect();
    let (classes, lambda) = (m.classes(), m.weights.lambda());

    let objective = |flat: &[f64]| -> Result<(f64, Vec<f64>)> {
        let w = Weights::from_flat(flat, classes, lambda)?;
        let ll: f64 = encodings
            .iter()
            .zip(&labels)
            .map(|(z, p)| loglik_unchecked(z.as_slice(), p, &w))
            .sum();
        let grad = theta_gradient_from_encodings(&encodings, &labels, &w);
        Ok((
            ll - lambda * w.squared_norm(),
            grad.into_iter().flatten().collect(),
        ))
    };
    let found = quasi_newton_maximize(objective, m.weights.flatten(), cfg)?;

    let mut next = m.clone();
    next.weights = Weights::from_flat(&found.x, classes, lambda)?;
    keep_better(data, m, next, found.iterations, found.converged())
}

/// Maximizes the objective jointly over every center coordinate and ln β
/// with Θ held fixed.
pub fn optimize_codebook_block(
    data: &Dataset,
    m: &Model,
    cfg: &OptimizerConfig,
) -> Result<(Model, BlockOutcome)> {
    if m.mode != EncodeMode::Soft {
        return Err(Error::HardModeGradient);
    }
    m.check_data(data)?;
    let (k, dim) = (m.k(), m.dim());
    let unpack = |x: &[f64]| -> Result<Codebook> {
        let centers = x[..k * dim].chunks(dim).map(<[f64]>::to_vec).collect();
        Codebook::new(centers, x[k * dim].exp())
    };

    let objective = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
        let mut trial = m.clone();
        trial.codebook = match unpack(x) {
            Ok(cb) => cb,
            // β left (0, ∞) or a center overflowed: treat as infeasible
            Err(_) => return Ok((f64::NEG_INFINITY, vec![0.0; x.len()])),
        };
        let value = dataset_objective(data, &trial)?;
        let grad = grad_codebook(data, &trial)?;
        let mut flat: Vec<f64> = grad.d_centers.into_iter().flatten().collect();
        flat.push(grad.d_log_beta);
        Ok((value, flat))
    };
    let mut x0: Vec<f64> = m.codebook.centers().iter().flatten().copied().collect();
    x0.push(m.codebook.beta().ln());
    let found = quasi_newton_maximize(objective, x0, cfg)?;

    let mut next = m.clone();
    next.codebook = unpack(&found.x)?;
    keep_better(data, m, next, found.iterations, found.converged())
}

/// Returns `candidate` unless it scores below `current` on the full objective.
fn keep_better(
    data: &Dataset,
    current: &Model,
    candidate: Model,
    iterations: usize,
    converged: bool,
) -> Result<(Model, BlockOutcome)> {
    let before = dataset_objective(data, current)?;
    let after = dataset_objective(data, &candidate)?;
    let (model, objective) = if after >= before {
        (candidate, after)
    } else {
        (current.clone(), before)
    };
    Ok((
        model,
        BlockOutcome {
            objective,
            iterations,
            converged,
        },
    ))
}

/// Trains a probabilistic prototype model.
///
/// Starts from k-means centers with Θ = 0 and alternates the Θ block and the
/// codebook block. The Θ block goes first because the codebook gradient is
/// identically zero at Θ = 0.
pub fn coordinate_ascent_train(
    data: &Dataset,
    tc: &TrainConfig,
    oc: &OptimizerConfig,
) -> Result<(Model, TrainReport)> {
    oc.validate()?;
    let (mut model, _) = initial_model(data, tc)?;
    let codebook_cfg = OptimizerConfig {
        max_iterations: tc.codebook_max_iterations.unwrap_or(oc.max_iterations),
        ..*oc
    };

    let mut trace = vec![dataset_objective(data, &model)?];
    let mut converged = false;
    let mut rounds = 0;
    while rounds < tc.rounds {
        let start = *trace.last().expect("trace is never empty");
        let (next, outcome) = optimize_theta_block(data, &model, oc)?;
        trace.push(outcome.objective);
        let (next, outcome) = optimize_codebook_block(data, &next, &codebook_cfg)?;
        trace.push(outcome.objective);
        model = next;
        rounds += 1;
        log::info!("round {rounds}: objective {}", outcome.objective);
        if outcome.objective - start < ROUND_TOLERANCE * start.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    Ok((
        model,
        TrainReport {
            objective_trace: trace,
            rounds,
            converged,
        },
    ))
}
