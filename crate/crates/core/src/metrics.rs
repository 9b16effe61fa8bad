//! Held-out evaluation: accuracy, mean log-likelihood and KL divergence.

use serde::{Deserialize, Serialize};

use crate::classifier::{encode_dataset, loglik_unchecked, posterior_unchecked, Model, Posterior};
use crate::error::{check_dim, Result};
use crate::types::{argmax, Dataset, SoftLabel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub mean_test_loglik: f64,
    pub mean_kl_bits: f64,
}

/// KL(p ‖ q) in bits. Terms with `p_j = 0` contribute nothing.
pub fn kl_divergence_bits(p: &[f64], q: &[f64]) -> Result<f64> {
    check_dim("kl divergence", p.len(), q.len())?;
    Ok(p.iter()
        .zip(q)
        .filter(|(pj, _)| **pj > 0.0)
        .map(|(pj, qj)| pj * (pj / qj).log2())
        .sum())
}

/// Mean KL in bits between each label and the matching predicted distribution.
pub fn mean_kl_bits(labels: &[SoftLabel], predicted: &[Vec<f64>]) -> Result<f64> {
    check_dim("labels vs predictions", labels.len(), predicted.len())?;
    if labels.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (label, q) in labels.iter().zip(predicted) {
        total += kl_divergence_bits(label.probs(), q)?;
    }
    Ok(total / labels.len() as f64)
}

/// Class posteriors for every instance, in dataset order.
pub fn predict(data: &Dataset, m: &Model) -> Result<Vec<Posterior>> {
    m.check_data(data)?;
    let encodings = encode_dataset(data, &m.codebook, m.mode)?;
    Ok(encodings
        .iter()
        .map(|z| Posterior(posterior_unchecked(z.as_slice(), &m.weights)))
        .collect())
}

pub fn evaluate(data: &Dataset, m: &Model) -> Result<MetricsReport> {
    m.check_data(data)?;
    if data.is_empty() {
        return Err(crate::error::Error::EmptyDataset);
    }
    let encodings = encode_dataset(data, &m.codebook, m.mode)?;
    let (mut hits, mut loglik, mut kl) = (0usize, 0.0, 0.0);
    for (inst, z) in data.instances().iter().zip(&encodings) {
        let sigma = posterior_unchecked(z.as_slice(), &m.weights);
        if argmax(&sigma) == inst.label.argmax() {
            hits += 1;
        }
        loglik += loglik_unchecked(z.as_slice(), inst.label.probs(), &m.weights);
        kl += kl_divergence_bits(inst.label.probs(), &sigma)?;
    }
    let n = data.len() as f64;
    Ok(MetricsReport {
        accuracy: hits as f64 / n,
        mean_test_loglik: loglik / n,
        mean_kl_bits: kl / n,
    })
}
