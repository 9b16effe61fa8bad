//! Standard-prototype baseline and LVQ-style prototype updates.
//!
//! The LVQ update moves center ℓ by η Σₓ rℓ (μℓ − x), where
//! rℓ = θℓ^y − Σⱼ θℓ^j σʲ is the gap between the weight of the true class and
//! its posterior average. The sign is kept as written: a positive gap pushes
//! the center away from x, unlike classical LVQ1 attraction.

use crate::classifier::{posterior_unchecked, Model};
use crate::encoding::{encode_instance, soft_from_distances, squared_distances};
use crate::error::{check_dim, Error, Result};
use crate::optimize::{initial_model, optimize_theta_block, OptimizerConfig, TrainConfig};
use crate::types::{Dataset, EncodeMode, FeatureSet, Instance, SoftLabel};

/// k-means centers kept frozen, then a softmax fit on their encodings.
///
/// `mode` is [`EncodeMode::Hard`] for the standard bag-of-words pipeline;
/// [`EncodeMode::Soft`] gives the frozen-codebook soft-encoding ablation.
pub fn train_standard_prototype(
    data: &Dataset,
    tc: &TrainConfig,
    oc: &OptimizerConfig,
    mode: EncodeMode,
) -> Result<Model> {
    let (model, _) = initial_model(data, tc)?;
    let (model, _) = optimize_theta_block(data, &model.with_mode(mode), oc)?;
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LvqStepConfig {
    /// Learning rate η.
    pub eta: f64,
}

impl LvqStepConfig {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "learning rate must be nonnegative, got {eta}"
            )));
        }
        Ok(Self { eta })
    }
}

/// rₖ = θₖ^y − Σⱼ θₖ^j σʲ(z) for every prototype k.
fn class_gaps(m: &Model, s: &FeatureSet, class: usize, mode: EncodeMode) -> Result<Vec<f64>> {
    let z = encode_instance(s, &m.codebook, mode)?;
    let sigma = posterior_unchecked(z.as_slice(), &m.weights);
    let theta = m.weights.theta();
    Ok((0..m.k())
        .map(|k| {
            theta[class][k]
                - theta
                    .iter()
                    .zip(&sigma)
                    .map(|(row, p)| row[k] * p)
                    .sum::<f64>()
        })
        .collect())
}

fn require_hard(label: &SoftLabel, m: &Model) -> Result<usize> {
    check_dim("label vs model", m.classes(), label.classes())?;
    label
        .hard_class()
        .ok_or_else(|| Error::InvalidLabel("LVQ updates need a one-hot label".into()))
}

/// One LVQ update of center `l` for the feature set `s`.
pub fn lvq_update(
    m: &Model,
    s: &FeatureSet,
    label: &SoftLabel,
    l: usize,
    cfg: &LvqStepConfig,
) -> Result<Vec<f64>> {
    let class = require_hard(label, m)?;
    if l >= m.k() {
        return Err(Error::InvalidParameter(format!(
            "center index {l} out of range"
        )));
    }
    let gap = class_gaps(m, s, class, m.mode)?[l];
    let mut center = m.codebook.centers()[l].clone();
    let original = center.clone();
    for x in s.vectors() {
        for ((c, mu), xd) in center.iter_mut().zip(&original).zip(x) {
            *c += cfg.eta * gap * (mu - xd);
        }
    }
    Ok(center)
}

/// One relaxed-LVQ step on every center from a single hard-labeled instance.
///
/// Each center ℓ moves by
/// η Σₓ [ Σ_{k≠ℓ} rₖ fₖ(x) fℓ(x) (μℓ − x) + rℓ fℓ(x) (μℓ − x) ]
/// with soft assignments f. In the hard-assignment limit the cross terms
/// vanish and the winning center follows [`lvq_update`] exactly.
pub fn relaxed_lvq_gradient_step(m: &Model, inst: &Instance, eta: f64) -> Result<Vec<Vec<f64>>> {
    let class = require_hard(&inst.label, m)?;
    check_dim("instance features vs model", m.dim(), inst.features.dim())?;
    let gaps = class_gaps(m, &inst.features, class, EncodeMode::Soft)?;
    let centers = m.codebook.centers();
    let mut out = centers.to_vec();
    for x in inst.features.vectors() {
        let f = soft_from_distances(&squared_distances(x, &m.codebook), m.codebook.beta());
        for (l, center) in centers.iter().enumerate() {
            let cross: f64 = (0..m.k())
                .filter(|&k| k != l)
                .map(|k| gaps[k] * f[k] * f[l])
                .sum();
            let coefficient = eta * (cross + gaps[l] * f[l]);
            for ((o, mu), xd) in out[l].iter_mut().zip(center).zip(x) {
                *o += coefficient * (mu - xd);
            }
        }
    }
    Ok(out)
}

/// Applies [`lvq_update`] once per hard-labeled instance, in order, to the
/// center that wins most of the instance's vectors. Returns the updated
/// model and the number of instances skipped for having soft labels.
pub fn lvq_pass(m: &Model, data: &Dataset, cfg: &LvqStepConfig) -> Result<(Model, usize)> {
    m.check_data(data)?;
    let mut model = m.clone();
    let mut skipped = 0;
    for inst in data.instances() {
        if inst.label.hard_class().is_none() {
            skipped += 1;
            continue;
        }
        let z = encode_instance(&inst.features, &model.codebook, EncodeMode::Hard)?;
        let winner = crate::types::argmax(z.as_slice());
        let updated = lvq_update(&model, &inst.features, &inst.label, winner, cfg)?;
        let mut centers = model.codebook.centers().to_vec();
        centers[winner] = updated;
        model.codebook = crate::types::Codebook::new(centers, model.codebook.beta())?;
    }
    Ok((model, skipped))
}
