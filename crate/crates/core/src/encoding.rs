//! Prototype encoders.
//!
//! A feature vector is mapped to a K-vector of assignment weights, either
//! winner-takes-all against the nearest center or a normalized exponential
//! of the negative scaled squared distances. An instance is encoded by
//! averaging those weights over its feature set.

use crate::error::{check_dim, Error, Result};
use crate::types::{squared_distance, Codebook, EncodeMode, Encoding, FeatureSet};

/// Squared distances from `x` to every center.
pub(crate) fn squared_distances(x: &[f64], cb: &Codebook) -> Vec<f64> {
    cb.centers()
        .iter()
        .map(|c| squared_distance(c, x))
        .collect()
}

/// Soft assignment from precomputed squared distances, max-shifted.
pub(crate) fn soft_from_distances(d2: &[f64], beta: f64) -> Vec<f64> {
    let min = d2.iter().copied().fold(f64::INFINITY, f64::min);
    let mut f: Vec<f64> = d2.iter().map(|d| (-beta * (d - min)).exp()).collect();
    let total: f64 = f.iter().sum();
    for v in &mut f {
        *v /= total;
    }
    f
}

fn hard_from_distances(d2: &[f64]) -> Vec<f64> {
    let mut best = 0;
    for (k, d) in d2.iter().enumerate().skip(1) {
        if *d < d2[best] {
            best = k;
        }
    }
    let mut f = vec![0.0; d2.len()];
    f[best] = 1.0;
    f
}

fn check_vector(x: &[f64], cb: &Codebook) -> Result<()> {
    check_dim("feature vector vs codebook", cb.dim(), x.len())?;
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("feature vector"))
    }
}

/// Probability that `x` belongs to each prototype.
pub fn soft_assign(x: &[f64], cb: &Codebook) -> Result<Vec<f64>> {
    check_vector(x, cb)?;
    Ok(soft_from_distances(&squared_distances(x, cb), cb.beta()))
}

/// One-hot indicator of the nearest center; ties go to the lowest index.
pub fn hard_assign(x: &[f64], cb: &Codebook) -> Result<Vec<f64>> {
    check_vector(x, cb)?;
    Ok(hard_from_distances(&squared_distances(x, cb)))
}

/// Mean-pooled assignment over every vector in `s`.
pub fn encode_instance(s: &FeatureSet, cb: &Codebook, mode: EncodeMode) -> Result<Encoding> {
    if s.is_empty() {
        return Err(Error::EmptyFeatureSet);
    }
    check_dim("feature set vs codebook", cb.dim(), s.dim())?;
    let weight = 1.0 / s.len() as f64;
    let mut z = vec![0.0; cb.len()];
    for x in s.vectors() {
        let d2 = squared_distances(x, cb);
        let f = match mode {
            EncodeMode::Soft => soft_from_distances(&d2, cb.beta()),
            EncodeMode::Hard => hard_from_distances(&d2),
        };
        for (zk, fk) in z.iter_mut().zip(&f) {
            *zk += weight * fk;
        }
    }
    Ok(Encoding(z))
}
