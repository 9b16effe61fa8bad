//! Analytic derivatives of the regularized objective and a central
//! finite-difference checker for them.
//!
//! Derivatives with respect to a center μℓ flow through the pooled encoding:
//! ∂Lⁿ/∂μℓ = Σₖ gₖ ∂zₖ/∂μℓ with g = ∇_z Lⁿ. The pooling weight 1/Mₙ is
//! carried through every encoding derivative so they match the encoder.

use crate::classifier::{dataset_objective, encode_dataset, posterior_unchecked, Model, Weights};
use crate::encoding::{soft_from_distances, squared_distances};
use crate::error::{check_dim, Error, Result};
use crate::types::{Codebook, Dataset, EncodeMode, Encoding, FeatureSet, Instance, SoftLabel};

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// All partial derivatives of the objective.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    /// K×D, row ℓ is ∇_{μℓ} L.
    pub d_centers: Vec<Vec<f64>>,
    pub d_beta: f64,
    /// C×K, including the regularizer.
    pub d_theta: Vec<Vec<f64>>,
}

/// Derivatives of one pooled encoding with respect to the codebook.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingJacobian {
    /// Indexed `[k][l][d]`: ∂zₖ/∂μℓ_d.
    pub d_centers: Vec<Vec<Vec<f64>>>,
    /// ∂zₖ/∂β.
    pub d_beta: Vec<f64>,
}

/// Codebook block of the gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct CodebookGradient {
    pub d_centers: Vec<Vec<f64>>,
    pub d_beta: f64,
    /// ∂L/∂(ln β) = β·∂L/∂β, used when optimizing in log space.
    pub d_log_beta: f64,
}

/// g = Σⱼ (P̃ⱼ − σʲ) θʲ, the gradient of the instance log-likelihood in z.
pub fn grad_wrt_encoding(z: &Encoding, label: &SoftLabel, w: &Weights) -> Result<Vec<f64>> {
    check_dim("encoding vs weights", w.k(), z.len())?;
    check_dim("label vs weights", w.classes(), label.classes())?;
    Ok(encoding_gradient_unchecked(z.as_slice(), label.probs(), w))
}

fn encoding_gradient_unchecked(z: &[f64], label: &[f64], w: &Weights) -> Vec<f64> {
    let sigma = posterior_unchecked(z, w);
    let mut g = vec![0.0; w.k()];
    for ((row, p), s) in w.theta().iter().zip(label).zip(&sigma) {
        let residual = p - s;
        for (gk, t) in g.iter_mut().zip(row) {
            *gk += residual * t;
        }
    }
    g
}

/// Full Jacobian of the soft encoding of `s` with respect to centers and β.
pub fn encoding_jacobian(s: &FeatureSet, cb: &Codebook) -> Result<EncodingJacobian> {
    if s.is_empty() {
        return Err(Error::EmptyFeatureSet);
    }
    check_dim("feature set vs codebook", cb.dim(), s.dim())?;
    let (k, dim, beta) = (cb.len(), cb.dim(), cb.beta());
    let weight = 1.0 / s.len() as f64;
    let mut d_centers = vec![vec![vec![0.0; dim]; k]; k];
    let mut d_beta = vec![0.0; k];
    for x in s.vectors() {
        let d2 = squared_distances(x, cb);
        let f = soft_from_distances(&d2, beta);
        let mean_d2: f64 = f.iter().zip(&d2).map(|(a, b)| a * b).sum();
        for kk in 0..k {
            d_beta[kk] += weight * f[kk] * (mean_d2 - d2[kk]);
            for (l, center) in cb.centers().iter().enumerate() {
                // ∂fₖ/∂μℓ = 2β fₖ (δₖℓ − fℓ)(x − μℓ)
                let indicator = if kk == l { 1.0 } else { 0.0 };
                let scale = weight * 2.0 * beta * f[kk] * (indicator - f[l]);
                for ((out, xd), md) in d_centers[kk][l].iter_mut().zip(x).zip(center) {
                    *out += scale * (xd - md);
                }
            }
        }
    }
    Ok(EncodingJacobian { d_centers, d_beta })
}

/// Accumulates Σₖ gₖ ∂zₖ/∂μℓ and Σₖ gₖ ∂zₖ/∂β for one instance into the
/// output buffers, using the contracted form of the encoding Jacobian.
fn accumulate_codebook_terms(
    s: &FeatureSet,
    cb: &Codebook,
    g: &[f64],
    d_centers: &mut [Vec<f64>],
    d_beta: &mut f64,
) {
    let beta = cb.beta();
    let weight = 1.0 / s.len() as f64;
    for x in s.vectors() {
        let d2 = squared_distances(x, cb);
        let f = soft_from_distances(&d2, beta);
        let g_bar: f64 = g.iter().zip(&f).map(|(a, b)| a * b).sum();
        let mean_d2: f64 = f.iter().zip(&d2).map(|(a, b)| a * b).sum();
        for (l, center) in cb.centers().iter().enumerate() {
            let scale = weight * 2.0 * beta * f[l] * (g[l] - g_bar);
            for ((out, xd), md) in d_centers[l].iter_mut().zip(x).zip(center) {
                *out += scale * (xd - md);
            }
        }
        *d_beta += weight
            * g.iter()
                .zip(&f)
                .zip(&d2)
                .map(|((gk, fk), dk)| gk * fk * (mean_d2 - dk))
                .sum::<f64>();
    }
}

/// Gradient of a single instance's log-likelihood with respect to the
/// centers and β (no regularizer).
pub fn instance_codebook_gradient(inst: &Instance, m: &Model) -> Result<(Vec<Vec<f64>>, f64)> {
    if m.mode != EncodeMode::Soft {
        return Err(Error::HardModeGradient);
    }
    check_dim("instance features vs model", m.dim(), inst.features.dim())?;
    check_dim("instance label vs model", m.classes(), inst.label.classes())?;
    let z = crate::encoding::encode_instance(&inst.features, &m.codebook, EncodeMode::Soft)?;
    let g = encoding_gradient_unchecked(z.as_slice(), inst.label.probs(), &m.weights);
    let mut d_centers = vec![vec![0.0; m.dim()]; m.k()];
    let mut d_beta = 0.0;
    accumulate_codebook_terms(&inst.features, &m.codebook, &g, &mut d_centers, &mut d_beta);
    Ok((d_centers, d_beta))
}

/// Gradient of the objective with respect to the centers and β.
pub fn grad_codebook(data: &Dataset, m: &Model) -> Result<CodebookGradient> {
    if m.mode != EncodeMode::Soft {
        return Err(Error::HardModeGradient);
    }
    m.check_data(data)?;
    let encodings = encode_dataset(data, &m.codebook, EncodeMode::Soft)?;
    let mut d_centers = vec![vec![0.0; m.dim()]; m.k()];
    let mut d_beta = 0.0;
    for (inst, z) in data.instances().iter().zip(&encodings) {
        let g = encoding_gradient_unchecked(z.as_slice(), inst.label.probs(), &m.weights);
        accumulate_codebook_terms(&inst.features, &m.codebook, &g, &mut d_centers, &mut d_beta);
    }
    let beta = m.codebook.beta();
    // d/dβ of −γ (ln β)²
    d_beta -= 2.0 * m.beta_penalty * beta.ln() / beta;
    Ok(CodebookGradient {
        d_centers,
        d_beta,
        d_log_beta: beta * d_beta,
    })
}

/// Row i: Σₙ (P̃ᵢⁿ − σᵢⁿ) zⁿ − 2λθⁱ.
pub fn grad_theta(data: &Dataset, m: &Model) -> Result<Vec<Vec<f64>>> {
    m.check_data(data)?;
    let encodings = encode_dataset(data, &m.codebook, m.mode)?;
    let labels: Vec<&[f64]> = data.instances().iter().map(|i| i.label.probs()).collect();
    Ok(theta_gradient_from_encodings(
        &encodings, &labels, &m.weights,
    ))
}

/// Θ gradient for fixed, precomputed encodings.
pub(crate) fn theta_gradient_from_encodings(
    encodings: &[Encoding],
    labels: &[&[f64]],
    w: &Weights,
) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = w
        .theta()
        .iter()
        .map(|row| row.iter().map(|t| -2.0 * w.lambda() * t).collect())
        .collect();
    for (z, label) in encodings.iter().zip(labels) {
        let sigma = posterior_unchecked(z.as_slice(), w);
        for ((row, p), s) in out.iter_mut().zip(label.iter()).zip(&sigma) {
            let residual = p - s;
            for (o, zk) in row.iter_mut().zip(z.as_slice()) {
                *o += residual * zk;
            }
        }
    }
    out
}

/// The complete analytic gradient.
pub fn gradient(data: &Dataset, m: &Model) -> Result<GradientBundle> {
    let cb = grad_codebook(data, m)?;
    Ok(GradientBundle {
        d_centers: cb.d_centers,
        d_beta: cb.d_beta,
        d_theta: grad_theta(data, m)?,
    })
}

/// Worst relative disagreement between analytic and numerical derivatives.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FiniteDiffReport {
    pub centers: f64,
    pub beta: f64,
    pub theta: f64,
    pub step: f64,
}

impl FiniteDiffReport {
    pub fn max_error(&self) -> f64 {
        self.centers.max(self.beta).max(self.theta)
    }

    pub fn within(&self, tolerance: f64) -> bool {
        self.max_error() <= tolerance
    }
}

/// |a − b| / max(1, |a|, |b|)
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

/// Checks the analytic gradient of `m` against central differences.
pub fn finite_diff_check(data: &Dataset, m: &Model, step: f64) -> Result<FiniteDiffReport> {
    let analytic = gradient(data, m)?;
    compare_to_finite_differences(data, m, &analytic, step)
}

/// Checks an arbitrary gradient bundle against central differences of the
/// objective at `m`.
pub fn compare_to_finite_differences(
    data: &Dataset,
    m: &Model,
    analytic: &GradientBundle,
    step: f64,
) -> Result<FiniteDiffReport> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "step must be positive, got {step}"
        )));
    }
    let central = |plus: &Model, minus: &Model| -> Result<f64> {
        Ok((dataset_objective(data, plus)? - dataset_objective(data, minus)?) / (2.0 * step))
    };

    let mut centers_err: f64 = 0.0;
    for l in 0..m.k() {
        for d in 0..m.dim() {
            let shifted = |delta: f64| -> Result<Model> {
                let mut centers = m.codebook.centers().to_vec();
                centers[l][d] += delta;
                let mut out = m.clone();
                out.codebook = Codebook::new(centers, m.codebook.beta())?;
                Ok(out)
            };
            let fd = central(&shifted(step)?, &shifted(-step)?)?;
            centers_err = centers_err.max(relative_error(analytic.d_centers[l][d], fd));
        }
    }

    let with_beta = |beta: f64| -> Result<Model> {
        let mut out = m.clone();
        out.codebook = Codebook::new(m.codebook.centers().to_vec(), beta)?;
        Ok(out)
    };
    let beta = m.codebook.beta();
    let fd_beta = central(&with_beta(beta + step)?, &with_beta(beta - step)?)?;
    let beta_err = relative_error(analytic.d_beta, fd_beta);

    let mut theta_err: f64 = 0.0;
    for i in 0..m.classes() {
        for k in 0..m.k() {
            let shifted = |delta: f64| -> Result<Model> {
                let mut theta = m.weights.theta().to_vec();
                theta[i][k] += delta;
                let mut out = m.clone();
                out.weights = Weights::new(theta, m.weights.lambda())?;
                Ok(out)
            };
            let fd = central(&shifted(step)?, &shifted(-step)?)?;
            theta_err = theta_err.max(relative_error(analytic.d_theta[i][k], fd));
        }
    }

    Ok(FiniteDiffReport {
        centers: centers_err,
        beta: beta_err,
        theta: theta_err,
        step,
    })
}
