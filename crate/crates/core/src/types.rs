//! Domain types shared across the crate.
//!
//! Every constructor validates its invariants, so a value of one of these
//! types can be used without re-checking finiteness or shape.

use crate::error::{check_dim, Error, Result};

/// Tolerance on the sum of a soft label.
pub const LABEL_SUM_TOLERANCE: f64 = 1e-9;

/// A single D-dimensional feature vector.
pub type FeatureVector = Vec<f64>;

/// The set of feature vectors describing one input.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    vectors: Vec<FeatureVector>,
    dim: usize,
}

impl FeatureSet {
    pub fn new(vectors: Vec<FeatureVector>) -> Result<Self> {
        let first = vectors.first().ok_or(Error::EmptyFeatureSet)?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "feature vectors must have at least one coordinate".into(),
            ));
        }
        for v in &vectors {
            check_dim("feature vector", dim, v.len())?;
            if !v.iter().all(|x| x.is_finite()) {
                return Err(Error::NonFinite("feature vector"));
            }
        }
        Ok(Self { vectors, dim })
    }

    pub fn vectors(&self) -> &[FeatureVector] {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    /// Always false; a feature set holds at least one vector.
    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// A probability distribution over C classes.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabel(Vec<f64>);

impl SoftLabel {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidLabel(format!(
                "need at least 2 classes, got {}",
                probs.len()
            )));
        }
        if let Some(p) = probs
            .iter()
            .find(|p| !p.is_finite() || **p < 0.0 || **p > 1.0)
        {
            return Err(Error::InvalidLabel(format!("entry {p} outside [0, 1]")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > LABEL_SUM_TOLERANCE {
            return Err(Error::InvalidLabel(format!("entries sum to {sum}")));
        }
        Ok(Self(probs))
    }

    pub fn one_hot(class: usize, classes: usize) -> Result<Self> {
        if class >= classes {
            return Err(Error::InvalidParameter(format!(
                "class index {class} out of range for {classes} classes"
            )));
        }
        let mut probs = vec![0.0; classes];
        probs[class] = 1.0;
        Self::new(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn classes(&self) -> usize {
        self.0.len()
    }

    /// Index of the most probable class, lowest index on ties.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }

    /// The class index if this label puts all of its mass on one class.
    pub fn hard_class(&self) -> Option<usize> {
        let k = self.argmax();
        (self.0[k] == 1.0).then_some(k)
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self
            .0
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|p| p * p.ln())
            .sum::<f64>()
    }
}

/// One datapoint: a feature set and its soft label.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: String,
    pub features: FeatureSet,
    pub label: SoftLabel,
}

impl Instance {
    pub fn new(id: impl Into<String>, features: FeatureSet, label: SoftLabel) -> Self {
        Self {
            id: id.into(),
            features,
            label,
        }
    }
}

/// A collection of instances sharing feature dimension and class count.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    instances: Vec<Instance>,
    dim: usize,
    classes: usize,
}

impl Dataset {
    pub fn new(dim: usize, classes: usize, instances: Vec<Instance>) -> Result<Self> {
        if instances.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for inst in &instances {
            check_dim("instance features", dim, inst.features.dim())?;
            check_dim("instance label", classes, inst.label.classes())?;
        }
        Ok(Self {
            instances,
            dim,
            classes,
        })
    }

    /// Builds a dataset taking D and C from the first instance.
    pub fn from_instances(instances: Vec<Instance>) -> Result<Self> {
        let first = instances.first().ok_or(Error::EmptyDataset)?;
        let (dim, classes) = (first.features.dim(), first.label.classes());
        Self::new(dim, classes, instances)
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn into_instances(self) -> Vec<Instance> {
        self.instances
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Total number of feature vectors across all instances.
    pub fn vector_count(&self) -> usize {
        self.instances.iter().map(|i| i.features.len()).sum()
    }

    /// Concatenates two conformable datasets.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        let mut instances = self.instances.clone();
        instances.extend(other.instances.iter().cloned());
        Dataset::new(self.dim, self.classes, instances)
    }
}

/// Prototype centers and the assignment rate parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    centers: Vec<FeatureVector>,
    beta: f64,
}

impl Codebook {
    pub fn new(centers: Vec<FeatureVector>, beta: f64) -> Result<Self> {
        let first = centers
            .first()
            .ok_or_else(|| Error::InvalidParameter("codebook needs at least one center".into()))?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::InvalidParameter("centers must be non-empty".into()));
        }
        for c in &centers {
            check_dim("codebook center", dim, c.len())?;
            if !c.iter().all(|x| x.is_finite()) {
                return Err(Error::NonFinite("codebook center"));
            }
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must be finite and positive, got {beta}"
            )));
        }
        Ok(Self { centers, beta })
    }

    pub fn centers(&self) -> &[FeatureVector] {
        &self.centers
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.centers[0].len()
    }
}

/// Pooled K-dimensional representation of a feature set.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoding(pub Vec<f64>);

impl Encoding {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// How feature vectors are assigned to prototypes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EncodeMode {
    /// Normalized exponential of negative scaled squared distances.
    #[default]
    Soft,
    /// Winner-takes-all nearest center.
    Hard,
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
