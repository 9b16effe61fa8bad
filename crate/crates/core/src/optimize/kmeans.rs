//! Lloyd's k-means over the pooled feature vectors of a dataset.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::types::{squared_distance, Dataset, FeatureVector};

const MAX_LLOYD_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centers: Vec<FeatureVector>,
    /// Within-cluster sum of squared distances.
    pub wcss: f64,
    /// Set when there were fewer distinct points than clusters and the
    /// centers were padded with duplicates.
    pub degenerate: bool,
}

/// Clusters every feature vector of every instance into `k` centers.
pub fn kmeans_init(data: &Dataset, k: usize, seed: u64, restarts: usize) -> Result<KMeansResult> {
    let points: Vec<FeatureVector> = data
        .instances()
        .iter()
        .flat_map(|inst| inst.features.vectors().iter().cloned())
        .collect();
    kmeans_points(&points, k, seed, restarts)
}

/// k-means on an explicit point list.
pub fn kmeans_points(
    points: &[FeatureVector],
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<KMeansResult> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if points.len() < k {
        return Err(Error::InvalidParameter(format!(
            "{} feature vectors cannot seed {k} clusters",
            points.len()
        )));
    }

    let distinct = distinct_points(points);
    if distinct.len() <= k {
        let degenerate = distinct.len() < k;
        if degenerate {
            log::warn!(
                "only {} distinct feature vectors for {k} clusters; padding with duplicates",
                distinct.len()
            );
        }
        let centers: Vec<FeatureVector> = (0..k)
            .map(|i| distinct[i % distinct.len()].clone())
            .collect();
        let wcss = total_wcss(points, &centers);
        return Ok(KMeansResult {
            centers,
            wcss,
            degenerate,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..restarts.max(1) {
        let start = rng.random_range(0..points.len());
        let centers = lloyd(points, farthest_point_seeds(points, k, start));
        let wcss = total_wcss(points, &centers);
        if best.as_ref().is_none_or(|b| wcss < b.wcss) {
            best = Some(KMeansResult {
                centers,
                wcss,
                degenerate: false,
            });
        }
    }
    Ok(best.expect("at least one restart"))
}

fn distinct_points(points: &[FeatureVector]) -> Vec<FeatureVector> {
    let mut seen = HashSet::new();
    points
        .iter()
        // adding 0.0 folds -0.0 into 0.0
        .filter(|p| seen.insert(p.iter().map(|v| (v + 0.0).to_bits()).collect::<Vec<_>>()))
        .cloned()
        .collect()
}

fn nearest(point: &[f64], centers: &[FeatureVector]) -> (usize, f64) {
    let mut best = (0, squared_distance(point, &centers[0]));
    for (j, c) in centers.iter().enumerate().skip(1) {
        let d = squared_distance(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn total_wcss(points: &[FeatureVector], centers: &[FeatureVector]) -> f64 {
    points.iter().map(|p| nearest(p, centers).1).sum()
}

/// Greedy farthest-point traversal from `start`; ties go to the lowest index.
fn farthest_point_seeds(points: &[FeatureVector], k: usize, start: usize) -> Vec<FeatureVector> {
    let mut centers = vec![points[start].clone()];
    let mut min_d: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &points[start]))
        .collect();
    while centers.len() < k {
        let mut pick = 0;
        for (i, d) in min_d.iter().enumerate() {
            if *d > min_d[pick] {
                pick = i;
            }
        }
        let chosen = points[pick].clone();
        for (d, p) in min_d.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, &chosen));
        }
        centers.push(chosen);
    }
    centers
}

fn lloyd(points: &[FeatureVector], mut centers: Vec<FeatureVector>) -> Vec<FeatureVector> {
    let (k, dim) = (centers.len(), centers[0].len());
    let mut assignment: Vec<usize> = vec![usize::MAX; points.len()];
    for _ in 0..MAX_LLOYD_ITERATIONS {
        let mut changed = false;
        let mut dist = vec![0.0; points.len()];
        for (i, p) in points.iter().enumerate() {
            let (j, d) = nearest(p, &centers);
            dist[i] = d;
            if assignment[i] != j {
                assignment[i] = j;
                changed = true;
            }
        }
        if !changed {
            break;
        }

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &j) in points.iter().zip(&assignment) {
            counts[j] += 1;
            for (s, v) in sums[j].iter_mut().zip(p) {
                *s += v;
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                centers[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
                continue;
            }
            // empty cluster: take the point farthest from its own center
            let mut far = 0;
            for (i, d) in dist.iter().enumerate() {
                if *d > dist[far] {
                    far = i;
                }
            }
            log::debug!("reseeding empty cluster {j} at point {far}");
            centers[j] = points[far].clone();
            dist[far] = 0.0;
            assignment[far] = usize::MAX;
        }
    }
    centers
}
