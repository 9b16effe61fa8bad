//! Stratified train/test splitting.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::types::Dataset;

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    /// Classes whose stratum had a single instance; those went to train.
    pub singleton_strata: Vec<usize>,
}

/// Splits `data` so each class (argmax of the label) contributes `fraction`
/// of its instances to train.
///
/// Per-class counts are rounded with the largest-remainder rule so the total
/// train size is `round(fraction · N)` over the splittable strata. Instances
/// keep their original relative order on both sides.
pub fn stratified_split(data: &Dataset, fraction: f64, seed: u64) -> Result<Split> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "split fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let mut strata: Vec<Vec<usize>> = vec![Vec::new(); data.classes()];
    for (i, inst) in data.instances().iter().enumerate() {
        strata[inst.label.argmax()].push(i);
    }

    let mut in_train = vec![false; data.len()];
    let mut singleton_strata = Vec::new();
    let mut quotas: Vec<(usize, usize, f64)> = Vec::new();
    for (class, members) in strata.iter().enumerate() {
        match members.len() {
            0 => {}
            1 => {
                log::warn!("class {class} has a single instance; assigning it to train");
                singleton_strata.push(class);
                in_train[members[0]] = true;
            }
            n => {
                let exact = fraction * n as f64;
                quotas.push((class, exact.floor() as usize, exact - exact.floor()));
            }
        }
    }
    let eligible: usize = quotas.iter().map(|(c, _, _)| strata[*c].len()).sum();
    let target = (fraction * eligible as f64).round() as usize;
    let floors: usize = quotas.iter().map(|(_, f, _)| f).sum();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    // stable sort keeps lower classes first among equal remainders
    order.sort_by(|a, b| quotas[*b].2.total_cmp(&quotas[*a].2));
    for &q in order.iter().take(target.saturating_sub(floors)) {
        quotas[q].1 += 1;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (class, count, _) in &quotas {
        let mut members = strata[*class].clone();
        members.shuffle(&mut rng);
        for &i in &members[..*count] {
            in_train[i] = true;
        }
    }

    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (inst, &t) in data.instances().iter().zip(&in_train) {
        if t {
            train.push(inst.clone())
        } else {
            test.push(inst.clone())
        }
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "split fraction {fraction} leaves one side empty"
        )));
    }
    Ok(Split {
        train: Dataset::new(data.dim(), data.classes(), train)?,
        test: Dataset::new(data.dim(), data.classes(), test)?,
        singleton_strata,
    })
}
