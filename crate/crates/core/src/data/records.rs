//! Grouping discrete records into instances with empirical soft labels.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::types::{Dataset, FeatureSet, Instance, SoftLabel};

/// One record: integer attribute codes and a class value in `1..=C`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub attributes: Vec<u32>,
    pub class: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordTable {
    attribute_arities: Vec<u32>,
    classes: usize,
    rows: Vec<Record>,
}

impl RecordTable {
    pub fn new(attribute_arities: Vec<u32>, classes: usize, rows: Vec<Record>) -> Result<Self> {
        if attribute_arities.is_empty() {
            return Err(Error::InvalidParameter(
                "records need at least one attribute".into(),
            ));
        }
        if classes < 2 {
            return Err(Error::InvalidParameter(
                "records need at least 2 classes".into(),
            ));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.attributes.len() != attribute_arities.len() {
                return Err(Error::InvalidParameter(format!(
                    "row {i} has {} attributes, expected {}",
                    row.attributes.len(),
                    attribute_arities.len()
                )));
            }
            if let Some((a, code)) = row
                .attributes
                .iter()
                .enumerate()
                .find(|(a, code)| **code >= attribute_arities[*a])
            {
                return Err(Error::InvalidParameter(format!(
                    "row {i}: attribute {a} code {code} exceeds arity {}",
                    attribute_arities[a]
                )));
            }
            if !(1..=classes).contains(&row.class) {
                return Err(Error::InvalidParameter(format!(
                    "row {i}: class {} outside 1..={classes}",
                    row.class
                )));
            }
        }
        Ok(Self {
            attribute_arities,
            classes,
            rows,
        })
    }

    pub fn rows(&self) -> &[Record] {
        &self.rows
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn attribute_arities(&self) -> &[u32] {
        &self.attribute_arities
    }
}

/// One instance per distinct attribute tuple, in order of first appearance.
///
/// Each row of a group contributes one feature vector holding its attribute
/// codes; the label is the class frequency within the group.
pub fn group_records_to_soft_labels(t: &RecordTable) -> Result<Dataset> {
    if t.rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut index: HashMap<&[u32], usize> = HashMap::new();
    let mut groups: Vec<(&[u32], Vec<usize>)> = Vec::new();
    for row in &t.rows {
        let slot = *index.entry(&row.attributes).or_insert_with(|| {
            groups.push((&row.attributes, vec![0; t.classes]));
            groups.len() - 1
        });
        groups[slot].1[row.class - 1] += 1;
    }
    let instances = groups
        .into_iter()
        .enumerate()
        .map(|(g, (key, counts))| {
            let size: usize = counts.iter().sum();
            let vector: Vec<f64> = key.iter().map(|&c| f64::from(c)).collect();
            let label = counts.iter().map(|&c| c as f64 / size as f64).collect();
            Ok(Instance::new(
                format!("g{g}"),
                FeatureSet::new(vec![vector; size])?,
                SoftLabel::new(label)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(t.attribute_arities.len(), t.classes, instances)
}
