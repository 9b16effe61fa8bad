//! Line-delimited dataset files and single-object model files.
//!
//! A dataset file starts with a header `{"D":<int>,"C":<int>}`; every further
//! line is `{"id":..,"features":[[..],..],"label":[..]}`. A model file is one
//! object with keys `K, D, C, centers, beta, theta, lambda`. Floats are
//! written in shortest round-trip form, so save/load is lossless.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::{Model, Weights};
use crate::error::{Error, Result};
use crate::types::{Codebook, Dataset, EncodeMode, FeatureSet, Instance, SoftLabel};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    #[serde(rename = "D")]
    dim: usize,
    #[serde(rename = "C")]
    classes: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    id: String,
    features: Vec<Vec<f64>>,
    label: Vec<f64>,
}

fn is_soft(mode: &EncodeMode) -> bool {
    *mode == EncodeMode::Soft
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "D")]
    dim: usize,
    #[serde(rename = "C")]
    classes: usize,
    centers: Vec<Vec<f64>>,
    beta: f64,
    theta: Vec<Vec<f64>>,
    lambda: f64,
    #[serde(default, skip_serializing_if = "is_soft", with = "mode_serde")]
    mode: EncodeMode,
    #[serde(default, skip_serializing_if = "is_zero")]
    beta_penalty: f64,
}

mod mode_serde {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    use crate::types::EncodeMode;

    pub fn serialize<S: Serializer>(mode: &EncodeMode, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(match mode {
            EncodeMode::Soft => "soft",
            EncodeMode::Hard => "hard",
        })
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<EncodeMode, D::Error> {
        match String::deserialize(d)?.as_str() {
            "soft" => Ok(EncodeMode::Soft),
            "hard" => Ok(EncodeMode::Hard),
            other => Err(D::Error::custom(format!("unknown encoding mode {other:?}"))),
        }
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Writes `data` in the line-delimited format.
pub fn write_dataset<W: Write>(data: &Dataset, mut out: W) -> std::io::Result<()> {
    let header = Header {
        dim: data.dim(),
        classes: data.classes(),
    };
    writeln!(out, "{}", serde_json::to_string(&header)?)?;
    for inst in data.instances() {
        let record = Record {
            id: inst.id.clone(),
            features: inst.features.vectors().to_vec(),
            label: inst.label.probs().to_vec(),
        };
        writeln!(out, "{}", serde_json::to_string(&record)?)?;
    }
    Ok(())
}

/// Parses the line-delimited format. `path` only labels error messages.
pub fn read_dataset<R: BufRead>(input: R, path: &Path) -> Result<Dataset> {
    let mut header: Option<Header> = None;
    let mut instances = Vec::new();
    for (index, line) in input.lines().enumerate() {
        let line_no = index + 1;
        let line = line.map_err(io_error(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let Some(h) = &header else {
            let parsed: Header = serde_json::from_str(&line)
                .map_err(|e| parse_error(path, line_no, format!("bad header: {e}")))?;
            if parsed.dim == 0 || parsed.classes < 2 {
                return Err(parse_error(path, line_no, "header needs D >= 1 and C >= 2"));
            }
            header = Some(parsed);
            continue;
        };
        let record: Record = serde_json::from_str(&line)
            .map_err(|e| parse_error(path, line_no, format!("bad record: {e}")))?;
        if record.features.is_empty() {
            return Err(parse_error(path, line_no, "empty feature set"));
        }
        if let Some((row, v)) = record
            .features
            .iter()
            .enumerate()
            .find(|(_, v)| v.len() != h.dim)
        {
            return Err(parse_error(
                path,
                line_no,
                format!(
                    "dimension mismatch: feature row {row} has {} values, expected {}",
                    v.len(),
                    h.dim
                ),
            ));
        }
        if record.label.len() != h.classes {
            return Err(parse_error(
                path,
                line_no,
                format!(
                    "dimension mismatch: label has {} entries, expected {}",
                    record.label.len(),
                    h.classes
                ),
            ));
        }
        let features = FeatureSet::new(record.features)
            .map_err(|e| parse_error(path, line_no, e.to_string()))?;
        let label =
            SoftLabel::new(record.label).map_err(|e| parse_error(path, line_no, e.to_string()))?;
        instances.push(Instance::new(record.id, features, label));
    }
    let header = header.ok_or_else(|| parse_error(path, 1, "missing header line"))?;
    if instances.is_empty() {
        return Err(parse_error(path, 2, "dataset has no instances"));
    }
    Dataset::new(header.dim, header.classes, instances)
}

pub fn save_dataset(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_error(path))?;
    let mut out = BufWriter::new(file);
    write_dataset(data, &mut out).map_err(io_error(path))?;
    out.flush().map_err(io_error(path))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_error(path))?;
    read_dataset(BufReader::new(file), path)
}

/// Serializes a model to its single-line JSON object.
pub fn model_to_string(m: &Model) -> String {
    let file = ModelFile {
        k: m.k(),
        dim: m.dim(),
        classes: m.classes(),
        centers: m.codebook.centers().to_vec(),
        beta: m.codebook.beta(),
        theta: m.weights.theta().to_vec(),
        lambda: m.weights.lambda(),
        mode: m.mode,
        beta_penalty: m.beta_penalty,
    };
    serde_json::to_string(&file).expect("model fields are serializable")
}

/// Parses and validates a model object.
pub fn model_from_str(text: &str, path: &Path) -> Result<Model> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| parse_error(path, e.line(), e.to_string()))?;
    let shape = |msg: String| parse_error(path, 1, msg);
    if file.centers.len() != file.k {
        return Err(shape(format!(
            "K = {} but {} centers",
            file.k,
            file.centers.len()
        )));
    }
    if let Some(c) = file.centers.iter().find(|c| c.len() != file.dim) {
        return Err(shape(format!(
            "D = {} but a center has {} values",
            file.dim,
            c.len()
        )));
    }
    if file.theta.len() != file.classes {
        return Err(shape(format!(
            "C = {} but theta has {} rows",
            file.classes,
            file.theta.len()
        )));
    }
    if let Some(row) = file.theta.iter().find(|r| r.len() != file.k) {
        return Err(shape(format!(
            "K = {} but a theta row has {} values",
            file.k,
            row.len()
        )));
    }
    let build = || -> Result<Model> {
        let codebook = Codebook::new(file.centers, file.beta)?;
        let weights = Weights::new(file.theta, file.lambda)?;
        Model::new(codebook, weights)?
            .with_mode(file.mode)
            .with_beta_penalty(file.beta_penalty)
    };
    build().map_err(|e| shape(e.to_string()))
}

pub fn save_model(m: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model_to_string(m) + "\n").map_err(io_error(path))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_error(path))?;
    model_from_str(&text, path)
}
