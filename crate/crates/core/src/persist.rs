//! Versioned model container: a JSON document holding the network weights,
//! the fitted standardizer, and the feature subset, preceded by a magic tag
//! and format version. `f64` values round-trip exactly through serde_json's
//! shortest-representation float encoding; the layout is documented in
//! `docs/formats.md`.

use crate::data::{FeatureSubset, Standardizer};
use crate::error::{Error, Result};
use crate::mlp::MlpModel;
use crate::scalar::Scalar;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

pub const MODEL_MAGIC: &str = "CARDIOPEP-MODEL";
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// A trained model plus everything needed to apply it to raw data.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelBundle<T: Scalar> {
    pub model: MlpModel<T>,
    pub standardizer: Standardizer<T>,
    pub subset: FeatureSubset,
    pub master_seed: u64,
}

#[derive(Serialize, Deserialize)]
struct StandardizerDoc {
    mean: Vec<f64>,
    std: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SubsetDoc {
    indices: Vec<usize>,
    universe_size: usize,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    magic: String,
    format_version: u32,
    scalar: String,
    master_seed: u64,
    layer_sizes: Vec<usize>,
    /// Row-major, one flat vector per layer.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    standardizer: StandardizerDoc,
    subset: SubsetDoc,
    label_order: [String; 2],
}

pub fn save_model<T: Scalar>(bundle: &ModelBundle<T>, path: &Path) -> Result<()> {
    let doc = ModelDocument {
        magic: MODEL_MAGIC.to_owned(),
        format_version: MODEL_FORMAT_VERSION,
        scalar: std::any::type_name::<T>().to_owned(),
        master_seed: bundle.master_seed,
        layer_sizes: bundle.model.layer_sizes.clone(),
        weights: bundle
            .model
            .weights
            .iter()
            .map(|w| w.iter().map(|v| v.as_f64()).collect())
            .collect(),
        biases: bundle
            .model
            .biases
            .iter()
            .map(|b| b.iter().map(|v| v.as_f64()).collect())
            .collect(),
        standardizer: StandardizerDoc {
            mean: bundle.standardizer.mean.iter().map(|v| v.as_f64()).collect(),
            std: bundle.standardizer.std.iter().map(|v| v.as_f64()).collect(),
        },
        subset: SubsetDoc {
            indices: bundle.subset.indices().to_vec(),
            universe_size: bundle.subset.universe_size(),
        },
        label_order: ["case".to_owned(), "control".to_owned()],
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_model<T: Scalar>(path: &Path) -> Result<ModelBundle<T>> {
    let text = fs::read_to_string(path)?;
    let doc: ModelDocument = serde_json::from_str(&text)
        .map_err(|e| Error::ModelFormat(format!("cannot parse {}: {e}", path.display())))?;
    if doc.magic != MODEL_MAGIC {
        return Err(Error::ModelFormat(format!(
            "bad magic `{}` (expected `{MODEL_MAGIC}`)",
            doc.magic
        )));
    }
    if doc.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported format version {} (expected {MODEL_FORMAT_VERSION})",
            doc.format_version
        )));
    }
    if doc.layer_sizes.len() < 2 || doc.weights.len() != doc.layer_sizes.len() - 1 {
        return Err(Error::ModelFormat(
            "layer sizes and weight matrices disagree".into(),
        ));
    }

    let mut weights = Vec::with_capacity(doc.weights.len());
    let mut biases = Vec::with_capacity(doc.biases.len());
    for (l, pair) in doc.layer_sizes.windows(2).enumerate() {
        let (rows, cols) = (pair[1], pair[0]);
        if doc.weights[l].len() != rows * cols || doc.biases[l].len() != rows {
            return Err(Error::ModelFormat(format!(
                "layer {l} parameter lengths disagree with layer sizes"
            )));
        }
        weights.push(
            Array2::from_shape_vec((rows, cols), doc.weights[l].iter().map(|&v| T::cast(v)).collect())
                .map_err(|e| Error::ModelFormat(e.to_string()))?,
        );
        biases.push(Array1::from_vec(
            doc.biases[l].iter().map(|&v| T::cast(v)).collect(),
        ));
    }

    let subset = FeatureSubset::new(doc.subset.indices, doc.subset.universe_size)
        .map_err(|e| Error::ModelFormat(e.to_string()))?;
    if doc.standardizer.mean.len() != doc.layer_sizes[0]
        || doc.standardizer.std.len() != doc.layer_sizes[0]
    {
        return Err(Error::ModelFormat(
            "standardizer length disagrees with the input layer".into(),
        ));
    }
    if subset.len() != doc.layer_sizes[0] {
        return Err(Error::ModelFormat(
            "feature subset size disagrees with the input layer".into(),
        ));
    }

    Ok(ModelBundle {
        model: MlpModel {
            layer_sizes: doc.layer_sizes,
            weights,
            biases,
        },
        standardizer: Standardizer {
            mean: Array1::from_vec(doc.standardizer.mean.iter().map(|&v| T::cast(v)).collect()),
            std: Array1::from_vec(doc.standardizer.std.iter().map(|&v| T::cast(v)).collect()),
        },
        subset,
        master_seed: doc.master_seed,
    })
}
