//! Data model: the labeled intensity matrix, feature subsets, z-score
//! standardization, and stratified partitioning.
//!
//! Every type here is immutable after construction; operations are pure
//! functions of their inputs and an explicit seed.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// Binary class label. `Case` is class 0 and wins every tie-break rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Case,
    Control,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Case, Label::Control];

    pub fn index(self) -> usize {
        match self {
            Label::Case => 0,
            Label::Control => 1,
        }
    }

    pub fn from_index(i: usize) -> Label {
        match i {
            0 => Label::Case,
            _ => Label::Control,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Case => "case",
            Label::Control => "control",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Label> {
        match s {
            "case" => Ok(Label::Case),
            "control" => Ok(Label::Control),
            other => Err(Error::InvalidData(format!(
                "unknown label token `{other}` (expected `case` or `control`)"
            ))),
        }
    }
}

/// Sample-by-feature intensity matrix with labels and identifiers.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset<T: Scalar> {
    pub values: Array2<T>,
    pub labels: Vec<Label>,
    pub feature_ids: Vec<String>,
    pub sample_ids: Vec<String>,
}

impl<T: Scalar> LabeledDataset<T> {
    pub fn new(
        values: Array2<T>,
        labels: Vec<Label>,
        feature_ids: Vec<String>,
        sample_ids: Vec<String>,
    ) -> Result<Self> {
        if values.nrows() != labels.len() || values.nrows() != sample_ids.len() {
            return Err(Error::InvalidData(format!(
                "row count {} does not match labels {} / sample ids {}",
                values.nrows(),
                labels.len(),
                sample_ids.len()
            )));
        }
        if values.ncols() != feature_ids.len() {
            return Err(Error::InvalidData(format!(
                "column count {} does not match feature ids {}",
                values.ncols(),
                feature_ids.len()
            )));
        }
        let mut seen = HashSet::new();
        for id in &feature_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::InvalidData(format!("duplicate feature id `{id}`")));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset values".into()));
        }
        Ok(Self {
            values,
            labels,
            feature_ids,
            sample_ids,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    /// Counts as `[cases, controls]`.
    pub fn class_counts(&self) -> [usize; 2] {
        let mut counts = [0usize; 2];
        for l in &self.labels {
            counts[l.index()] += 1;
        }
        counts
    }

    pub fn class_indices(&self, label: Label) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == label)
            .map(|(i, _)| i)
            .collect()
    }

    /// Row subset in the given index order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self {
            values: self.values.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_ids: self.feature_ids.clone(),
            sample_ids: indices.iter().map(|&i| self.sample_ids[i].clone()).collect(),
        }
    }

    /// Column restriction to a feature subset.
    pub fn select_features(&self, subset: &FeatureSubset) -> Result<Self> {
        if subset.universe_size() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: subset.universe_size(),
            });
        }
        Ok(Self {
            values: self.values.select(Axis(1), subset.indices()),
            labels: self.labels.clone(),
            feature_ids: subset
                .indices()
                .iter()
                .map(|&j| self.feature_ids[j].clone())
                .collect(),
            sample_ids: self.sample_ids.clone(),
        })
    }
}

/// Fixed-cardinality set of selected feature column indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureSubset {
    indices: Vec<usize>,
    universe_size: usize,
}

impl FeatureSubset {
    /// Builds a subset from arbitrary-order indices; sorts and validates.
    pub fn new(mut indices: Vec<usize>, universe_size: usize) -> Result<Self> {
        indices.sort_unstable();
        if indices.is_empty() {
            return Err(Error::InvalidData("feature subset is empty".into()));
        }
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidData("feature subset has duplicate indices".into()));
        }
        if *indices.last().unwrap() >= universe_size {
            return Err(Error::InvalidData(format!(
                "feature index {} out of range for universe {}",
                indices.last().unwrap(),
                universe_size
            )));
        }
        Ok(Self {
            indices,
            universe_size,
        })
    }

    pub fn full(universe_size: usize) -> Self {
        Self {
            indices: (0..universe_size).collect(),
            universe_size,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn universe_size(&self) -> usize {
        self.universe_size
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }
}

/// Per-feature mean and standard deviation fitted on a training partition.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer<T: Scalar> {
    pub mean: Array1<T>,
    pub std: Array1<T>,
}

/// Fit per-column mean and sample standard deviation (n−1 denominator).
/// Constant columns get a substituted stddev of 1 so they map to zeros.
pub fn fit_standardizer<T: Scalar>(data: &LabeledDataset<T>) -> Result<Standardizer<T>> {
    let n = data.n_samples();
    if n < 2 {
        return Err(Error::InvalidData(format!(
            "standardizer needs at least 2 samples, got {n}"
        )));
    }
    let n_t = T::cast(n as f64);
    let mean = data.values.sum_axis(Axis(0)) / n_t;
    let mut var = Array1::<T>::zeros(data.n_features());
    for row in data.values.rows() {
        for (j, &v) in row.iter().enumerate() {
            let d = v - mean[j];
            var[j] += d * d;
        }
    }
    var /= T::cast((n - 1) as f64);
    let std = var.mapv(|v| {
        let s = v.sqrt();
        if s > T::zero() {
            s
        } else {
            T::one()
        }
    });
    Ok(Standardizer { mean, std })
}

/// Replace every value `x` by `(x − mean) / std`; labels and ids unchanged.
pub fn apply_standardizer<T: Scalar>(
    std: &Standardizer<T>,
    data: &LabeledDataset<T>,
) -> Result<LabeledDataset<T>> {
    if std.mean.len() != data.n_features() {
        return Err(Error::DimensionMismatch {
            expected: std.mean.len(),
            got: data.n_features(),
        });
    }
    let mut values = data.values.clone();
    for mut row in values.rows_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (*v - std.mean[j]) / std.std[j];
        }
    }
    Ok(LabeledDataset {
        values,
        labels: data.labels.clone(),
        feature_ids: data.feature_ids.clone(),
        sample_ids: data.sample_ids.clone(),
    })
}

impl<T: Scalar> Standardizer<T> {
    pub fn apply(&self, data: &LabeledDataset<T>) -> Result<LabeledDataset<T>> {
        apply_standardizer(self, data)
    }

    /// Inverse transform: `x * std + mean`.
    pub fn inverse_apply(&self, data: &LabeledDataset<T>) -> Result<LabeledDataset<T>> {
        if self.mean.len() != data.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                got: data.n_features(),
            });
        }
        let mut values = data.values.clone();
        for mut row in values.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = *v * self.std[j] + self.mean[j];
            }
        }
        Ok(LabeledDataset {
            values,
            labels: data.labels.clone(),
            feature_ids: data.feature_ids.clone(),
            sample_ids: data.sample_ids.clone(),
        })
    }
}

/// Assignment of every sample to one of `k` folds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    /// Sample indices of fold `f`, in dataset order.
    pub fn fold_indices(&self, f: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, a)| **a == f)
            .map(|(i, _)| i)
            .collect()
    }

    /// Complement of fold `f`, in dataset order.
    pub fn train_indices(&self, f: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != f)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Stratified k-fold assignment: within each class the samples are shuffled
/// and dealt round-robin. The dealing start rotates by the running remainder
/// so the oversize folds of one class absorb the undersize folds of the
/// other, keeping fold totals within one sample of each other.
pub fn stratified_kfold(labels: &[Label], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidConfig(vec![format!(
            "fold count must be at least 2, got {k}"
        )]));
    }
    let mut assignments = vec![0usize; labels.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut offset = 0usize;
    for class in Label::ALL {
        let mut idx: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == class)
            .map(|(i, _)| i)
            .collect();
        if idx.len() < k {
            return Err(Error::TooFewClassSamples {
                label: class.to_string(),
                have: idx.len(),
                need: k,
            });
        }
        idx.shuffle(&mut rng);
        for (i, &sample) in idx.iter().enumerate() {
            assignments[sample] = (offset + i) % k;
        }
        offset = (offset + idx.len()) % k;
    }
    Ok(FoldPlan { k, assignments })
}

/// Stratified train/holdout split. Per class the holdout gets
/// `max(1, round(count × fraction))` samples.
pub fn stratified_split(
    labels: &[Label],
    holdout_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(Error::InvalidConfig(vec![format!(
            "holdout fraction must be in (0, 1), got {holdout_fraction}"
        )]));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut holdout = Vec::new();
    for class in Label::ALL {
        let mut idx: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == class)
            .map(|(i, _)| i)
            .collect();
        let count = idx.len();
        if count < 2 {
            return Err(Error::TooFewClassSamples {
                label: class.to_string(),
                have: count,
                need: 2,
            });
        }
        let h = ((count as f64 * holdout_fraction).round() as usize).max(1);
        if h >= count {
            return Err(Error::InvalidData(format!(
                "holdout fraction {holdout_fraction} empties the training side of class `{class}`"
            )));
        }
        idx.shuffle(&mut rng);
        holdout.extend_from_slice(&idx[..h]);
        train.extend_from_slice(&idx[h..]);
    }
    train.sort_unstable();
    holdout.sort_unstable();
    Ok((train, holdout))
}

/// Load a dataset from CSV with header `sample_id,label,<feature ids...>`.
pub fn load_csv<T: Scalar>(path: &Path) -> Result<LabeledDataset<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(map_csv_error)?;

    let headers = reader.headers().map_err(map_csv_error)?.clone();
    if headers.len() < 3 {
        return Err(Error::Csv {
            line: 1,
            msg: format!(
                "header needs `sample_id,label` plus at least one feature column, got {} fields",
                headers.len()
            ),
        });
    }
    if &headers[0] != "sample_id" || &headers[1] != "label" {
        return Err(Error::Csv {
            line: 1,
            msg: format!(
                "header must start with `sample_id,label`, got `{},{}`",
                &headers[0], &headers[1]
            ),
        });
    }
    let feature_ids: Vec<String> = headers.iter().skip(2).map(str::to_owned).collect();
    let mut seen = HashSet::new();
    for id in &feature_ids {
        if id.is_empty() {
            return Err(Error::Csv {
                line: 1,
                msg: "empty feature id in header".into(),
            });
        }
        if !seen.insert(id.as_str()) {
            return Err(Error::Csv {
                line: 1,
                msg: format!("duplicate header field `{id}`"),
            });
        }
    }

    let mut sample_ids = Vec::new();
    let mut labels = Vec::new();
    let mut flat: Vec<T> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(map_csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        sample_ids.push(record[0].to_owned());
        labels.push(record[1].parse::<Label>().map_err(|e| Error::Csv {
            line,
            msg: e.to_string(),
        })?);
        for (j, field) in record.iter().skip(2).enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Csv {
                line,
                msg: format!(
                    "non-numeric intensity `{field}` for feature `{}`",
                    feature_ids[j]
                ),
            })?;
            if !v.is_finite() {
                return Err(Error::Csv {
                    line,
                    msg: format!(
                        "non-finite intensity `{field}` for feature `{}`",
                        feature_ids[j]
                    ),
                });
            }
            flat.push(T::cast(v));
        }
    }
    if sample_ids.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let values = Array2::from_shape_vec((sample_ids.len(), feature_ids.len()), flat)
        .map_err(|e| Error::InvalidData(e.to_string()))?;
    LabeledDataset::new(values, labels, feature_ids, sample_ids)
}

fn map_csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, csv::Position::line);
    let msg = match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("ragged row: expected {expected_len} fields, got {len}")
        }
        _ => e.to_string(),
    };
    if matches!(e.kind(), csv::ErrorKind::Io(_)) {
        Error::InvalidData(format!("cannot read CSV: {e}"))
    } else {
        Error::Csv { line, msg }
    }
}

/// Write a dataset in the `load_csv` format. Intensities are written with 17
/// significant digits so a load/save cycle is byte-identical.
pub fn save_csv<T: Scalar>(data: &LabeledDataset<T>, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(map_csv_error)?;
    let mut header = vec!["sample_id".to_owned(), "label".to_owned()];
    header.extend(data.feature_ids.iter().cloned());
    writer.write_record(&header).map_err(map_csv_error)?;
    for (i, row) in data.values.rows().into_iter().enumerate() {
        let mut record = vec![data.sample_ids[i].clone(), data.labels[i].to_string()];
        record.extend(row.iter().map(|v| format!("{:.16e}", v.as_f64())));
        writer.write_record(&record).map_err(map_csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn labels(cases: usize, controls: usize) -> Vec<Label> {
        let mut v = vec![Label::Case; cases];
        v.extend(vec![Label::Control; controls]);
        v
    }

    #[test]
    fn load_csv_reads_literal_values_in_row_order() {
        let f = write_temp(
            "sample_id,label,p1,p2\ns1,case,1.0,2.5\ns2,control,2.5,1.0\ns3,case,1.0,1.0\n",
        );
        let d: LabeledDataset<f64> = load_csv(f.path()).unwrap();
        assert_eq!(d.values, array![[1.0, 2.5], [2.5, 1.0], [1.0, 1.0]]);
        assert_eq!(d.labels, vec![Label::Case, Label::Control, Label::Case]);
        assert_eq!(d.sample_ids, vec!["s1", "s2", "s3"]);
        assert_eq!(d.feature_ids, vec!["p1", "p2"]);
    }

    #[test]
    fn load_csv_rejects_empty_dataset() {
        let f = write_temp("sample_id,label,p1\n");
        let err = load_csv::<f64>(f.path()).unwrap_err();
        assert!(matches!(err, Error::EmptyDataset), "{err}");
    }

    #[test]
    fn load_csv_reports_bad_label_with_line() {
        let f = write_temp("sample_id,label,p1\ns1,case,1.0\ns2,healthy,2.0\n");
        match load_csv::<f64>(f.path()).unwrap_err() {
            Error::Csv { line, msg } => {
                assert_eq!(line, 3);
                assert!(msg.contains("healthy"), "{msg}");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn load_csv_reports_non_numeric_with_line_and_feature() {
        let f = write_temp("sample_id,label,p1,p2\ns1,case,1.0,oops\n");
        match load_csv::<f64>(f.path()).unwrap_err() {
            Error::Csv { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("oops") && msg.contains("p2"), "{msg}");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn load_csv_rejects_nan_intensity() {
        let f = write_temp("sample_id,label,p1\ns1,case,NaN\n");
        assert!(matches!(
            load_csv::<f64>(f.path()).unwrap_err(),
            Error::Csv { line: 2, .. }
        ));
    }

    #[test]
    fn load_csv_reports_ragged_row() {
        let f = write_temp("sample_id,label,p1,p2\ns1,case,1.0,2.0\ns2,control,3.0\n");
        match load_csv::<f64>(f.path()).unwrap_err() {
            Error::Csv { line, msg } => {
                assert_eq!(line, 3);
                assert!(msg.contains("ragged"), "{msg}");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn load_csv_rejects_duplicate_header_field() {
        let f = write_temp("sample_id,label,p1,p1\ns1,case,1.0,2.0\n");
        match load_csv::<f64>(f.path()).unwrap_err() {
            Error::Csv { line: 1, msg } => assert!(msg.contains("duplicate"), "{msg}"),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn load_csv_rejects_wrong_leading_headers() {
        let f = write_temp("id,label,p1\ns1,case,1.0\n");
        assert!(matches!(
            load_csv::<f64>(f.path()).unwrap_err(),
            Error::Csv { line: 1, .. }
        ));
    }

    #[test]
    fn load_csv_accepts_crlf() {
        let f = write_temp("sample_id,label,p1\r\ns1,case,1.5\r\n");
        let d: LabeledDataset<f64> = load_csv(f.path()).unwrap();
        assert_eq!(d.values[[0, 0]], 1.5);
    }

    #[test]
    fn save_then_load_round_trips_bytes() {
        let d = LabeledDataset::new(
            array![[1.0f64, 0.125], [3.5e5, 2.0 / 3.0]],
            labels(1, 1),
            vec!["p1".into(), "p2".into()],
            vec!["s1".into(), "s2".into()],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        save_csv(&d, &a).unwrap();
        let re: LabeledDataset<f64> = load_csv(&a).unwrap();
        assert_eq!(re.values, d.values);
        save_csv(&re, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn standardizer_matches_hand_computation() {
        let d = LabeledDataset::new(
            array![[1.0f64], [2.0], [3.0]],
            labels(2, 1),
            vec!["p1".into()],
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap();
        let s = fit_standardizer(&d).unwrap();
        assert!((s.mean[0] - 2.0).abs() < 1e-15);
        assert!((s.std[0] - 1.0).abs() < 1e-15);
        let z = s.apply(&d).unwrap();
        assert!((z.values[[0, 0]] + 1.0).abs() < 1e-15);
        assert!((z.values[[1, 0]]).abs() < 1e-15);
        assert!((z.values[[2, 0]] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn standardizer_substitutes_unit_std_for_constant_column() {
        let d = LabeledDataset::new(
            array![[5.0f64], [5.0], [5.0]],
            labels(2, 1),
            vec!["p1".into()],
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap();
        let s = fit_standardizer(&d).unwrap();
        assert_eq!(s.mean[0], 5.0);
        assert_eq!(s.std[0], 1.0);
        let z = s.apply(&d).unwrap();
        assert!(z.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn standardizing_standardized_data_is_near_identity() {
        let d = LabeledDataset::new(
            array![[-1.0f64], [0.0], [1.0]],
            labels(2, 1),
            vec!["p1".into()],
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap();
        let s = fit_standardizer(&d).unwrap();
        assert!(s.mean[0].abs() < 1e-12);
        assert!((s.std[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_standardizer_is_identity() {
        let d = LabeledDataset::new(
            array![[4.0f64, -2.0], [1.0, 9.0]],
            labels(1, 1),
            vec!["p1".into(), "p2".into()],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let s = Standardizer {
            mean: Array1::zeros(2),
            std: Array1::ones(2),
        };
        assert_eq!(s.apply(&d).unwrap().values, d.values);
    }

    #[test]
    fn standardizer_apply_on_own_fit_data_centers_and_scales() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let flat: Vec<f64> = (0..40 * 3)
            .map(|_| rand::Rng::random::<f64>(&mut rng) * 100.0 + 7.0)
            .collect();
        let d = LabeledDataset::new(
            Array2::from_shape_vec((40, 3), flat).unwrap(),
            labels(20, 20),
            vec!["p1".into(), "p2".into(), "p3".into()],
            (0..40).map(|i| format!("s{i}")).collect(),
        )
        .unwrap();
        let s = fit_standardizer(&d).unwrap();
        let z = s.apply(&d).unwrap();
        let zs = fit_standardizer(&z).unwrap();
        for j in 0..3 {
            assert!(zs.mean[j].abs() < 1e-10);
            assert!((zs.std[j] - 1.0).abs() < 1e-10);
        }
        let back = s.inverse_apply(&z).unwrap();
        for (a, b) in back.values.iter().zip(d.values.iter()) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
        }
    }

    #[test]
    fn standardizer_dimension_mismatch_is_rejected() {
        let d = LabeledDataset::new(
            array![[1.0f64, 2.0], [3.0, 4.0]],
            labels(1, 1),
            vec!["p1".into(), "p2".into()],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let s = Standardizer::<f64> {
            mean: Array1::zeros(3),
            std: Array1::ones(3),
        };
        assert!(matches!(
            s.apply(&d).unwrap_err(),
            Error::DimensionMismatch { .. }
        ));
    }

    #[test]
    fn kfold_balances_the_paper_scale_cohort() {
        let l = labels(345, 345);
        let plan = stratified_kfold(&l, 10, 11).unwrap();
        let mut case_sizes = Vec::new();
        for f in 0..10 {
            let idx = plan.fold_indices(f);
            assert_eq!(idx.len(), 69);
            case_sizes.push(idx.iter().filter(|&&i| l[i] == Label::Case).count());
        }
        case_sizes.sort_unstable();
        assert_eq!(&case_sizes[..5], &[34, 34, 34, 34, 34]);
        assert_eq!(&case_sizes[5..], &[35, 35, 35, 35, 35]);
    }

    #[test]
    fn kfold_minimal_case_gives_one_of_each_class_per_fold() {
        let l = labels(2, 2);
        let plan = stratified_kfold(&l, 2, 3).unwrap();
        for f in 0..2 {
            let idx = plan.fold_indices(f);
            assert_eq!(idx.len(), 2);
            assert_eq!(idx.iter().filter(|&&i| l[i] == Label::Case).count(), 1);
        }
    }

    #[test]
    fn kfold_is_deterministic() {
        let l = labels(13, 29);
        assert_eq!(
            stratified_kfold(&l, 4, 99).unwrap(),
            stratified_kfold(&l, 4, 99).unwrap()
        );
    }

    #[test]
    fn kfold_rejects_small_class() {
        let l = labels(2, 30);
        assert!(matches!(
            stratified_kfold(&l, 3, 0).unwrap_err(),
            Error::TooFewClassSamples { .. }
        ));
    }

    #[test]
    fn split_matches_rounding_rule_on_inner_fold_counts() {
        let l = labels(310, 311);
        let (train, holdout) = stratified_split(&l, 0.2, 17).unwrap();
        assert_eq!(holdout.len(), 124);
        assert_eq!(train.len() + holdout.len(), 621);
        let case_holdout = holdout.iter().filter(|&&i| l[i] == Label::Case).count();
        assert_eq!(case_holdout, 62);
        assert_eq!(holdout.len() - case_holdout, 62);
    }

    #[test]
    fn split_keeps_minimum_one_holdout_per_class() {
        let l = labels(5, 5);
        let (_, holdout) = stratified_split(&l, 0.2, 1).unwrap();
        assert_eq!(holdout.iter().filter(|&&i| l[i] == Label::Case).count(), 1);
        assert_eq!(holdout.len(), 2);
    }

    #[test]
    fn split_is_deterministic() {
        let l = labels(20, 30);
        assert_eq!(
            stratified_split(&l, 0.3, 5).unwrap(),
            stratified_split(&l, 0.3, 5).unwrap()
        );
    }

    #[test]
    fn split_rejects_fraction_that_empties_a_side() {
        let l = labels(2, 20);
        // round(2 × 0.9) = 2 would empty the training side of the case class
        assert!(stratified_split(&l, 0.9, 0).is_err());
    }

    #[test]
    fn feature_subset_validates_and_sorts() {
        let s = FeatureSubset::new(vec![3, 1, 2], 5).unwrap();
        assert_eq!(s.indices(), &[1, 2, 3]);
        assert!(FeatureSubset::new(vec![1, 1], 5).is_err());
        assert!(FeatureSubset::new(vec![5], 5).is_err());
        assert!(FeatureSubset::new(vec![], 5).is_err());
    }

    #[test]
    fn select_features_restricts_columns() {
        let d = LabeledDataset::new(
            array![[1.0f64, 2.0, 3.0], [4.0, 5.0, 6.0]],
            labels(1, 1),
            vec!["p1".into(), "p2".into(), "p3".into()],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let s = FeatureSubset::new(vec![0, 2], 3).unwrap();
        let r = d.select_features(&s).unwrap();
        assert_eq!(r.values, array![[1.0, 3.0], [4.0, 6.0]]);
        assert_eq!(r.feature_ids, vec!["p1", "p3"]);
    }

    proptest! {
        #[test]
        fn kfold_partitions_all_indices(cases in 4usize..40, controls in 4usize..40, k in 2usize..4, seed in 0u64..1000) {
            let l = labels(cases, controls);
            prop_assume!(cases >= k && controls >= k);
            let plan = stratified_kfold(&l, k, seed).unwrap();
            let mut seen = vec![false; l.len()];
            for f in 0..k {
                for i in plan.fold_indices(f) {
                    prop_assert!(!seen[i], "index {} assigned twice", i);
                    seen[i] = true;
                }
            }
            prop_assert!(seen.iter().all(|s| *s));
            // per-class fold counts within 1 of exact proportionality
            for class in Label::ALL {
                let total = l.iter().filter(|x| **x == class).count();
                let exact = total as f64 / k as f64;
                for f in 0..k {
                    let c = plan.fold_indices(f).iter().filter(|&&i| l[i] == class).count();
                    prop_assert!((c as f64 - exact).abs() <= 1.0);
                }
            }
        }

        #[test]
        fn csv_round_trip_is_stable(rows in 1usize..6, cols in 1usize..5, seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let flat: Vec<f64> = (0..rows * cols)
                .map(|_| rand::Rng::random::<f64>(&mut rng) * 1e5)
                .collect();
            let d = LabeledDataset::new(
                Array2::from_shape_vec((rows, cols), flat).unwrap(),
                (0..rows).map(|i| if i % 2 == 0 { Label::Case } else { Label::Control }).collect(),
                (0..cols).map(|j| format!("p{j}")).collect(),
                (0..rows).map(|i| format!("s{i}")).collect(),
            ).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let a = dir.path().join("a.csv");
            let b = dir.path().join("b.csv");
            save_csv(&d, &a).unwrap();
            let re: LabeledDataset<f64> = load_csv(&a).unwrap();
            prop_assert_eq!(&re.values, &d.values);
            save_csv(&re, &b).unwrap();
            prop_assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        }
    }
}
