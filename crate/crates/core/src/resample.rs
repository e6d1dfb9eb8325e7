//! Class balancing: SMOTE interpolation and plain minority replication.

use crate::data::{Label, LabeledDataset, Standardizer};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use ndarray::{Array2, ArrayView1, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    pub target_minority_count: usize,
    pub seed: u64,
}

impl SmoteConfig {
    pub fn new(target_minority_count: usize, seed: u64) -> Self {
        Self {
            k_neighbors: 5,
            target_minority_count,
            seed,
        }
    }
}

fn minority_label<T: Scalar>(data: &LabeledDataset<T>) -> Label {
    let counts = data.class_counts();
    // ties go to the case class
    if counts[1] < counts[0] {
        Label::Control
    } else {
        Label::Case
    }
}

fn squared_distance<T: Scalar>(a: ArrayView1<T>, b: ArrayView1<T>) -> T {
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum()
}

/// Oversample the minority class with synthetic interpolants. Each synthetic
/// row is `x + λ·(x_nn − x)` for a uniformly drawn minority base row `x`, one
/// of its `k` nearest minority neighbors `x_nn` (exact Euclidean search), and
/// `λ` uniform in [0,1). Originals are preserved verbatim and synthetics are
/// appended with ids `synthetic-<n>`.
pub fn smote<T: Scalar>(data: &LabeledDataset<T>, cfg: &SmoteConfig) -> Result<LabeledDataset<T>> {
    smote_with_metric(data, cfg, None)
}

/// Like [`smote`], but neighbor distances are measured on the standardized
/// features when a standardizer is supplied. Interpolation always happens in
/// the raw feature space.
pub fn smote_with_metric<T: Scalar>(
    data: &LabeledDataset<T>,
    cfg: &SmoteConfig,
    metric: Option<&Standardizer<T>>,
) -> Result<LabeledDataset<T>> {
    let minority = minority_label(data);
    let minority_idx = data.class_indices(minority);
    let m = minority_idx.len();
    if m < 2 {
        return Err(Error::TooFewClassSamples {
            label: minority.to_string(),
            have: m,
            need: 2,
        });
    }
    if cfg.target_minority_count < m {
        return Err(Error::InvalidConfig(vec![format!(
            "SMOTE target {} is below the current minority count {m}",
            cfg.target_minority_count
        )]));
    }
    let needed = cfg.target_minority_count - m;
    if needed == 0 {
        return Ok(data.clone());
    }

    let mut k = cfg.k_neighbors.max(1);
    if k > m - 1 {
        log::warn!(
            "SMOTE k_neighbors {} clamped to {} (minority size {m})",
            cfg.k_neighbors,
            m - 1
        );
        k = m - 1;
    }

    let raw = data.values.select(Axis(0), &minority_idx);
    let metric_matrix = match metric {
        Some(std) => {
            let scaled = std.apply(&data.select_rows(&minority_idx))?;
            scaled.values
        }
        None => raw.clone(),
    };

    // exact k-nearest neighbors within the minority class, ties by index
    let mut neighbors: Vec<Vec<usize>> = Vec::with_capacity(m);
    for i in 0..m {
        let mut order: Vec<usize> = (0..m).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| {
            let da = squared_distance(metric_matrix.row(i), metric_matrix.row(a));
            let db = squared_distance(metric_matrix.row(i), metric_matrix.row(b));
            da.partial_cmp(&db).unwrap().then(a.cmp(&b))
        });
        order.truncate(k);
        neighbors.push(order);
    }

    let d = data.n_features();
    let mut values = Array2::<T>::zeros((data.n_samples() + needed, d));
    values
        .slice_mut(ndarray::s![..data.n_samples(), ..])
        .assign(&data.values);
    let mut labels = data.labels.clone();
    let mut sample_ids = data.sample_ids.clone();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for n in 1..=needed {
        let base = rng.random_range(0..m);
        let nn = neighbors[base][rng.random_range(0..k)];
        let lambda = T::cast(rng.random::<f64>());
        let row_index = data.n_samples() + n - 1;
        for j in 0..d {
            let x = raw[[base, j]];
            let y = raw[[nn, j]];
            values[[row_index, j]] = x + lambda * (y - x);
        }
        labels.push(minority);
        sample_ids.push(format!("synthetic-{n}"));
    }

    LabeledDataset::new(values, labels, data.feature_ids.clone(), sample_ids)
}

/// Duplicate minority rows (sampling with replacement) until the class
/// counts are equal. Duplicates are exact copies with ids `<orig>-rep<n>`.
pub fn replicate_oversample<T: Scalar>(
    data: &LabeledDataset<T>,
    seed: u64,
) -> Result<LabeledDataset<T>> {
    let counts = data.class_counts();
    if counts[0] == 0 || counts[1] == 0 {
        return Err(Error::SingleClass);
    }
    let minority = minority_label(data);
    let minority_idx = data.class_indices(minority);
    let m = minority_idx.len();
    let needed = counts[0].max(counts[1]) - m;
    if needed == 0 {
        return Ok(data.clone());
    }

    let d = data.n_features();
    let mut values = Array2::<T>::zeros((data.n_samples() + needed, d));
    values
        .slice_mut(ndarray::s![..data.n_samples(), ..])
        .assign(&data.values);
    let mut labels = data.labels.clone();
    let mut sample_ids = data.sample_ids.clone();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for n in 1..=needed {
        let pick = minority_idx[rng.random_range(0..m)];
        let row_index = data.n_samples() + n - 1;
        for j in 0..d {
            values[[row_index, j]] = data.values[[pick, j]];
        }
        labels.push(minority);
        sample_ids.push(format!("{}-rep{n}", data.sample_ids[pick]));
    }

    LabeledDataset::new(values, labels, data.feature_ids.clone(), sample_ids)
}
