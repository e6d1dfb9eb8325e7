//! Independent oracles shared by the integration suites. Everything here is
//! deliberately brute force and implementation-agnostic: pair counting for
//! AUC, central finite differences for gradients, direct formula evaluation
//! for confusion metrics.

use cardiopep::data::{Label, LabeledDataset};
use cardiopep::mlp::{loss, MlpModel};
use ndarray::{Array1, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Tie-corrected Mann–Whitney AUC: fraction of (positive, negative) pairs
/// ordered correctly, half credit for ties. O(n²).
pub fn mann_whitney_auc(scores: &[f64], y_true: &[bool]) -> f64 {
    let mut wins = 0.0f64;
    let mut pairs = 0.0f64;
    for (i, &yi) in y_true.iter().enumerate() {
        if !yi {
            continue;
        }
        for (j, &yj) in y_true.iter().enumerate() {
            if yj {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Central finite differences of the blended loss over the packed parameters.
pub fn fd_gradient(
    model: &MlpModel<f64>,
    x: ArrayView2<f64>,
    y_onehot: ArrayView2<f64>,
    gamma: f64,
    h: f64,
) -> Array1<f64> {
    let flat = model.to_flat();
    let mut g = Array1::zeros(flat.len());
    for i in 0..flat.len() {
        let mut plus = flat.clone();
        plus[i] += h;
        let mut minus = flat.clone();
        minus[i] -= h;
        let lp = loss(&model.from_flat(&plus), x, y_onehot, gamma).unwrap();
        let lm = loss(&model.from_flat(&minus), x, y_onehot, gamma).unwrap();
        g[i] = (lp - lm) / (2.0 * h);
    }
    g
}

/// Infinity-norm relative error between two gradient vectors.
pub fn max_relative_error(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    let scale = a
        .iter()
        .chain(b.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1e-12);
    a.iter()
        .zip(b.iter())
        .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()))
        / scale
}

/// Imbalanced dataset with uniform random intensities in [0, 10).
pub fn uniform_imbalanced(
    cases: usize,
    controls: usize,
    features: usize,
    seed: u64,
) -> LabeledDataset<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cases + controls;
    let values = Array2::from_shape_fn((n, features), |_| rng.random::<f64>() * 10.0);
    let labels = (0..n)
        .map(|i| if i < cases { Label::Case } else { Label::Control })
        .collect();
    LabeledDataset::new(
        values,
        labels,
        (0..features).map(|j| format!("p{j}")).collect(),
        (0..n).map(|i| format!("s{i}")).collect(),
    )
    .unwrap()
}
