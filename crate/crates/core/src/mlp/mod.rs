//! Fully-connected tanh-sigmoid network with a two-unit softmax output and
//! the blended objective `(1−γ)·cross-entropy + γ·mean-squared-weights`.

mod scg;

pub use scg::{scg_train, EarlyStopping, StopReason, TrainConfig, TrainingHistory};

use crate::data::Label;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Floor applied inside `ln` so saturated outputs cannot produce −∞.
const LOG_FLOOR: f64 = 1e-12;

/// Gradient-norm threshold below which training counts as converged.
pub(crate) const GRAD_TOLERANCE: f64 = 1e-7;

/// Hyperbolic tangent sigmoid, `2/(1+e^(−2z)) − 1`.
pub fn tansig<T: Scalar>(z: T) -> T {
    T::cast(2.0) / (T::one() + (-(z + z)).exp()) - T::one()
}

/// One-hot targets, columns ordered `[case, control]`.
pub fn one_hot<T: Scalar>(labels: &[Label]) -> Array2<T> {
    let mut y = Array2::<T>::zeros((labels.len(), 2));
    for (i, l) in labels.iter().enumerate() {
        y[[i, l.index()]] = T::one();
    }
    y
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel<T: Scalar> {
    pub layer_sizes: Vec<usize>,
    /// One `out × in` matrix per layer.
    pub weights: Vec<Array2<T>>,
    pub biases: Vec<Array1<T>>,
}

/// Glorot-style uniform initialization: weights in
/// `±√(6/(fan_in+fan_out))`, biases zero.
pub fn init_model<T: Scalar>(layer_sizes: &[usize], seed: u64) -> Result<MlpModel<T>> {
    if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
        return Err(Error::InvalidConfig(vec![format!(
            "layer sizes must chain at least input->output with positive widths, got {layer_sizes:?}"
        )]));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(layer_sizes.len() - 1);
    let mut biases = Vec::with_capacity(layer_sizes.len() - 1);
    for w in layer_sizes.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let mut m = Array2::<T>::zeros((fan_out, fan_in));
        for v in m.iter_mut() {
            *v = T::cast((rng.random::<f64>() * 2.0 - 1.0) * bound);
        }
        weights.push(m);
        biases.push(Array1::<T>::zeros(fan_out));
    }
    Ok(MlpModel {
        layer_sizes: layer_sizes.to_vec(),
        weights,
        biases,
    })
}

fn softmax_rows<T: Scalar>(mut z: Array2<T>) -> Array2<T> {
    for mut row in z.rows_mut() {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    z
}

impl<T: Scalar> MlpModel<T> {
    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    /// Total parameter count, weights plus biases.
    pub fn n_params(&self) -> usize {
        self.weights.iter().map(Array2::len).sum::<usize>()
            + self.biases.iter().map(Array1::len).sum::<usize>()
    }

    /// Weight count only; the mean-squared-weights denominator.
    pub fn n_weights(&self) -> usize {
        self.weights.iter().map(Array2::len).sum()
    }

    fn check_input(&self, x: ArrayView2<T>) -> Result<()> {
        if x.ncols() != self.layer_sizes[0] {
            return Err(Error::DimensionMismatch {
                expected: self.layer_sizes[0],
                got: x.ncols(),
            });
        }
        Ok(())
    }

    /// Class probabilities, one row per sample, columns `[case, control]`.
    pub fn forward(&self, x: ArrayView2<T>) -> Result<Array2<T>> {
        self.check_input(x)?;
        let mut a = x.to_owned();
        let last = self.n_layers() - 1;
        for l in 0..=last {
            let mut z = a.dot(&self.weights[l].t());
            z += &self.biases[l];
            a = if l == last {
                softmax_rows(z)
            } else {
                z.mapv(tansig)
            };
        }
        Ok(a)
    }

    /// Forward pass keeping per-layer input activations for backprop.
    /// Returns (`acts`, probabilities) with `acts[l]` the input to layer `l`.
    fn forward_cached(&self, x: ArrayView2<T>) -> Result<(Vec<Array2<T>>, Array2<T>)> {
        self.check_input(x)?;
        let last = self.n_layers() - 1;
        let mut acts = Vec::with_capacity(self.n_layers());
        acts.push(x.to_owned());
        for l in 0..last {
            let mut z = acts[l].dot(&self.weights[l].t());
            z += &self.biases[l];
            acts.push(z.mapv(tansig));
        }
        let mut z = acts[last].dot(&self.weights[last].t());
        z += &self.biases[last];
        Ok((acts, softmax_rows(z)))
    }

    pub fn predict_proba(&self, x: ArrayView2<T>) -> Result<Array2<T>> {
        self.forward(x)
    }

    /// Argmax labels; ties go to the case class.
    pub fn predict(&self, x: ArrayView2<T>) -> Result<Vec<Label>> {
        Ok(probs_to_labels(self.forward(x)?.view()))
    }

    /// Parameters packed layer by layer, weights row-major then biases.
    pub fn to_flat(&self) -> Array1<T> {
        let mut flat = Vec::with_capacity(self.n_params());
        for l in 0..self.n_layers() {
            flat.extend(self.weights[l].iter().copied());
            flat.extend(self.biases[l].iter().copied());
        }
        Array1::from_vec(flat)
    }

    /// Rebuild a model with this one's architecture from a flat vector.
    pub fn from_flat(&self, flat: &Array1<T>) -> MlpModel<T> {
        assert_eq!(flat.len(), self.n_params(), "flat parameter length");
        let mut weights = Vec::with_capacity(self.n_layers());
        let mut biases = Vec::with_capacity(self.n_layers());
        let mut offset = 0;
        for l in 0..self.n_layers() {
            let (rows, cols) = self.weights[l].dim();
            let w = Array2::from_shape_vec(
                (rows, cols),
                flat.slice(ndarray::s![offset..offset + rows * cols]).to_vec(),
            )
            .expect("shape matches");
            offset += rows * cols;
            let b = flat.slice(ndarray::s![offset..offset + rows]).to_owned();
            offset += rows;
            weights.push(w);
            biases.push(b);
        }
        MlpModel {
            layer_sizes: self.layer_sizes.clone(),
            weights,
            biases,
        }
    }
}

pub(crate) fn probs_to_labels<T: Scalar>(probs: ArrayView2<T>) -> Vec<Label> {
    probs
        .rows()
        .into_iter()
        .map(|r| if r[1] > r[0] { Label::Control } else { Label::Case })
        .collect()
}

/// Mean cross-entropy of probabilities against one-hot targets, with the
/// logarithm clamped at `LOG_FLOOR`.
fn cross_entropy<T: Scalar>(probs: &Array2<T>, y_onehot: &Array2<T>) -> T {
    let floor = T::cast(LOG_FLOOR);
    let mut total = T::zero();
    for (p, y) in probs.iter().zip(y_onehot.iter()) {
        if *y > T::zero() {
            total -= *y * p.max(floor).ln();
        }
    }
    total / T::cast(probs.nrows() as f64)
}

/// Mean of squared weights, biases excluded.
pub fn mean_squared_weights<T: Scalar>(model: &MlpModel<T>) -> T {
    let sum: T = model
        .weights
        .iter()
        .flat_map(|w| w.iter())
        .map(|&v| v * v)
        .sum();
    sum / T::cast(model.n_weights() as f64)
}

/// Blended objective `L = (1−γ)·CE + γ·MSW`.
pub fn loss<T: Scalar>(
    model: &MlpModel<T>,
    x: ArrayView2<T>,
    y_onehot: ArrayView2<T>,
    gamma: f64,
) -> Result<T> {
    let probs = model.forward(x)?;
    let ce = cross_entropy(&probs, &y_onehot.to_owned());
    Ok(T::cast(1.0 - gamma) * ce + T::cast(gamma) * mean_squared_weights(model))
}

/// Objective value plus training accuracy from a single forward pass.
pub fn loss_and_accuracy<T: Scalar>(
    model: &MlpModel<T>,
    x: ArrayView2<T>,
    y_onehot: ArrayView2<T>,
    labels: &[Label],
    gamma: f64,
) -> Result<(f64, f64)> {
    let probs = model.forward(x)?;
    let ce = cross_entropy(&probs, &y_onehot.to_owned());
    let l = T::cast(1.0 - gamma) * ce + T::cast(gamma) * mean_squared_weights(model);
    let pred = probs_to_labels(probs.view());
    let correct = pred.iter().zip(labels).filter(|(p, t)| p == t).count();
    Ok((l.as_f64(), correct as f64 / labels.len() as f64))
}

/// Loss and its exact analytic gradient, flat-packed like
/// [`MlpModel::to_flat`].
pub fn loss_and_gradient<T: Scalar>(
    model: &MlpModel<T>,
    x: ArrayView2<T>,
    y_onehot: ArrayView2<T>,
    gamma: f64,
) -> Result<(T, Array1<T>)> {
    let (acts, probs) = model.forward_cached(x)?;
    let ce = cross_entropy(&probs, &y_onehot.to_owned());
    let msw = mean_squared_weights(model);
    let value = T::cast(1.0 - gamma) * ce + T::cast(gamma) * msw;

    let n = x.nrows();
    let ce_scale = T::cast((1.0 - gamma) / n as f64);
    let reg_scale = T::cast(2.0 * gamma / model.n_weights() as f64);

    // softmax + cross-entropy collapse to (p − y) at the output
    let mut delta = (&probs - &y_onehot) * ce_scale;
    let mut grad_w: Vec<Array2<T>> = vec![Array2::zeros((0, 0)); model.n_layers()];
    let mut grad_b: Vec<Array1<T>> = vec![Array1::zeros(0); model.n_layers()];
    for l in (0..model.n_layers()).rev() {
        grad_w[l] = delta.t().dot(&acts[l]) + &(&model.weights[l] * reg_scale);
        grad_b[l] = delta.sum_axis(Axis(0));
        if l > 0 {
            // tansig'(z) = 1 − a²
            let back = delta.dot(&model.weights[l]);
            delta = back * &acts[l].mapv(|a| T::one() - a * a);
        }
    }

    let mut flat = Vec::with_capacity(model.n_params());
    for l in 0..model.n_layers() {
        flat.extend(grad_w[l].iter().copied());
        flat.extend(grad_b[l].iter().copied());
    }
    Ok((value, Array1::from_vec(flat)))
}

/// Gradient only; see [`loss_and_gradient`].
pub fn gradient<T: Scalar>(
    model: &MlpModel<T>,
    x: ArrayView2<T>,
    y_onehot: ArrayView2<T>,
    gamma: f64,
) -> Result<Array1<T>> {
    Ok(loss_and_gradient(model, x, y_onehot, gamma)?.1)
}
