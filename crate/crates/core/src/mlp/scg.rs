//! Scaled-conjugate-gradient training: second-order step sizes from a
//! σ-perturbed gradient difference, trust-region scaling through λ, and a
//! periodic restart to steepest descent every `n_params` iterations. One SCG
//! iteration is one full-batch epoch. Validation-loss early stopping returns
//! the parameters snapshotted at the best epoch.

use super::{loss_and_accuracy, loss_and_gradient, one_hot, MlpModel, GRAD_TOLERANCE};
use crate::data::Label;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub max_epochs: usize,
    /// Consecutive epochs without validation improvement before stopping.
    pub max_fail: usize,
    /// Blend weight γ of the mean-squared-weights penalty.
    pub regularization: f64,
    /// Perturbation scale for the second-order gradient difference.
    pub sigma: f64,
    /// Initial trust-region scale.
    pub lambda: f64,
    /// Fraction of each training partition held out for early stopping.
    pub validation_fraction: f64,
    /// Base seed for weight initialization where the caller derives one.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 200,
            max_fail: 6,
            regularization: 0.1,
            sigma: 5e-5,
            lambda: 5e-7,
            validation_fraction: 0.2,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if self.max_epochs == 0 {
            problems.push("train.max_epochs must be at least 1".into());
        }
        if self.max_fail == 0 {
            problems.push("train.max_fail must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.regularization) {
            problems.push(format!(
                "train.regularization must be in [0,1), got {}",
                self.regularization
            ));
        }
        if self.sigma <= 0.0 {
            problems.push(format!("train.sigma must be positive, got {}", self.sigma));
        }
        if self.lambda <= 0.0 {
            problems.push(format!("train.lambda must be positive, got {}", self.lambda));
        }
        if !(0.0 < self.validation_fraction && self.validation_fraction < 1.0) {
            problems.push(format!(
                "train.validation_fraction must be in (0,1), got {}",
                self.validation_fraction
            ));
        }
        problems
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EarlyStop,
    MaxEpochs,
    GradientConverged,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub train_acc: Vec<f64>,
    pub val_acc: Vec<f64>,
    /// 1-based epoch with the minimal validation loss; 0 if no epoch ran.
    pub best_epoch: usize,
    pub stop_reason: StopReason,
}

impl TrainingHistory {
    pub fn epochs(&self) -> usize {
        self.train_loss.len()
    }

    pub fn best_val_loss(&self) -> Option<f64> {
        (self.best_epoch > 0).then(|| self.val_loss[self.best_epoch - 1])
    }
}

/// Validation-loss monitor: an epoch improves only by strictly beating the
/// best loss seen so far; `max_fail` consecutive non-improvements stop
/// training.
#[derive(Clone, Debug)]
pub struct EarlyStopping {
    max_fail: usize,
    best: Option<f64>,
    best_epoch: usize,
    fails: usize,
}

impl EarlyStopping {
    pub fn new(max_fail: usize) -> Self {
        Self {
            max_fail,
            best: None,
            best_epoch: 0,
            fails: 0,
        }
    }

    /// Record the epoch's validation loss; returns true on improvement.
    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> bool {
        match self.best {
            Some(best) if val_loss >= best => {
                self.fails += 1;
                false
            }
            _ => {
                self.best = Some(val_loss);
                self.best_epoch = epoch;
                self.fails = 0;
                true
            }
        }
    }

    pub fn should_stop(&self) -> bool {
        self.fails >= self.max_fail
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

fn dot_f64<T: Scalar>(a: &Array1<T>, b: &Array1<T>) -> f64 {
    a.iter().zip(b.iter()).map(|(&x, &y)| x.as_f64() * y.as_f64()).sum()
}

/// Train with Møller's SCG iteration and early stopping. Returns the model at
/// the best-validation epoch plus the full per-epoch history.
pub fn scg_train<T: Scalar>(
    model: MlpModel<T>,
    x_train: ArrayView2<T>,
    y_train: &[Label],
    x_val: ArrayView2<T>,
    y_val: &[Label],
    cfg: &TrainConfig,
) -> Result<(MlpModel<T>, TrainingHistory)> {
    if x_train.nrows() == 0 || x_val.nrows() == 0 {
        return Err(Error::InvalidData("empty training or validation set".into()));
    }
    if x_train.nrows() != y_train.len() || x_val.nrows() != y_val.len() {
        return Err(Error::DimensionMismatch {
            expected: y_train.len(),
            got: x_train.nrows(),
        });
    }
    let gamma = cfg.regularization;
    let y_train_onehot = one_hot::<T>(y_train);
    let y_val_onehot = one_hot::<T>(y_val);

    let template = model.clone();
    let eval_grad = |w: &Array1<T>| -> Result<(f64, Array1<T>)> {
        let m = template.from_flat(w);
        let (l, g) = loss_and_gradient(&m, x_train, y_train_onehot.view(), gamma)?;
        Ok((l.as_f64(), g))
    };
    let eval_train = |w: &Array1<T>| -> Result<(f64, f64)> {
        loss_and_accuracy(&template.from_flat(w), x_train, y_train_onehot.view(), y_train, gamma)
    };
    let eval_val = |w: &Array1<T>| -> Result<(f64, f64)> {
        loss_and_accuracy(&template.from_flat(w), x_val, y_val_onehot.view(), y_val, gamma)
    };

    let restart_period = model.n_params();
    let mut w = model.to_flat();
    let (mut f_w, grad0) = eval_grad(&w)?;
    if !f_w.is_finite() {
        return Err(Error::Diverged(format!("initial training loss is {f_w}")));
    }
    let mut r = grad0.mapv(|g| -g);
    let mut p = r.clone();

    let mut history = TrainingHistory {
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        train_acc: Vec::new(),
        val_acc: Vec::new(),
        best_epoch: 0,
        stop_reason: StopReason::MaxEpochs,
    };
    let mut monitor = EarlyStopping::new(cfg.max_fail);
    let mut snapshot = w.clone();

    let mut success = true;
    let mut lambda = cfg.lambda;
    let mut lambda_bar = 0.0f64;
    let mut delta = 0.0f64;
    let mut k = 0usize;

    if dot_f64(&r, &r).sqrt() < GRAD_TOLERANCE {
        history.stop_reason = StopReason::GradientConverged;
        return Ok((template.from_flat(&w), history));
    }

    for epoch in 1..=cfg.max_epochs {
        k += 1;
        let p_norm2 = dot_f64(&p, &p);
        if p_norm2 == 0.0 {
            history.stop_reason = StopReason::GradientConverged;
            break;
        }
        if success {
            let sigma_k = cfg.sigma / p_norm2.sqrt();
            let w_pert = &w + &p.mapv(|v| v * T::cast(sigma_k));
            let (_, grad_pert) = eval_grad(&w_pert)?;
            // E'(w) = −r, so the σ-difference is (grad_pert + r)/σ
            let s = (&grad_pert + &r) / T::cast(sigma_k);
            delta = dot_f64(&p, &s);
        }
        delta += (lambda - lambda_bar) * p_norm2;
        if delta <= 0.0 {
            // make the local curvature estimate positive definite
            lambda_bar = 2.0 * (lambda - delta / p_norm2);
            delta = -delta + lambda * p_norm2;
            lambda = lambda_bar;
        }
        let mu = dot_f64(&p, &r);
        if mu == 0.0 {
            // stale conjugate direction; restart along steepest descent
            p = r.clone();
            record_epoch(&mut history, &mut monitor, &mut snapshot, &w, epoch, f_w, &eval_train, &eval_val)?;
            if monitor.should_stop() {
                history.stop_reason = StopReason::EarlyStop;
                break;
            }
            continue;
        }
        let alpha = mu / delta;
        let w_candidate = &w + &p.mapv(|v| v * T::cast(alpha));
        let f_candidate = eval_train(&w_candidate).map(|(l, _)| l).unwrap_or(f64::NAN);
        let comparison = if f_candidate.is_finite() {
            2.0 * delta * (f_w - f_candidate) / (mu * mu)
        } else {
            -1.0
        };

        if comparison >= 0.0 {
            w = w_candidate;
            let (f_new, grad_new) = eval_grad(&w)?;
            f_w = f_new;
            let r_new = grad_new.mapv(|g| -g);
            lambda_bar = 0.0;
            success = true;
            if k.is_multiple_of(restart_period) {
                p = r_new.clone();
            } else {
                let beta = (dot_f64(&r_new, &r_new) - dot_f64(&r_new, &r)) / mu;
                p = &r_new + &p.mapv(|v| v * T::cast(beta));
            }
            r = r_new;
            if comparison >= 0.75 {
                lambda *= 0.25;
            }
        } else {
            lambda_bar = lambda;
            success = false;
        }
        if comparison < 0.25 {
            lambda += delta * (1.0 - comparison) / p_norm2;
        }
        lambda = lambda.min(1e100);

        if !f_w.is_finite() {
            return Err(Error::Diverged(format!("training loss became {f_w} at epoch {epoch}")));
        }
        record_epoch(&mut history, &mut monitor, &mut snapshot, &w, epoch, f_w, &eval_train, &eval_val)?;
        if monitor.should_stop() {
            history.stop_reason = StopReason::EarlyStop;
            break;
        }
        if dot_f64(&r, &r).sqrt() < GRAD_TOLERANCE {
            history.stop_reason = StopReason::GradientConverged;
            break;
        }
    }

    history.best_epoch = monitor.best_epoch();
    let final_params = if history.best_epoch > 0 { &snapshot } else { &w };
    Ok((template.from_flat(final_params), history))
}

/// Loss/accuracy evaluation of a flat parameter vector.
type EvalFn<'a, T> = &'a dyn Fn(&Array1<T>) -> Result<(f64, f64)>;

#[allow(clippy::too_many_arguments)]
fn record_epoch<T: Scalar>(
    history: &mut TrainingHistory,
    monitor: &mut EarlyStopping,
    snapshot: &mut Array1<T>,
    w: &Array1<T>,
    epoch: usize,
    train_loss: f64,
    eval_train: EvalFn<'_, T>,
    eval_val: EvalFn<'_, T>,
) -> Result<()> {
    let (_, train_acc) = eval_train(w)?;
    let (val_loss, val_acc) = eval_val(w)?;
    if !val_loss.is_finite() {
        return Err(Error::Diverged(format!(
            "validation loss became {val_loss} at epoch {epoch}"
        )));
    }
    history.train_loss.push(train_loss);
    history.val_loss.push(val_loss);
    history.train_acc.push(train_acc);
    history.val_acc.push(val_acc);
    if monitor.observe(epoch, val_loss) {
        snapshot.assign(w);
    }
    Ok(())
}
