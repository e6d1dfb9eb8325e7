//! Outer stratified cross-validation: per fold, split off an inner
//! validation subset, fit the standardizer on the inner-training rows only,
//! train the MLP with early stopping, and score the held-out fold. Folds are
//! independent and run in parallel; per-fold sub-seeds keep results identical
//! under any thread count.

use crate::data::{fit_standardizer, stratified_kfold, stratified_split, LabeledDataset};
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::mlp::{init_model, scg_train, MlpModel, TrainConfig, TrainingHistory};
use crate::resample::{replicate_oversample, smote, SmoteConfig};
use crate::rng::mix_seed;
use crate::scalar::Scalar;
use crate::data::Standardizer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BalanceMethod {
    Smote,
    Replicate,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BalancePlacement {
    /// Balance the whole dataset before splitting into folds. This mirrors
    /// the published totals but lets synthetic neighbors leak across folds.
    BeforeCv,
    /// Balance the training partition of each fold only; leakage-safe.
    WithinFold,
}

/// Balancing applied inside each fold (placement `within_fold`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FoldBalance {
    pub method: BalanceMethod,
    pub k_neighbors: usize,
}

#[derive(Clone, Debug)]
pub struct CvConfig {
    pub k: usize,
    pub hidden_layers: Vec<usize>,
    pub train: TrainConfig,
    pub fold_balance: Option<FoldBalance>,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            k: 10,
            hidden_layers: vec![60, 60, 60],
            train: TrainConfig::default(),
            fold_balance: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FoldOutcome {
    pub fold: usize,
    pub metrics: MetricsReport,
    pub history: TrainingHistory,
}

/// Per-fold reports plus the aggregate; the final fold's metrics are the
/// headline test report.
#[derive(Clone, Debug, Serialize)]
pub struct CvResult {
    pub k: usize,
    pub folds: Vec<FoldOutcome>,
    pub mean_accuracy: f64,
    pub final_report: MetricsReport,
}

/// Everything `cross_validate` produces: the result document plus the final
/// fold's trained model and standardizer for persistence.
pub struct CvArtifacts<T: Scalar> {
    pub result: CvResult,
    pub final_model: MlpModel<T>,
    pub final_standardizer: Standardizer<T>,
}

struct FoldArtifacts<T: Scalar> {
    outcome: FoldOutcome,
    model: MlpModel<T>,
    standardizer: Standardizer<T>,
}

pub fn cross_validate<T: Scalar>(
    data: &LabeledDataset<T>,
    cfg: &CvConfig,
) -> Result<CvArtifacts<T>> {
    let plan = stratified_kfold(&data.labels, cfg.k, mix_seed(cfg.seed, "cv_plan", 0))?;
    let mut fold_results: Vec<FoldArtifacts<T>> = (0..cfg.k)
        .into_par_iter()
        .map(|f| run_fold(data, cfg, &plan.fold_indices(f), &plan.train_indices(f), f))
        .collect::<Result<Vec<_>>>()?;

    let mean_accuracy = fold_results
        .iter()
        .map(|r| r.outcome.metrics.accuracy)
        .sum::<f64>()
        / cfg.k as f64;
    let last = fold_results.pop().expect("k >= 2 folds");
    let final_report = last.outcome.metrics.clone();
    let mut folds: Vec<FoldOutcome> = fold_results.into_iter().map(|r| r.outcome).collect();
    folds.push(last.outcome);

    Ok(CvArtifacts {
        result: CvResult {
            k: cfg.k,
            folds,
            mean_accuracy,
            final_report,
        },
        final_model: last.model,
        final_standardizer: last.standardizer,
    })
}

fn run_fold<T: Scalar>(
    data: &LabeledDataset<T>,
    cfg: &CvConfig,
    test_idx: &[usize],
    train_idx: &[usize],
    fold: usize,
) -> Result<FoldArtifacts<T>> {
    let fold_seed = mix_seed(cfg.seed, "cv_fold", fold as u64);
    let mut train_ds = data.select_rows(train_idx);
    let test_ds = data.select_rows(test_idx);

    if let Some(balance) = &cfg.fold_balance {
        train_ds = match balance.method {
            BalanceMethod::Smote => {
                let counts = train_ds.class_counts();
                let cfg = SmoteConfig {
                    k_neighbors: balance.k_neighbors,
                    target_minority_count: counts[0].max(counts[1]),
                    seed: mix_seed(fold_seed, "balance", 0),
                };
                smote(&train_ds, &cfg)?
            }
            BalanceMethod::Replicate => {
                replicate_oversample(&train_ds, mix_seed(fold_seed, "balance", 0))?
            }
            BalanceMethod::None => train_ds,
        };
    }

    // inner split for early stopping; tiny folds fall back to validating on
    // the training rows themselves
    let (fit_ds, val_ds) = match stratified_split(
        &train_ds.labels,
        cfg.train.validation_fraction,
        mix_seed(fold_seed, "inner_split", 0),
    ) {
        Ok((fit_idx, val_idx)) => (train_ds.select_rows(&fit_idx), train_ds.select_rows(&val_idx)),
        Err(Error::TooFewClassSamples { .. }) | Err(Error::InvalidData(_)) => {
            log::warn!("fold {fold}: training partition too small for an inner split, validating on the training rows");
            (train_ds.clone(), train_ds.clone())
        }
        Err(e) => return Err(e),
    };

    let standardizer = fit_standardizer(&fit_ds)?;
    let fit_z = standardizer.apply(&fit_ds)?;
    let val_z = standardizer.apply(&val_ds)?;
    let test_z = standardizer.apply(&test_ds)?;

    let mut layer_sizes = vec![data.n_features()];
    layer_sizes.extend_from_slice(&cfg.hidden_layers);
    layer_sizes.push(2);
    let model = init_model::<T>(&layer_sizes, mix_seed(cfg.train.seed, "init", fold as u64))?;

    let (trained, history) = scg_train(
        model,
        fit_z.values.view(),
        &fit_z.labels,
        val_z.values.view(),
        &val_z.labels,
        &cfg.train,
    )?;

    let probs = trained.predict_proba(test_z.values.view())?;
    let probs64 = probs.mapv(|v| v.as_f64());
    let metrics = MetricsReport::from_probabilities(probs64.view(), &test_z.labels)?;

    Ok(FoldArtifacts {
        outcome: FoldOutcome {
            fold,
            metrics,
            history,
        },
        model: trained,
        standardizer,
    })
}
