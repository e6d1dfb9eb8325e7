//! Synthetic proteome generator: log-normal intensity matrices with a
//! configurable number of planted informative peptides, used for desk-scale
//! verification in place of the clinical cohort.

use crate::data::{Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::rng::rng_from;
use crate::scalar::Scalar;
use ndarray::Array2;
use rand::seq::index::sample as index_sample;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Log-normal base intensity model. Feature log-locations are spread around
/// `ln(median)` so columns have heterogeneous scales.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    pub median_intensity: f64,
    pub log_sigma: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            median_intensity: 1e4,
            log_sigma: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_cases: usize,
    pub n_controls: usize,
    pub n_features: usize,
    pub n_informative: usize,
    /// Case-class mean shift for informative features, in units of the
    /// log-space standard deviation.
    pub effect_size: f64,
    pub noise: NoiseModel,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_cases: 82,
            n_controls: 345,
            n_features: 5605,
            n_informative: 50,
            effect_size: 1.5,
            noise: NoiseModel::default(),
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if self.n_cases == 0 || self.n_controls == 0 {
            problems.push("gen: both class counts must be positive".into());
        }
        if self.n_features == 0 {
            problems.push("gen: feature count must be positive".into());
        }
        if self.n_informative > self.n_features {
            problems.push(format!(
                "gen: n_informative {} exceeds n_features {}",
                self.n_informative, self.n_features
            ));
        }
        if self.effect_size <= 0.0 {
            problems.push(format!(
                "gen: effect_size must be positive, got {}",
                self.effect_size
            ));
        }
        if self.noise.median_intensity <= 0.0 || self.noise.log_sigma <= 0.0 {
            problems.push("gen: noise model parameters must be positive".into());
        }
        problems
    }
}

/// Generate a dataset plus the sorted planted-feature indices. Cases come
/// first in row order; all intensities are positive and finite.
pub fn generate<T: Scalar>(cfg: &SynthConfig) -> Result<(LabeledDataset<T>, Vec<usize>)> {
    let problems = cfg.validate();
    if !problems.is_empty() {
        return Err(Error::InvalidConfig(problems));
    }
    let mut rng = rng_from(cfg.seed, "synth", 0);

    let mut planted = index_sample(&mut rng, cfg.n_features, cfg.n_informative).into_vec();
    planted.sort_unstable();
    let mut informative = vec![false; cfg.n_features];
    for &j in &planted {
        informative[j] = true;
    }

    let mu0 = cfg.noise.median_intensity.ln();
    let feature_mu: Vec<f64> = (0..cfg.n_features)
        .map(|_| mu0 + 0.5 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
        .collect();

    let n = cfg.n_cases + cfg.n_controls;
    let shift = cfg.effect_size * cfg.noise.log_sigma;
    let mut flat: Vec<T> = Vec::with_capacity(n * cfg.n_features);
    let mut labels = Vec::with_capacity(n);
    let mut sample_ids = Vec::with_capacity(n);
    for i in 0..n {
        let is_case = i < cfg.n_cases;
        labels.push(if is_case { Label::Case } else { Label::Control });
        sample_ids.push(if is_case {
            format!("case-{:04}", i + 1)
        } else {
            format!("control-{:04}", i - cfg.n_cases + 1)
        });
        for j in 0..cfg.n_features {
            let z: f64 = StandardNormal.sample(&mut rng);
            let mut log_v = feature_mu[j] + cfg.noise.log_sigma * z;
            if is_case && informative[j] {
                log_v += shift;
            }
            flat.push(T::cast(log_v.exp()));
        }
    }

    let values = Array2::from_shape_vec((n, cfg.n_features), flat)
        .map_err(|e| Error::InvalidData(e.to_string()))?;
    let feature_ids = (0..cfg.n_features).map(|j| format!("pep-{:05}", j + 1)).collect();
    let data = LabeledDataset::new(values, labels, feature_ids, sample_ids)?;
    Ok((data, planted))
}
