//! cardiopep: a reproducible pipeline for non-invasive coronary-heart-disease
//! classification from urinary peptide intensity profiles.
//!
//! The crate covers the full flow: CSV ingestion and standardization, class
//! balancing (SMOTE or minority replication), genetic-algorithm wrapper
//! feature selection scored by linear classifiers (LDA / pooled-variance
//! naive Bayes), a tanh MLP trained with scaled conjugate gradient and
//! validation early stopping, stratified k-fold evaluation with a complete
//! confusion/ROC/agreement metrics suite, and a synthetic-cohort generator
//! for desk-scale verification.
//!
//! All numeric code is generic over the [`scalar::Scalar`] float type;
//! `f64` aliases for the main types live at the crate root. Every random
//! choice flows from a master seed through [`rng::mix_seed`], so any stage
//! is reproducible in isolation and results are independent of thread count.

pub mod cv;
pub mod data;
pub mod error;
pub mod ga;
pub mod linear;
pub mod metrics;
pub mod mlp;
pub mod persist;
pub mod pipeline;
pub mod resample;
pub mod rng;
pub mod scalar;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use cv::{cross_validate, BalanceMethod, BalancePlacement, CvConfig, CvResult};
pub use data::{
    apply_standardizer, fit_standardizer, load_csv, save_csv, stratified_kfold, stratified_split,
    FeatureSubset, FoldPlan, Label, LabeledDataset, Standardizer,
};
pub use ga::{crossover, fitness, ga_select, mutate, FitnessEvaluator, GaConfig, GaHistory};
pub use linear::{lda_fit, lda_predict, nb_fit, nb_predict, LdaModel, NaiveBayesModel};
pub use metrics::{
    auc, auc_micro, class_metrics, confusion, kappa, mcc, roc_auc, roc_points, ConfusionMatrix,
    MetricsReport, RocPoint,
};
pub use mlp::{
    gradient, init_model, loss, loss_and_gradient, scg_train, tansig, EarlyStopping, MlpModel,
    StopReason, TrainConfig, TrainingHistory,
};
pub use persist::{load_model, save_model, ModelBundle};
pub use pipeline::{PipelineConfig, RunReport, StageIo};
pub use resample::{replicate_oversample, smote, SmoteConfig};
pub use synth::{generate, NoiseModel, SynthConfig};

/// Concrete `f64` instantiations, the default throughout the CLI.
pub type Dataset64 = data::LabeledDataset<f64>;
pub type Standardizer64 = data::Standardizer<f64>;
pub type Mlp64 = mlp::MlpModel<f64>;
pub type LdaModel64 = linear::LdaModel<f64>;
pub type NaiveBayes64 = linear::NaiveBayesModel<f64>;
pub type ModelBundle64 = persist::ModelBundle<f64>;

/// Concrete `f32` instantiations.
pub type Dataset32 = data::LabeledDataset<f32>;
pub type Standardizer32 = data::Standardizer<f32>;
pub type Mlp32 = mlp::MlpModel<f32>;
pub type LdaModel32 = linear::LdaModel<f32>;
pub type NaiveBayes32 = linear::NaiveBayesModel<f32>;
pub type ModelBundle32 = persist::ModelBundle<f32>;
