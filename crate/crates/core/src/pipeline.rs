//! Stage orchestration: each stage reads its inputs from disk, writes its
//! artifacts into an output directory, and embeds the resolved configuration
//! and master seed for provenance. Stages refuse to overwrite existing
//! outputs unless forced, and re-running a stage with identical inputs and
//! seed reproduces its outputs byte for byte.

use crate::cv::{cross_validate, BalanceMethod, BalancePlacement, CvConfig, CvResult, FoldBalance};
use crate::data::{fit_standardizer, load_csv, save_csv, FeatureSubset, LabeledDataset};
use crate::error::{Error, Result};
use crate::ga::{ga_select, GaConfig, GaHistory};
use crate::metrics::{MetricsReport, RocPoint};
use crate::mlp::{TrainConfig, TrainingHistory};
use crate::persist::{save_model, ModelBundle};
use crate::resample::{replicate_oversample, smote_with_metric, SmoteConfig};
use crate::rng::mix_seed;
use crate::scalar::Scalar;
use crate::synth::{generate, SynthConfig};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BalanceConfig {
    pub method: BalanceMethod,
    pub placement: BalancePlacement,
    pub k_neighbors: usize,
    /// Measure SMOTE neighbor distances on standardized features.
    pub standardized_distances: bool,
}

impl Default for BalanceConfig {
    fn default() -> Self {
        Self {
            method: BalanceMethod::Smote,
            placement: BalancePlacement::BeforeCv,
            k_neighbors: 5,
            standardized_distances: false,
        }
    }
}

/// The complete pipeline configuration. Defaults mirror the published
/// settings: SMOTE balancing before CV, GA 150×250 selecting 50 features,
/// a 60-60-60 tansig network with γ = 0.1 and max_fail = 6, 10-fold CV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub master_seed: u64,
    pub k_folds: usize,
    pub hidden_layers: Vec<usize>,
    pub balance: BalanceConfig,
    pub ga: GaConfig,
    pub train: TrainConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            master_seed: 42,
            k_folds: 10,
            hidden_layers: vec![60, 60, 60],
            balance: BalanceConfig::default(),
            ga: GaConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Copy with every sub-seed derived from the master seed; stages resolve
    /// before running so embedded configs show the effective seeds.
    pub fn resolved(&self) -> Self {
        let mut cfg = self.clone();
        cfg.ga.seed = mix_seed(self.master_seed, "ga", 0);
        cfg.train.seed = mix_seed(self.master_seed, "train", 0);
        cfg
    }

    /// Collects every violated field at once.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.k_folds < 2 {
            problems.push(format!("k_folds must be at least 2, got {}", self.k_folds));
        }
        if self.hidden_layers.is_empty() || self.hidden_layers.contains(&0) {
            problems.push(format!(
                "hidden_layers must be non-empty positive widths, got {:?}",
                self.hidden_layers
            ));
        }
        if self.balance.k_neighbors == 0 {
            problems.push("balance.k_neighbors must be at least 1".into());
        }
        problems.extend(self.ga.validate());
        problems.extend(self.train.validate());
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems))
        }
    }
}

/// Output directory plus the overwrite policy shared by every stage.
#[derive(Clone, Debug)]
pub struct StageIo {
    pub out_dir: PathBuf,
    pub force: bool,
}

impl StageIo {
    pub fn new(out_dir: impl Into<PathBuf>, force: bool) -> Self {
        Self {
            out_dir: out_dir.into(),
            force,
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn guard(&self, name: &str) -> Result<PathBuf> {
        let p = self.path(name);
        if p.exists() && !self.force {
            return Err(Error::OutputExists(p));
        }
        Ok(p)
    }
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[derive(Serialize)]
struct Provenance<'a, C: Serialize> {
    schema_version: u32,
    stage: &'a str,
    master_seed: u64,
    config: &'a C,
}

fn write_provenance<C: Serialize>(
    io: &StageIo,
    stage: &str,
    master_seed: u64,
    config: &C,
) -> Result<()> {
    let path = io.guard(&format!("{stage}.provenance.json"))?;
    write_json(
        &path,
        &Provenance {
            schema_version: REPORT_SCHEMA_VERSION,
            stage,
            master_seed,
            config,
        },
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n_samples: usize,
    pub n_cases: usize,
    pub n_controls: usize,
    pub n_features: usize,
}

impl DatasetSummary {
    fn of<T: Scalar>(data: &LabeledDataset<T>) -> Self {
        let counts = data.class_counts();
        Self {
            n_samples: data.n_samples(),
            n_cases: counts[0],
            n_controls: counts[1],
            n_features: data.n_features(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SelectionSummary {
    pub subset_size: usize,
    pub generations: usize,
    pub best_fitness: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FoldSummary {
    pub fold: usize,
    pub accuracy: f64,
    pub best_epoch: usize,
    pub epochs: usize,
    pub stop_reason: crate::mlp::StopReason,
}

#[derive(Clone, Debug, Serialize)]
pub struct CvSummary {
    pub k: usize,
    pub mean_accuracy: f64,
    pub folds: Vec<FoldSummary>,
}

impl CvSummary {
    fn of(result: &CvResult) -> Self {
        Self {
            k: result.k,
            mean_accuracy: result.mean_accuracy,
            folds: result
                .folds
                .iter()
                .map(|f| FoldSummary {
                    fold: f.fold,
                    accuracy: f.metrics.accuracy,
                    best_epoch: f.history.best_epoch,
                    epochs: f.history.epochs(),
                    stop_reason: f.history.stop_reason,
                })
                .collect(),
        }
    }
}

/// The `run-all` headline document; field layout is frozen in
/// `docs/formats.md`.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub master_seed: u64,
    pub config: PipelineConfig,
    pub dataset: DatasetSummary,
    pub balanced: DatasetSummary,
    pub selection: SelectionSummary,
    pub cv: CvSummary,
    pub final_fold: MetricsReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrainReport {
    pub schema_version: u32,
    pub master_seed: u64,
    pub config: PipelineConfig,
    pub cv: CvSummary,
    pub final_fold: MetricsReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    pub master_seed: u64,
    pub dataset: DatasetSummary,
    pub subset_size: usize,
    pub metrics: MetricsReport,
}

pub struct GenOutputs {
    pub dataset_path: PathBuf,
    pub planted_path: PathBuf,
}

/// Generate a synthetic dataset plus the planted-index sidecar.
pub fn cmd_gen<T: Scalar>(cfg: &SynthConfig, io: &StageIo) -> Result<GenOutputs> {
    let problems = cfg.validate();
    if !problems.is_empty() {
        return Err(Error::InvalidConfig(problems));
    }
    fs::create_dir_all(&io.out_dir)?;
    let dataset_path = io.guard("dataset.csv")?;
    let planted_path = io.guard("planted.csv")?;
    let (data, planted) = generate::<T>(cfg)?;
    save_csv(&data, &dataset_path)?;

    let mut w = csv::Writer::from_path(&planted_path)
        .map_err(|e| Error::InvalidData(e.to_string()))?;
    w.write_record(["feature_index", "feature_id"])
        .map_err(|e| Error::InvalidData(e.to_string()))?;
    for &j in &planted {
        w.write_record([j.to_string(), data.feature_ids[j].clone()])
            .map_err(|e| Error::InvalidData(e.to_string()))?;
    }
    w.flush()?;
    write_provenance(io, "gen", cfg.seed, cfg)?;
    Ok(GenOutputs {
        dataset_path,
        planted_path,
    })
}

fn balance_dataset<T: Scalar>(
    data: &LabeledDataset<T>,
    pc: &PipelineConfig,
) -> Result<LabeledDataset<T>> {
    match pc.balance.method {
        BalanceMethod::None => Ok(data.clone()),
        BalanceMethod::Replicate => {
            replicate_oversample(data, mix_seed(pc.master_seed, "replicate", 0))
        }
        BalanceMethod::Smote => {
            let counts = data.class_counts();
            let cfg = SmoteConfig {
                k_neighbors: pc.balance.k_neighbors,
                target_minority_count: counts[0].max(counts[1]),
                seed: mix_seed(pc.master_seed, "smote", 0),
            };
            let std = if pc.balance.standardized_distances {
                Some(fit_standardizer(data)?)
            } else {
                None
            };
            smote_with_metric(data, &cfg, std.as_ref())
        }
    }
}

/// Balance the dataset per configuration. With placement `within_fold` (or
/// method `none`) the data passes through unchanged; either way the output
/// is rewritten in canonical CSV form.
pub fn cmd_balance<T: Scalar>(input: &Path, pc: &PipelineConfig, io: &StageIo) -> Result<PathBuf> {
    let pc = pc.resolved();
    pc.validate()?;
    fs::create_dir_all(&io.out_dir)?;
    let out = io.guard("balanced.csv")?;
    let data = load_csv::<T>(input)?;
    let balanced = match pc.balance.placement {
        BalancePlacement::BeforeCv => balance_dataset(&data, &pc)?,
        BalancePlacement::WithinFold => data,
    };
    save_csv(&balanced, &out)?;
    write_provenance(io, "balance", pc.master_seed, &pc)?;
    Ok(out)
}

pub struct SelectOutputs {
    pub subset: FeatureSubset,
    pub subset_path: PathBuf,
    pub history_path: PathBuf,
    pub history: GaHistory,
}

/// GA feature selection on the standardized input dataset.
pub fn cmd_select<T: Scalar>(input: &Path, pc: &PipelineConfig, io: &StageIo) -> Result<SelectOutputs> {
    let pc = pc.resolved();
    pc.validate()?;
    fs::create_dir_all(&io.out_dir)?;
    let subset_path = io.guard("subset.csv")?;
    let history_path = io.guard("ga_history.csv")?;

    let data = load_csv::<T>(input)?;
    let std = fit_standardizer(&data)?;
    let standardized = std.apply(&data)?;
    let (subset, history) = ga_select(&standardized, &pc.ga)?;

    write_subset_csv(&subset, &data.feature_ids, &subset_path)?;
    let mut w = csv::Writer::from_path(&history_path)
        .map_err(|e| Error::InvalidData(e.to_string()))?;
    w.write_record(["generation", "best_fitness", "mean_fitness"])
        .map_err(|e| Error::InvalidData(e.to_string()))?;
    for g in &history.generations {
        w.write_record([
            g.generation.to_string(),
            format!("{}", g.best_fitness),
            format!("{}", g.mean_fitness),
        ])
        .map_err(|e| Error::InvalidData(e.to_string()))?;
    }
    w.flush()?;
    write_provenance(io, "select", pc.master_seed, &pc)?;
    Ok(SelectOutputs {
        subset,
        subset_path,
        history_path,
        history,
    })
}

fn write_subset_csv(subset: &FeatureSubset, feature_ids: &[String], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::InvalidData(e.to_string()))?;
    w.write_record(["rank", "feature_index", "feature_id"])
        .map_err(|e| Error::InvalidData(e.to_string()))?;
    for (rank, &j) in subset.indices().iter().enumerate() {
        w.write_record([(rank + 1).to_string(), j.to_string(), feature_ids[j].clone()])
            .map_err(|e| Error::InvalidData(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Read a subset CSV back, validating ids against the dataset's columns.
pub fn load_subset_csv(path: &Path, feature_ids: &[String]) -> Result<FeatureSubset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::InvalidData(format!("cannot read subset CSV: {e}")))?;
    let mut indices = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::InvalidData(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(Error::Csv {
                line,
                msg: format!("subset rows need 3 fields, got {}", record.len()),
            });
        }
        let index: usize = record[1].parse().map_err(|_| Error::Csv {
            line,
            msg: format!("bad feature_index `{}`", &record[1]),
        })?;
        if index >= feature_ids.len() {
            return Err(Error::Csv {
                line,
                msg: format!("feature_index {index} out of range ({})", feature_ids.len()),
            });
        }
        if feature_ids[index] != record[2] {
            return Err(Error::Csv {
                line,
                msg: format!(
                    "feature_id mismatch at index {index}: subset says `{}`, dataset says `{}`",
                    &record[2], feature_ids[index]
                ),
            });
        }
        indices.push(index);
    }
    FeatureSubset::new(indices, feature_ids.len())
}

pub struct TrainOutputs {
    pub model_path: PathBuf,
    pub report_path: PathBuf,
    pub result: CvResult,
}

/// Cross-validated training on the subset-restricted dataset. Writes the
/// final-fold model container, per-fold learning curves, and the CV report.
pub fn cmd_train<T: Scalar>(
    input: &Path,
    subset_path: &Path,
    pc: &PipelineConfig,
    io: &StageIo,
) -> Result<TrainOutputs> {
    let pc = pc.resolved();
    pc.validate()?;
    fs::create_dir_all(&io.out_dir)?;
    let model_path = io.guard("model.json")?;
    let report_path = io.guard("cv_report.json")?;

    let data = load_csv::<T>(input)?;
    let subset = load_subset_csv(subset_path, &data.feature_ids)?;
    let (artifacts, _) = run_cv(&data, &subset, &pc, io)?;

    save_model(
        &ModelBundle {
            model: artifacts.final_model,
            standardizer: artifacts.final_standardizer,
            subset,
            master_seed: pc.master_seed,
        },
        &model_path,
    )?;
    write_json(
        &report_path,
        &TrainReport {
            schema_version: REPORT_SCHEMA_VERSION,
            master_seed: pc.master_seed,
            config: pc.clone(),
            cv: CvSummary::of(&artifacts.result),
            final_fold: artifacts.result.final_report.clone(),
        },
    )?;
    write_provenance(io, "train", pc.master_seed, &pc)?;
    Ok(TrainOutputs {
        model_path,
        report_path,
        result: artifacts.result,
    })
}

fn run_cv<T: Scalar>(
    data: &LabeledDataset<T>,
    subset: &FeatureSubset,
    pc: &PipelineConfig,
    io: &StageIo,
) -> Result<(crate::cv::CvArtifacts<T>, Vec<PathBuf>)> {
    let restricted = data.select_features(subset)?;
    let fold_balance = match pc.balance.placement {
        BalancePlacement::WithinFold if pc.balance.method != BalanceMethod::None => {
            Some(FoldBalance {
                method: pc.balance.method,
                k_neighbors: pc.balance.k_neighbors,
            })
        }
        _ => None,
    };
    let cv_cfg = CvConfig {
        k: pc.k_folds,
        hidden_layers: pc.hidden_layers.clone(),
        train: pc.train.clone(),
        fold_balance,
        seed: mix_seed(pc.master_seed, "cv", 0),
    };
    let artifacts = cross_validate(&restricted, &cv_cfg)?;

    let mut curve_paths = Vec::with_capacity(pc.k_folds);
    for fold in &artifacts.result.folds {
        let name = format!("curves_fold_{:02}.csv", fold.fold);
        let path = io.guard(&name)?;
        write_curves_csv(&fold.history, &path)?;
        curve_paths.push(path);
    }
    Ok((artifacts, curve_paths))
}

fn write_curves_csv(history: &TrainingHistory, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::InvalidData(e.to_string()))?;
    w.write_record(["epoch", "train_loss", "val_loss", "train_acc", "val_acc"])
        .map_err(|e| Error::InvalidData(e.to_string()))?;
    for e in 0..history.epochs() {
        w.write_record([
            (e + 1).to_string(),
            format!("{}", history.train_loss[e]),
            format!("{}", history.val_loss[e]),
            format!("{}", history.train_acc[e]),
            format!("{}", history.val_acc[e]),
        ])
        .map_err(|e| Error::InvalidData(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn write_roc_csv(points: &[RocPoint], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::InvalidData(e.to_string()))?;
    w.write_record(["fpr", "tpr", "threshold"])
        .map_err(|e| Error::InvalidData(e.to_string()))?;
    for p in points {
        let threshold = p.threshold.map_or_else(|| "inf".to_owned(), |t| format!("{t}"));
        w.write_record([format!("{}", p.fpr), format!("{}", p.tpr), threshold])
            .map_err(|e| Error::InvalidData(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub struct EvaluateOutputs {
    pub report_path: PathBuf,
    pub report: EvaluationReport,
}

/// Score a stored model on a dataset; deterministic, so repeated runs
/// reproduce the report byte for byte.
pub fn cmd_evaluate<T: Scalar>(
    model_path: &Path,
    input: &Path,
    io: &StageIo,
) -> Result<EvaluateOutputs> {
    fs::create_dir_all(&io.out_dir)?;
    let report_path = io.guard("evaluation_report.json")?;
    let roc_case_path = io.guard("roc_case.csv")?;
    let roc_control_path = io.guard("roc_control.csv")?;

    let bundle: ModelBundle<T> = crate::persist::load_model(model_path)?;
    let data = load_csv::<T>(input)?;
    let restricted = data.select_features(&bundle.subset)?;
    let standardized = bundle.standardizer.apply(&restricted)?;
    let probs = bundle.model.predict_proba(standardized.values.view())?;
    let probs64 = probs.mapv(|v| v.as_f64());
    let metrics = MetricsReport::from_probabilities(probs64.view(), &standardized.labels)?;

    write_roc_csv(&metrics.roc.case, &roc_case_path)?;
    write_roc_csv(&metrics.roc.control, &roc_control_path)?;
    let report = EvaluationReport {
        schema_version: REPORT_SCHEMA_VERSION,
        master_seed: bundle.master_seed,
        dataset: DatasetSummary::of(&data),
        subset_size: bundle.subset.len(),
        metrics,
    };
    write_json(&report_path, &report)?;
    write_provenance(io, "evaluate", bundle.master_seed, &report.dataset)?;
    Ok(EvaluateOutputs {
        report_path,
        report,
    })
}

pub struct RunAllOutputs {
    pub report_path: PathBuf,
    pub report: RunReport,
    pub model_path: PathBuf,
}

/// Chain balance → select → train on one input dataset and emit the
/// headline report with the published tables' field set.
pub fn cmd_run_all<T: Scalar>(input: &Path, pc: &PipelineConfig, io: &StageIo) -> Result<RunAllOutputs> {
    let pc = pc.resolved();
    pc.validate()?;
    fs::create_dir_all(&io.out_dir)?;
    let report_path = io.guard("report.json")?;
    let model_path = io.guard("model.json")?;
    let subset_path = io.guard("subset.csv")?;
    let history_path = io.guard("ga_history.csv")?;
    let balanced_path = io.guard("balanced.csv")?;

    let data = load_csv::<T>(input)?;
    let dataset_summary = DatasetSummary::of(&data);

    let balanced = match pc.balance.placement {
        BalancePlacement::BeforeCv => balance_dataset(&data, &pc)?,
        BalancePlacement::WithinFold => data.clone(),
    };
    save_csv(&balanced, &balanced_path)?;
    let balanced_summary = DatasetSummary::of(&balanced);

    let std = fit_standardizer(&balanced)?;
    let standardized = std.apply(&balanced)?;
    let (subset, ga_history) = ga_select(&standardized, &pc.ga)?;
    write_subset_csv(&subset, &balanced.feature_ids, &subset_path)?;
    {
        let mut w = csv::Writer::from_path(&history_path)
            .map_err(|e| Error::InvalidData(e.to_string()))?;
        w.write_record(["generation", "best_fitness", "mean_fitness"])
            .map_err(|e| Error::InvalidData(e.to_string()))?;
        for g in &ga_history.generations {
            w.write_record([
                g.generation.to_string(),
                format!("{}", g.best_fitness),
                format!("{}", g.mean_fitness),
            ])
            .map_err(|e| Error::InvalidData(e.to_string()))?;
        }
        w.flush()?;
    }

    let (artifacts, _) = run_cv(&balanced, &subset, &pc, io)?;
    save_model(
        &ModelBundle {
            model: artifacts.final_model,
            standardizer: artifacts.final_standardizer,
            subset: subset.clone(),
            master_seed: pc.master_seed,
        },
        &model_path,
    )?;

    let last_gen = ga_history.generations.last().expect("ga history non-empty");
    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        master_seed: pc.master_seed,
        config: pc.clone(),
        dataset: dataset_summary,
        balanced: balanced_summary,
        selection: SelectionSummary {
            subset_size: subset.len(),
            generations: ga_history.generations.len(),
            best_fitness: last_gen.best_fitness,
        },
        cv: CvSummary::of(&artifacts.result),
        final_fold: artifacts.result.final_report.clone(),
    };
    write_json(&report_path, &report)?;
    write_provenance(io, "run_all", pc.master_seed, &pc)?;
    Ok(RunAllOutputs {
        report_path,
        report,
        model_path,
    })
}
