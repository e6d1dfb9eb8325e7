//! Pipeline CLI: generate synthetic cohorts, balance classes, select
//! features, train and evaluate models. Configuration comes from an optional
//! JSON file; command-line flags override file values. Every stage writes
//! its artifacts into the output directory and refuses to overwrite existing
//! files unless `--force` is given. On failure a machine-readable error
//! record goes to stderr and the exit code is nonzero.

use cardiopep::cv::{BalanceMethod, BalancePlacement};
use cardiopep::ga::FitnessEvaluator;
use cardiopep::pipeline::{
    cmd_balance, cmd_evaluate, cmd_gen, cmd_run_all, cmd_select, cmd_train, PipelineConfig,
    StageIo,
};
use cardiopep::synth::SynthConfig;
use cardiopep::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "cardiopep", version, about = "Urinary-peptide CHD classification pipeline")]
struct Cli {
    /// Output directory for stage artifacts
    #[arg(long, global = true, env = "CARDIOPEP_OUT", default_value = "cardiopep-out")]
    out_dir: PathBuf,

    /// JSON pipeline configuration file; flags override file values
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; every randomized stage derives its own sub-seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for GA fitness and CV folds (0 = all cores); results
    /// are identical for any value
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Overwrite existing outputs
    #[arg(long, global = true)]
    force: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Smote,
    Replicate,
    None,
}

impl From<MethodArg> for BalanceMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Smote => BalanceMethod::Smote,
            MethodArg::Replicate => BalanceMethod::Replicate,
            MethodArg::None => BalanceMethod::None,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PlacementArg {
    BeforeCv,
    WithinFold,
}

impl From<PlacementArg> for BalancePlacement {
    fn from(p: PlacementArg) -> Self {
        match p {
            PlacementArg::BeforeCv => BalancePlacement::BeforeCv,
            PlacementArg::WithinFold => BalancePlacement::WithinFold,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EvaluatorArg {
    Lda,
    Nb,
    MeanOfBoth,
}

impl From<EvaluatorArg> for FitnessEvaluator {
    fn from(e: EvaluatorArg) -> Self {
        match e {
            EvaluatorArg::Lda => FitnessEvaluator::Lda,
            EvaluatorArg::Nb => FitnessEvaluator::Nb,
            EvaluatorArg::MeanOfBoth => FitnessEvaluator::MeanOfBoth,
        }
    }
}

#[derive(Args, Default)]
struct BalanceArgs {
    /// Balancing method
    #[arg(long)]
    method: Option<MethodArg>,
    /// Balance once before CV (published protocol) or inside each fold
    #[arg(long)]
    placement: Option<PlacementArg>,
    /// SMOTE neighbor count
    #[arg(long)]
    k_neighbors: Option<usize>,
    /// Measure SMOTE distances on standardized features
    #[arg(long)]
    standardized_distances: bool,
}

impl BalanceArgs {
    fn apply(&self, pc: &mut PipelineConfig) {
        if let Some(m) = self.method {
            pc.balance.method = m.into();
        }
        if let Some(p) = self.placement {
            pc.balance.placement = p.into();
        }
        if let Some(k) = self.k_neighbors {
            pc.balance.k_neighbors = k;
        }
        if self.standardized_distances {
            pc.balance.standardized_distances = true;
        }
    }
}

#[derive(Args, Default)]
struct GaArgs {
    /// GA population size
    #[arg(long)]
    population: Option<usize>,
    /// GA generation count
    #[arg(long)]
    generations: Option<usize>,
    /// Number of features to select
    #[arg(long)]
    subset_size: Option<usize>,
    #[arg(long)]
    crossover_rate: Option<f64>,
    #[arg(long)]
    mutation_rate: Option<f64>,
    #[arg(long)]
    tournament_size: Option<usize>,
    #[arg(long)]
    elite_count: Option<usize>,
    /// Folds of the fitness cross-validation
    #[arg(long)]
    fitness_folds: Option<usize>,
    /// Fitness evaluator
    #[arg(long)]
    evaluator: Option<EvaluatorArg>,
}

impl GaArgs {
    fn apply(&self, pc: &mut PipelineConfig) {
        if let Some(v) = self.population {
            pc.ga.population_size = v;
        }
        if let Some(v) = self.generations {
            pc.ga.generations = v;
        }
        if let Some(v) = self.subset_size {
            pc.ga.subset_size = v;
        }
        if let Some(v) = self.crossover_rate {
            pc.ga.crossover_rate = v;
        }
        if let Some(v) = self.mutation_rate {
            pc.ga.mutation_rate = v;
        }
        if let Some(v) = self.tournament_size {
            pc.ga.tournament_size = v;
        }
        if let Some(v) = self.elite_count {
            pc.ga.elite_count = v;
        }
        if let Some(v) = self.fitness_folds {
            pc.ga.fitness_folds = v;
        }
        if let Some(e) = self.evaluator {
            pc.ga.evaluator = e.into();
        }
    }
}

#[derive(Args, Default)]
struct TrainArgs {
    /// Outer cross-validation fold count
    #[arg(long)]
    k_folds: Option<usize>,
    /// Hidden layer widths, comma separated (e.g. 60,60,60)
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long)]
    max_epochs: Option<usize>,
    /// Consecutive epochs without validation improvement before stopping
    #[arg(long)]
    max_fail: Option<usize>,
    /// Blend weight of the mean-squared-weights penalty
    #[arg(long)]
    regularization: Option<f64>,
    /// Fraction of each training partition held out for early stopping
    #[arg(long)]
    validation_fraction: Option<f64>,
}

impl TrainArgs {
    fn apply(&self, pc: &mut PipelineConfig) {
        if let Some(v) = self.k_folds {
            pc.k_folds = v;
        }
        if let Some(v) = &self.hidden {
            pc.hidden_layers = v.clone();
        }
        if let Some(v) = self.max_epochs {
            pc.train.max_epochs = v;
        }
        if let Some(v) = self.max_fail {
            pc.train.max_fail = v;
        }
        if let Some(v) = self.regularization {
            pc.train.regularization = v;
        }
        if let Some(v) = self.validation_fraction {
            pc.train.validation_fraction = v;
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic peptide cohort with planted biomarkers
    Gen {
        #[arg(long, default_value_t = 82)]
        cases: usize,
        #[arg(long, default_value_t = 345)]
        controls: usize,
        #[arg(long, default_value_t = 5605)]
        features: usize,
        #[arg(long, default_value_t = 50)]
        informative: usize,
        /// Case-class shift of informative features, in log-space stddevs
        #[arg(long, default_value_t = 1.5)]
        effect_size: f64,
        #[arg(long, default_value_t = 1e4)]
        median_intensity: f64,
        #[arg(long, default_value_t = 1.0)]
        log_sigma: f64,
    },
    /// Balance class counts (SMOTE or replication)
    Balance {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        balance: BalanceArgs,
    },
    /// GA wrapper feature selection
    Select {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        ga: GaArgs,
    },
    /// Cross-validated MLP training on a selected subset
    Train {
        #[arg(long)]
        input: PathBuf,
        /// Subset CSV produced by `select`
        #[arg(long)]
        subset: PathBuf,
        #[command(flatten)]
        balance: BalanceArgs,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Score a stored model container on a dataset
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
    /// Chain balance, selection, and training; emit the headline report
    RunAll {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        balance: BalanceArgs,
        #[command(flatten)]
        ga: GaArgs,
        #[command(flatten)]
        train: TrainArgs,
    },
}

fn load_config(path: Option<&PathBuf>) -> Result<PipelineConfig> {
    match path {
        None => Ok(PipelineConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)?;
            let cfg: PipelineConfig = serde_json::from_str(&text).map_err(|e| {
                Error::InvalidConfig(vec![format!("config file {}: {e}", p.display())])
            })?;
            Ok(cfg)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let mut pc = load_config(cli.config.as_ref())?;
    if let Some(seed) = cli.seed {
        pc.master_seed = seed;
    }
    let io = StageIo::new(&cli.out_dir, cli.force);

    match &cli.command {
        Command::Gen {
            cases,
            controls,
            features,
            informative,
            effect_size,
            median_intensity,
            log_sigma,
        } => {
            let cfg = SynthConfig {
                n_cases: *cases,
                n_controls: *controls,
                n_features: *features,
                n_informative: *informative,
                effect_size: *effect_size,
                noise: cardiopep::NoiseModel {
                    median_intensity: *median_intensity,
                    log_sigma: *log_sigma,
                },
                seed: pc.master_seed,
            };
            let out = cmd_gen::<f64>(&cfg, &io)?;
            println!("wrote {}", out.dataset_path.display());
            println!("wrote {}", out.planted_path.display());
        }
        Command::Balance { input, balance } => {
            balance.apply(&mut pc);
            pc.validate()?;
            let out = cmd_balance::<f64>(input, &pc, &io)?;
            println!("wrote {}", out.display());
        }
        Command::Select { input, ga } => {
            ga.apply(&mut pc);
            pc.validate()?;
            let out = cmd_select::<f64>(input, &pc, &io)?;
            println!("wrote {}", out.subset_path.display());
            println!("wrote {}", out.history_path.display());
            let last = out.history.generations.last().expect("history non-empty");
            println!(
                "best fitness {:.4} over {} generations",
                last.best_fitness,
                out.history.generations.len()
            );
        }
        Command::Train {
            input,
            subset,
            balance,
            train,
        } => {
            balance.apply(&mut pc);
            train.apply(&mut pc);
            pc.validate()?;
            let out = cmd_train::<f64>(input, subset, &pc, &io)?;
            println!("wrote {}", out.model_path.display());
            println!("wrote {}", out.report_path.display());
            println!(
                "mean CV accuracy {:.4}, final-fold accuracy {:.4}",
                out.result.mean_accuracy, out.result.final_report.accuracy
            );
        }
        Command::Evaluate { model, input } => {
            let out = cmd_evaluate::<f64>(model, input, &io)?;
            println!("wrote {}", out.report_path.display());
            println!(
                "accuracy {:.4}, macro AUC {:.4}, micro AUC {:.4}",
                out.report.metrics.accuracy,
                out.report.metrics.macro_auc,
                out.report.metrics.micro_auc
            );
        }
        Command::RunAll {
            input,
            balance,
            ga,
            train,
        } => {
            balance.apply(&mut pc);
            ga.apply(&mut pc);
            train.apply(&mut pc);
            pc.validate()?;
            let out = cmd_run_all::<f64>(input, &pc, &io)?;
            println!("wrote {}", out.report_path.display());
            println!("wrote {}", out.model_path.display());
            let r = &out.report;
            println!("mean CV accuracy {:.4}", r.cv.mean_accuracy);
            println!(
                "final fold: accuracy {:.4}, MCC {:.4}, kappa {:.4}, macro AUC {:.4}, micro AUC {:.4}",
                r.final_fold.accuracy,
                r.final_fold.mcc,
                r.final_fold.kappa,
                r.final_fold.macro_auc,
                r.final_fold.micro_auc
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();

    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::json!({"error": {"kind": "threads", "message": e.to_string()}})
            );
            return ExitCode::FAILURE;
        }
    };

    match pool.install(|| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::json!({"error": {"kind": e.kind(), "message": e.to_string()}})
            );
            ExitCode::FAILURE
        }
    }
}
