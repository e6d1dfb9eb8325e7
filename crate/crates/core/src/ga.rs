//! Genetic-algorithm wrapper search for a fixed-size feature subset, scored
//! by cross-validated linear-classifier accuracy.
//!
//! Chromosomes are fixed-cardinality index sets, so no cardinality penalty is
//! needed. Fitness evaluation is deterministic (one fold plan per run, no RNG
//! inside the evaluator), which makes scores independent of evaluation order:
//! results are bit-identical under any thread count.

use crate::data::{stratified_kfold, FeatureSubset, FoldPlan, Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::linear::{lda_fit, lda_predict, nb_fit, nb_predict};
use crate::rng::{mix_seed, rng_from};
use crate::scalar::Scalar;
use ndarray::{ArrayView2, Axis};
use rand::seq::index::sample as index_sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitnessEvaluator {
    Lda,
    Nb,
    MeanOfBoth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub subset_size: usize,
    pub crossover_rate: f64,
    /// Per-gene replacement probability.
    pub mutation_rate: f64,
    pub tournament_size: usize,
    pub elite_count: usize,
    pub fitness_folds: usize,
    pub evaluator: FitnessEvaluator,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 150,
            generations: 250,
            subset_size: 50,
            crossover_rate: 0.9,
            mutation_rate: 0.02,
            tournament_size: 3,
            elite_count: 2,
            fitness_folds: 3,
            evaluator: FitnessEvaluator::MeanOfBoth,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if self.population_size < 2 {
            problems.push(format!(
                "ga.population_size must be at least 2, got {}",
                self.population_size
            ));
        }
        if self.subset_size == 0 {
            problems.push("ga.subset_size must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            problems.push(format!(
                "ga.crossover_rate must be in [0,1], got {}",
                self.crossover_rate
            ));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            problems.push(format!(
                "ga.mutation_rate must be in [0,1], got {}",
                self.mutation_rate
            ));
        }
        if self.tournament_size == 0 {
            problems.push("ga.tournament_size must be at least 1".into());
        }
        if self.elite_count >= self.population_size {
            problems.push(format!(
                "ga.elite_count {} must be below population_size {}",
                self.elite_count, self.population_size
            ));
        }
        if self.fitness_folds < 2 {
            problems.push(format!(
                "ga.fitness_folds must be at least 2, got {}",
                self.fitness_folds
            ));
        }
        problems
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best: FeatureSubset,
}

/// Per-generation trace; with elitism the best fitness never decreases.
#[derive(Clone, Debug, Default, Serialize)]
pub struct GaHistory {
    pub generations: Vec<GenerationStats>,
}

/// Mean stratified CV accuracy of the configured evaluator on the subset's
/// columns. Uses the fold plan derived from `cfg.seed`, identical to the one
/// `ga_select` uses internally.
pub fn fitness<T: Scalar>(
    subset: &FeatureSubset,
    data: &LabeledDataset<T>,
    cfg: &GaConfig,
) -> Result<f64> {
    let plan = fitness_fold_plan(&data.labels, cfg)?;
    fitness_with_plan(subset, data, cfg.evaluator, &plan)
}

fn fitness_fold_plan(labels: &[Label], cfg: &GaConfig) -> Result<FoldPlan> {
    stratified_kfold(labels, cfg.fitness_folds, mix_seed(cfg.seed, "ga_fitness", 0))
}

fn accuracy(pred: &[Label], truth: &[Label]) -> f64 {
    let correct = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    correct as f64 / truth.len() as f64
}

fn fitness_with_plan<T: Scalar>(
    subset: &FeatureSubset,
    data: &LabeledDataset<T>,
    evaluator: FitnessEvaluator,
    plan: &FoldPlan,
) -> Result<f64> {
    let restricted = data.values.select(Axis(1), subset.indices());
    let mut total = 0.0;
    for f in 0..plan.k {
        let train_idx = plan.train_indices(f);
        let test_idx = plan.fold_indices(f);
        let x_train = restricted.select(Axis(0), &train_idx);
        let y_train: Vec<Label> = train_idx.iter().map(|&i| data.labels[i]).collect();
        let x_test = restricted.select(Axis(0), &test_idx);
        let y_test: Vec<Label> = test_idx.iter().map(|&i| data.labels[i]).collect();
        total += fold_accuracy(x_train.view(), &y_train, x_test.view(), &y_test, evaluator)?;
    }
    Ok(total / plan.k as f64)
}

fn fold_accuracy<T: Scalar>(
    x_train: ArrayView2<T>,
    y_train: &[Label],
    x_test: ArrayView2<T>,
    y_test: &[Label],
    evaluator: FitnessEvaluator,
) -> Result<f64> {
    let lda_acc = |x_train: ArrayView2<T>, x_test: ArrayView2<T>| -> Result<f64> {
        let m = lda_fit(x_train, y_train)?;
        let (pred, _) = lda_predict(&m, x_test)?;
        Ok(accuracy(&pred, y_test))
    };
    let nb_acc = |x_train: ArrayView2<T>, x_test: ArrayView2<T>| -> Result<f64> {
        let m = nb_fit(x_train, y_train)?;
        let (pred, _) = nb_predict(&m, x_test)?;
        Ok(accuracy(&pred, y_test))
    };
    match evaluator {
        FitnessEvaluator::Lda => lda_acc(x_train, x_test),
        FitnessEvaluator::Nb => nb_acc(x_train, x_test),
        FitnessEvaluator::MeanOfBoth => {
            Ok((lda_acc(x_train, x_test)? + nb_acc(x_train, x_test)?) / 2.0)
        }
    }
}

/// Subset-preserving crossover: genes shared by both parents are always
/// inherited; the remaining slots are drawn from the symmetric difference.
pub fn crossover(
    parent_a: &FeatureSubset,
    parent_b: &FeatureSubset,
    seed: u64,
) -> (FeatureSubset, FeatureSubset) {
    debug_assert_eq!(parent_a.len(), parent_b.len());
    debug_assert_eq!(parent_a.universe_size(), parent_b.universe_size());
    let shared: Vec<usize> = parent_a
        .indices()
        .iter()
        .copied()
        .filter(|&g| parent_b.contains(g))
        .collect();
    let pool: Vec<usize> = parent_a
        .indices()
        .iter()
        .chain(parent_b.indices())
        .copied()
        .filter(|&g| !(parent_a.contains(g) && parent_b.contains(g)))
        .collect();
    let free = parent_a.len() - shared.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let child = |rng: &mut ChaCha8Rng| {
        let mut genes = shared.clone();
        genes.extend(
            index_sample(rng, pool.len(), free)
                .into_iter()
                .map(|i| pool[i]),
        );
        FeatureSubset::new(genes, parent_a.universe_size()).expect("crossover preserves validity")
    };
    let a = child(&mut rng);
    let b = child(&mut rng);
    (a, b)
}

/// Replace exactly one uniformly chosen gene with an index outside the
/// subset. Used to break up duplicate offspring.
fn force_mutate_one(subset: &FeatureSubset, universe_size: usize, seed: u64) -> FeatureSubset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut genes = subset.indices().to_vec();
    let candidates: Vec<usize> = (0..universe_size)
        .filter(|j| !subset.contains(*j))
        .collect();
    if candidates.is_empty() {
        return subset.clone();
    }
    let slot = rng.random_range(0..genes.len());
    genes[slot] = candidates[rng.random_range(0..candidates.len())];
    FeatureSubset::new(genes, universe_size).expect("forced mutation preserves validity")
}

/// Each gene is independently replaced (with probability `rate`) by an index
/// drawn uniformly from those not in the input subset and not already chosen
/// as a replacement, so cardinality is always preserved.
pub fn mutate(subset: &FeatureSubset, universe_size: usize, rate: f64, seed: u64) -> FeatureSubset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut excluded = vec![false; universe_size];
    for &g in subset.indices() {
        excluded[g] = true;
    }
    let mut genes: Vec<usize> = subset.indices().to_vec();
    for gene in genes.iter_mut() {
        if rng.random::<f64>() >= rate {
            continue;
        }
        let candidates: Vec<usize> = (0..universe_size).filter(|&j| !excluded[j]).collect();
        if candidates.is_empty() {
            break;
        }
        let replacement = candidates[rng.random_range(0..candidates.len())];
        excluded[replacement] = true;
        *gene = replacement;
    }
    FeatureSubset::new(genes, universe_size).expect("mutation preserves validity")
}

/// Run the full GA: evaluate, copy elites, tournament-select, cross, mutate.
/// Returns the best-ever chromosome and the per-generation history.
/// Expects standardized data with both classes present.
pub fn ga_select<T: Scalar>(
    data: &LabeledDataset<T>,
    cfg: &GaConfig,
) -> Result<(FeatureSubset, GaHistory)> {
    let problems = cfg.validate();
    if !problems.is_empty() {
        return Err(Error::InvalidConfig(problems));
    }
    let universe = data.n_features();
    if cfg.subset_size > universe {
        return Err(Error::InvalidConfig(vec![format!(
            "ga.subset_size {} exceeds feature count {universe}",
            cfg.subset_size
        )]));
    }

    let plan = fitness_fold_plan(&data.labels, cfg)?;
    let mut rng = rng_from(cfg.seed, "ga_loop", 0);
    let mut population: Vec<FeatureSubset> = (0..cfg.population_size)
        .map(|_| {
            let genes = index_sample(&mut rng, universe, cfg.subset_size).into_vec();
            FeatureSubset::new(genes, universe).expect("sampled subset is valid")
        })
        .collect();

    let mut cache: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut history = GaHistory::default();
    let mut best_ever: Option<(FeatureSubset, f64)> = None;

    for generation in 0..=cfg.generations {
        let scores = evaluate_population(&population, data, cfg.evaluator, &plan, &mut cache)?;
        let mut ranked: Vec<usize> = (0..population.len()).collect();
        ranked.sort_by(|&i, &j| scores[j].partial_cmp(&scores[i]).unwrap().then(i.cmp(&j)));
        let gen_best = ranked[0];
        if best_ever
            .as_ref()
            .is_none_or(|(_, f)| scores[gen_best] > *f)
        {
            best_ever = Some((population[gen_best].clone(), scores[gen_best]));
        }
        history.generations.push(GenerationStats {
            generation,
            best_fitness: best_ever.as_ref().unwrap().1,
            mean_fitness: scores.iter().sum::<f64>() / scores.len() as f64,
            best: best_ever.as_ref().unwrap().0.clone(),
        });

        // a full-universe subset is the only possible chromosome
        if generation == cfg.generations || cfg.subset_size == universe {
            break;
        }

        // duplicate offspring are perturbed until distinct: once the
        // population starts converging, clones would otherwise crowd out
        // exploration entirely
        let mut next: Vec<FeatureSubset> = Vec::with_capacity(cfg.population_size);
        let mut taken: HashSet<Vec<usize>> = HashSet::new();
        let admit = |child: FeatureSubset,
                         next: &mut Vec<FeatureSubset>,
                         taken: &mut HashSet<Vec<usize>>,
                         rng: &mut ChaCha8Rng| {
            let mut child = child;
            for _ in 0..32 {
                if !taken.contains(child.indices()) {
                    break;
                }
                child = force_mutate_one(&child, universe, rng.random::<u64>());
            }
            taken.insert(child.indices().to_vec());
            next.push(child);
        };
        for &i in ranked.iter().take(cfg.elite_count) {
            if taken.insert(population[i].indices().to_vec()) {
                next.push(population[i].clone());
            }
        }
        while next.len() < cfg.population_size {
            let pa = tournament(&population, &scores, cfg.tournament_size, &mut rng);
            let pb = tournament(&population, &scores, cfg.tournament_size, &mut rng);
            let (mut ca, mut cb) = if rng.random::<f64>() < cfg.crossover_rate {
                crossover(&population[pa], &population[pb], rng.random::<u64>())
            } else {
                (population[pa].clone(), population[pb].clone())
            };
            ca = mutate(&ca, universe, cfg.mutation_rate, rng.random::<u64>());
            cb = mutate(&cb, universe, cfg.mutation_rate, rng.random::<u64>());
            admit(ca, &mut next, &mut taken, &mut rng);
            if next.len() < cfg.population_size {
                admit(cb, &mut next, &mut taken, &mut rng);
            }
        }
        population = next;
    }

    let (best, _) = best_ever.expect("at least one generation was evaluated");
    Ok((best, history))
}

fn tournament(
    population: &[FeatureSubset],
    scores: &[f64],
    size: usize,
    rng: &mut ChaCha8Rng,
) -> usize {
    let mut winner = rng.random_range(0..population.len());
    for _ in 1..size {
        let challenger = rng.random_range(0..population.len());
        if scores[challenger] > scores[winner] {
            winner = challenger;
        }
    }
    winner
}

fn evaluate_population<T: Scalar>(
    population: &[FeatureSubset],
    data: &LabeledDataset<T>,
    evaluator: FitnessEvaluator,
    plan: &FoldPlan,
    cache: &mut HashMap<Vec<usize>, f64>,
) -> Result<Vec<f64>> {
    let mut pending: Vec<&FeatureSubset> = Vec::new();
    let mut seen: HashMap<&[usize], ()> = HashMap::new();
    for subset in population {
        if !cache.contains_key(subset.indices()) && seen.insert(subset.indices(), ()).is_none() {
            pending.push(subset);
        }
    }
    let fresh: Vec<(Vec<usize>, Result<f64>)> = pending
        .par_iter()
        .map(|s| {
            (
                s.indices().to_vec(),
                fitness_with_plan(s, data, evaluator, plan),
            )
        })
        .collect();
    for (key, score) in fresh {
        cache.insert(key, score?);
    }
    Ok(population
        .iter()
        .map(|s| cache[s.indices()])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{fit_standardizer, LabeledDataset};
    use ndarray::Array2;
    use rand_distr::{Distribution, StandardNormal};

    fn subset(v: &[usize], universe: usize) -> FeatureSubset {
        FeatureSubset::new(v.to_vec(), universe).unwrap()
    }

    /// `n` per class, `d` features; `planted` features get a `shift`-sized
    /// class separation, the rest are standard normal noise.
    fn planted_fixture(
        n_per_class: usize,
        d: usize,
        planted: &[usize],
        shift: f64,
        seed: u64,
    ) -> LabeledDataset<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 2 * n_per_class;
        let mut flat = Vec::with_capacity(n * d);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let is_case = i < n_per_class;
            labels.push(if is_case { Label::Case } else { Label::Control });
            for j in 0..d {
                let z: f64 = StandardNormal.sample(&mut rng);
                let mu = if is_case && planted.contains(&j) { shift } else { 0.0 };
                flat.push(mu + z);
            }
        }
        LabeledDataset::new(
            Array2::from_shape_vec((n, d), flat).unwrap(),
            labels,
            (0..d).map(|j| format!("p{j}")).collect(),
            (0..n).map(|i| format!("s{i}")).collect(),
        )
        .unwrap()
    }

    #[test]
    fn crossover_of_identical_parents_is_identity() {
        let p = subset(&[1, 4, 7], 10);
        let (a, b) = crossover(&p, &p, 3);
        assert_eq!(a, p);
        assert_eq!(b, p);
    }

    #[test]
    fn crossover_draws_from_the_union() {
        let pa = subset(&[1, 2, 3], 10);
        let pb = subset(&[4, 5, 6], 10);
        for seed in 0..20 {
            let (a, b) = crossover(&pa, &pb, seed);
            for child in [&a, &b] {
                assert_eq!(child.len(), 3);
                assert!(child.indices().iter().all(|g| (1..=6).contains(g)));
            }
        }
    }

    #[test]
    fn crossover_always_inherits_shared_genes() {
        let pa = subset(&[1, 2, 5], 10);
        let pb = subset(&[1, 2, 8], 10);
        for seed in 0..20 {
            let (a, b) = crossover(&pa, &pb, seed);
            for child in [&a, &b] {
                assert!(child.contains(1) && child.contains(2));
            }
        }
    }

    #[test]
    fn mutate_rate_zero_is_identity() {
        let p = subset(&[0, 3, 9], 12);
        assert_eq!(mutate(&p, 12, 0.0, 5), p);
    }

    #[test]
    fn mutate_rate_one_forces_the_complement() {
        let p = subset(&[0, 1], 4);
        for seed in 0..20 {
            assert_eq!(mutate(&p, 4, 1.0, seed).indices(), &[2, 3]);
        }
    }

    #[test]
    fn mutate_preserves_cardinality_and_uniqueness() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for trial in 0..1000 {
            let universe = rng.random_range(3..40);
            let size = rng.random_range(1..=universe.min(10));
            let genes = index_sample(&mut rng, universe, size).into_vec();
            let p = FeatureSubset::new(genes, universe).unwrap();
            let rate = rng.random::<f64>();
            let m = mutate(&p, universe, rate, trial);
            assert_eq!(m.len(), size);
            assert!(m.indices().windows(2).all(|w| w[0] < w[1]));
            assert!(m.indices().iter().all(|&g| g < universe));
        }
    }

    #[test]
    fn fitness_is_perfect_on_a_separable_fixture() {
        let data = planted_fixture(30, 6, &[0, 2], 50.0, 9);
        let cfg = GaConfig {
            subset_size: 2,
            seed: 5,
            ..GaConfig::default()
        };
        let f = fitness(&subset(&[0, 2], 6), &data, &cfg).unwrap();
        assert_eq!(f, 1.0);
    }

    #[test]
    fn fitness_is_chance_level_under_shuffled_labels() {
        let mut data = planted_fixture(100, 10, &[0], 3.0, 13);
        // destroy the signal by reassigning labels independently of rows
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for l in data.labels.iter_mut() {
            *l = if rng.random::<bool>() { Label::Case } else { Label::Control };
        }
        let counts = data.class_counts();
        assert!(counts[0] >= 3 && counts[1] >= 3);
        let cfg = GaConfig {
            subset_size: 1,
            seed: 5,
            ..GaConfig::default()
        };
        let f = fitness(&subset(&[0], 10), &data, &cfg).unwrap();
        assert!((f - 0.5).abs() <= 0.1, "chance-level fitness was {f}");
    }

    #[test]
    fn fitness_is_deterministic() {
        let data = planted_fixture(20, 8, &[1], 2.0, 3);
        let cfg = GaConfig {
            subset_size: 3,
            seed: 42,
            ..GaConfig::default()
        };
        let s = subset(&[1, 3, 5], 8);
        assert_eq!(
            fitness(&s, &data, &cfg).unwrap(),
            fitness(&s, &data, &cfg).unwrap()
        );
    }

    #[test]
    fn ga_returns_the_full_set_when_forced() {
        let data = planted_fixture(10, 4, &[0], 2.0, 1);
        let cfg = GaConfig {
            population_size: 6,
            generations: 50,
            subset_size: 4,
            seed: 2,
            ..GaConfig::default()
        };
        let (best, history) = ga_select(&data, &cfg).unwrap();
        assert_eq!(best, FeatureSubset::full(4));
        assert_eq!(history.generations.len(), 1);
    }

    #[test]
    fn ga_recovers_planted_features() {
        let planted = [7usize, 23, 41, 66, 88];
        let raw = planted_fixture(100, 100, &planted, 2.0, 31);
        let std = fit_standardizer(&raw).unwrap();
        let data = std.apply(&raw).unwrap();
        let cfg = GaConfig {
            population_size: 40,
            generations: 60,
            subset_size: 5,
            seed: 1234,
            ..GaConfig::default()
        };
        let (best, history) = ga_select(&data, &cfg).unwrap();
        let recovered = best
            .indices()
            .iter()
            .filter(|g| planted.contains(g))
            .count();
        assert!(recovered >= 4, "recovered only {recovered} of {planted:?}: {best:?}");

        // the planted subset itself must outscore sampled alternatives
        let planted_fitness = fitness(&subset(&planted, 100), &data, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let alt = index_sample(&mut rng, 100, 5).into_vec();
            let alt_fitness = fitness(&subset(&alt, 100), &data, &cfg).unwrap();
            assert!(planted_fitness >= alt_fitness);
        }
        // final best clearly beats a random-subset baseline
        let baseline = fitness(
            &subset(&index_sample(&mut rng, 100, 5).into_vec(), 100),
            &data,
            &cfg,
        )
        .unwrap();
        let final_best = history.generations.last().unwrap().best_fitness;
        assert!(final_best >= baseline + 0.2);
    }

    #[test]
    fn ga_history_best_fitness_is_monotone() {
        let data = planted_fixture(30, 20, &[2, 11], 1.0, 8);
        let cfg = GaConfig {
            population_size: 10,
            generations: 15,
            subset_size: 3,
            seed: 6,
            ..GaConfig::default()
        };
        let (_, history) = ga_select(&data, &cfg).unwrap();
        assert_eq!(history.generations.len(), 16);
        for w in history.generations.windows(2) {
            assert!(w[1].best_fitness >= w[0].best_fitness);
        }
    }

    #[test]
    fn ga_is_deterministic() {
        let data = planted_fixture(20, 12, &[4], 1.5, 10);
        let cfg = GaConfig {
            population_size: 8,
            generations: 10,
            subset_size: 3,
            seed: 77,
            ..GaConfig::default()
        };
        let (a, ha) = ga_select(&data, &cfg).unwrap();
        let (b, hb) = ga_select(&data, &cfg).unwrap();
        assert_eq!(a, b);
        let fa: Vec<f64> = ha.generations.iter().map(|g| g.best_fitness).collect();
        let fb: Vec<f64> = hb.generations.iter().map(|g| g.best_fitness).collect();
        assert_eq!(fa, fb);
    }

    #[test]
    fn ga_rejects_oversized_subset() {
        let data = planted_fixture(10, 4, &[0], 1.0, 1);
        let cfg = GaConfig {
            subset_size: 5,
            ..GaConfig::default()
        };
        assert!(matches!(
            ga_select(&data, &cfg).unwrap_err(),
            Error::InvalidConfig(_)
        ));
    }
}
