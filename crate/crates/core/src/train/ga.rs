//! Genetic-algorithm fitting of the membership-function parameters.
//!
//! A chromosome is the flat `(center, sigma)` vector of the partition.
//! Rules are not evolved: every fitness evaluation regenerates them from the
//! training samples under the decoded partition and scores plain accuracy.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::features::FeatureVector;
use crate::nefclass::{generate_rules, predict_index, FuzzyModel, FuzzyPartition, SIGMA_MAX, SIGMA_MIN};

pub type LabeledSample = (FeatureVector, usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chromosome {
    pub genes: Vec<f64>,
}

impl Chromosome {
    pub fn from_partition(partition: &FuzzyPartition) -> Self {
        Self { genes: partition.to_params() }
    }

    /// Decodes into a copy of `template`, clamping centers to [0, 1] and
    /// widths to `[SIGMA_MIN, SIGMA_MAX]`.
    pub fn decode(&self, template: &FuzzyPartition) -> Result<FuzzyPartition, ModelError> {
        let expected = 2 * template.total_terms();
        if self.genes.len() != expected {
            return Err(ModelError::ChromosomeLength { expected, got: self.genes.len() });
        }
        let mut p = template.clone();
        p.set_params(&self.genes);
        Ok(p)
    }

    fn clamp_in_place(&mut self) {
        for (i, g) in self.genes.iter_mut().enumerate() {
            *g = if i % 2 == 0 { g.clamp(0.0, 1.0) } else { g.clamp(SIGMA_MIN, SIGMA_MAX) };
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub tournament_k: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub mutation_sigma: f64,
    pub elitism_count: usize,
    pub rng_seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 40,
            generations: 60,
            tournament_k: 3,
            crossover_rate: 0.9,
            mutation_rate: 0.1,
            mutation_sigma: 0.05,
            elitism_count: 2,
            rng_seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let ok = self.population_size >= 2
            && self.elitism_count >= 1
            && self.elitism_count <= self.population_size
            && self.tournament_k >= 1
            && (0.0..=1.0).contains(&self.crossover_rate)
            && (0.0..=1.0).contains(&self.mutation_rate)
            && self.mutation_sigma >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(ModelError::Invalid(format!("invalid GA configuration {self:?}")))
        }
    }
}

#[derive(Debug, Clone)]
pub struct GaResult {
    pub model: FuzzyModel,
    pub best_fitness: f64,
    /// Best-ever fitness after each evaluated generation; entry 0 is the
    /// initial population.
    pub history: Vec<f64>,
}

fn accuracy(partition: &FuzzyPartition, model: &FuzzyModel, train_set: &[LabeledSample]) -> f64 {
    if train_set.is_empty() {
        return 0.0;
    }
    let rules = generate_rules(train_set, partition, model.inference.max_rules_per_class);
    let correct = train_set
        .iter()
        .filter(|(x, c)| predict_index(partition, &rules, model.inference.tnorm, model.class_count(), &x.0) == *c)
        .count();
    correct as f64 / train_set.len() as f64
}

/// Training accuracy of the partition encoded by `chromosome`, with rules
/// regenerated from `train_set`.
pub fn fitness(model: &FuzzyModel, chromosome: &Chromosome, train_set: &[LabeledSample]) -> Result<f64, ModelError> {
    let partition = chromosome.decode(&model.partition)?;
    Ok(accuracy(&partition, model, train_set))
}

/// Model with `partition` and rules regenerated from `train_set`.
pub fn rebuild_model(template: &FuzzyModel, partition: FuzzyPartition, train_set: &[LabeledSample]) -> FuzzyModel {
    let mut model = template.clone();
    model.rules = generate_rules(train_set, &partition, model.inference.max_rules_per_class);
    model.partition = partition;
    model
}

fn tournament<'a>(rng: &mut ChaCha8Rng, pop: &'a [Chromosome], fit: &[f64], k: usize) -> &'a Chromosome {
    let mut best = rng.gen_range(0..pop.len());
    for _ in 1..k {
        let c = rng.gen_range(0..pop.len());
        if fit[c] > fit[best] || (fit[c] == fit[best] && c < best) {
            best = c;
        }
    }
    &pop[best]
}

pub fn run_ga(config: &GaConfig, train_set: &[LabeledSample], initial: &FuzzyModel) -> Result<GaResult, ModelError> {
    config.validate()?;
    let seed_chrom = Chromosome::from_partition(&initial.partition);
    if config.generations == 0 {
        let f = fitness(initial, &seed_chrom, train_set)?;
        return Ok(GaResult {
            model: rebuild_model(initial, initial.partition.clone(), train_set),
            best_fitness: f,
            history: vec![f],
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let noise = Normal::new(0.0, config.mutation_sigma.max(f64::MIN_POSITIVE)).expect("finite sigma");

    let mut population = Vec::with_capacity(config.population_size);
    population.push(seed_chrom.clone());
    while population.len() < config.population_size {
        let mut c = seed_chrom.clone();
        for g in &mut c.genes {
            *g += rng.sample(noise);
        }
        c.clamp_in_place();
        population.push(c);
    }

    let evaluate = |pop: &[Chromosome]| -> Vec<f64> {
        pop.par_iter()
            .map(|c| accuracy(&c.decode(&initial.partition).expect("length fixed"), initial, train_set))
            .collect()
    };

    let mut fit = evaluate(&population);
    let mut best_idx = argmax(&fit);
    let mut best = (population[best_idx].clone(), fit[best_idx]);
    let mut history = vec![best.1];

    for _ in 0..config.generations {
        let mut ranked: Vec<usize> = (0..population.len()).collect();
        ranked.sort_by(|&a, &b| fit[b].total_cmp(&fit[a]).then(a.cmp(&b)));
        let mut next: Vec<Chromosome> = ranked.iter().take(config.elitism_count).map(|&i| population[i].clone()).collect();
        while next.len() < config.population_size {
            let a = tournament(&mut rng, &population, &fit, config.tournament_k);
            let b = tournament(&mut rng, &population, &fit, config.tournament_k);
            let mut child = if rng.gen_bool(config.crossover_rate) {
                Chromosome {
                    genes: a
                        .genes
                        .iter()
                        .zip(&b.genes)
                        .map(|(x, y)| {
                            let w: f64 = rng.gen();
                            w * x + (1.0 - w) * y
                        })
                        .collect(),
                }
            } else {
                [a, b].choose(&mut rng).copied().expect("two parents").clone()
            };
            for g in &mut child.genes {
                if rng.gen_bool(config.mutation_rate) {
                    *g += rng.sample(noise);
                }
            }
            child.clamp_in_place();
            next.push(child);
        }
        population = next;
        fit = evaluate(&population);
        best_idx = argmax(&fit);
        if fit[best_idx] > best.1 {
            best = (population[best_idx].clone(), fit[best_idx]);
        }
        history.push(best.1);
    }

    let partition = best.0.decode(&initial.partition)?;
    Ok(GaResult { model: rebuild_model(initial, partition, train_set), best_fitness: best.1, history })
}

fn argmax(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b })
}
