#![allow(dead_code)]

pub mod goldens;
pub mod placement;

use nefmath::corpus::{generate, Corpus, CorpusConfig};
use nefmath::features::SimplifyParams;
use nefmath::nefclass::{FuzzyModel, InferenceConfig};
use nefmath::train::ga::GaConfig;
use nefmath::train::{train_initial, LabeledSample, DEFAULT_CALIBRATION_TARGET};

pub fn small_corpus(seed: u64, train: usize, test: usize) -> Corpus {
    generate(&CorpusConfig { seed, train_count: train, test_count: test, ..CorpusConfig::default() })
}

/// A quickly trained model over `corpus`'s train split.
pub fn quick_model(corpus: &Corpus, generations: usize) -> (FuzzyModel, Vec<LabeledSample>) {
    let features = SimplifyParams::default();
    let samples = corpus.samples(nefmath::corpus::Split::Train, &features);
    let template = FuzzyModel::untrained(corpus.classes.clone(), features, InferenceConfig::default());
    let ga = GaConfig { population_size: 12, generations, rng_seed: 3, ..GaConfig::default() };
    let trained = train_initial(&ga, DEFAULT_CALIBRATION_TARGET, &samples, &template).expect("training succeeds");
    (trained.model, samples)
}

/// Random valid model with `f` inputs, `c` classes and up to `max_rules`
/// distinct rules over `terms` terms per input.
pub fn random_model(rng: &mut impl rand::Rng, f: usize, c: usize, terms: usize, max_rules: usize) -> FuzzyModel {
    use nefmath::nefclass::{FuzzyPartition, FuzzyRule, GaussianMF};
    let partition = FuzzyPartition {
        dims: (0..f).map(|_| (0..terms).map(|_| GaussianMF::new(rng.gen(), rng.gen_range(0.05..0.6))).collect()).collect(),
    };
    let wanted = rng.gen_range(1..=max_rules);
    let mut rules: Vec<FuzzyRule> = Vec::new();
    for _ in 0..wanted * 4 {
        if rules.len() == wanted {
            break;
        }
        let r = FuzzyRule { antecedent: (0..f).map(|_| rng.gen_range(0..terms)).collect(), consequent: rng.gen_range(0..c) };
        if rules.iter().all(|q| q.antecedent != r.antecedent) {
            rules.push(r);
        }
    }
    FuzzyModel {
        input_count: f,
        class_labels: (0..c).map(|i| format!("c{i}")).collect(),
        partition,
        rules,
        features: SimplifyParams { epsilon: 0.02, target_vertices: f.div_ceil(2).max(1) },
        inference: InferenceConfig { terms_per_input: terms, ..InferenceConfig::default() },
    }
}
