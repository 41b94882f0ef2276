//! NEFCLASS-style fuzzy classifier.
//!
//! Every input dimension carries a list of Gaussian membership functions
//! (its linguistic terms). A rule picks one term per dimension and names a
//! class; its activation is the t-norm of the memberships, and a class
//! score is the maximum activation over the rules that point at it.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::features::{FeatureVector, SimplifyParams};

/// Lower bound on every membership width.
pub const SIGMA_MIN: f64 = 1e-3;
pub const SIGMA_MAX: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMF {
    pub center: f64,
    pub sigma: f64,
}

impl GaussianMF {
    pub fn new(center: f64, sigma: f64) -> Self {
        Self { center, sigma }
    }

    /// Squared distance term `(x - c)^2 / (2 sigma^2)`.
    #[inline]
    pub(crate) fn exponent(&self, x: f64) -> f64 {
        let d = x - self.center;
        d * d / (2.0 * self.sigma * self.sigma)
    }
}

/// `exp(-(x - c)^2 / (2 sigma^2))`
#[inline]
pub fn mf_eval(mf: &GaussianMF, x: f64) -> f64 {
    (-mf.exponent(x)).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FuzzyPartition {
    pub dims: Vec<Vec<GaussianMF>>,
}

impl FuzzyPartition {
    /// `terms` evenly spaced centers on [0, 1] per dimension with
    /// `sigma = 1 / (2 (terms - 1))`.
    pub fn uniform(inputs: usize, terms: usize) -> Self {
        assert!(terms >= 1);
        let terms_row: Vec<GaussianMF> = if terms == 1 {
            vec![GaussianMF::new(0.5, 0.5)]
        } else {
            let sigma = 1.0 / (2.0 * (terms - 1) as f64);
            (0..terms).map(|j| GaussianMF::new(j as f64 / (terms - 1) as f64, sigma)).collect()
        };
        Self { dims: vec![terms_row; inputs] }
    }

    pub fn input_count(&self) -> usize {
        self.dims.len()
    }

    pub fn total_terms(&self) -> usize {
        self.dims.iter().map(Vec::len).sum()
    }

    /// Index of the term with the highest membership for `x` in dimension
    /// `d`; ties go to the lower index.
    pub fn best_term(&self, d: usize, x: f64) -> usize {
        let mut best = 0;
        let mut best_e = f64::INFINITY;
        for (j, mf) in self.dims[d].iter().enumerate() {
            let e = mf.exponent(x);
            if e < best_e {
                best = j;
                best_e = e;
            }
        }
        best
    }

    pub fn antecedent_for(&self, x: &[f64]) -> Vec<usize> {
        (0..self.dims.len()).map(|d| self.best_term(d, x[d])).collect()
    }

    /// Flattened `(center, sigma)` pairs, dimension-major.
    pub fn to_params(&self) -> Vec<f64> {
        self.dims.iter().flatten().flat_map(|mf| [mf.center, mf.sigma]).collect()
    }

    /// Overwrites the parameters from a flat vector, clamping into bounds.
    pub fn set_params(&mut self, params: &[f64]) {
        let mut it = params.chunks_exact(2);
        for mf in self.dims.iter_mut().flatten() {
            let pair = it.next().expect("parameter vector length matches partition");
            mf.center = pair[0].clamp(0.0, 1.0);
            mf.sigma = pair[1].clamp(SIGMA_MIN, SIGMA_MAX);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FuzzyRule {
    pub antecedent: Vec<usize>,
    pub consequent: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TNorm {
    #[default]
    Min,
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferenceConfig {
    pub tnorm: TNorm,
    pub terms_per_input: usize,
    pub max_rules_per_class: usize,
    pub reject_threshold: f64,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self { tnorm: TNorm::Min, terms_per_input: 5, max_rules_per_class: 3, reject_threshold: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyModel {
    pub input_count: usize,
    pub class_labels: Vec<String>,
    pub partition: FuzzyPartition,
    pub rules: Vec<FuzzyRule>,
    pub features: SimplifyParams,
    pub inference: InferenceConfig,
}

impl FuzzyModel {
    /// Model with a uniform partition and no rules.
    pub fn untrained(class_labels: Vec<String>, features: SimplifyParams, inference: InferenceConfig) -> Self {
        let input_count = features.feature_len();
        Self {
            input_count,
            partition: FuzzyPartition::uniform(input_count, inference.terms_per_input),
            class_labels,
            rules: Vec::new(),
            features,
            inference,
        }
    }

    pub fn class_count(&self) -> usize {
        self.class_labels.len()
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.class_labels.iter().position(|l| l == label)
    }

    /// Checks every structural invariant; the message names the first
    /// offending field.
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::Invalid(m));
        if !self.features.is_valid() {
            return bad("features: epsilon must be >= 0 and target_vertices >= 2".into());
        }
        if self.input_count != self.features.feature_len() {
            return bad(format!(
                "input_count {} differs from feature length {}",
                self.input_count,
                self.features.feature_len()
            ));
        }
        if self.partition.dims.len() != self.input_count {
            return bad(format!("partition has {} dimensions, expected {}", self.partition.dims.len(), self.input_count));
        }
        if self.class_labels.is_empty() {
            return bad("class_labels is empty".into());
        }
        let mut labels = std::collections::HashSet::new();
        for l in &self.class_labels {
            if !labels.insert(l) {
                return bad(format!("duplicate class label {l}"));
            }
        }
        for (d, terms) in self.partition.dims.iter().enumerate() {
            if terms.is_empty() {
                return bad(format!("partition/{d} has no terms"));
            }
            for (j, mf) in terms.iter().enumerate() {
                if !(0.0..=1.0).contains(&mf.center) {
                    return bad(format!("partition/{d}/{j}/center {} outside [0, 1]", mf.center));
                }
                if mf.sigma < SIGMA_MIN || !mf.sigma.is_finite() {
                    return bad(format!("partition/{d}/{j}/sigma {} below {SIGMA_MIN}", mf.sigma));
                }
            }
        }
        let mut seen = std::collections::HashSet::new();
        for (r, rule) in self.rules.iter().enumerate() {
            if rule.antecedent.len() != self.input_count {
                return bad(format!("rules/{r}/antecedent has length {}", rule.antecedent.len()));
            }
            for (d, &j) in rule.antecedent.iter().enumerate() {
                if j >= self.partition.dims[d].len() {
                    return bad(format!("rules/{r}/antecedent/{d} term {j} out of range"));
                }
            }
            if rule.consequent >= self.class_count() {
                return bad(format!("rules/{r}/consequent {} out of range", rule.consequent));
            }
            if !seen.insert(&rule.antecedent) {
                return bad(format!("rules/{r} duplicates an earlier antecedent"));
            }
        }
        if !(0.0..=1.0).contains(&self.inference.reject_threshold) {
            return bad("inference/reject_threshold outside [0, 1]".into());
        }
        Ok(())
    }

    fn check_dim(&self, x: &FeatureVector) -> Result<(), ModelError> {
        if x.len() != self.input_count {
            return Err(ModelError::DimensionMismatch { expected: self.input_count, got: x.len() });
        }
        Ok(())
    }

    /// Adds a rule for `class` whose antecedent is the best-matching term
    /// in every dimension of `x`. An existing rule with that antecedent is
    /// repointed at `class`.
    pub fn insert_rule_for_sample(&mut self, x: &FeatureVector, class: usize) -> Result<(), ModelError> {
        self.check_dim(x)?;
        let antecedent = self.partition.antecedent_for(&x.0);
        match self.rules.iter_mut().find(|r| r.antecedent == antecedent) {
            Some(rule) => rule.consequent = class,
            None => self.rules.push(FuzzyRule { antecedent, consequent: class }),
        }
        Ok(())
    }

    /// Appends a class with no rules and returns its index.
    pub fn add_class(&mut self, label: &str) -> usize {
        if let Some(i) = self.class_index(label) {
            return i;
        }
        self.class_labels.push(label.to_string());
        self.class_labels.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub scores: Vec<f64>,
    pub best: usize,
    pub confidence: f64,
}

impl Classification {
    fn from_scores(scores: Vec<f64>) -> Self {
        let mut best = 0;
        for (c, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = c;
            }
        }
        let confidence = scores.get(best).copied().unwrap_or(0.0);
        Self { scores, best, confidence }
    }

    pub fn is_rejected(&self, threshold: f64) -> bool {
        self.confidence < threshold
    }

    /// The winning label, or `None` when confidence is below the model's
    /// reject threshold.
    pub fn label<'m>(&self, model: &'m FuzzyModel) -> Option<&'m str> {
        (!self.is_rejected(model.inference.reject_threshold)).then(|| model.class_labels[self.best].as_str())
    }
}

#[inline]
fn activation_with(partition: &FuzzyPartition, tnorm: TNorm, rule: &FuzzyRule, x: &[f64]) -> f64 {
    match tnorm {
        // min over exp(-e_d) == exp(-max e_d)
        TNorm::Min => {
            let worst = rule
                .antecedent
                .iter()
                .enumerate()
                .map(|(d, &j)| partition.dims[d][j].exponent(x[d]))
                .fold(0.0, f64::max);
            (-worst).exp()
        }
        TNorm::Product => {
            let total: f64 =
                rule.antecedent.iter().enumerate().map(|(d, &j)| partition.dims[d][j].exponent(x[d])).sum();
            (-total).exp()
        }
    }
}

pub fn rule_activation(model: &FuzzyModel, rule: &FuzzyRule, x: &FeatureVector) -> Result<f64, ModelError> {
    model.check_dim(x)?;
    Ok(activation_with(&model.partition, model.inference.tnorm, rule, &x.0))
}

/// Per-class max-aggregated scores; classes without rules score 0.
pub(crate) fn class_scores(
    partition: &FuzzyPartition,
    rules: &[FuzzyRule],
    tnorm: TNorm,
    classes: usize,
    x: &[f64],
) -> Vec<f64> {
    let mut scores = vec![0.0; classes];
    for rule in rules {
        let a = activation_with(partition, tnorm, rule, x);
        if a > scores[rule.consequent] {
            scores[rule.consequent] = a;
        }
    }
    scores
}

pub(crate) fn predict_index(partition: &FuzzyPartition, rules: &[FuzzyRule], tnorm: TNorm, classes: usize, x: &[f64]) -> usize {
    Classification::from_scores(class_scores(partition, rules, tnorm, classes, x)).best
}

pub fn classify(model: &FuzzyModel, x: &FeatureVector) -> Result<Classification, ModelError> {
    model.check_dim(x)?;
    if model.rules.is_empty() {
        return Err(ModelError::NoRules);
    }
    Ok(Classification::from_scores(class_scores(
        &model.partition,
        &model.rules,
        model.inference.tnorm,
        model.class_count(),
        &x.0,
    )))
}

/// Builds a rule base from labeled samples.
///
/// Each sample yields the antecedent of its best-matching terms. Every
/// distinct antecedent becomes one rule whose consequent is the majority
/// class of the samples that produced it (ties to the lower class index).
/// Per class, at most `max_rules_per_class` rules survive, chosen by
/// descending support and then first appearance.
pub fn generate_rules(
    samples: &[(FeatureVector, usize)],
    partition: &FuzzyPartition,
    max_rules_per_class: usize,
) -> Vec<FuzzyRule> {
    let classes = samples.iter().map(|(_, c)| c + 1).max().unwrap_or(0);
    let mut order: Vec<Vec<usize>> = Vec::new();
    let mut counts: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
    for (x, c) in samples {
        let antecedent = partition.antecedent_for(&x.0);
        let entry = counts.entry(antecedent.clone()).or_insert_with(|| {
            order.push(antecedent);
            vec![0; classes]
        });
        entry[*c] += 1;
    }
    // (support, first-seen rank, rule)
    let mut per_class: Vec<Vec<(usize, usize, FuzzyRule)>> = vec![Vec::new(); classes];
    for (rank, antecedent) in order.into_iter().enumerate() {
        let hist = &counts[&antecedent];
        let mut consequent = 0;
        for (c, &n) in hist.iter().enumerate() {
            if n > hist[consequent] {
                consequent = c;
            }
        }
        let support: usize = hist.iter().sum();
        per_class[consequent].push((support, rank, FuzzyRule { antecedent, consequent }));
    }
    let mut kept: Vec<(usize, FuzzyRule)> = Vec::new();
    for mut rules in per_class {
        rules.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        kept.extend(rules.into_iter().take(max_rules_per_class).map(|(_, rank, r)| (rank, r)));
    }
    kept.sort_by_key(|(rank, _)| *rank);
    kept.into_iter().map(|(_, r)| r).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_model(rng: &mut ChaCha8Rng, f: usize, c: usize, n_rules: usize) -> FuzzyModel {
        let terms = 3;
        let partition = FuzzyPartition {
            dims: (0..f)
                .map(|_| (0..terms).map(|_| GaussianMF::new(rng.gen(), rng.gen_range(0.05..0.6))).collect())
                .collect(),
        };
        let mut rules: Vec<FuzzyRule> = Vec::new();
        while rules.len() < n_rules {
            let r = FuzzyRule {
                antecedent: (0..f).map(|_| rng.gen_range(0..terms)).collect(),
                consequent: rng.gen_range(0..c),
            };
            if rules.iter().all(|q| q.antecedent != r.antecedent) {
                rules.push(r);
            }
        }
        FuzzyModel {
            input_count: f,
            class_labels: (0..c).map(|i| format!("c{i}")).collect(),
            partition,
            rules,
            features: SimplifyParams { epsilon: 0.02, target_vertices: f.div_ceil(2).max(2) },
            inference: InferenceConfig::default(),
        }
    }

    #[test]
    fn mf_peak_and_one_sigma() {
        let mf = GaussianMF::new(0.3, 0.2);
        assert_eq!(mf_eval(&mf, 0.3), 1.0);
        assert!((mf_eval(&mf, 0.5) - 0.606531).abs() < 1e-6);
    }

    #[test]
    fn mf_matches_duplicate_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let (c, s, x): (f64, f64, f64) = (rng.gen(), rng.gen_range(SIGMA_MIN..1.0), rng.gen_range(-1.0..2.0));
            let oracle = f64::exp(-((x - c) * (x - c)) / (2.0 * s * s));
            let got = mf_eval(&GaussianMF::new(c, s), x);
            assert!((got - oracle).abs() <= 1e-12);
            assert!(got > 0.0 || oracle == 0.0);
            assert!(got <= 1.0);
        }
    }

    #[test]
    fn activation_is_one_at_centers() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let model = small_model(&mut rng, 4, 2, 3);
        let rule = &model.rules[0];
        let x = FeatureVector(rule.antecedent.iter().enumerate().map(|(d, &j)| model.partition.dims[d][j].center).collect());
        assert_eq!(rule_activation(&model, rule, &x).unwrap(), 1.0);
    }

    #[test]
    fn activation_follows_the_smallest_degree() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let model = small_model(&mut rng, 3, 2, 2);
        let rule = &model.rules[0];
        let mut x: Vec<f64> = rule.antecedent.iter().enumerate().map(|(d, &j)| model.partition.dims[d][j].center).collect();
        x[1] += 50.0;
        let a = rule_activation(&model, rule, &FeatureVector(x.clone())).unwrap();
        let tiny = mf_eval(&model.partition.dims[1][rule.antecedent[1]], x[1]);
        assert_eq!(a, tiny);
        assert!(a < 1e-100);
    }

    #[test]
    fn activation_matches_expanded_min_for_three_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let model = small_model(&mut rng, 3, 2, 4);
            let x = FeatureVector(vec![rng.gen(), rng.gen(), rng.gen()]);
            for rule in &model.rules {
                let p = &model.partition.dims;
                let m0 = mf_eval(&p[0][rule.antecedent[0]], x.0[0]);
                let m1 = mf_eval(&p[1][rule.antecedent[1]], x.0[1]);
                let m2 = mf_eval(&p[2][rule.antecedent[2]], x.0[2]);
                let oracle = if m0 <= m1 && m0 <= m2 {
                    m0
                } else if m1 <= m2 {
                    m1
                } else {
                    m2
                };
                assert!((rule_activation(&model, rule, &x).unwrap() - oracle).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn dimension_mismatch_and_no_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut model = small_model(&mut rng, 2, 2, 2);
        assert!(matches!(
            classify(&model, &FeatureVector(vec![0.1])),
            Err(ModelError::DimensionMismatch { expected: 2, got: 1 })
        ));
        model.rules.clear();
        assert_eq!(classify(&model, &FeatureVector(vec![0.1, 0.2])), Err(ModelError::NoRules));
    }

    #[test]
    fn single_rule_at_centers_scores_one() {
        let partition = FuzzyPartition::uniform(2, 5);
        let model = FuzzyModel {
            input_count: 2,
            class_labels: vec!["a".into(), "b".into()],
            partition,
            rules: vec![FuzzyRule { antecedent: vec![1, 3], consequent: 0 }],
            features: SimplifyParams { epsilon: 0.02, target_vertices: 1 },
            inference: InferenceConfig::default(),
        };
        let c = classify(&model, &FeatureVector(vec![0.25, 0.75])).unwrap();
        assert_eq!(c.scores, vec![1.0, 0.0]);
        assert_eq!(c.best, 0);
        assert_eq!(c.confidence, 1.0);
    }

    #[test]
    fn ties_go_to_lower_class() {
        let model = FuzzyModel {
            input_count: 2,
            class_labels: vec!["a".into(), "b".into(), "c".into()],
            partition: FuzzyPartition::uniform(2, 3),
            rules: vec![
                FuzzyRule { antecedent: vec![0, 0], consequent: 2 },
                FuzzyRule { antecedent: vec![0, 2], consequent: 1 },
            ],
            features: SimplifyParams { epsilon: 0.02, target_vertices: 1 },
            inference: InferenceConfig::default(),
        };
        // x equidistant from both rules
        let c = classify(&model, &FeatureVector(vec![0.0, 0.5])).unwrap();
        assert_eq!(c.scores[1], c.scores[2]);
        assert_eq!(c.best, 1);
    }

    /// Forward pass written as plain nested loops over classes, rules and
    /// dimensions.
    #[allow(clippy::needless_range_loop)]
    fn brute_force_scores(model: &FuzzyModel, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::new();
        for class in 0..model.class_count() {
            let mut best = 0.0f64;
            for rule in &model.rules {
                if rule.consequent != class {
                    continue;
                }
                let mut act = 1.0f64;
                for d in 0..model.input_count {
                    let mf = model.partition.dims[d][rule.antecedent[d]];
                    let mu = (-(x[d] - mf.center).powi(2) / (2.0 * mf.sigma.powi(2))).exp();
                    act = act.min(mu);
                }
                best = best.max(act);
            }
            out.push(best);
        }
        out
    }

    #[test]
    fn classify_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let model = small_model(&mut rng, 2, 3, 6);
        for _ in 0..100 {
            let x = vec![rng.gen(), rng.gen()];
            let oracle = brute_force_scores(&model, &x);
            let got = classify(&model, &FeatureVector(x)).unwrap();
            for (a, b) in got.scores.iter().zip(&oracle) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn adding_a_rule_only_raises_its_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let mut model = small_model(&mut rng, 3, 3, 4);
            let x = FeatureVector(vec![rng.gen(), rng.gen(), rng.gen()]);
            let before = classify(&model, &x).unwrap();
            let candidate = FuzzyRule { antecedent: vec![rng.gen_range(0..3), rng.gen_range(0..3), rng.gen_range(0..3)], consequent: rng.gen_range(0..3) };
            if model.rules.iter().any(|r| r.antecedent == candidate.antecedent) {
                continue;
            }
            let c = candidate.consequent;
            model.rules.push(candidate);
            let after = classify(&model, &x).unwrap();
            for k in 0..3 {
                if k == c {
                    assert!(after.scores[k] >= before.scores[k]);
                } else {
                    assert_eq!(after.scores[k], before.scores[k]);
                }
            }
        }
    }

    #[test]
    fn one_sample_one_rule() {
        let p = FuzzyPartition::uniform(3, 5);
        let rules = generate_rules(&[(FeatureVector(vec![0.1, 0.52, 0.9]), 2)], &p, 3);
        assert_eq!(rules, vec![FuzzyRule { antecedent: vec![0, 2, 4], consequent: 2 }]);
    }

    #[test]
    fn conflicting_identical_samples_pick_lower_class() {
        let p = FuzzyPartition::uniform(2, 5);
        let x = FeatureVector(vec![0.3, 0.7]);
        let rules = generate_rules(&[(x.clone(), 3), (x, 1)], &p, 3);
        assert_eq!(rules.len(), 1);
        assert_eq!(rules[0].consequent, 1);
    }

    /// Counts, for every sample, how many samples share its antecedent per
    /// class by rescanning the whole set.
    fn brute_force_rules(samples: &[(FeatureVector, usize)], p: &FuzzyPartition, max: usize) -> Vec<FuzzyRule> {
        let classes = samples.iter().map(|s| s.1).max().unwrap() + 1;
        let ante: Vec<Vec<usize>> = samples
            .iter()
            .map(|(x, _)| {
                (0..x.len())
                    .map(|d| {
                        let mus: Vec<f64> = p.dims[d].iter().map(|mf| mf_eval(mf, x.0[d])).collect();
                        (0..mus.len()).fold(0, |b, j| if mus[j] > mus[b] { j } else { b })
                    })
                    .collect()
            })
            .collect();
        let mut candidates = Vec::new();
        for i in 0..samples.len() {
            if (0..i).any(|k| ante[k] == ante[i]) {
                continue;
            }
            let hist: Vec<usize> =
                (0..classes).map(|c| (0..samples.len()).filter(|&k| ante[k] == ante[i] && samples[k].1 == c).count()).collect();
            let cons = (0..classes).fold(0, |b, c| if hist[c] > hist[b] { c } else { b });
            candidates.push((i, hist.iter().sum::<usize>(), FuzzyRule { antecedent: ante[i].clone(), consequent: cons }));
        }
        let mut kept: Vec<(usize, FuzzyRule)> = Vec::new();
        for c in 0..classes {
            let mut mine: Vec<_> = candidates.iter().filter(|x| x.2.consequent == c).cloned().collect();
            mine.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            kept.extend(mine.into_iter().take(max).map(|(i, _, r)| (i, r)));
        }
        kept.sort_by_key(|k| k.0);
        kept.into_iter().map(|k| k.1).collect()
    }

    #[test]
    fn rule_generation_matches_brute_force_on_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let normal = rand_distr::Normal::new(0.0, 0.12).unwrap();
        let mut samples = Vec::new();
        for i in 0..120 {
            let class = i % 2;
            let center: [f64; 3] = if class == 0 { [0.25, 0.3, 0.7] } else { [0.75, 0.6, 0.3] };
            let x: Vec<f64> = center.iter().map(|c| (c + rng.sample::<f64, _>(normal)).clamp(0.0, 1.0)).collect();
            samples.push((FeatureVector(x), class));
        }
        let p = FuzzyPartition::uniform(3, 3);
        for max in [1, 3, 10] {
            assert_eq!(generate_rules(&samples, &p, max), brute_force_rules(&samples, &p, max));
        }
    }

    #[test]
    fn validate_catches_duplicate_antecedents() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut model = small_model(&mut rng, 2, 2, 2);
        let dup = model.rules[0].clone();
        model.rules.push(dup);
        assert!(model.validate().is_err());
    }
}
