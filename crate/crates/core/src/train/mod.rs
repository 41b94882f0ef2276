//! Trainers for the membership-function parameters: a genetic algorithm
//! for cold-start fitting and conjugate gradients for online fine-tuning.

pub mod calibrate;
pub mod cg;
pub mod ga;

pub use ga::LabeledSample;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::features::FeatureVector;
use crate::nefclass::{classify, rule_activation, FuzzyModel, FuzzyRule, SIGMA_MIN};
use calibrate::{calibrate_widths, CalibrationReport};
use cg::{run_cg, CgConfig, CgResult};
use ga::{rebuild_model, run_ga, GaConfig, GaResult};

/// Share of correctly classified training samples kept above the reject
/// threshold after calibration.
pub const DEFAULT_CALIBRATION_TARGET: f64 = 0.995;

/// Largest fine-tuning batch, corrected samples included.
pub const FINE_TUNE_BATCH: usize = 32;

#[derive(Debug, Clone)]
pub struct InitialTraining {
    pub ga: GaResult,
    pub calibration: CalibrationReport,
    pub model: FuzzyModel,
}

/// GA fit from the uniform partition followed by width calibration.
pub fn train_initial(
    config: &GaConfig,
    calibration_target: f64,
    train_set: &[LabeledSample],
    template: &FuzzyModel,
) -> Result<InitialTraining, ModelError> {
    if train_set.is_empty() {
        return Err(ModelError::Invalid("training set is empty".into()));
    }
    let start = rebuild_model(template, template.partition.clone(), train_set);
    let ga = run_ga(config, train_set, &start)?;
    let (model, calibration) = calibrate_widths(&ga.model, train_set, calibration_target);
    Ok(InitialTraining { ga, calibration, model })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FineTuneMetrics {
    pub batch_size: usize,
    pub loss_before: f64,
    /// Surrogate loss when CG stopped, before any narrowing.
    pub loss_after: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Terms narrowed after CG to separate corrected samples from rivals.
    pub narrowed_terms: usize,
}

impl From<&CgResult> for FineTuneMetrics {
    fn from(r: &CgResult) -> Self {
        Self {
            batch_size: 0,
            loss_before: r.loss_before,
            loss_after: r.loss_after,
            iterations: r.iterations,
            converged: r.converged,
            narrowed_terms: 0,
        }
    }
}

/// Points a rule at each corrected sample, then runs CG on the corrected
/// samples plus context samples, truncated to [`FINE_TUNE_BATCH`].
pub fn fine_tune(
    config: &CgConfig,
    model: &FuzzyModel,
    corrected: &[LabeledSample],
    context: &[LabeledSample],
) -> Result<(CgResult, FineTuneMetrics), ModelError> {
    if corrected.is_empty() {
        return Err(ModelError::Invalid("fine-tuning needs at least one corrected sample".into()));
    }
    let mut start = model.clone();
    let mut inserted = Vec::with_capacity(corrected.len());
    for (x, c) in corrected {
        if *c >= start.class_count() {
            return Err(ModelError::Invalid(format!("class index {c} out of range")));
        }
        start.insert_rule_for_sample(x, *c)?;
        inserted.push(FuzzyRule { antecedent: start.partition.antecedent_for(&x.0), consequent: *c });
    }
    let batch: Vec<LabeledSample> =
        corrected.iter().chain(context.iter()).take(FINE_TUNE_BATCH.max(corrected.len())).cloned().collect();
    let mut result = run_cg(config, &start, &batch)?;
    let mut narrowed = 0;
    for ((x, _), rule) in corrected.iter().zip(&inserted) {
        narrowed += separate(&mut result.model, x, rule)?;
    }
    let mut metrics = FineTuneMetrics::from(&result);
    metrics.batch_size = batch.len();
    metrics.narrowed_terms = narrowed;
    Ok((result, metrics))
}

/// Breaks ties between `own` and rules of other classes at `x`.
///
/// Under the min t-norm a rival that shares `own`'s weakest term scores
/// exactly as high, and no change to that term can separate them. Each
/// such rival gets one of its other terms narrowed until its degree at
/// `x` falls just below `own`'s activation. Returns the number of terms
/// changed.
fn separate(model: &mut FuzzyModel, x: &FeatureVector, own: &FuzzyRule) -> Result<usize, ModelError> {
    const MARGIN: f64 = 0.99;
    let mut changed = 0;
    for _ in 0..model.rules.len() {
        if classify(model, x)?.best == own.consequent {
            break;
        }
        let target = rule_activation(model, own, x)? * MARGIN;
        let rivals: Vec<FuzzyRule> = model
            .rules
            .iter()
            .filter(|r| r.consequent != own.consequent && rule_activation(model, r, x).is_ok_and(|a| a > target))
            .cloned()
            .collect();
        let mut progressed = false;
        for rival in rivals {
            // the differing term with the lowest degree needs the least narrowing
            let pick = rival
                .antecedent
                .iter()
                .enumerate()
                .filter(|&(d, &j)| j != own.antecedent[d] && x.0[d] != model.partition.dims[d][j].center)
                .min_by(|&(da, &ja), &(db, &jb)| {
                    let ea = model.partition.dims[da][ja].exponent(x.0[da]);
                    let eb = model.partition.dims[db][jb].exponent(x.0[db]);
                    eb.total_cmp(&ea)
                });
            let Some((d, &j)) = pick else { continue };
            let mf = &mut model.partition.dims[d][j];
            let sigma = (x.0[d] - mf.center).abs() / (2.0 * -target.ln()).sqrt();
            if sigma.is_finite() && sigma >= SIGMA_MIN && sigma < mf.sigma {
                mf.sigma = sigma;
                changed += 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    Ok(changed)
}
