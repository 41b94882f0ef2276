//! Confidence calibration by one common rescaling of every width.
//!
//! Both t-norms give activations of the form `exp(-E / s^2)` once all
//! widths are multiplied by `s`, with `E` unchanged. Best terms, rule
//! rankings and predictions are therefore invariant; only confidences
//! move, which sets how many strokes fall under the reject threshold.

use serde::{Deserialize, Serialize};

use super::LabeledSample;
use crate::nefclass::{classify, FuzzyModel, SIGMA_MAX};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub factor: f64,
    /// Fractions of correctly classified samples at or above the threshold.
    pub accepted_before: f64,
    pub accepted_after: f64,
}

fn accepted(model: &FuzzyModel, samples: &[LabeledSample]) -> f64 {
    let mut correct = 0usize;
    let mut kept = 0usize;
    for (x, c) in samples {
        let Ok(r) = classify(model, x) else { continue };
        if r.best == *c {
            correct += 1;
            if !r.is_rejected(model.inference.reject_threshold) {
                kept += 1;
            }
        }
    }
    if correct == 0 {
        1.0
    } else {
        kept as f64 / correct as f64
    }
}

/// Widens all membership functions by the smallest factor `>= 1` that lets
/// `target` of the correctly classified samples pass the reject threshold,
/// capped so that no width exceeds the upper bound.
pub fn calibrate_widths(model: &FuzzyModel, samples: &[LabeledSample], target: f64) -> (FuzzyModel, CalibrationReport) {
    let threshold = model.inference.reject_threshold;
    let before = accepted(model, samples);
    let mut exponents: Vec<f64> = samples
        .iter()
        .filter_map(|(x, c)| classify(model, x).ok().filter(|r| r.best == *c))
        .map(|r| -r.confidence.ln())
        .collect();
    let mut out = model.clone();
    if exponents.is_empty() || !(threshold > 0.0 && threshold < 1.0) {
        return (out, CalibrationReport { factor: 1.0, accepted_before: before, accepted_after: before });
    }
    exponents.sort_by(f64::total_cmp);
    let q = target.clamp(0.0, 1.0);
    let idx = ((q * exponents.len() as f64).ceil() as usize).clamp(1, exponents.len()) - 1;
    let needed = (exponents[idx] / -threshold.ln()).sqrt();
    let widest = model.partition.dims.iter().flatten().map(|mf| mf.sigma).fold(0.0, f64::max);
    let cap = if widest > 0.0 { SIGMA_MAX / widest } else { 1.0 };
    let factor = if needed.is_finite() { needed } else { cap }.min(cap).max(1.0);
    for mf in out.partition.dims.iter_mut().flatten() {
        mf.sigma = (mf.sigma * factor).min(SIGMA_MAX);
    }
    let after = accepted(&out, samples);
    (out, CalibrationReport { factor, accepted_before: before, accepted_after: after })
}
