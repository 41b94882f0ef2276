//! Batch evaluation over a labeled expression corpus.
//!
//! Three accuracies are reported. Stroke accuracy compares the classifier's
//! winning class with the true stroke label. Reconstruction accuracy covers
//! the true symbols whose strokes all reached analysis with their correct
//! label, and counts those rebuilt with the right label and stroke set.
//! Structural accuracy counts expressions whose tree matches exactly.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusExpression;
use crate::error::ModelError;
use crate::ink::Stroke;
use crate::nefclass::FuzzyModel;
use crate::recognize::{classify_stroke, pipeline_label};
use crate::structure::{analyze, KnowledgeBase, StrokeSymbol};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub expressions: usize,
    pub strokes: usize,
    pub stroke_correct: usize,
    /// Strokes below the reject threshold, whatever their winning class.
    pub stroke_rejected: usize,
    pub stroke_accuracy: f64,
    pub reconstruction_total: usize,
    pub reconstruction_correct: usize,
    pub reconstruction_accuracy: f64,
    pub structural_correct: usize,
    pub structural_accuracy: f64,
    pub latency_mean_ms: f64,
    pub latency_p95_ms: f64,
    /// `confusion[truth][predicted]` stroke counts.
    pub confusion: BTreeMap<String, BTreeMap<String, usize>>,
}

/// Percentage, with an empty denominator counting as 100.
pub fn percent(num: usize, den: usize) -> f64 {
    if den == 0 {
        100.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrokePrediction {
    /// Winning class.
    pub predicted: String,
    /// Label handed to analysis (differs from `predicted` when rejected).
    pub label: String,
    pub confidence: f64,
}

/// Evaluates with an arbitrary stroke predictor, timing each call.
pub fn evaluate_with<F>(
    expressions: &[CorpusExpression],
    knowledge: &KnowledgeBase,
    mut predict: F,
) -> Result<EvalReport, ModelError>
where
    F: FnMut(&Stroke, &str) -> Result<StrokePrediction, ModelError>,
{
    let rules = knowledge.effective_rules();
    let mut confusion: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    let mut latencies = Vec::new();
    let (mut strokes, mut stroke_correct, mut rejected) = (0, 0, 0);
    let (mut recon_total, mut recon_correct, mut structural) = (0, 0, 0);

    for e in expressions {
        let mut inputs = Vec::with_capacity(e.ink.strokes.len());
        let mut analysis_ok = BTreeMap::new();
        for (s, truth) in e.ink.strokes.iter().zip(&e.stroke_labels) {
            let t0 = Instant::now();
            let p = predict(s, truth)?;
            latencies.push(t0.elapsed().as_secs_f64() * 1e3);
            strokes += 1;
            stroke_correct += usize::from(&p.predicted == truth);
            rejected += usize::from(p.label != p.predicted);
            *confusion.entry(truth.clone()).or_default().entry(p.predicted.clone()).or_default() += 1;
            analysis_ok.insert(s.id.as_str(), &p.label == truth);
            inputs.push(StrokeSymbol { stroke_id: s.id.clone(), label: p.label, bbox: s.bbox(), confidence: p.confidence });
        }
        let report = analyze(&inputs, &knowledge.position_table, &rules);
        let mut built: Vec<(String, Vec<String>)> = report
            .symbols
            .iter()
            .map(|s| {
                let mut ids = s.strokes.clone();
                ids.sort();
                (s.label.clone(), ids)
            })
            .collect();
        built.sort();
        for sym in &e.symbols {
            if sym.strokes.iter().all(|id| analysis_ok.get(id.as_str()) == Some(&true)) {
                recon_total += 1;
                let mut ids = sym.strokes.clone();
                ids.sort();
                recon_correct += usize::from(built.binary_search(&(sym.label.clone(), ids)).is_ok());
            }
        }
        structural += usize::from(report.tree == e.tree);
    }

    latencies.sort_by(f64::total_cmp);
    let mean = if latencies.is_empty() { 0.0 } else { latencies.iter().sum::<f64>() / latencies.len() as f64 };
    let p95 = if latencies.is_empty() {
        0.0
    } else {
        latencies[((0.95 * latencies.len() as f64).ceil() as usize).clamp(1, latencies.len()) - 1]
    };
    Ok(EvalReport {
        expressions: expressions.len(),
        strokes,
        stroke_correct,
        stroke_rejected: rejected,
        stroke_accuracy: percent(stroke_correct, strokes),
        reconstruction_total: recon_total,
        reconstruction_correct: recon_correct,
        reconstruction_accuracy: percent(recon_correct, recon_total),
        structural_correct: structural,
        structural_accuracy: percent(structural, expressions.len()),
        latency_mean_ms: mean,
        latency_p95_ms: p95,
        confusion,
    })
}

/// Evaluates the classifier and analysis pipeline.
pub fn evaluate(model: &FuzzyModel, knowledge: &KnowledgeBase, expressions: &[CorpusExpression]) -> Result<EvalReport, ModelError> {
    evaluate_with(expressions, knowledge, |s, _| {
        let c = classify_stroke(model, s)?;
        Ok(StrokePrediction {
            predicted: model.class_labels[c.best].clone(),
            label: pipeline_label(model, &c),
            confidence: c.confidence,
        })
    })
}

/// Evaluates analysis alone, feeding the true stroke labels through.
pub fn evaluate_oracle(knowledge: &KnowledgeBase, expressions: &[CorpusExpression]) -> EvalReport {
    evaluate_with(expressions, knowledge, |_, truth| {
        Ok(StrokePrediction { predicted: truth.to_owned(), label: truth.to_owned(), confidence: 1.0 })
    })
    .expect("the oracle predictor cannot fail")
}
