//! Stroke classification feeding structural analysis.

use std::collections::BTreeMap;

use crate::error::ModelError;
use crate::features::extract_features;
use crate::ink::Stroke;
use crate::nefclass::{classify, Classification, FuzzyModel};
use crate::structure::{analyze, AnalysisReport, KnowledgeBase, StrokeSymbol};

/// Label given to strokes whose confidence is below the reject threshold.
pub const UNKNOWN_LABEL: &str = "unknown";

/// Features plus classification of one stroke.
pub fn classify_stroke(model: &FuzzyModel, stroke: &Stroke) -> Result<Classification, ModelError> {
    classify(model, &extract_features(stroke, &model.features))
}

/// The label analysis sees: the winning class, or [`UNKNOWN_LABEL`] when
/// rejected.
pub fn pipeline_label(model: &FuzzyModel, c: &Classification) -> String {
    c.label(model).unwrap_or(UNKNOWN_LABEL).to_owned()
}

/// Classifies every stroke and analyzes the scene. `overrides` maps stroke
/// ids to user-assigned labels, which bypass the classifier.
pub fn recognize(
    model: &FuzzyModel,
    knowledge: &KnowledgeBase,
    strokes: &[Stroke],
    overrides: &BTreeMap<String, String>,
) -> Result<AnalysisReport, ModelError> {
    let symbols = strokes
        .iter()
        .map(|s| {
            let (label, confidence) = match overrides.get(&s.id) {
                Some(l) => (l.clone(), 1.0),
                None => {
                    let c = classify_stroke(model, s)?;
                    (pipeline_label(model, &c), c.confidence)
                }
            };
            Ok(StrokeSymbol { stroke_id: s.id.clone(), label, bbox: s.bbox(), confidence })
        })
        .collect::<Result<Vec<_>, ModelError>>()?;
    Ok(analyze(&symbols, &knowledge.position_table, &knowledge.effective_rules()))
}
