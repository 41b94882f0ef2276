//! Structural analysis: multi-stroke reconstruction, placement scoring and
//! grouping of the recognized strokes into an expression tree.

pub mod expr;
pub mod geometry;
pub mod group;
pub mod knowledge;
pub mod rules;
pub mod table;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;
use crate::ink::BBox;

pub use expr::{BigOperator, BracketKind, ExprNode};
pub use geometry::{overlap_percent, position_region, RegionParams, RelPosition};
pub use group::group_symbols;
pub use knowledge::{KnowledgeBase, Overlay};
pub use rules::{reconstruct, HeuristicRule, Pattern, Predicate, PredicateKind};
pub use table::{place_symbol, Coefficient, PlacementCandidate, PositionTable, SymbolGroup, VerticalMetric};

/// Classified stroke handed to analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrokeSymbol {
    pub stroke_id: String,
    pub label: String,
    pub bbox: BBox,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolInstance {
    pub id: String,
    pub label: String,
    pub strokes: Vec<String>,
    pub bbox: BBox,
    pub confidence: f64,
}

/// Left to right by box center, then top to bottom, then by id.
pub fn reading_order(a: &BBox, a_id: &str, b: &BBox, b_id: &str) -> Ordering {
    a.center_x()
        .total_cmp(&b.center_x())
        .then_with(|| a.min_y.total_cmp(&b.min_y))
        .then_with(|| a_id.cmp(b_id))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: String,
    pub message: String,
}

impl From<&AnalysisError> for Diagnostic {
    fn from(e: &AnalysisError) -> Self {
        let code = match e {
            AnalysisError::RuleCycle { .. } => "rule_cycle",
            AnalysisError::UnmatchedBracket { .. } => "unmatched_bracket",
            AnalysisError::MismatchedBracket { .. } => "mismatched_bracket",
            AnalysisError::EmptySlot { .. } => "empty_slot",
        };
        Diagnostic { code: code.into(), message: e.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolPlacement {
    pub symbol: String,
    pub placement: Option<PlacementCandidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub symbols: Vec<SymbolInstance>,
    pub placements: Vec<SymbolPlacement>,
    pub tree: ExprNode,
    pub diagnostics: Vec<Diagnostic>,
}

/// Reconstruction, placement and grouping of one scene.
///
/// Errors never abort: a failed reconstruction falls back to one symbol per
/// stroke, and a failed grouping to a flat row in reading order, with the
/// error recorded as a diagnostic.
pub fn analyze(strokes: &[StrokeSymbol], table: &PositionTable, rules: &[HeuristicRule]) -> AnalysisReport {
    let mut diagnostics = Vec::new();
    let symbols = match reconstruct(strokes, rules) {
        Ok(s) => s,
        Err(e) => {
            diagnostics.push(Diagnostic::from(&e));
            reconstruct(strokes, &[]).expect("no rules cannot cycle")
        }
    };
    let placements = symbols
        .iter()
        .map(|s| SymbolPlacement { symbol: s.id.clone(), placement: place_symbol(s, &symbols, table) })
        .collect();
    let tree = match group_symbols(&symbols, table) {
        Ok(t) => t,
        Err(e) => {
            diagnostics.push(Diagnostic::from(&e));
            ExprNode::row(symbols.iter().map(|s| ExprNode::sym(&s.label)).collect())
        }
    };
    AnalysisReport { symbols, placements, tree, diagnostics }
}
