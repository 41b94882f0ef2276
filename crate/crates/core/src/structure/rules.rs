use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{reading_order, StrokeSymbol, SymbolInstance};
use crate::error::AnalysisError;
use crate::ink::BBox;

/// Label pattern of one rule component.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "PatternRepr", into = "PatternRepr")]
pub enum Pattern {
    Any,
    Label(String),
    OneOf(Vec<String>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PatternRepr {
    One(String),
    Many(Vec<String>),
}

impl From<PatternRepr> for Pattern {
    fn from(r: PatternRepr) -> Self {
        match r {
            PatternRepr::One(s) if s == "any" => Pattern::Any,
            PatternRepr::One(s) => Pattern::Label(s),
            PatternRepr::Many(v) => Pattern::OneOf(v),
        }
    }
}

impl From<Pattern> for PatternRepr {
    fn from(p: Pattern) -> Self {
        match p {
            Pattern::Any => PatternRepr::One("any".into()),
            Pattern::Label(s) => PatternRepr::One(s),
            Pattern::OneOf(v) => PatternRepr::Many(v),
        }
    }
}

impl Pattern {
    pub fn matches(&self, label: &str) -> bool {
        match self {
            Pattern::Any => true,
            Pattern::Label(l) => l == label,
            Pattern::OneOf(ls) => ls.iter().any(|l| l == label),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredicateKind {
    /// Vertical gap at most `threshold` times the wider width.
    StackedVertically,
    /// Horizontal overlap over the wider width is at least `threshold`.
    OverlapsHorizontally,
    /// At least `threshold` of the second box's area lies in the first.
    Contains,
    /// Boxes intersect with centers within `threshold` of the larger side.
    Crosses,
    /// The second component is a dot above the first, within `threshold`
    /// of the first's height.
    DotAbove,
    /// The second component follows the first with a horizontal gap of at
    /// most `threshold` times the taller height, on a shared band.
    AdjacentRight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub between: [usize; 2],
    pub name: PredicateKind,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicRule {
    pub id: String,
    pub components: Vec<Pattern>,
    #[serde(default)]
    pub predicates: Vec<Predicate>,
    pub result: String,
    pub priority: i64,
    /// When set, only this component is relabeled and nothing is merged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<usize>,
}

impl HeuristicRule {
    pub fn validate(&self) -> Result<(), String> {
        if self.components.is_empty() {
            return Err("rule has no components".into());
        }
        let n = self.components.len();
        for p in &self.predicates {
            if p.between[0] >= n || p.between[1] >= n || p.between[0] == p.between[1] {
                return Err(format!("predicate {:?} refers to an invalid component pair", p.name));
            }
            if !p.threshold.is_finite() || p.threshold < 0.0 {
                return Err(format!("predicate {:?} has an invalid threshold", p.name));
            }
        }
        if matches!(self.target, Some(t) if t >= n) {
            return Err("target index out of range".into());
        }
        Ok(())
    }
}

pub fn validate_rules(rules: &[HeuristicRule]) -> Result<(), (usize, String)> {
    let mut seen = BTreeSet::new();
    for (i, r) in rules.iter().enumerate() {
        r.validate().map_err(|m| (i, m))?;
        if !seen.insert(r.id.as_str()) {
            return Err((i, format!("duplicate rule id {}", r.id)));
        }
    }
    Ok(())
}

fn x_overlap(a: &BBox, b: &BBox) -> f64 {
    (a.max_x.min(b.max_x) - a.min_x.max(b.min_x)).max(0.0)
}

fn y_overlap(a: &BBox, b: &BBox) -> f64 {
    (a.max_y.min(b.max_y) - a.min_y.max(b.min_y)).max(0.0)
}

pub fn predicate_holds(kind: PredicateKind, threshold: f64, a: &BBox, b: &BBox) -> bool {
    match kind {
        PredicateKind::StackedVertically => {
            let gap = (b.min_y - a.max_y).max(a.min_y - b.max_y).max(0.0);
            y_overlap(a, b) == 0.0 && gap <= threshold * a.width().max(b.width())
        }
        PredicateKind::OverlapsHorizontally => {
            let w = a.width().max(b.width());
            w > 0.0 && x_overlap(a, b) / w >= threshold
        }
        PredicateKind::Contains => {
            let area = b.area();
            if area > 0.0 {
                a.intersection(b).map_or(0.0, |i| i.area()) / area >= threshold
            } else {
                a.contains_point(b.center_x(), b.center_y())
            }
        }
        PredicateKind::Crosses => {
            let scale = a.width().max(b.width()).max(a.height()).max(b.height());
            let tol = 0.05 * scale;
            a.inflate(tol).intersection(&b.inflate(tol)).is_some()
                && (a.center_x() - b.center_x()).abs() <= threshold * a.width().max(b.width())
                && (a.center_y() - b.center_y()).abs() <= threshold * a.height().max(b.height())
        }
        PredicateKind::DotAbove => {
            let h = a.height();
            let cx = b.center_x();
            b.max_y <= a.min_y + 0.1 * h
                && a.min_y - b.center_y() <= threshold * h
                && cx >= a.min_x - threshold * h
                && cx <= a.max_x + threshold * h
        }
        PredicateKind::AdjacentRight => {
            let h = a.height().max(b.height());
            let gap = b.min_x - a.max_x;
            b.center_x() > a.center_x()
                && gap.abs() <= threshold * h
                && y_overlap(a, b) >= 0.5 * a.height().min(b.height())
        }
    }
}

/// Finds the first assignment of distinct working symbols to the rule's
/// components, in reading-order lexicographic order.
fn find_match(rule: &HeuristicRule, work: &[SymbolInstance]) -> Option<Vec<usize>> {
    fn extend(rule: &HeuristicRule, work: &[SymbolInstance], chosen: &mut Vec<usize>) -> bool {
        let k = chosen.len();
        if k == rule.components.len() {
            if let Some(t) = rule.target {
                // a relabel that changes nothing is not a firing
                return work[chosen[t]].label != rule.result;
            }
            return true;
        }
        for i in 0..work.len() {
            if chosen.contains(&i) || !rule.components[k].matches(&work[i].label) {
                continue;
            }
            chosen.push(i);
            let ok = rule.predicates.iter().all(|p| {
                let [a, b] = p.between;
                if a.max(b) != k {
                    return true;
                }
                predicate_holds(p.name, p.threshold, &work[chosen[a]].bbox, &work[chosen[b]].bbox)
            });
            if ok && extend(rule, work, chosen) {
                return true;
            }
            chosen.pop();
        }
        false
    }
    let mut chosen = Vec::with_capacity(rule.components.len());
    extend(rule, work, &mut chosen).then_some(chosen)
}

fn sort_reading(work: &mut [SymbolInstance]) {
    work.sort_by(|a, b| reading_order(&a.bbox, &a.id, &b.bbox, &b.id));
}

/// Multi-stroke assembly and context relabeling.
///
/// Repeatedly fires the highest-priority rule (ties by id) that matches,
/// until none does. Predicates see raw boxes; each one handles zero
/// extents itself. Fired merge rules replace their components with one
/// symbol; relabel rules rewrite their target component in place.
pub fn reconstruct(strokes: &[StrokeSymbol], rules: &[HeuristicRule]) -> Result<Vec<SymbolInstance>, AnalysisError> {
    let mut work: Vec<SymbolInstance> = strokes
        .iter()
        .map(|s| SymbolInstance {
            id: s.stroke_id.clone(),
            label: s.label.clone(),
            strokes: vec![s.stroke_id.clone()],
            bbox: s.bbox,
            confidence: s.confidence,
        })
        .collect();
    sort_reading(&mut work);

    let mut order: Vec<&HeuristicRule> = rules.iter().collect();
    order.sort_by(|a, b| b.priority.cmp(&a.priority).then_with(|| a.id.cmp(&b.id)));

    let cap = 2 * strokes.len();
    let mut fired: Vec<String> = Vec::new();
    while let Some((rule, idx)) = order.iter().find_map(|r| find_match(r, &work).map(|m| (*r, m))) {
        if fired.len() >= cap {
            let rules: BTreeSet<String> = fired.into_iter().chain(std::iter::once(rule.id.clone())).collect();
            return Err(AnalysisError::RuleCycle { cap, rules: rules.into_iter().collect() });
        }
        fired.push(rule.id.clone());
        if let Some(t) = rule.target {
            work[idx[t]].label = rule.result.clone();
            continue;
        }
        let mut members: Vec<SymbolInstance> = Vec::with_capacity(idx.len());
        let mut sorted = idx.clone();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        for i in sorted {
            members.push(work.remove(i));
        }
        let mut stroke_ids: Vec<String> = members.iter().flat_map(|m| m.strokes.iter().cloned()).collect();
        stroke_ids.sort();
        let bbox = members.iter().skip(1).fold(members[0].bbox, |acc, m| acc.union(&m.bbox));
        let confidence = members.iter().map(|m| m.confidence).fold(f64::INFINITY, f64::min);
        work.push(SymbolInstance { id: stroke_ids.join("+"), label: rule.result.clone(), strokes: stroke_ids, bbox, confidence });
        sort_reading(&mut work);
    }
    Ok(work)
}
