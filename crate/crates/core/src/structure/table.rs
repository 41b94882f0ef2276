use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::geometry::{inflate_degenerate, overlap_percent, position_region, union_all, RegionParams, RelPosition};
use super::SymbolInstance;
use crate::ink::BBox;

/// Placement coefficient: forbidden, allowed or required.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub enum Coefficient {
    Forbidden,
    Allowed,
    Required,
}

impl Coefficient {
    pub fn value(self) -> f64 {
        match self {
            Coefficient::Forbidden => 0.0,
            Coefficient::Allowed => 1.0,
            Coefficient::Required => 1.5,
        }
    }
}

impl From<Coefficient> for f64 {
    fn from(c: Coefficient) -> f64 {
        c.value()
    }
}

impl TryFrom<f64> for Coefficient {
    type Error = String;

    fn try_from(v: f64) -> Result<Self, String> {
        match v {
            0.0 => Ok(Coefficient::Forbidden),
            1.0 => Ok(Coefficient::Allowed),
            1.5 => Ok(Coefficient::Required),
            other => Err(format!("coefficient must be 0, 1 or 1.5, got {other}")),
        }
    }
}

/// How a symbol's box is read when it is the one being placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum VerticalMetric {
    /// The ink box as drawn.
    #[default]
    Normal,
    /// Stretched vertically about its center to the reference height.
    Centered,
    /// Stretched upward from just below its center to the reference height.
    Baseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolGroup {
    #[serde(default)]
    pub metric: VerticalMetric,
    pub coefficients: BTreeMap<RelPosition, Coefficient>,
}

/// Per-label position coefficients, organized by symbol group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionTable {
    pub params: RegionParams,
    pub groups: BTreeMap<String, SymbolGroup>,
    /// Label to group name; labels not listed use `default_group`.
    pub members: BTreeMap<String, String>,
    pub default_group: String,
}

impl PositionTable {
    pub fn validate(&self) -> Result<(), (String, String)> {
        if !self.groups.contains_key(&self.default_group) {
            return Err(("/default_group".into(), format!("unknown group {}", self.default_group)));
        }
        for (name, g) in &self.groups {
            for pos in RelPosition::ALL {
                if !g.coefficients.contains_key(&pos) {
                    let pos_name = serde_json::to_value(pos).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
                    return Err((format!("/groups/{name}/coefficients"), format!("missing position {pos_name}")));
                }
            }
        }
        for (label, group) in &self.members {
            if !self.groups.contains_key(group) {
                return Err((format!("/members/{label}"), format!("unknown group {group}")));
            }
        }
        Ok(())
    }

    pub fn group_of(&self, label: &str) -> &SymbolGroup {
        self.members
            .get(label)
            .and_then(|g| self.groups.get(g))
            .or_else(|| self.groups.get(&self.default_group))
            .expect("validated table has a default group")
    }

    pub fn k(&self, label: &str, position: RelPosition) -> Coefficient {
        self.group_of(label).coefficients.get(&position).copied().unwrap_or(Coefficient::Forbidden)
    }

    pub fn metric(&self, label: &str) -> VerticalMetric {
        self.group_of(label).metric
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementCandidate {
    pub anchor: String,
    pub position: RelPosition,
    #[serde(rename = "P")]
    pub p: f64,
    pub k: Coefficient,
    #[serde(rename = "NP")]
    pub np: f64,
}

/// Scale-dependent quantities shared by every placement in one scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneMetrics {
    /// Minimum box side after inflation.
    pub eps: f64,
    /// Typical symbol height used to stretch operators and punctuation.
    pub ref_height: f64,
}

impl SceneMetrics {
    pub fn of<'a>(table: &PositionTable, scene: impl IntoIterator<Item = (&'a str, &'a BBox)> + Clone) -> Self {
        let diag = union_all(scene.clone().into_iter().map(|(_, b)| b)).map_or(0.0, |b| b.diagonal());
        let mut heights: Vec<f64> = scene
            .into_iter()
            .filter(|(l, b)| table.metric(l) == VerticalMetric::Normal && b.height() > 0.0)
            .map(|(_, b)| b.height())
            .collect();
        heights.sort_by(f64::total_cmp);
        let ref_height = if heights.is_empty() { diag.max(1.0) } else { heights[(heights.len() - 1) / 2] };
        Self { eps: (table.params.epsilon_box * diag).max(f64::MIN_POSITIVE), ref_height }
    }
}

/// Box used for overlap tests: the metric stretch, then inflation of
/// degenerate sides.
pub fn effective_box(table: &PositionTable, label: &str, bbox: &BBox, scene: &SceneMetrics) -> BBox {
    let h = scene.ref_height;
    let b = match table.metric(label) {
        VerticalMetric::Normal => *bbox,
        VerticalMetric::Centered if bbox.height() < h => {
            let c = bbox.center_y();
            BBox::new(bbox.min_x, c - h / 2.0, bbox.max_x, c + h / 2.0)
        }
        VerticalMetric::Baseline if bbox.height() < h => {
            let c = bbox.center_y();
            BBox::new(bbox.min_x, c - 0.9 * h, bbox.max_x, c + 0.1 * h)
        }
        _ => *bbox,
    };
    inflate_degenerate(&b, scene.eps)
}

/// Candidate with the highest NP; ties prefer higher P, then the earlier
/// anchor in the given order, then the earlier position.
pub fn best_candidate(cands: impl IntoIterator<Item = PlacementCandidate>) -> Option<PlacementCandidate> {
    let mut best: Option<PlacementCandidate> = None;
    for c in cands {
        let better = match &best {
            None => true,
            Some(b) => c.np > b.np || (c.np == b.np && c.p > b.p),
        };
        if better {
            best = Some(c);
        }
    }
    best.filter(|b| b.np > 0.0)
}

/// Best position of `sym` relative to any of `anchors`, scored by
/// `NP = P * k`. Returns `None` when every candidate scores zero.
pub fn place_symbol(sym: &SymbolInstance, anchors: &[SymbolInstance], table: &PositionTable) -> Option<PlacementCandidate> {
    let scene = SceneMetrics::of(
        table,
        std::iter::once(sym).chain(anchors.iter().filter(|a| a.id != sym.id)).map(|s| (s.label.as_str(), &s.bbox)).collect::<Vec<_>>(),
    );
    let placed = effective_box(table, &sym.label, &sym.bbox, &scene);
    let mut ordered: Vec<&SymbolInstance> = anchors.iter().filter(|a| a.id != sym.id).collect();
    ordered.sort_by(|a, b| super::reading_order(&a.bbox, &a.id, &b.bbox, &b.id));
    let cands = ordered.into_iter().flat_map(|anchor| {
        let abox = effective_box(table, &anchor.label, &anchor.bbox, &scene);
        RelPosition::ALL.into_iter().map(move |pos| {
            let p = overlap_percent(&placed, &position_region(&abox, pos, &table.params));
            let k = table.k(&anchor.label, pos);
            PlacementCandidate { anchor: anchor.id.clone(), position: pos, p, k, np: p * k.value() }
        })
    });
    best_candidate(cands)
}
