use serde::{Deserialize, Serialize};

use super::rules::HeuristicRule;
use super::table::PositionTable;

const BUILTIN: &str = include_str!("../../data/knowledge.json");

/// Per-user additions over the shipped rule base. An overlay rule with the
/// id of a base rule replaces it.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Overlay {
    #[serde(default)]
    pub rules: Vec<HeuristicRule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub position_table: PositionTable,
    pub rules: Vec<HeuristicRule>,
    #[serde(default)]
    pub overlay: Overlay,
}

impl KnowledgeBase {
    /// The shipped position table and rule base.
    pub fn builtin() -> Self {
        serde_json::from_str(BUILTIN).expect("shipped knowledge file parses")
    }

    pub fn effective_rules(&self) -> Vec<HeuristicRule> {
        let mut out: Vec<HeuristicRule> =
            self.rules.iter().filter(|r| !self.overlay.rules.iter().any(|o| o.id == r.id)).cloned().collect();
        out.extend(self.overlay.rules.iter().cloned());
        out
    }

    /// Adds or replaces an overlay rule; base rules are never touched.
    pub fn upsert_overlay_rule(&mut self, rule: HeuristicRule) {
        match self.overlay.rules.iter_mut().find(|r| r.id == rule.id) {
            Some(slot) => *slot = rule,
            None => self.overlay.rules.push(rule),
        }
    }
}
