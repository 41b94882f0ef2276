//! Pen input data model: points, strokes, bounding boxes and ink sessions,
//! plus the canonical JSON ink document.
//!
//! Coordinates are device-independent units with `y` growing downward.
//! Timestamps are integer milliseconds relative to the session start.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;

use crate::error::InkError;

pub const INK_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InkPoint {
    pub x: f64,
    pub y: f64,
    pub t: u64,
}

impl InkPoint {
    pub fn new(x: f64, y: f64, t: u64) -> Self {
        Self { x, y, t }
    }
}

// Points travel as `[x, y, t]` triples.
impl Serialize for InkPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        (self.x, self.y, self.t).serialize(s)
    }
}

impl<'de> Deserialize<'de> for InkPoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (x, y, t) = <(f64, f64, u64)>::deserialize(d)?;
        Ok(Self { x, y, t })
    }
}

/// Axis-aligned box, `min_y` is the top edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BBox {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        debug_assert!(min_x <= max_x && min_y <= max_y);
        Self { min_x, min_y, max_x, max_y }
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center_x(&self) -> f64 {
        0.5 * (self.min_x + self.max_x)
    }

    pub fn center_y(&self) -> f64 {
        0.5 * (self.min_y + self.max_y)
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            min_x: self.min_x.min(other.min_x),
            min_y: self.min_y.min(other.min_y),
            max_x: self.max_x.max(other.max_x),
            max_y: self.max_y.max(other.max_y),
        }
    }

    pub fn intersection(&self, other: &BBox) -> Option<BBox> {
        let min_x = self.min_x.max(other.min_x);
        let min_y = self.min_y.max(other.min_y);
        let max_x = self.max_x.min(other.max_x);
        let max_y = self.max_y.min(other.max_y);
        (min_x <= max_x && min_y <= max_y).then_some(BBox { min_x, min_y, max_x, max_y })
    }

    pub fn translate(&self, dx: f64, dy: f64) -> BBox {
        BBox {
            min_x: self.min_x + dx,
            min_y: self.min_y + dy,
            max_x: self.max_x + dx,
            max_y: self.max_y + dy,
        }
    }

    /// Grows the box by `margin` on every side.
    pub fn inflate(&self, margin: f64) -> BBox {
        BBox {
            min_x: self.min_x - margin,
            min_y: self.min_y - margin,
            max_x: self.max_x + margin,
            max_y: self.max_y + margin,
        }
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stroke {
    pub id: String,
    pub points: Vec<InkPoint>,
}

impl Stroke {
    /// Builds a stroke, checking the point-count, finiteness and
    /// timestamp-order invariants.
    pub fn new(id: impl Into<String>, points: Vec<InkPoint>) -> Result<Self, InkError> {
        let stroke = Self { id: id.into(), points };
        stroke.validate()?;
        Ok(stroke)
    }

    pub fn validate(&self) -> Result<(), InkError> {
        if self.points.len() < 2 {
            return Err(InkError::TooFewPoints { stroke: self.id.clone(), count: self.points.len() });
        }
        if self.points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(InkError::NonFinite { stroke: self.id.clone() });
        }
        if self.points.windows(2).any(|w| w[1].t < w[0].t) {
            return Err(InkError::NonMonotoneTime { stroke: self.id.clone() });
        }
        Ok(())
    }

    pub fn bbox(&self) -> BBox {
        bbox_of(self)
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Stroke {
        Stroke {
            id: self.id.clone(),
            points: self.points.iter().map(|p| InkPoint::new(p.x + dx, p.y + dy, p.t)).collect(),
        }
    }

    /// Uniform scale about the point `(cx, cy)`.
    pub fn scaled_about(&self, cx: f64, cy: f64, factor: f64) -> Stroke {
        Stroke {
            id: self.id.clone(),
            points: self
                .points
                .iter()
                .map(|p| InkPoint::new(cx + (p.x - cx) * factor, cy + (p.y - cy) * factor, p.t))
                .collect(),
        }
    }
}

/// Tight axis-aligned bounds of every point in the stroke.
pub fn bbox_of(stroke: &Stroke) -> BBox {
    let first = stroke.points[0];
    stroke.points.iter().skip(1).fold(
        BBox { min_x: first.x, min_y: first.y, max_x: first.x, max_y: first.y },
        |b, p| BBox {
            min_x: b.min_x.min(p.x),
            min_y: b.min_y.min(p.y),
            max_x: b.max_x.max(p.x),
            max_y: b.max_y.max(p.y),
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum EditEvent {
    Add { stroke: Stroke },
    Delete { stroke_id: String },
    Correct { stroke_id: String, label: String },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InkSession {
    strokes: Vec<Stroke>,
    edit_log: Vec<EditEvent>,
}

impl InkSession {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn strokes(&self) -> &[Stroke] {
        &self.strokes
    }

    pub fn edit_log(&self) -> &[EditEvent] {
        &self.edit_log
    }

    pub fn stroke(&self, id: &str) -> Option<&Stroke> {
        self.strokes.iter().find(|s| s.id == id)
    }

    pub fn add_stroke(&mut self, stroke: Stroke) -> Result<(), InkError> {
        stroke.validate()?;
        if self.stroke(&stroke.id).is_some() {
            return Err(InkError::DuplicateStrokeId(stroke.id));
        }
        self.edit_log.push(EditEvent::Add { stroke: stroke.clone() });
        self.strokes.push(stroke);
        Ok(())
    }

    pub fn delete_stroke(&mut self, id: &str) -> Result<Stroke, InkError> {
        let pos = self
            .strokes
            .iter()
            .position(|s| s.id == id)
            .ok_or_else(|| InkError::UnknownStroke(id.to_string()))?;
        self.edit_log.push(EditEvent::Delete { stroke_id: id.to_string() });
        Ok(self.strokes.remove(pos))
    }

    pub fn record_correction(&mut self, id: &str, label: &str) -> Result<(), InkError> {
        if self.stroke(id).is_none() {
            return Err(InkError::UnknownStroke(id.to_string()));
        }
        self.edit_log.push(EditEvent::Correct { stroke_id: id.to_string(), label: label.to_string() });
        Ok(())
    }

    /// Rebuilds a session by applying `log` to the empty session.
    pub fn replay(log: &[EditEvent]) -> Result<InkSession, InkError> {
        let mut session = InkSession::new();
        for event in log {
            match event {
                EditEvent::Add { stroke } => session.add_stroke(stroke.clone())?,
                EditEvent::Delete { stroke_id } => {
                    session.delete_stroke(stroke_id)?;
                }
                EditEvent::Correct { stroke_id, label } => session.record_correction(stroke_id, label)?,
            }
        }
        Ok(session)
    }

    /// Session holding exactly `strokes`, with a log of plain additions.
    pub fn from_strokes(strokes: Vec<Stroke>) -> Result<InkSession, InkError> {
        let mut session = InkSession::new();
        for s in strokes {
            session.add_stroke(s)?;
        }
        Ok(session)
    }

    fn log_is_plain_adds(&self) -> bool {
        self.edit_log.len() == self.strokes.len()
            && self
                .edit_log
                .iter()
                .zip(&self.strokes)
                .all(|(e, s)| matches!(e, EditEvent::Add { stroke } if stroke == s))
    }
}

/// The canonical ink document as it appears on disk and on the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InkDocument {
    pub version: u32,
    pub strokes: Vec<Stroke>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edits: Option<Vec<EditEvent>>,
}

impl InkDocument {
    pub fn new(strokes: Vec<Stroke>) -> Self {
        Self { version: INK_FORMAT_VERSION, strokes, edits: None }
    }

    pub fn from_session(session: &InkSession) -> Self {
        Self {
            version: INK_FORMAT_VERSION,
            strokes: session.strokes.clone(),
            edits: (!session.log_is_plain_adds()).then(|| session.edit_log.clone()),
        }
    }

    /// Validates the document and rebuilds its session.
    pub fn into_session(self) -> Result<InkSession, InkError> {
        if self.version != INK_FORMAT_VERSION {
            return Err(InkError::Version(self.version));
        }
        let mut seen = HashSet::new();
        for s in &self.strokes {
            s.validate()?;
            if !seen.insert(s.id.as_str()) {
                return Err(InkError::DuplicateStrokeId(s.id.clone()));
            }
        }
        match self.edits {
            None => InkSession::from_strokes(self.strokes),
            Some(edits) => {
                let session = InkSession::replay(&edits)?;
                if session.strokes != self.strokes {
                    return Err(InkError::ReplayMismatch);
                }
                Ok(session)
            }
        }
    }
}

/// Parses the canonical ink document.
///
/// A document without an `edits` array gets a log of plain additions, one
/// per stroke. When `edits` is present its replay must reproduce `strokes`.
pub fn parse_ink(bytes: &[u8]) -> Result<InkSession, InkError> {
    let doc: InkDocument = serde_json::from_slice(bytes).map_err(|e| InkError::Malformed {
        offset: byte_offset(bytes, e.line(), e.column()),
        message: e.to_string(),
    })?;
    doc.into_session()
}

pub fn serialize_ink(session: &InkSession) -> Vec<u8> {
    serde_json::to_vec(&InkDocument::from_session(session)).expect("ink document serializes")
}

/// Converts serde_json's 1-based line/column into a byte offset.
pub(crate) fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut offset = 0;
    for (i, l) in bytes.split(|&b| b == b'\n').enumerate() {
        if i + 1 == line {
            return (offset + column.saturating_sub(1)).min(bytes.len());
        }
        offset += l.len() + 1;
    }
    bytes.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn stroke(id: &str, pts: &[(f64, f64)]) -> Stroke {
        Stroke::new(id, pts.iter().enumerate().map(|(i, &(x, y))| InkPoint::new(x, y, i as u64)).collect())
            .unwrap()
    }

    #[test]
    fn bbox_of_two_points() {
        let s = stroke("a", &[(0.0, 0.0), (2.0, 3.0)]);
        assert_eq!(bbox_of(&s), BBox::new(0.0, 0.0, 2.0, 3.0));
    }

    #[test]
    fn bbox_of_repeated_point_is_degenerate() {
        let s = stroke("a", &[(1.0, 1.0), (1.0, 1.0), (1.0, 1.0)]);
        assert_eq!(bbox_of(&s), BBox::new(1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn bbox_of_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<(f64, f64)> = (0..100).map(|_| (rng.gen(), rng.gen())).collect();
        let s = stroke("r", &pts);
        let (mut lx, mut ly, mut hx, mut hy) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for &(x, y) in &pts {
            if x < lx {
                lx = x;
            }
            if y < ly {
                ly = y;
            }
            if x > hx {
                hx = x;
            }
            if y > hy {
                hy = y;
            }
        }
        assert_eq!(bbox_of(&s), BBox::new(lx, ly, hx, hy));
    }

    #[test]
    fn stroke_invariants() {
        assert!(matches!(
            Stroke::new("a", vec![InkPoint::new(0.0, 0.0, 0)]),
            Err(InkError::TooFewPoints { .. })
        ));
        assert!(matches!(
            Stroke::new("a", vec![InkPoint::new(0.0, 0.0, 5), InkPoint::new(1.0, 0.0, 4)]),
            Err(InkError::NonMonotoneTime { .. })
        ));
        assert!(matches!(
            Stroke::new("a", vec![InkPoint::new(f64::NAN, 0.0, 0), InkPoint::new(1.0, 0.0, 4)]),
            Err(InkError::NonFinite { .. })
        ));
    }

    #[test]
    fn parse_empty_document() {
        let s = parse_ink(br#"{"version":1,"strokes":[]}"#).unwrap();
        assert!(s.strokes().is_empty());
    }

    #[test]
    fn parse_single_stroke_preserves_times() {
        let s = parse_ink(br#"{"version":1,"strokes":[{"id":"s1","points":[[0,0,3],[1.5,2,17]]}]}"#).unwrap();
        assert_eq!(s.strokes().len(), 1);
        assert_eq!(s.strokes()[0].points, vec![InkPoint::new(0.0, 0.0, 3), InkPoint::new(1.5, 2.0, 17)]);
    }

    #[test]
    fn parse_reports_offset_and_stroke() {
        let bad = b"{\"version\":1,\n\"strokes\":[}";
        match parse_ink(bad) {
            Err(InkError::Malformed { offset, .. }) => assert_eq!(offset, 25),
            other => panic!("{other:?}"),
        }
        let nonmono = br#"{"version":1,"strokes":[{"id":"q7","points":[[0,0,9],[1,1,2]]}]}"#;
        match parse_ink(nonmono) {
            Err(InkError::NonMonotoneTime { stroke }) => assert_eq!(stroke, "q7"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn edit_log_round_trips() {
        let mut s = InkSession::new();
        s.add_stroke(stroke("a", &[(0.0, 0.0), (1.0, 1.0)])).unwrap();
        s.add_stroke(stroke("b", &[(2.0, 0.0), (3.0, 1.0)])).unwrap();
        s.record_correction("a", "x").unwrap();
        s.delete_stroke("a").unwrap();
        let back = parse_ink(&serialize_ink(&s)).unwrap();
        assert_eq!(back, s);
        assert_eq!(InkSession::replay(s.edit_log()).unwrap().strokes(), s.strokes());
    }

    fn arb_session() -> impl Strategy<Value = InkSession> {
        let point = (-1e6f64..1e6, -1e6f64..1e6, 0u64..1000);
        let stroke = prop::collection::vec(point, 2..12);
        prop::collection::vec(stroke, 0..6).prop_map(|strokes| {
            let strokes = strokes
                .into_iter()
                .enumerate()
                .map(|(i, pts)| {
                    let mut t = 0;
                    let points = pts
                        .into_iter()
                        .map(|(x, y, dt)| {
                            t += dt;
                            InkPoint::new(x, y, t)
                        })
                        .collect();
                    Stroke::new(format!("s{i}"), points).unwrap()
                })
                .collect();
            InkSession::from_strokes(strokes).unwrap()
        })
    }

    proptest! {
        #[test]
        fn serialize_parse_round_trip(s in arb_session()) {
            let back = parse_ink(&serialize_ink(&s)).unwrap();
            prop_assert_eq!(back, s);
        }

        #[test]
        fn bbox_translation_equivariant(
            pts in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 2..20),
            dx in -50.0f64..50.0, dy in -50.0f64..50.0,
        ) {
            let s = stroke("p", &pts);
            let moved = bbox_of(&s.translated(dx, dy));
            let expected = bbox_of(&s).translate(dx, dy);
            prop_assert!((moved.min_x - expected.min_x).abs() < 1e-9);
            prop_assert!((moved.min_y - expected.min_y).abs() < 1e-9);
            prop_assert!((moved.max_x - expected.max_x).abs() < 1e-9);
            prop_assert!((moved.max_y - expected.max_y).abs() < 1e-9);
        }
    }
}
