use serde::{Deserialize, Serialize};

use crate::ink::BBox;

/// Relative positions, in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelPosition {
    Left,
    Right,
    Above,
    Below,
    #[serde(rename = "superscript")]
    SuperScript,
    #[serde(rename = "subscript")]
    SubScript,
    UpperLeft,
    LowerLeft,
    Inside,
}

impl RelPosition {
    pub const ALL: [RelPosition; 9] = [
        RelPosition::Left,
        RelPosition::Right,
        RelPosition::Above,
        RelPosition::Below,
        RelPosition::SuperScript,
        RelPosition::SubScript,
        RelPosition::UpperLeft,
        RelPosition::LowerLeft,
        RelPosition::Inside,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionParams {
    /// Region extent as a multiple of the anchor's larger side.
    pub reach: f64,
    /// Fraction of the anchor height shared between a script region and
    /// the horizontal band; half of it lies on each side of the edge.
    pub script_band: f64,
    /// Inset of the inside region, as a fraction of each anchor side.
    pub inside_inset: f64,
    /// Minimum box side, as a fraction of the scene diagonal.
    pub epsilon_box: f64,
}

impl Default for RegionParams {
    fn default() -> Self {
        Self { reach: 1.0, script_band: 0.5, inside_inset: 0.05, epsilon_box: 0.02 }
    }
}

/// Percentage of `placed`'s area that lies inside `region`.
///
/// Zero-width or zero-height boxes fall back to the covered fraction of
/// their extent; a point scores 100 when inside the region.
pub fn overlap_percent(placed: &BBox, region: &BBox) -> f64 {
    let w = placed.width();
    let h = placed.height();
    let ix = (placed.max_x.min(region.max_x) - placed.min_x.max(region.min_x)).max(0.0);
    let iy = (placed.max_y.min(region.max_y) - placed.min_y.max(region.min_y)).max(0.0);
    let x_in = placed.min_x >= region.min_x && placed.max_x <= region.max_x;
    let y_in = placed.min_y >= region.min_y && placed.max_y <= region.max_y;
    let fx = if w > 0.0 { ix / w } else if x_in { 1.0 } else { 0.0 };
    let fy = if h > 0.0 { iy / h } else if y_in { 1.0 } else { 0.0 };
    (100.0 * fx * fy).clamp(0.0, 100.0)
}

/// Region of `position` relative to `anchor`.
pub fn position_region(anchor: &BBox, position: RelPosition, params: &RegionParams) -> BBox {
    let (x0, y0, x1, y1) = (anchor.min_x, anchor.min_y, anchor.max_x, anchor.max_y);
    let w = anchor.width();
    let h = anchor.height();
    let ext = params.reach * w.max(h);
    let band = params.script_band * h / 2.0;
    match position {
        RelPosition::Right => BBox::new(x1, y0, x1 + ext, y1),
        RelPosition::Left => BBox::new(x0 - ext, y0, x0, y1),
        RelPosition::Above => BBox::new(x0, y0 - ext, x1, y0),
        RelPosition::Below => BBox::new(x0, y1, x1, y1 + ext),
        RelPosition::SuperScript => BBox::new(x1, y0 - ext, x1 + ext, y0 + band),
        RelPosition::SubScript => BBox::new(x1, y1 - band, x1 + ext, y1 + ext),
        RelPosition::UpperLeft => BBox::new(x0 - ext, y0 - ext, x0, y0 + band),
        RelPosition::LowerLeft => BBox::new(x0 - ext, y1 - band, x0, y1 + ext),
        RelPosition::Inside => {
            let dx = params.inside_inset * w;
            let dy = params.inside_inset * h;
            BBox::new(x0 + dx, y0 + dy, x1 - dx, y1 - dy)
        }
    }
}

/// Widens any side shorter than `eps` to `eps`, keeping the center.
pub fn inflate_degenerate(b: &BBox, eps: f64) -> BBox {
    let mut out = *b;
    if b.width() < eps {
        let c = b.center_x();
        out.min_x = c - eps / 2.0;
        out.max_x = c + eps / 2.0;
    }
    if b.height() < eps {
        let c = b.center_y();
        out.min_y = c - eps / 2.0;
        out.max_y = c + eps / 2.0;
    }
    out
}

pub fn union_all<'a>(boxes: impl IntoIterator<Item = &'a BBox>) -> Option<BBox> {
    boxes.into_iter().fold(None, |acc: Option<BBox>, b| Some(acc.map_or(*b, |a| a.union(b))))
}
