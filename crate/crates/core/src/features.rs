//! Stroke feature extraction.
//!
//! A stroke is simplified with split-at-max-deviation polyline
//! approximation, resampled to a fixed number of vertices equally spaced by
//! arc length, and normalized into the unit square with its aspect ratio
//! kept. The feature vector is the concatenated `(x, y)` of the vertices.

use serde::{Deserialize, Serialize};

use crate::ink::{bbox_of, InkPoint, Stroke};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplifyParams {
    /// Tolerance as a fraction of the stroke's bbox diagonal.
    pub epsilon: f64,
    pub target_vertices: usize,
}

impl Default for SimplifyParams {
    fn default() -> Self {
        Self { epsilon: 0.02, target_vertices: 16 }
    }
}

impl SimplifyParams {
    pub fn feature_len(&self) -> usize {
        2 * self.target_vertices
    }

    pub fn is_valid(&self) -> bool {
        self.epsilon >= 0.0 && self.epsilon.is_finite() && self.target_vertices >= 2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Distance from `p` to the segment `a`-`b`.
pub fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len_sq = dx * dx + dy * dy;
    if len_sq == 0.0 {
        return (p.0 - a.0).hypot(p.1 - a.1);
    }
    let t = (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len_sq).clamp(0.0, 1.0);
    (p.0 - (a.0 + t * dx)).hypot(p.1 - (a.1 + t * dy))
}

fn keep_inner(points: &[InkPoint], lo: usize, hi: usize, tolerance: f64, keep: &mut Vec<bool>) {
    if hi <= lo + 1 {
        return;
    }
    let a = (points[lo].x, points[lo].y);
    let b = (points[hi].x, points[hi].y);
    let (mut worst, mut worst_d) = (lo, -1.0);
    for (i, p) in points.iter().enumerate().take(hi).skip(lo + 1) {
        let d = point_segment_distance((p.x, p.y), a, b);
        if d > worst_d {
            worst = i;
            worst_d = d;
        }
    }
    // A zero tolerance still drops exactly-collinear points.
    if worst_d > tolerance {
        keep[worst] = true;
        keep_inner(points, lo, worst, tolerance, keep);
        keep_inner(points, worst, hi, tolerance, keep);
    }
}

/// Split-at-max-deviation simplification with tolerance
/// `epsilon * bbox_diagonal`. The result is a subsequence of the stroke's
/// points that keeps both endpoints.
pub fn simplify_polyline(stroke: &Stroke, params: &SimplifyParams) -> Vec<InkPoint> {
    let points = &stroke.points;
    let n = points.len();
    let tolerance = params.epsilon * bbox_of(stroke).diagonal();
    let mut keep = vec![false; n];
    keep[0] = true;
    keep[n - 1] = true;
    keep_inner(points, 0, n - 1, tolerance, &mut keep);
    points.iter().zip(keep).filter_map(|(p, k)| k.then_some(*p)).collect()
}

/// Resamples a polyline to `count` vertices equally spaced by arc length.
pub fn resample_by_arc_length(vertices: &[(f64, f64)], count: usize) -> Vec<(f64, f64)> {
    let mut cumulative = Vec::with_capacity(vertices.len());
    let mut total = 0.0;
    cumulative.push(0.0);
    for w in vertices.windows(2) {
        total += (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1);
        cumulative.push(total);
    }
    if total == 0.0 {
        return vec![vertices[0]; count];
    }
    let mut out = Vec::with_capacity(count);
    let mut seg = 0;
    for k in 0..count {
        let target = total * k as f64 / (count - 1) as f64;
        while seg + 2 < cumulative.len() && cumulative[seg + 1] < target {
            seg += 1;
        }
        let span = cumulative[seg + 1] - cumulative[seg];
        let u = if span > 0.0 { ((target - cumulative[seg]) / span).clamp(0.0, 1.0) } else { 0.0 };
        let (a, b) = (vertices[seg], vertices[seg + 1]);
        out.push((a.0 + u * (b.0 - a.0), a.1 + u * (b.1 - a.1)));
    }
    out
}

/// Maps vertices into the unit square: the longer bbox side spans [0, 1]
/// and the shorter side is centered.
fn normalize_unit_square(vertices: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let (mut lx, mut ly, mut hx, mut hy) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &(x, y) in vertices {
        lx = lx.min(x);
        ly = ly.min(y);
        hx = hx.max(x);
        hy = hy.max(y);
    }
    let side = (hx - lx).max(hy - ly);
    if side == 0.0 {
        return vec![(0.5, 0.5); vertices.len()];
    }
    let (cx, cy) = (0.5 * (lx + hx), 0.5 * (ly + hy));
    vertices
        .iter()
        .map(|&(x, y)| {
            (
                (0.5 + (x - cx) / side).clamp(0.0, 1.0),
                (0.5 + (y - cy) / side).clamp(0.0, 1.0),
            )
        })
        .collect()
}

pub fn extract_features(stroke: &Stroke, params: &SimplifyParams) -> FeatureVector {
    let v = params.target_vertices;
    let bbox = bbox_of(stroke);
    if bbox.width() == 0.0 && bbox.height() == 0.0 {
        return FeatureVector(vec![0.5; 2 * v]);
    }
    let simplified: Vec<(f64, f64)> = simplify_polyline(stroke, params).iter().map(|p| (p.x, p.y)).collect();
    let normalized = normalize_unit_square(&resample_by_arc_length(&simplified, v));
    FeatureVector(normalized.into_iter().flat_map(|(x, y)| [x, y]).collect())
}
