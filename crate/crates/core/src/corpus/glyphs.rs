//! Parametric single-stroke templates for the symbol classes.
//!
//! A template is drawn in a canonical box of height 1 and a per-class
//! width, then stretched onto the requested target box. Angles follow
//! screen convention (y down): 0 degrees points right, 90 points down.

use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Stroke-level classes produced by the generator, in model label order.
pub const STROKE_CLASSES: [&str; 40] = [
    "0", "1", "2", "3", "4", "5", "6", "7", "8", "9", "-", "|", "/", "\\", "(", ")", "[", "]", ".", ",", "Σ", "Π", "∫",
    "√", "a", "b", "c", "d", "e", "h", "m", "n", "p", "r", "s", "u", "v", "w", "y", "z",
];

enum Piece {
    Line(&'static [(f64, f64)]),
    Arc { cx: f64, cy: f64, rx: f64, ry: f64, from: f64, to: f64 },
    Eight,
}

const fn arc(cx: f64, cy: f64, rx: f64, ry: f64, from: f64, to: f64) -> Piece {
    Piece::Arc { cx, cy, rx, ry, from, to }
}

/// Canonical width and pieces of a class template.
fn template(label: &str) -> Option<(f64, Vec<Piece>)> {
    use Piece::Line;
    let t = match label {
        "0" => (0.6, vec![arc(0.3, 0.5, 0.3, 0.5, -90.0, -450.0)]),
        "1" => (0.35, vec![Line(&[(0.0, 0.25), (0.25, 0.0), (0.25, 1.0)])]),
        "2" => (0.55, vec![arc(0.27, 0.27, 0.27, 0.27, -160.0, 30.0), Line(&[(0.0, 1.0), (0.55, 1.0)])]),
        "3" => (
            0.5,
            vec![arc(0.25, 0.25, 0.25, 0.25, -150.0, 90.0), arc(0.25, 0.75, 0.25, 0.25, -90.0, 150.0)],
        ),
        "4" => (0.6, vec![Line(&[(0.45, 1.0), (0.45, 0.0), (0.0, 0.65), (0.6, 0.65)])]),
        "5" => (
            0.55,
            vec![Line(&[(0.5, 0.0), (0.05, 0.0), (0.03, 0.45)]), arc(0.27, 0.7, 0.27, 0.3, -150.0, 150.0)],
        ),
        "6" => (
            0.6,
            vec![arc(0.32, 0.5, 0.3, 0.5, -70.0, -180.0), arc(0.3, 0.72, 0.28, 0.28, 180.0, -180.0)],
        ),
        "7" => (0.55, vec![Line(&[(0.0, 0.0), (0.55, 0.0), (0.15, 1.0)])]),
        "8" => (0.56, vec![Piece::Eight]),
        "9" => (0.55, vec![arc(0.27, 0.27, 0.27, 0.27, 0.0, -360.0), Line(&[(0.5, 1.0)])]),
        "-" => (1.0, vec![Line(&[(0.0, 0.5), (1.0, 0.5)])]),
        "|" => (0.0, vec![Line(&[(0.0, 0.0), (0.0, 1.0)])]),
        "/" => (0.5, vec![Line(&[(0.0, 1.0), (0.5, 0.0)])]),
        "\\" => (0.5, vec![Line(&[(0.0, 0.0), (0.5, 1.0)])]),
        "(" => (0.3, vec![arc(0.35, 0.5, 0.35, 0.5, -110.0, -250.0)]),
        ")" => (0.3, vec![arc(-0.05, 0.5, 0.35, 0.5, -70.0, 70.0)]),
        "[" => (0.3, vec![Line(&[(0.3, 0.0), (0.0, 0.0), (0.0, 1.0), (0.3, 1.0)])]),
        "]" => (0.3, vec![Line(&[(0.0, 0.0), (0.3, 0.0), (0.3, 1.0), (0.0, 1.0)])]),
        "," => (0.25, vec![Line(&[(0.2, 0.0), (0.22, 0.35), (0.0, 1.0)])]),
        "Σ" => (0.75, vec![Line(&[(0.75, 0.05), (0.7, 0.0), (0.0, 0.0), (0.4, 0.5), (0.0, 1.0), (0.75, 1.0)])]),
        "Π" => (0.75, vec![Line(&[(0.0, 1.0), (0.0, 0.0), (0.75, 0.0), (0.75, 1.0)])]),
        "∫" => (
            0.5,
            vec![
                arc(0.38, 0.1, 0.12, 0.1, -10.0, -180.0),
                Line(&[(0.24, 0.9)]),
                arc(0.12, 0.9, 0.12, 0.1, 0.0, 180.0),
            ],
        ),
        "a" => (0.55, vec![arc(0.26, 0.55, 0.26, 0.42, -30.0, -390.0), Line(&[(0.52, 0.1), (0.55, 1.0)])]),
        "b" => (0.5, vec![Line(&[(0.0, 0.0), (0.0, 1.0), (0.0, 0.7)]), arc(0.24, 0.7, 0.24, 0.3, 180.0, 530.0)]),
        "c" => (0.5, vec![arc(0.28, 0.5, 0.28, 0.5, -40.0, -320.0)]),
        "d" => (0.5, vec![arc(0.24, 0.7, 0.24, 0.3, -20.0, -340.0), Line(&[(0.48, 0.0), (0.48, 1.0)])]),
        "e" => (0.55, vec![Line(&[(0.03, 0.55), (0.52, 0.55)]), arc(0.27, 0.55, 0.25, 0.45, 0.0, -320.0)]),
        "h" => (0.5, vec![Line(&[(0.0, 0.0), (0.0, 1.0), (0.0, 0.6)]), arc(0.24, 0.6, 0.24, 0.2, 180.0, 360.0), Line(&[(0.48, 1.0)])]),
        "m" => (
            0.7,
            vec![
                Line(&[(0.0, 0.0), (0.0, 1.0), (0.0, 0.3)]),
                arc(0.175, 0.3, 0.175, 0.3, 180.0, 360.0),
                Line(&[(0.35, 1.0), (0.35, 0.3)]),
                arc(0.525, 0.3, 0.175, 0.3, 180.0, 360.0),
                Line(&[(0.7, 1.0)]),
            ],
        ),
        "n" => (0.5, vec![Line(&[(0.0, 0.0), (0.0, 1.0), (0.0, 0.3)]), arc(0.25, 0.3, 0.25, 0.3, 180.0, 360.0), Line(&[(0.5, 1.0)])]),
        "p" => (0.5, vec![Line(&[(0.0, 0.0), (0.0, 1.0), (0.0, 0.3)]), arc(0.24, 0.3, 0.24, 0.3, 180.0, 540.0)]),
        "r" => (0.45, vec![Line(&[(0.0, 0.0), (0.0, 1.0), (0.0, 0.45)]), arc(0.25, 0.45, 0.25, 0.4, 180.0, 300.0)]),
        "s" => (
            0.5,
            vec![arc(0.25, 0.25, 0.23, 0.25, -20.0, -270.0), arc(0.25, 0.75, 0.23, 0.25, -90.0, 160.0)],
        ),
        "u" => (0.5, vec![Line(&[(0.0, 0.0), (0.0, 0.65)]), arc(0.23, 0.65, 0.23, 0.35, 180.0, 0.0), Line(&[(0.46, 0.0), (0.5, 1.0)])]),
        "v" => (0.5, vec![Line(&[(0.0, 0.0), (0.25, 1.0), (0.5, 0.0)])]),
        "w" => (0.65, vec![Line(&[(0.0, 0.0), (0.15, 1.0), (0.325, 0.3), (0.5, 1.0), (0.65, 0.0)])]),
        "y" => (0.5, vec![Line(&[(0.0, 0.0), (0.22, 0.55), (0.45, 0.0), (0.12, 1.0)])]),
        "z" => (0.5, vec![Line(&[(0.0, 0.0), (0.5, 0.0), (0.0, 1.0), (0.5, 1.0)])]),
        _ => return None,
    };
    Some(t)
}

/// Width-to-height ratio of a class at natural proportions.
pub fn natural_aspect(label: &str) -> f64 {
    match label {
        "." => 0.0,
        "√" => 1.0,
        _ => template(label).map(|(w, _)| w).unwrap_or(0.5),
    }
}

fn sample_pieces(pieces: &[Piece]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for piece in pieces {
        match piece {
            Piece::Line(ps) => pts.extend_from_slice(ps),
            Piece::Arc { cx, cy, rx, ry, from, to } => {
                let steps = (((to - from).abs() / 6.0).ceil() as usize).max(2);
                for i in 0..=steps {
                    let a = (from + (to - from) * i as f64 / steps as f64).to_radians();
                    pts.push((cx + rx * a.cos(), cy + ry * a.sin()));
                }
            }
            Piece::Eight => {
                for i in 0..=72 {
                    let t = std::f64::consts::TAU * i as f64 / 72.0;
                    pts.push((0.28 - 0.28 * (2.0 * t).sin() * 0.9, 0.5 - 0.5 * t.cos()));
                }
            }
        }
    }
    pts
}

/// Noise-free trajectory of `label` filling the box `(x, y, w, h)`.
/// Returns `None` for labels without a template.
pub fn glyph_path(label: &str, x: f64, y: f64, w: f64, h: f64) -> Option<Vec<(f64, f64)>> {
    if label == "." {
        return Some(vec![(x + w / 2.0, y + h / 2.0); 3]);
    }
    if label == "√" {
        // the hook keeps its proportions; the overbar stretches
        let hook = (0.45 * h).min(w * 0.6);
        return Some(vec![
            (x, y + 0.6 * h),
            (x + 0.12 * hook, y + 0.5 * h),
            (x + 0.5 * hook, y + h),
            (x + hook, y),
            (x + w, y),
        ]);
    }
    let (cw, pieces) = template(label)?;
    let canon = sample_pieces(&pieces);
    let (min_x, max_x) = canon.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
    let (min_y, max_y) = canon.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
    let sx = if max_x - min_x > 1e-12 && cw > 0.0 { w / (max_x - min_x) } else { 0.0 };
    let sy = if max_y - min_y > 1e-12 { h / (max_y - min_y) } else { 0.0 };
    let cx_off = if sx == 0.0 { w / 2.0 } else { 0.0 };
    let cy_off = if sy == 0.0 { h / 2.0 } else { 0.0 };
    Some(canon.iter().map(|&(px, py)| (x + cx_off + (px - min_x) * sx, y + cy_off + (py - min_y) * sy)).collect())
}

/// Distortion applied to a rendered glyph.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Jitter {
    /// Amplitude of the smooth displacement field, as a fraction of glyph size.
    pub point_noise: f64,
    pub max_rotation_deg: f64,
    pub min_scale: f64,
    pub max_scale: f64,
}

impl Jitter {
    pub const NONE: Jitter = Jitter { point_noise: 0.0, max_rotation_deg: 0.0, min_scale: 1.0, max_scale: 1.0 };

    pub fn is_none(&self) -> bool {
        *self == Self::NONE
    }
}

impl Default for Jitter {
    fn default() -> Self {
        Self { point_noise: 0.03, max_rotation_deg: 5.0, min_scale: 0.8, max_scale: 1.2 }
    }
}

fn densify(path: &[(f64, f64)], spacing: f64) -> Vec<(f64, f64)> {
    let mut out = vec![path[0]];
    for w in path.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
        let n = ((len / spacing).ceil() as usize).max(1);
        for i in 1..=n {
            let t = i as f64 / n as f64;
            out.push((a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t));
        }
    }
    out
}

/// Densifies `path` and applies scale and rotation about `pivot` plus a
/// smooth random displacement along the stroke.
pub fn distort<R: Rng>(path: &[(f64, f64)], pivot: (f64, f64), size: f64, jitter: &Jitter, rng: &mut R) -> Vec<(f64, f64)> {
    if path.iter().all(|p| *p == path[0]) {
        return path.to_vec();
    }
    let mut pts = densify(path, (size * 0.03).max(1e-6));
    if jitter.is_none() {
        return pts;
    }
    let scale = rng.gen_range(jitter.min_scale..=jitter.max_scale);
    let rot = rng.gen_range(-jitter.max_rotation_deg..=jitter.max_rotation_deg).to_radians();
    let (sin, cos) = rot.sin_cos();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let amp = jitter.point_noise * size;
    let modes: Vec<(f64, f64, f64, f64)> = (1..=3)
        .map(|k| {
            let k = k as f64;
            (
                amp * normal.sample(rng) / k,
                rng.gen_range(0.0..std::f64::consts::TAU),
                amp * normal.sample(rng) / k,
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let n = pts.len();
    for (i, p) in pts.iter_mut().enumerate() {
        let s = i as f64 / (n - 1).max(1) as f64;
        let mut dx = 0.0;
        let mut dy = 0.0;
        for (k, (ax, px, ay, py)) in modes.iter().enumerate() {
            let f = std::f64::consts::TAU * (k + 1) as f64 * s;
            dx += ax * (f + px).sin();
            dy += ay * (f + py).sin();
        }
        let (rx, ry) = ((p.0 - pivot.0) * scale, (p.1 - pivot.1) * scale);
        *p = (pivot.0 + rx * cos - ry * sin + dx, pivot.1 + rx * sin + ry * cos + dy);
    }
    pts
}
