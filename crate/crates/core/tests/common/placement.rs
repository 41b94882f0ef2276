use nefmath::ink::BBox;
use nefmath::structure::table::{effective_box, SceneMetrics};
use nefmath::structure::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn inst(id: &str, label: &str, b: (f64, f64, f64, f64)) -> SymbolInstance {
    SymbolInstance {
        id: id.into(),
        label: label.into(),
        strokes: vec![id.into()],
        bbox: BBox::new(b.0, b.1, b.2, b.3),
        confidence: 1.0,
    }
}

const SCENE_LABELS: [&str; 14] = ["a", "x", "2", "7", "-", "+", "=", ".", "(", ")", "Σ", "∫", "√", "sin"];

pub fn random_scene(rng: &mut ChaCha8Rng, n: usize) -> Vec<SymbolInstance> {
    (0..n)
        .map(|i| {
            let (x, y) = (rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0));
            let (w, h) = if rng.gen_bool(0.15) { (rng.gen_range(0.0..30.0), 0.0) } else { (rng.gen_range(1.0..30.0), rng.gen_range(1.0..30.0)) };
            inst(&format!("s{i}"), SCENE_LABELS[rng.gen_range(0..SCENE_LABELS.len())], (x, y, x + w, y + h))
        })
        .collect()
}

/// Exhaustive enumeration with the documented tie-break.
pub fn brute_force_place(sym: &SymbolInstance, scene: &[SymbolInstance], table: &PositionTable) -> Option<PlacementCandidate> {
    let metrics = SceneMetrics::of(table, scene.iter().map(|s| (s.label.as_str(), &s.bbox)).collect::<Vec<_>>());
    let placed = effective_box(table, &sym.label, &sym.bbox, &metrics);
    let mut all = Vec::new();
    for a in scene.iter().filter(|a| a.id != sym.id) {
        let abox = effective_box(table, &a.label, &a.bbox, &metrics);
        for (pi, pos) in RelPosition::ALL.iter().enumerate() {
            let p = overlap_percent(&placed, &position_region(&abox, *pos, &table.params));
            let k = table.k(&a.label, *pos);
            all.push((a, pi, PlacementCandidate { anchor: a.id.clone(), position: *pos, p, k, np: p * k.value() }));
        }
    }
    let max_np = all.iter().map(|c| c.2.np).fold(0.0, f64::max);
    if max_np <= 0.0 {
        return None;
    }
    let mut top: Vec<_> = all.into_iter().filter(|c| c.2.np == max_np).collect();
    let max_p = top.iter().map(|c| c.2.p).fold(f64::MIN, f64::max);
    top.retain(|c| c.2.p == max_p);
    top.sort_by(|x, y| reading_order(&x.0.bbox, &x.0.id, &y.0.bbox, &y.0.id).then(x.1.cmp(&y.1)));
    Some(top[0].2.clone())
}

