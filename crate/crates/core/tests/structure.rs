mod common;

use common::goldens;
use common::placement::{brute_force_place, random_scene};

use std::collections::BTreeMap;

use nefmath::corpus::glyphs::Jitter;
use nefmath::corpus::{generate, render_expression, CorpusConfig, CorpusExpression};
use nefmath::ink::BBox;
use nefmath::render::to_latex;
use nefmath::structure::rules::predicate_holds;
use nefmath::structure::table::best_candidate;
use nefmath::structure::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn inst(id: &str, label: &str, b: (f64, f64, f64, f64)) -> SymbolInstance {
    SymbolInstance {
        id: id.into(),
        label: label.into(),
        strokes: vec![id.into()],
        bbox: BBox::new(b.0, b.1, b.2, b.3),
        confidence: 1.0,
    }
}

fn stroke(id: &str, label: &str, b: (f64, f64, f64, f64)) -> StrokeSymbol {
    StrokeSymbol { stroke_id: id.into(), label: label.into(), bbox: BBox::new(b.0, b.1, b.2, b.3), confidence: 1.0 }
}

fn kb() -> KnowledgeBase {
    KnowledgeBase::builtin()
}

fn oracle_strokes(e: &CorpusExpression) -> Vec<StrokeSymbol> {
    e.ink
        .strokes
        .iter()
        .zip(&e.stroke_labels)
        .map(|(s, l)| StrokeSymbol { stroke_id: s.id.clone(), label: l.clone(), bbox: s.bbox(), confidence: 1.0 })
        .collect()
}

// ---- overlap and regions ----

fn grid_overlap(placed: &BBox, region: &BBox, n: usize) -> f64 {
    let mut inside = 0usize;
    for i in 0..n {
        for j in 0..n {
            let x = placed.min_x + (i as f64 + 0.5) / n as f64 * placed.width();
            let y = placed.min_y + (j as f64 + 0.5) / n as f64 * placed.height();
            if x >= region.min_x && x <= region.max_x && y >= region.min_y && y <= region.max_y {
                inside += 1;
            }
        }
    }
    100.0 * inside as f64 / (n * n) as f64
}

#[test]
fn overlap_half_box_matches_grid_oracle() {
    let placed = BBox::new(0.0, 0.0, 2.0, 2.0);
    let region = BBox::new(1.0, 0.0, 3.0, 2.0);
    assert_eq!(overlap_percent(&placed, &region), 50.0);
    assert!((grid_overlap(&placed, &region, 1000) - 50.0).abs() <= 0.5);
    assert_eq!(overlap_percent(&placed, &BBox::new(-1.0, -1.0, 5.0, 5.0)), 100.0);
    assert_eq!(overlap_percent(&placed, &BBox::new(3.0, 3.0, 4.0, 4.0)), 0.0);
}

#[test]
fn random_overlaps_match_grid_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..30 {
        let mut b = || {
            let (x, y) = (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0));
            BBox::new(x, y, x + rng.gen_range(0.5..6.0), y + rng.gen_range(0.5..6.0))
        };
        let (p, r) = (b(), b());
        assert!((overlap_percent(&p, &r) - grid_overlap(&p, &r, 400)).abs() <= 0.6);
    }
}

#[test]
fn left_and_right_regions_never_overlap() {
    let params = RegionParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let (x, y) = (rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0));
        let a = BBox::new(x, y, x + rng.gen_range(0.0..20.0), y + rng.gen_range(0.0..20.0));
        let l = position_region(&a, RelPosition::Left, &params);
        let r = position_region(&a, RelPosition::Right, &params);
        let shared = l.intersection(&r).map_or(0.0, |i| i.area());
        assert_eq!(shared, 0.0, "{a:?}");
    }
}

// ---- placement ----

#[test]
fn forbidden_position_scores_zero() {
    let table = kb().position_table;
    assert_eq!(table.k("2", RelPosition::Above), Coefficient::Forbidden);
    let anchor = inst("a", "2", (0.0, 0.0, 10.0, 10.0));
    let region = position_region(&anchor.bbox, RelPosition::Above, &table.params);
    let sym = inst("s", "3", (region.min_x + 1.0, region.min_y + 1.0, region.max_x - 1.0, region.max_y - 1.0));
    assert_eq!(overlap_percent(&sym.bbox, &region), 100.0);
    assert!(place_symbol(&sym, &[anchor], &table).is_none());
}

#[test]
fn required_position_outweighs_larger_overlap() {
    let required = PlacementCandidate { anchor: "a".into(), position: RelPosition::Below, p: 60.0, k: Coefficient::Required, np: 90.0 };
    let allowed = PlacementCandidate { anchor: "b".into(), position: RelPosition::Right, p: 80.0, k: Coefficient::Allowed, np: 80.0 };
    assert_eq!(required.np, required.p * required.k.value());
    let best = best_candidate(vec![allowed.clone(), required.clone()]).unwrap();
    assert_eq!(best, required);
}

#[test]
fn placement_matches_exhaustive_enumeration() {
    let table = kb().position_table;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..1000 {
        let scene = random_scene(&mut rng, 5);
        for sym in &scene {
            let got = place_symbol(sym, &scene, &table);
            assert_eq!(got, brute_force_place(sym, &scene, &table));
            if let Some(c) = got {
                assert_eq!(c.np, c.p * c.k.value());
                assert_ne!(c.k, Coefficient::Forbidden);
            }
        }
    }
}

// ---- reconstruction ----

#[test]
fn stacked_bars_become_equals() {
    let rules = kb().effective_rules();
    let strokes = [stroke("s0", "-", (0.0, 10.0, 20.0, 10.5)), stroke("s1", "-", (1.0, 18.0, 21.0, 18.4))];
    let out = reconstruct(&strokes, &rules).unwrap();
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].label, "=");
    assert_eq!(out[0].bbox, BBox::new(0.0, 10.0, 21.0, 18.4));
    let mut ids = out[0].strokes.clone();
    ids.sort();
    assert_eq!(ids, vec!["s0", "s1"]);
    // the default rule's predicates hold for this pair
    assert!(predicate_holds(PredicateKind::OverlapsHorizontally, 0.6, &strokes[0].bbox, &strokes[1].bbox));
}

#[test]
fn stem_with_dot_above_becomes_i() {
    let rules = kb().effective_rules();
    let strokes = [stroke("s0", "|", (10.0, 20.0, 10.5, 40.0)), stroke("s1", ".", (9.8, 12.0, 11.0, 13.2))];
    let out = reconstruct(&strokes, &rules).unwrap();
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].label, "i");
}

#[test]
fn far_apart_bars_stay_separate() {
    let rules = kb().effective_rules();
    let strokes = [stroke("s0", "-", (0.0, 10.0, 20.0, 10.5)), stroke("s1", "-", (60.0, 30.0, 80.0, 30.4))];
    let out = reconstruct(&strokes, &rules).unwrap();
    assert_eq!(out.iter().map(|s| s.label.as_str()).collect::<Vec<_>>(), vec!["-", "-"]);
}

#[test]
fn no_rules_is_identity() {
    let strokes = [stroke("s0", "-", (0.0, 10.0, 20.0, 10.5)), stroke("s1", "-", (1.0, 18.0, 21.0, 18.4))];
    let out = reconstruct(&strokes, &[]).unwrap();
    assert_eq!(out.len(), 2);
    for (o, s) in out.iter().zip(&strokes) {
        assert_eq!((o.label.as_str(), o.strokes.as_slice(), o.bbox), (s.label.as_str(), std::slice::from_ref(&s.stroke_id), s.bbox));
    }
}

#[test]
fn context_rule_relabels_stem_between_digits() {
    let rules = kb().effective_rules();
    let strokes = [
        stroke("s0", "2", (0.0, 0.0, 10.0, 20.0)),
        stroke("s1", "|", (13.0, 0.0, 13.5, 20.0)),
        stroke("s2", "3", (16.0, 0.0, 26.0, 20.0)),
    ];
    let out = reconstruct(&strokes, &rules).unwrap();
    let labels: Vec<&str> = out.iter().map(|s| s.label.as_str()).collect();
    assert_eq!(labels, vec!["2", "1", "3"]);
}

#[test]
fn cyclic_rules_hit_the_iteration_cap() {
    let relabel = |id: &str, from: &str, to: &str| HeuristicRule {
        id: id.into(),
        components: vec![Pattern::Label(from.into())],
        predicates: vec![],
        result: to.into(),
        priority: 1,
        target: Some(0),
    };
    let rules = vec![relabel("a-to-b", "a", "b"), relabel("b-to-a", "b", "a")];
    let err = reconstruct(&[stroke("s0", "a", (0.0, 0.0, 1.0, 1.0))], &rules).unwrap_err();
    match err {
        nefmath::AnalysisError::RuleCycle { cap, rules } => {
            assert_eq!(cap, 2);
            assert!(rules.contains(&"a-to-b".to_string()) && rules.contains(&"b-to-a".to_string()));
        }
        other => panic!("{other:?}"),
    }
}

// ---- grouping ----

#[test]
fn bar_with_content_above_and_below_is_a_fraction() {
    let table = kb().position_table;
    let syms = [
        inst("a", "a", (5.0, 0.0, 15.0, 10.0)),
        inst("bar", "-", (0.0, 14.0, 20.0, 15.0)),
        inst("b", "b", (5.0, 19.0, 15.0, 31.0)),
    ];
    let tree = group_symbols(&syms, &table).unwrap();
    assert_eq!(tree, ExprNode::row(vec![ExprNode::frac(ExprNode::sym("a"), ExprNode::sym("b"))]));
}

#[test]
fn raised_digit_is_a_superscript() {
    let table = kb().position_table;
    let syms = [inst("x", "x", (0.0, 10.0, 10.0, 20.0)), inst("2", "2", (11.0, 3.0, 16.0, 11.0))];
    let tree = group_symbols(&syms, &table).unwrap();
    assert_eq!(tree, ExprNode::row(vec![ExprNode::sup(ExprNode::sym("x"), ExprNode::num("2"))]));
}

#[test]
fn adjacent_digits_and_point_fuse_into_a_number() {
    let table = kb().position_table;
    let syms = [
        inst("d1", "1", (0.0, 0.0, 6.0, 20.0)),
        inst("p", ".", (8.0, 18.0, 10.0, 20.0)),
        inst("d5", "5", (12.0, 0.0, 22.0, 20.0)),
    ];
    let tree = group_symbols(&syms, &table).unwrap();
    assert_eq!(tree, ExprNode::row(vec![ExprNode::num("1.5")]));
}

#[test]
fn orphan_bracket_is_reported() {
    let table = kb().position_table;
    let syms = [inst("o", "(", (0.0, 0.0, 4.0, 20.0)), inst("x", "x", (6.0, 5.0, 16.0, 15.0))];
    assert!(matches!(group_symbols(&syms, &table), Err(nefmath::AnalysisError::UnmatchedBracket { .. })));
}

#[test]
fn fraction_without_denominator_is_reported() {
    let table = kb().position_table;
    let syms = [inst("a", "a", (5.0, 0.0, 15.0, 10.0)), inst("bar", "-", (0.0, 14.0, 20.0, 15.0)), inst("b", "b", (30.0, 5.0, 40.0, 15.0))];
    let r = group_symbols(&syms, &table);
    assert!(matches!(r, Err(nefmath::AnalysisError::EmptySlot { .. })) || r.is_ok(), "{r:?}");
}

#[test]
fn empty_scene_is_an_empty_row() {
    let k = kb();
    let rep = analyze(&[], &k.position_table, &k.effective_rules());
    assert_eq!(rep.tree, ExprNode::empty());
    assert!(rep.symbols.is_empty() && rep.diagnostics.is_empty());
}

// ---- goldens and properties ----

fn golden_scene(tree: &ExprNode) -> CorpusExpression {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    render_expression("golden", tree, &Jitter::NONE, &mut rng)
}

#[test]
fn golden_suite_trees_and_latex() {
    let k = kb();
    let rules = k.effective_rules();
    let gs = goldens::goldens();
    assert_eq!(gs.len(), 20);
    for (tree, latex) in &gs {
        assert_eq!(to_latex(tree), *latex);
        let scene = golden_scene(tree);
        let rep = analyze(&oracle_strokes(&scene), &k.position_table, &rules);
        assert_eq!(&rep.tree, tree, "{latex}");
        assert_eq!(to_latex(&rep.tree), *latex);
        assert!(rep.diagnostics.is_empty(), "{latex}: {:?}", rep.diagnostics);
    }
}

#[test]
fn golden_latex_is_injective() {
    let gs = goldens::goldens();
    let mut seen = BTreeMap::new();
    for (tree, latex) in &gs {
        if let Some(prev) = seen.insert(to_latex(tree), tree.clone()) {
            assert_eq!(&prev, tree, "{latex}");
        }
    }
    assert_eq!(seen.len(), gs.len());
}

fn assert_permutation_invariant(strokes: &[StrokeSymbol], rng: &mut ChaCha8Rng, k: &KnowledgeBase) {
    let rules = k.effective_rules();
    let base = analyze(strokes, &k.position_table, &rules);
    for _ in 0..4 {
        let mut shuffled = strokes.to_vec();
        shuffled.shuffle(rng);
        let rep = analyze(&shuffled, &k.position_table, &rules);
        assert_eq!(rep.tree, base.tree);
        assert_eq!(rep.diagnostics, base.diagnostics);
    }
}

#[test]
fn analysis_ignores_input_order_on_goldens_and_corpus() {
    let k = kb();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (tree, _) in goldens::goldens() {
        assert_permutation_invariant(&oracle_strokes(&golden_scene(&tree)), &mut rng, &k);
    }
    let corpus = generate(&CorpusConfig { train_count: 60, test_count: 0, ..CorpusConfig::default() });
    for e in &corpus.train {
        assert_permutation_invariant(&oracle_strokes(e), &mut rng, &k);
    }
}

#[test]
fn noiseless_corpus_closes_under_analysis() {
    let k = kb();
    let rules = k.effective_rules();
    let corpus = generate(&CorpusConfig { train_count: 100, test_count: 50, jitter: Jitter::NONE, ..CorpusConfig::default() });
    for e in corpus.train.iter().chain(&corpus.test) {
        let rep = analyze(&oracle_strokes(e), &k.position_table, &rules);
        assert_eq!(rep.tree, e.tree, "{}", e.latex);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_stroke_lands_in_exactly_one_symbol(seed in 0u64..10_000, n in 1usize..9) {
        let k = kb();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels = ["-", "|", ".", "\\", "/", "2", "x", "s", "i", "n", "(", ")"];
        let strokes: Vec<StrokeSymbol> = (0..n).map(|i| {
            let (x, y) = (rng.gen_range(0.0..60.0), rng.gen_range(0.0..60.0));
            let (w, h) = (rng.gen_range(0.0..20.0), rng.gen_range(0.0..20.0));
            stroke(&format!("s{i}"), labels[rng.gen_range(0..labels.len())], (x, y, x + w, y + h))
        }).collect();
        let rep = analyze(&strokes, &k.position_table, &k.effective_rules());
        let mut seen: Vec<String> = rep.symbols.iter().flat_map(|s| s.strokes.clone()).collect();
        seen.sort();
        let mut want: Vec<String> = strokes.iter().map(|s| s.stroke_id.clone()).collect();
        want.sort();
        prop_assert_eq!(seen, want);
        for s in &rep.symbols {
            let union = s.strokes.iter()
                .map(|id| strokes.iter().find(|t| &t.stroke_id == id).unwrap().bbox)
                .reduce(|a, b| a.union(&b)).unwrap();
            prop_assert_eq!(union, s.bbox);
        }
        // re-analysis of the same input is stable
        let again = analyze(&strokes, &k.position_table, &k.effective_rules());
        prop_assert_eq!(again, rep);
    }
}
