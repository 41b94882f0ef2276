//! Grouping of placed symbols into an expression tree.
//!
//! Each nesting level is processed in a fixed order: bracket pairs, fraction
//! bars, big operators, roots, then script attachment and number fusion on
//! what is left. Claimed content is grouped recursively as its own level.

use super::expr::{BigOperator, BracketKind, ExprNode};
use super::geometry::{inflate_degenerate, overlap_percent, position_region, RelPosition};
use super::table::{effective_box, PositionTable, SceneMetrics};
use super::{reading_order, SymbolInstance};
use crate::error::AnalysisError;
use crate::ink::BBox;

/// Labels under which composite items are looked up in the position table.
pub const GROUP_LABEL: &str = "#group";
pub const FRACTION_LABEL: &str = "#fraction";
pub const ROOT_LABEL: &str = "#root";
pub const BIGOP_LABEL: &str = "#bigop";

/// Minimum P for a slot to claim an item.
const CLAIM_PERCENT: f64 = 50.0;

const TERMINATORS: [&str; 5] = ["+", "-", "=", "<", ">"];

#[derive(Debug, Clone)]
struct Item {
    id: String,
    label: String,
    atom: bool,
    bbox: BBox,
    node: ExprNode,
}

impl Item {
    fn atom(s: &SymbolInstance) -> Self {
        Item { id: s.id.clone(), label: s.label.clone(), atom: true, bbox: s.bbox, node: ExprNode::sym(&s.label) }
    }

    fn is_atom(&self, label: &str) -> bool {
        self.atom && self.label == label
    }
}

struct Ctx<'a> {
    table: &'a PositionTable,
    eps: f64,
}

fn sort_items(items: &mut [Item]) {
    items.sort_by(|a, b| reading_order(&a.bbox, &a.id, &b.bbox, &b.id));
}

fn union_items<'a>(first: BBox, rest: impl IntoIterator<Item = &'a Item>) -> BBox {
    rest.into_iter().fold(first, |acc, i| acc.union(&i.bbox))
}

/// Removes and returns the items whose ids are in `ids`, in reading order.
fn take(items: &mut Vec<Item>, ids: &[String]) -> Vec<Item> {
    let mut taken = Vec::new();
    let mut i = 0;
    while i < items.len() {
        if ids.contains(&items[i].id) {
            taken.push(items.remove(i));
        } else {
            i += 1;
        }
    }
    sort_items(&mut taken);
    taken
}

/// Tree of a whole scene; the top level is always a row.
pub fn group_symbols(instances: &[SymbolInstance], table: &PositionTable) -> Result<ExprNode, AnalysisError> {
    if instances.is_empty() {
        return Ok(ExprNode::empty());
    }
    let scene = SceneMetrics::of(table, instances.iter().map(|s| (s.label.as_str(), &s.bbox)).collect::<Vec<_>>());
    let ctx = Ctx { table, eps: scene.eps };
    let items: Vec<Item> = instances.iter().map(Item::atom).collect();
    Ok(ExprNode::row(build(items, &ctx, scene.ref_height)?))
}

fn build(mut items: Vec<Item>, ctx: &Ctx, parent_height: f64) -> Result<Vec<ExprNode>, AnalysisError> {
    if items.is_empty() {
        return Ok(Vec::new());
    }
    sort_items(&mut items);
    let metrics = level_metrics(&items, ctx, parent_height);
    group_brackets(&mut items, ctx, &metrics)?;
    group_fractions(&mut items, ctx, &metrics)?;
    group_bigops(&mut items, ctx, &metrics)?;
    group_roots(&mut items, ctx, &metrics)?;
    Ok(attach_scripts(items, ctx, &metrics))
}

fn level_metrics(items: &[Item], ctx: &Ctx, parent_height: f64) -> SceneMetrics {
    let mut heights: Vec<f64> = items
        .iter()
        .filter(|i| i.atom && ctx.table.metric(&i.label) == super::table::VerticalMetric::Normal && i.bbox.height() > 0.0)
        .map(|i| i.bbox.height())
        .collect();
    heights.sort_by(f64::total_cmp);
    let ref_height = if heights.is_empty() { parent_height } else { heights[(heights.len() - 1) / 2] };
    SceneMetrics { eps: ctx.eps, ref_height }
}

fn sub_tree(items: Vec<Item>, ctx: &Ctx, metrics: &SceneMetrics) -> Result<ExprNode, AnalysisError> {
    Ok(ExprNode::seq(build(items, ctx, metrics.ref_height)?))
}

fn group_brackets(items: &mut Vec<Item>, ctx: &Ctx, metrics: &SceneMetrics) -> Result<(), AnalysisError> {
    let compatible = |o: &BBox, c: &BBox| {
        let overlap = (o.max_y.min(c.max_y) - o.min_y.max(c.min_y)).max(0.0);
        let (ho, hc) = (o.height(), c.height());
        c.center_x() > o.center_x() && overlap >= 0.5 * ho.min(hc) && ho <= 2.0 * hc && hc <= 2.0 * ho
    };
    let mut open: Vec<usize> = Vec::new();
    let mut pairs: Vec<(String, String, BracketKind, f64)> = Vec::new();
    for (i, item) in items.iter().enumerate() {
        if !item.atom {
            continue;
        }
        if BracketKind::open(&item.label).is_some() {
            open.push(i);
        } else if let Some(kind) = BracketKind::close(&item.label) {
            let nearest = open
                .iter()
                .enumerate()
                .filter(|(_, &o)| compatible(&items[o].bbox, &item.bbox))
                .max_by(|a, b| items[*a.1].bbox.center_x().total_cmp(&items[*b.1].bbox.center_x()).then(b.0.cmp(&a.0)));
            let Some((slot, &o)) = nearest else {
                return Err(AnalysisError::UnmatchedBracket { label: item.label.clone(), id: item.id.clone() });
            };
            let ok = BracketKind::open(&items[o].label) == Some(kind);
            if !ok {
                return Err(AnalysisError::MismatchedBracket {
                    open: items[o].label.clone(),
                    open_id: items[o].id.clone(),
                    close: item.label.clone(),
                    close_id: item.id.clone(),
                });
            }
            open.remove(slot);
            pairs.push((items[o].id.clone(), item.id.clone(), kind, item.bbox.center_x() - items[o].bbox.center_x()));
        }
    }
    if let Some(&o) = open.first() {
        return Err(AnalysisError::UnmatchedBracket { label: items[o].label.clone(), id: items[o].id.clone() });
    }
    // innermost pairs first, so outer content sees inner groups as items
    pairs.sort_by(|a, b| a.3.total_cmp(&b.3).then_with(|| a.0.cmp(&b.0)));
    for (open_id, close_id, kind, _) in pairs {
        let o = items.iter().find(|i| i.id == open_id).expect("open bracket present").bbox;
        let c = items.iter().find(|i| i.id == close_id).expect("close bracket present").bbox;
        let (top, bottom) = (o.min_y.min(c.min_y), o.max_y.max(c.max_y));
        let inside: Vec<String> = items
            .iter()
            .filter(|i| i.id != open_id && i.id != close_id)
            .filter(|i| {
                let (x, y) = (i.bbox.center_x(), i.bbox.center_y());
                x > o.center_x() && x < c.center_x() && y >= top && y <= bottom
            })
            .map(|i| i.id.clone())
            .collect();
        let content = take(items, &inside);
        let bbox = union_items(o.union(&c), &content);
        let child = sub_tree(content, ctx, metrics)?;
        take(items, &[open_id.clone(), close_id]);
        items.push(Item { id: format!("#g:{open_id}"), label: GROUP_LABEL.into(), atom: false, bbox, node: ExprNode::group(kind, child) });
        sort_items(items);
    }
    Ok(())
}

/// Items with at least half their area in `region`, grown in the given
/// vertical direction past each newly claimed item.
fn claim_column(items: &[Item], skip: &[String], region: BBox, upward: bool, ext: f64, eps: f64) -> Vec<String> {
    let mut region = region;
    let mut claimed: Vec<String> = Vec::new();
    loop {
        let mut grew = false;
        for it in items {
            if skip.contains(&it.id) || claimed.contains(&it.id) {
                continue;
            }
            if overlap_percent(&inflate_degenerate(&it.bbox, eps), &region) >= CLAIM_PERCENT {
                claimed.push(it.id.clone());
                if upward {
                    region.min_y = region.min_y.min(it.bbox.min_y - ext);
                } else {
                    region.max_y = region.max_y.max(it.bbox.max_y + ext);
                }
                grew = true;
            }
        }
        if !grew {
            return claimed;
        }
    }
}

fn group_fractions(items: &mut Vec<Item>, ctx: &Ctx, metrics: &SceneMetrics) -> Result<(), AnalysisError> {
    let mut seen: Vec<String> = Vec::new();
    loop {
        let bar = items
            .iter()
            .filter(|i| i.is_atom("-") && !seen.contains(&i.id))
            .max_by(|a, b| a.bbox.width().total_cmp(&b.bbox.width()).then_with(|| reading_order(&b.bbox, &b.id, &a.bbox, &a.id)))
            .cloned();
        let Some(bar) = bar else { return Ok(()) };
        seen.push(bar.id.clone());
        let b = inflate_degenerate(&bar.bbox, ctx.eps);
        let ext = ctx.table.params.reach * b.width().max(b.height());
        let skip = vec![bar.id.clone()];
        let above = claim_column(items, &skip, BBox::new(b.min_x, b.min_y - ext, b.max_x, b.min_y), true, ext, ctx.eps);
        let below = claim_column(items, &skip, BBox::new(b.min_x, b.max_y, b.max_x, b.max_y + ext), false, ext, ctx.eps);
        match (above.is_empty(), below.is_empty()) {
            (true, true) => continue,
            (false, true) | (true, false) => {
                return Err(AnalysisError::EmptySlot {
                    construct: "fraction".into(),
                    id: bar.id.clone(),
                    slot: if above.is_empty() { "numerator" } else { "denominator" }.into(),
                });
            }
            (false, false) => {}
        }
        let num = take(items, &above);
        let den = take(items, &below);
        take(items, &skip);
        let bbox = union_items(union_items(bar.bbox, &num), &den);
        let node = ExprNode::frac(sub_tree(num, ctx, metrics)?, sub_tree(den, ctx, metrics)?);
        items.push(Item { id: format!("#f:{}", bar.id), label: FRACTION_LABEL.into(), atom: false, bbox, node });
        sort_items(items);
    }
}

fn group_bigops(items: &mut Vec<Item>, ctx: &Ctx, metrics: &SceneMetrics) -> Result<(), AnalysisError> {
    let params = &ctx.table.params;
    loop {
        let Some(op) = items.iter().find(|i| i.atom && BigOperator::from_label(&i.label).is_some()).cloned() else {
            return Ok(());
        };
        let kind = BigOperator::from_label(&op.label).expect("filtered above");
        let b = inflate_degenerate(&op.bbox, ctx.eps);
        let w = b.width();
        let ext = params.reach * w.max(b.height());
        let above = BBox::new(b.min_x - 0.5 * w, b.min_y - ext, b.max_x + 0.5 * w, b.min_y);
        let below = BBox::new(b.min_x - 0.5 * w, b.max_y, b.max_x + 0.5 * w, b.max_y + ext);
        let claims = |region: &BBox, taken: &[String]| -> Vec<String> {
            items
                .iter()
                .filter(|i| i.id != op.id && !taken.contains(&i.id))
                .filter(|i| overlap_percent(&inflate_degenerate(&i.bbox, ctx.eps), region) >= CLAIM_PERCENT)
                .map(|i| i.id.clone())
                .collect()
        };
        let mut upper = claims(&above, &[]);
        let mut lower = claims(&below, &upper);
        if kind == BigOperator::Integral {
            let taken: Vec<String> = upper.iter().chain(lower.iter()).cloned().collect();
            let sup = claims(&position_region(&b, RelPosition::SuperScript, params), &taken);
            let taken: Vec<String> = taken.into_iter().chain(sup.iter().cloned()).collect();
            let sub = claims(&position_region(&b, RelPosition::SubScript, params), &taken);
            upper.extend(sup);
            lower.extend(sub);
        }
        let mut body: Vec<String> = Vec::new();
        for it in items.iter() {
            if it.id == op.id || upper.contains(&it.id) || lower.contains(&it.id) {
                continue;
            }
            if it.bbox.center_x() <= op.bbox.center_x() {
                continue;
            }
            if it.atom && TERMINATORS.contains(&it.label.as_str()) {
                break;
            }
            body.push(it.id.clone());
        }
        if body.is_empty() {
            return Err(AnalysisError::EmptySlot { construct: "big operator".into(), id: op.id.clone(), slot: "body".into() });
        }
        let upper_items = take(items, &upper);
        let lower_items = take(items, &lower);
        let body_items = take(items, &body);
        take(items, std::slice::from_ref(&op.id));
        let bbox = union_items(union_items(union_items(op.bbox, &upper_items), &lower_items), &body_items);
        let opt = |v: Vec<Item>| -> Result<Option<ExprNode>, AnalysisError> {
            if v.is_empty() {
                Ok(None)
            } else {
                sub_tree(v, ctx, metrics).map(Some)
            }
        };
        let node = ExprNode::bigop(kind, opt(lower_items)?, opt(upper_items)?, sub_tree(body_items, ctx, metrics)?);
        items.push(Item { id: format!("#o:{}", op.id), label: BIGOP_LABEL.into(), atom: false, bbox, node });
        sort_items(items);
    }
}

fn group_roots(items: &mut Vec<Item>, ctx: &Ctx, metrics: &SceneMetrics) -> Result<(), AnalysisError> {
    let params = &ctx.table.params;
    loop {
        let root = items
            .iter()
            .filter(|i| i.is_atom("√"))
            .max_by(|a, b| a.bbox.area().total_cmp(&b.bbox.area()).then_with(|| reading_order(&b.bbox, &b.id, &a.bbox, &a.id)))
            .cloned();
        let Some(root) = root else { return Ok(()) };
        let b = inflate_degenerate(&root.bbox, ctx.eps);
        let claims = |region: &BBox, taken: &[String]| -> Vec<String> {
            items
                .iter()
                .filter(|i| i.id != root.id && !taken.contains(&i.id))
                .filter(|i| overlap_percent(&inflate_degenerate(&i.bbox, ctx.eps), region) >= CLAIM_PERCENT)
                .map(|i| i.id.clone())
                .collect()
        };
        let inside = claims(&position_region(&b, RelPosition::Inside, params), &[]);
        if inside.is_empty() {
            return Err(AnalysisError::EmptySlot { construct: "root".into(), id: root.id.clone(), slot: "radicand".into() });
        }
        let degree = claims(&position_region(&b, RelPosition::UpperLeft, params), &inside);
        let radicand = take(items, &inside);
        let degree = take(items, &degree);
        take(items, std::slice::from_ref(&root.id));
        let bbox = union_items(union_items(root.bbox, &radicand), &degree);
        let degree_node = if degree.is_empty() { None } else { Some(sub_tree(degree, ctx, metrics)?) };
        let node = ExprNode::root(degree_node, sub_tree(radicand, ctx, metrics)?);
        items.push(Item { id: format!("#r:{}", root.id), label: ROOT_LABEL.into(), atom: false, bbox, node });
        sort_items(items);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowRef {
    Base,
    Sup(usize),
    Sub(usize),
}

struct Entry {
    item: Item,
    sup: Vec<usize>,
    sub: Vec<usize>,
}

struct Level {
    row: RowRef,
    last: usize,
}

/// Rightmost extent of an entry including all of its scripts.
fn reach_x(entries: &[Entry], e: usize) -> f64 {
    let en = &entries[e];
    en.sup.iter().chain(en.sub.iter()).map(|&s| reach_x(entries, s)).fold(en.item.bbox.max_x, f64::max)
}

/// Script attachment over a reading-ordered row.
///
/// Each new item is scored against the last item of every open level:
/// `Right` of the base stretched over its scripts continues that level,
/// `SuperScript` or `SubScript` of the base opens or extends its script row.
fn attach_scripts(mut items: Vec<Item>, ctx: &Ctx, metrics: &SceneMetrics) -> Vec<ExprNode> {
    sort_items(&mut items);
    let table = ctx.table;
    let params = &table.params;
    let mut entries: Vec<Entry> = Vec::with_capacity(items.len());
    let mut base: Vec<usize> = Vec::new();
    let mut path: Vec<Level> = Vec::new();

    for item in items {
        let placed = effective_box(table, &item.label, &item.bbox, metrics);
        let idx = entries.len();
        let mut best: Option<(f64, f64, usize, RelPosition)> = None;
        for (j, level) in path.iter().enumerate() {
            let anchor = &entries[level.last].item;
            let own = effective_box(table, &anchor.label, &anchor.bbox, metrics);
            let mut stretched = own;
            stretched.max_x = stretched.max_x.max(reach_x(&entries, level.last));
            for pos in [RelPosition::Right, RelPosition::SuperScript, RelPosition::SubScript] {
                let region_anchor = if pos == RelPosition::Right { &stretched } else { &own };
                let p = overlap_percent(&placed, &position_region(region_anchor, pos, params));
                let np = p * table.k(&anchor.label, pos).value();
                if np > 0.0 && best.is_none_or(|(bnp, bp, _, _)| np > bnp || (np == bnp && p > bp)) {
                    best = Some((np, p, j, pos));
                }
            }
        }
        entries.push(Entry { item, sup: Vec::new(), sub: Vec::new() });
        match best {
            None => {
                base.push(idx);
                path.clear();
                path.push(Level { row: RowRef::Base, last: idx });
            }
            Some((_, _, j, RelPosition::Right)) => {
                path.truncate(j + 1);
                match path[j].row {
                    RowRef::Base => base.push(idx),
                    RowRef::Sup(owner) => entries[owner].sup.push(idx),
                    RowRef::Sub(owner) => entries[owner].sub.push(idx),
                }
                path[j].last = idx;
            }
            Some((_, _, j, pos)) => {
                path.truncate(j + 1);
                let owner = path[j].last;
                let row = if pos == RelPosition::SuperScript {
                    entries[owner].sup.push(idx);
                    RowRef::Sup(owner)
                } else {
                    entries[owner].sub.push(idx);
                    RowRef::Sub(owner)
                };
                path.push(Level { row, last: idx });
            }
        }
    }
    row_nodes(&base, &entries)
}

fn is_digit(e: &Entry) -> bool {
    e.item.atom && e.item.label.len() == 1 && e.item.label.as_bytes()[0].is_ascii_digit()
}

fn is_separator(e: &Entry) -> bool {
    e.item.atom && (e.item.label == "." || e.item.label == ",")
}

fn has_scripts(e: &Entry) -> bool {
    !e.sup.is_empty() || !e.sub.is_empty()
}

fn with_scripts(base: ExprNode, e: &Entry, entries: &[Entry]) -> ExprNode {
    if !has_scripts(e) {
        return base;
    }
    let part = |row: &[usize]| (!row.is_empty()).then(|| ExprNode::seq(row_nodes(row, entries)));
    ExprNode::scripts(base, part(&e.sup), part(&e.sub))
}

/// Nodes of one row, fusing digit runs (with interior separators) into
/// numbers. Scripts on the last digit of a run wrap the whole number.
fn row_nodes(row: &[usize], entries: &[Entry]) -> Vec<ExprNode> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < row.len() {
        let e = &entries[row[i]];
        if !is_digit(e) {
            out.push(with_scripts(e.item.node.clone(), e, entries));
            i += 1;
            continue;
        }
        let mut text = e.item.label.clone();
        let mut j = i;
        while !has_scripts(&entries[row[j]]) {
            let next = row.get(j + 1).map(|&k| &entries[k]);
            let after = row.get(j + 2).map(|&k| &entries[k]);
            match (next, after) {
                (Some(n), _) if is_digit(n) => {
                    text.push_str(&n.item.label);
                    j += 1;
                }
                (Some(s), Some(d)) if is_separator(s) && !has_scripts(s) && is_digit(d) => {
                    text.push_str(&s.item.label);
                    text.push_str(&d.item.label);
                    j += 2;
                }
                _ => break,
            }
        }
        out.push(with_scripts(ExprNode::Number { text }, &entries[row[j]], entries));
        i = j + 1;
    }
    out
}
