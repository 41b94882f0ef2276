//! Layout of expression trees into labeled glyph boxes, and the random
//! expression sampler.
//!
//! Layout works in units of the current glyph height `s`, baseline at
//! `y = 0`, y growing downward. Composite constructs are placed so that
//! the structural analyzer can recover them from box geometry alone.

use rand::seq::SliceRandom;
use rand::Rng;

use super::glyphs::natural_aspect;
use crate::ink::BBox;
use crate::structure::{BigOperator, BracketKind, ExprNode};

/// Relative size of scripts and integral limits.
pub const SCRIPT_SCALE: f64 = 0.55;
/// Relative size of sum and product limits.
pub const LIMIT_SCALE: f64 = 0.6;

/// Single letters used as variables.
pub const VARIABLES: [&str; 17] = ["a", "b", "c", "d", "e", "h", "m", "n", "p", "r", "s", "u", "v", "w", "x", "y", "z"];
pub const FUNCTIONS: [&str; 4] = ["sin", "cos", "ln", "exp"];

#[derive(Debug, Clone, PartialEq)]
pub struct GlyphStroke {
    pub label: &'static str,
    pub bbox: BBox,
    /// Sized to enclosed content, so its scale is not jittered.
    pub fitted: bool,
}

/// One symbol of the layout: its label and the ideal boxes of its strokes.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacedSymbol {
    pub label: String,
    pub strokes: Vec<GlyphStroke>,
}

#[derive(Debug, Clone, Default)]
pub struct Block {
    pub symbols: Vec<PlacedSymbol>,
    bounds: Option<BBox>,
}

impl Block {
    pub fn bbox(&self) -> BBox {
        self.bounds.unwrap_or(BBox::new(0.0, 0.0, 0.0, 0.0))
    }

    fn push(&mut self, label: &str, strokes: Vec<GlyphStroke>) {
        for st in &strokes {
            self.bounds = Some(self.bounds.map_or(st.bbox, |b| b.union(&st.bbox)));
        }
        self.symbols.push(PlacedSymbol { label: label.to_owned(), strokes });
    }

    fn shift(mut self, dx: f64, dy: f64) -> Self {
        for sym in &mut self.symbols {
            for st in &mut sym.strokes {
                st.bbox = st.bbox.translate(dx, dy);
            }
        }
        self.bounds = self.bounds.map(|b| b.translate(dx, dy));
        self
    }

    fn append(&mut self, other: Block) {
        if let Some(b) = other.bounds {
            self.bounds = Some(self.bounds.map_or(b, |a| a.union(&b)));
        }
        self.symbols.extend(other.symbols);
    }
}

fn class(label: &str) -> &'static str {
    super::glyphs::STROKE_CLASSES.iter().find(|c| **c == label).copied().unwrap_or_else(|| panic!("no stroke class {label}"))
}

fn gs(label: &str, x: f64, y: f64, w: f64, h: f64) -> GlyphStroke {
    GlyphStroke { label: class(label), bbox: BBox::new(x, y, x + w, y + h), fitted: false }
}

/// A single-stroke glyph on the baseline, full height.
fn plain(label: &str, s: f64) -> Vec<GlyphStroke> {
    vec![gs(label, 0.0, -s, natural_aspect(label) * s, s)]
}

/// Strokes of an atomic symbol with its left edge at zero.
fn symbol_strokes(label: &str, s: f64) -> Vec<GlyphStroke> {
    match label {
        "x" => vec![gs("\\", 0.0, -s, 0.55 * s, s), gs("/", 0.0, -s, 0.55 * s, s)],
        "i" => vec![gs("|", 0.05 * s, -0.65 * s, 0.0, 0.65 * s), gs(".", 0.0, -0.95 * s, 0.1 * s, 0.1 * s)],
        "+" => vec![gs("-", 0.0, -0.5 * s, 0.6 * s, 0.0), gs("|", 0.3 * s, -0.8 * s, 0.0, 0.6 * s)],
        "=" => vec![gs("-", 0.0, -0.62 * s, 0.6 * s, 0.0), gs("-", 0.0, -0.38 * s, 0.6 * s, 0.0)],
        "-" => vec![gs("-", 0.0, -0.5 * s, 0.6 * s, 0.0)],
        "." => vec![gs(".", 0.0, -0.1 * s, 0.1 * s, 0.1 * s)],
        "," => vec![gs(",", 0.0, -0.12 * s, 0.25 * 0.34 * s, 0.34 * s)],
        "1" => vec![gs("1", 0.0, -s, 0.35 * s, s)],
        other => plain(other, s),
    }
}

fn atom(label: &str, s: f64) -> Block {
    let mut b = Block::default();
    b.push(label, symbol_strokes(label, s));
    b
}

/// Letters of a function name, written close together.
fn function_letters(name: &str) -> Vec<&'static str> {
    match name {
        "sin" => vec!["s", "i", "n"],
        "cos" => vec!["c", "0", "s"],
        "ln" => vec!["|", "n"],
        "exp" => vec!["e", "x", "p"],
        "lim" => vec!["|", "i", "m"],
        _ => Vec::new(),
    }
}

fn function_block(name: &str, s: f64) -> Block {
    let mut strokes = Vec::new();
    let mut x = 0.0;
    for letter in function_letters(name) {
        let part: Vec<GlyphStroke> = match letter {
            "|" => vec![gs("|", 0.05 * s, -s, 0.0, s)],
            "0" => vec![gs("0", 0.0, -0.7 * s, 0.45 * s, 0.7 * s)],
            l => symbol_strokes(l, s),
        };
        let w = part.iter().map(|g| g.bbox.max_x).fold(0.0, f64::max).max(0.1 * s);
        strokes.extend(part.into_iter().map(|g| GlyphStroke { bbox: g.bbox.translate(x, 0.0), ..g }));
        x += w + 0.08 * s;
    }
    let mut b = Block::default();
    b.push(name, strokes);
    b
}

pub struct Layout<'r, R: Rng> {
    rng: &'r mut R,
    /// Relative spread applied to gaps and offsets.
    pub wobble: f64,
}

impl<'r, R: Rng> Layout<'r, R> {
    pub fn new(rng: &'r mut R, wobble: f64) -> Self {
        Self { rng, wobble }
    }

    fn vary(&mut self, v: f64) -> f64 {
        if self.wobble == 0.0 {
            v
        } else {
            v * (1.0 + self.rng.gen_range(-self.wobble..=self.wobble))
        }
    }

    fn nudge(&mut self, s: f64) -> f64 {
        if self.wobble == 0.0 {
            0.0
        } else {
            s * self.rng.gen_range(-0.2 * self.wobble..=0.2 * self.wobble)
        }
    }

    /// Lays out `node` at glyph height `s`, left edge at zero.
    pub fn layout(&mut self, node: &ExprNode, s: f64) -> Block {
        let b = match node {
            ExprNode::Symbol { label } if function_letters(label).is_empty() => {
                let dy = self.nudge(s);
                atom(label, s).shift(0.0, dy)
            }
            ExprNode::Symbol { label } => function_block(label, s),
            ExprNode::Number { text } => self.number(text, s),
            ExprNode::Row { children } => self.row(children, s),
            ExprNode::Fraction { numerator, denominator } => self.fraction(numerator, denominator, s),
            ExprNode::Scripts { base, sup, sub } => self.scripts(base, sup.as_deref(), sub.as_deref(), s),
            ExprNode::Root { degree, radicand } => self.root(degree.as_deref(), radicand, s),
            ExprNode::BigOp { operator, lower, upper, body } => self.bigop(*operator, lower.as_deref(), upper.as_deref(), body, s),
            ExprNode::Group { bracket, child } => self.group(*bracket, child, s),
        };
        let x0 = b.bbox().min_x;
        b.shift(-x0, 0.0)
    }

    fn row(&mut self, children: &[ExprNode], s: f64) -> Block {
        let mut out = Block::default();
        let mut cursor = 0.0;
        for c in children {
            let b = self.layout(c, s);
            let w = b.bbox().width();
            let b = b.shift(cursor, 0.0);
            out.append(b);
            cursor += w + self.vary(0.25 * s);
        }
        out
    }

    fn number(&mut self, text: &str, s: f64) -> Block {
        let mut out = Block::default();
        let mut cursor = 0.0;
        for ch in text.chars() {
            let label = ch.to_string();
            let sep = ch == '.' || ch == ',';
            if sep {
                cursor -= self.vary(0.05 * s);
            }
            let dy = if sep { 0.0 } else { self.nudge(s) };
            let b = atom(&label, s);
            let w = b.bbox().width();
            out.append(b.shift(cursor, dy));
            cursor += w + if sep { self.vary(0.05 * s) } else { self.vary(0.1 * s) };
        }
        out
    }

    fn fraction(&mut self, num: &ExprNode, den: &ExprNode, s: f64) -> Block {
        let n = self.layout(num, s);
        let d = self.layout(den, s);
        let (nb, db) = (n.bbox(), d.bbox());
        let width = nb.width().max(db.width()) + self.vary(0.4 * s);
        let mut out = Block::default();
        out.push("-", vec![fitted(gs("-", 0.0, -0.5 * s, width, 0.0))]);
        let gap_n = self.vary(0.2 * s);
        let gap_d = self.vary(0.2 * s);
        out.append(n.shift((width - nb.width()) / 2.0, -0.5 * s - gap_n - nb.max_y));
        out.append(d.shift((width - db.width()) / 2.0, -0.5 * s + gap_d - db.min_y));
        out
    }

    fn scripts(&mut self, base: &ExprNode, sup: Option<&ExprNode>, sub: Option<&ExprNode>, s: f64) -> Block {
        let mut out = self.layout(base, s);
        // scripts are placed against the last symbol of a number
        let anchor = match base {
            ExprNode::Number { .. } => out.symbols.last().map(|sy| union_of(&sy.strokes)).unwrap_or(out.bbox()),
            _ => out.bbox(),
        };
        let h = anchor.height();
        let x = anchor.max_x + self.vary(0.12 * s);
        if let Some(sup) = sup {
            let b = self.layout(sup, SCRIPT_SCALE * s);
            let bb = b.bbox();
            let bottom = anchor.min_y + self.vary(0.2) * h;
            out.append(b.shift(x, bottom - bb.max_y));
        }
        if let Some(sub) = sub {
            let b = self.layout(sub, SCRIPT_SCALE * s);
            let bb = b.bbox();
            let top = anchor.max_y - self.vary(0.2) * h;
            out.append(b.shift(x, top - bb.min_y));
        }
        out
    }

    fn root(&mut self, degree: Option<&ExprNode>, radicand: &ExprNode, s: f64) -> Block {
        let r = self.layout(radicand, s);
        let rb = r.bbox();
        let top = rb.min_y - 0.2 * s;
        let bottom = rb.max_y + 0.2 * s;
        let h = bottom - top;
        let hook = 0.45 * h;
        let width = hook + 0.1 * s + rb.width() + 0.1 * s;
        let mut out = Block::default();
        out.push("√", vec![fitted(gs("√", 0.0, top, width, h))]);
        out.append(r.shift(hook + 0.1 * s, 0.0));
        if let Some(deg) = degree {
            let d = self.layout(deg, SCRIPT_SCALE * s);
            let db = d.bbox();
            out.append(d.shift(0.05 * s - db.width(), top + 0.2 * h - db.max_y));
        }
        out
    }

    fn bigop(&mut self, op: BigOperator, lower: Option<&ExprNode>, upper: Option<&ExprNode>, body: &ExprNode, s: f64) -> Block {
        let mut out = Block::default();
        let (op_label, h, w) = match op {
            BigOperator::Sum => ("Σ", 1.3 * s, 0.75 * 1.3 * s),
            BigOperator::Product => ("Π", 1.3 * s, 0.75 * 1.3 * s),
            BigOperator::Integral => ("∫", 1.6 * s, 0.4 * s),
        };
        let top = -0.5 * s - h / 2.0;
        out.push(op_label, vec![gs(op_label, 0.0, top, w, h)]);
        let op_box = BBox::new(0.0, top, w, top + h);
        let mut right = w;
        match op {
            BigOperator::Integral => {
                let x = w + self.vary(0.05 * s);
                if let Some(u) = upper {
                    let b = self.layout(u, SCRIPT_SCALE * s);
                    let bb = b.bbox();
                    right = right.max(x + bb.width());
                    out.append(b.shift(x, op_box.min_y + 0.2 * h - bb.max_y));
                }
                if let Some(l) = lower {
                    let b = self.layout(l, SCRIPT_SCALE * s);
                    let bb = b.bbox();
                    right = right.max(x + bb.width());
                    out.append(b.shift(x, op_box.max_y - 0.2 * h - bb.min_y));
                }
                right += self.vary(0.25 * s);
            }
            _ => {
                if let Some(u) = upper {
                    let b = self.layout(u, LIMIT_SCALE * s);
                    let bb = b.bbox();
                    out.append(b.shift((w - bb.width()) / 2.0, op_box.min_y - self.vary(0.12 * s) - bb.max_y));
                }
                if let Some(l) = lower {
                    let b = self.layout(l, LIMIT_SCALE * s);
                    let bb = b.bbox();
                    out.append(b.shift((w - bb.width()) / 2.0, op_box.max_y + self.vary(0.12 * s) - bb.min_y));
                }
                right += self.vary(0.35 * s);
            }
        }
        let b = self.layout(body, s);
        out.append(b.shift(right, 0.0));
        out
    }

    fn group(&mut self, kind: BracketKind, child: &ExprNode, s: f64) -> Block {
        let c = self.layout(child, s);
        let cb = c.bbox();
        let h = (cb.height() + 0.2 * s).max(1.2 * s);
        let top = cb.center_y() - h / 2.0;
        let w = 0.25 * s;
        let (open, close) = kind.delimiters();
        let mut out = Block::default();
        out.push(open, vec![fitted(gs(open, 0.0, top, w, h))]);
        let gap = self.vary(0.1 * s);
        out.append(c.shift(w + gap, 0.0));
        let x = w + gap + cb.width() + self.vary(0.1 * s);
        out.push(close, vec![fitted(gs(close, x, top, w, h))]);
        out
    }
}

fn fitted(mut g: GlyphStroke) -> GlyphStroke {
    g.fitted = true;
    g
}

fn union_of(strokes: &[GlyphStroke]) -> BBox {
    strokes.iter().skip(1).fold(strokes[0].bbox, |acc, g| acc.union(&g.bbox))
}

/// Random expression trees restricted to layouts the analyzer can read
/// back: no adjacent letters outside function names, fractions only after
/// an operator or at the start of a row, no scripts inside integral bodies.
pub struct Sampler<'r, R: Rng> {
    rng: &'r mut R,
}

impl<'r, R: Rng> Sampler<'r, R> {
    pub fn new(rng: &'r mut R) -> Self {
        Self { rng }
    }

    fn pick<T: Copy>(&mut self, items: &[T]) -> T {
        *items.choose(self.rng).expect("non-empty choice")
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    fn var(&mut self) -> ExprNode {
        ExprNode::sym(self.pick(&VARIABLES))
    }

    fn digit_text(&mut self, first_nonzero: bool) -> String {
        let d = if first_nonzero { self.rng.gen_range(1..=9) } else { self.rng.gen_range(0..=9) };
        d.to_string()
    }

    fn integer(&mut self) -> ExprNode {
        let mut t = self.digit_text(true);
        if self.chance(0.3) {
            t.push_str(&self.digit_text(false));
        }
        ExprNode::Number { text: t }
    }

    fn decimal(&mut self) -> ExprNode {
        let mut t = if self.chance(0.25) { "0".to_owned() } else { self.digit_text(true) };
        t.push(if self.chance(0.7) { '.' } else { ',' });
        t.push_str(&self.digit_text(false));
        if self.chance(0.4) {
            t.push_str(&self.digit_text(false));
        }
        ExprNode::Number { text: t }
    }

    fn script_atom(&mut self) -> ExprNode {
        if self.chance(0.6) {
            ExprNode::num(&self.rng.gen_range(2..=9).to_string())
        } else {
            ExprNode::sym(self.pick(&["n", "m", "a", "b", "i"]))
        }
    }

    /// A variable, optionally scripted.
    fn scripted_var(&mut self) -> ExprNode {
        let v = self.var();
        match self.rng.gen_range(0..10) {
            0..=2 => ExprNode::sup(v, self.script_atom()),
            3..=4 => ExprNode::sub(v, self.script_atom()),
            5 => {
                let sup = self.script_atom();
                let sub = self.script_atom();
                ExprNode::scripts(v, Some(sup), Some(sub))
            }
            _ => v,
        }
    }

    /// Row items of one additive term.
    fn term(&mut self, allow_scripts: bool) -> Vec<ExprNode> {
        match self.rng.gen_range(0..10) {
            0..=1 => vec![self.integer()],
            2 => vec![self.decimal()],
            3..=5 => {
                let v = if allow_scripts { self.scripted_var() } else { self.var() };
                if self.chance(0.4) {
                    vec![self.integer(), v]
                } else {
                    vec![v]
                }
            }
            6 if allow_scripts => vec![ExprNode::sup(self.integer(), self.script_atom())],
            7 => {
                let f = self.pick(&FUNCTIONS);
                vec![ExprNode::sym(f), self.var()]
            }
            _ => vec![self.var()],
        }
    }

    fn op(&mut self) -> ExprNode {
        ExprNode::sym(if self.chance(0.6) { "+" } else { "-" })
    }

    /// Items of a short sum of terms.
    fn sum_items(&mut self, max_terms: usize, allow_scripts: bool) -> Vec<ExprNode> {
        let n = self.rng.gen_range(1..=max_terms);
        let mut items = self.term(allow_scripts);
        for _ in 1..n {
            items.push(self.op());
            items.extend(self.term(allow_scripts));
        }
        items
    }

    fn small(&mut self, max_terms: usize) -> ExprNode {
        let items = self.sum_items(max_terms, false);
        ExprNode::seq(items)
    }

    fn fraction(&mut self) -> ExprNode {
        let num = self.small(2);
        let den = self.small(2);
        ExprNode::frac(num, den)
    }

    fn root(&mut self) -> ExprNode {
        let radicand = self.small(2);
        let degree = self.chance(0.35).then(|| ExprNode::num(self.pick(&["3", "4", "5"])));
        ExprNode::root(degree, radicand)
    }

    fn group(&mut self) -> Vec<ExprNode> {
        let kind = if self.chance(0.7) { BracketKind::Paren } else { BracketKind::Square };
        let inner = self.sum_items(3, false);
        let inner = if inner.len() == 1 {
            let mut v = inner;
            v.push(self.op());
            v.extend(self.term(false));
            v
        } else {
            inner
        };
        let g = ExprNode::group(kind, ExprNode::row(inner));
        let g = if self.chance(0.4) { ExprNode::sup(g, ExprNode::num(&self.rng.gen_range(2..=3).to_string())) } else { g };
        if self.chance(0.3) {
            vec![self.integer(), g]
        } else {
            vec![g]
        }
    }

    fn bigop(&mut self) -> ExprNode {
        let kind = self.pick(&[BigOperator::Sum, BigOperator::Sum, BigOperator::Product, BigOperator::Integral]);
        match kind {
            BigOperator::Integral => {
                let lower = ExprNode::num(&self.rng.gen_range(0..=2).to_string());
                let upper = if self.chance(0.5) { ExprNode::sym(self.pick(&["a", "b", "n"])) } else { ExprNode::num(&self.rng.gen_range(3..=9).to_string()) };
                let body = match self.rng.gen_range(0..3) {
                    0 => self.var(),
                    1 => ExprNode::row(vec![self.integer(), self.var()]),
                    _ => ExprNode::row(vec![ExprNode::sym(self.pick(&FUNCTIONS)), self.var()]),
                };
                ExprNode::bigop(kind, Some(lower), Some(upper), body)
            }
            _ => {
                let idx = "i";
                let lower = ExprNode::row(vec![ExprNode::sym(idx), ExprNode::sym("="), ExprNode::num(self.pick(&["0", "1", "2"]))]);
                let upper = ExprNode::sym(self.pick(&["n", "m"]));
                let body = match self.rng.gen_range(0..3) {
                    0 => ExprNode::sub(self.var(), ExprNode::sym(idx)),
                    1 => ExprNode::sup(ExprNode::sym(idx), ExprNode::num(&self.rng.gen_range(2..=3).to_string())),
                    _ => ExprNode::row(vec![self.integer(), ExprNode::sym(idx)]),
                };
                ExprNode::bigop(kind, Some(lower), Some(upper), body)
            }
        }
    }

    /// One construct-bearing row segment.
    fn feature(&mut self, kind: usize) -> Vec<ExprNode> {
        match kind {
            0 => self.sum_items(3, true),
            1 => vec![self.fraction()],
            2 => vec![self.root()],
            3 => vec![self.bigop()],
            4 => self.group(),
            5 => vec![self.decimal()],
            _ => {
                let f = self.pick(&FUNCTIONS);
                vec![ExprNode::sym(f), self.var()]
            }
        }
    }

    /// A whole expression; the top level is always a row.
    pub fn expression(&mut self) -> ExprNode {
        let kind = self.rng.gen_range(0..7);
        let mut items = Vec::new();
        if kind != 0 && self.chance(0.35) {
            items.push(self.var());
            items.push(ExprNode::sym("="));
        }
        items.extend(self.feature(kind));
        if self.chance(0.5) {
            items.push(self.op());
            items.extend(self.term(true));
        }
        if items.iter().all(|i| !matches!(i, ExprNode::Symbol { label } if label == "=")) && self.chance(0.3) {
            items.push(ExprNode::sym("="));
            items.push(self.integer());
        }
        ExprNode::row(items)
    }
}
