//! Synthetic handwriting corpus: glyph templates composed into labeled
//! expressions with ground-truth trees.

pub mod compose;
pub mod glyphs;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::{extract_features, SimplifyParams};
use crate::ink::{InkDocument, InkPoint, Stroke};
use crate::render::to_latex;
use crate::structure::ExprNode;
use crate::train::LabeledSample;
use compose::{Layout, Sampler};
use glyphs::{distort, glyph_path, Jitter, STROKE_CLASSES};

pub const CORPUS_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub seed: u64,
    pub train_count: usize,
    pub test_count: usize,
    pub jitter: Jitter,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self { seed: 1, train_count: 300, test_count: 150, jitter: Jitter::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolTruth {
    pub label: String,
    pub strokes: Vec<String>,
}

/// One labeled expression. `stroke_labels` is parallel to `ink.strokes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusExpression {
    pub id: String,
    pub ink: InkDocument,
    pub stroke_labels: Vec<String>,
    pub symbols: Vec<SymbolTruth>,
    pub tree: ExprNode,
    pub latex: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub version: u32,
    pub seed: u64,
    pub jitter: Jitter,
    pub classes: Vec<String>,
    pub train: Vec<CorpusExpression>,
    pub test: Vec<CorpusExpression>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Corpus {
    pub fn split(&self, split: Split) -> &[CorpusExpression] {
        match split {
            Split::Train => &self.train,
            Split::Test => &self.test,
        }
    }

    /// Feature vectors of every stroke in a split, labeled by class index.
    /// Strokes whose label is not a corpus class are skipped.
    pub fn samples(&self, split: Split, params: &SimplifyParams) -> Vec<LabeledSample> {
        self.split(split)
            .iter()
            .flat_map(|e| e.ink.strokes.iter().zip(&e.stroke_labels))
            .filter_map(|(s, l)| self.classes.iter().position(|c| c == l).map(|i| (extract_features(s, params), i)))
            .collect()
    }
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Renders `tree` as jittered ink with full ground truth.
pub fn render_expression<R: Rng>(id: &str, tree: &ExprNode, jitter: &Jitter, rng: &mut R) -> CorpusExpression {
    let noisy = !jitter.is_none();
    let s = if noisy { rng.gen_range(30.0..50.0) } else { 40.0 };
    let block = Layout::new(rng, if noisy { 0.15 } else { 0.0 }).layout(tree, s);
    let (ox, oy) = if noisy { (rng.gen_range(20.0..200.0), rng.gen_range(120.0..300.0)) } else { (50.0, 200.0) };

    let mut order: Vec<usize> = (0..block.symbols.len()).collect();
    if noisy && rng.gen_bool(0.25) {
        order.shuffle(rng);
    }
    let mut strokes = Vec::new();
    let mut stroke_labels = Vec::new();
    let mut symbols = Vec::new();
    let mut t: u64 = 0;
    for &si in &order {
        let sym = &block.symbols[si];
        let mut ids = Vec::new();
        for g in &sym.strokes {
            let b = g.bbox.translate(ox, oy);
            let path = glyph_path(g.label, b.min_x, b.min_y, b.width(), b.height()).expect("corpus glyphs have templates");
            // noise follows glyph height, not the length of long bars
            let size = b.width().max(b.height()).min(1.6 * s).max(1e-3);
            let unscaled = Jitter { min_scale: 1.0, max_scale: 1.0, ..*jitter };
            let j = if g.fitted && !jitter.is_none() { &unscaled } else { jitter };
            let pts = distort(&path, (b.center_x(), b.center_y()), size, j, rng);
            let points: Vec<InkPoint> = pts
                .iter()
                .enumerate()
                .map(|(k, &(x, y))| InkPoint::new(round2(x), round2(y), t + 10 * k as u64))
                .collect();
            t += 10 * points.len() as u64 + 200;
            let sid = format!("s{}", strokes.len());
            ids.push(sid.clone());
            strokes.push(Stroke::new(sid, points).expect("generated strokes are valid"));
            stroke_labels.push(g.label.to_owned());
        }
        ids.sort();
        symbols.push(SymbolTruth { label: sym.label.clone(), strokes: ids });
    }
    CorpusExpression {
        id: id.to_owned(),
        ink: InkDocument::new(strokes),
        stroke_labels,
        symbols,
        tree: tree.clone(),
        latex: to_latex(tree),
    }
}

/// Deterministic corpus for a seed.
pub fn generate(config: &CorpusConfig) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let make = |prefix: &str, n: usize, rng: &mut ChaCha8Rng| -> Vec<CorpusExpression> {
        (0..n)
            .map(|i| {
                let tree = Sampler::new(rng).expression();
                render_expression(&format!("{prefix}-{i:04}"), &tree, &config.jitter, rng)
            })
            .collect()
    };
    let train = make("train", config.train_count, &mut rng);
    let test = make("test", config.test_count, &mut rng);
    Corpus {
        version: CORPUS_FORMAT_VERSION,
        seed: config.seed,
        jitter: config.jitter,
        classes: STROKE_CLASSES.iter().map(|c| c.to_string()).collect(),
        train,
        test,
    }
}

impl Corpus {
    /// Checks every ink document and that labels line up with strokes.
    pub fn validate(&self) -> Result<(), (String, String)> {
        for (split, exprs) in [("train", &self.train), ("test", &self.test)] {
            for (i, e) in exprs.iter().enumerate() {
                let at = format!("/{split}/{i}");
                e.ink.clone().into_session().map_err(|err| (format!("{at}/ink"), err.to_string()))?;
                if e.stroke_labels.len() != e.ink.strokes.len() {
                    return Err((format!("{at}/stroke_labels"), "one label per stroke required".into()));
                }
                e.tree.validate().map_err(|m| (format!("{at}/tree"), m))?;
            }
        }
        Ok(())
    }
}

/// Reads and validates a corpus document.
pub fn load_corpus(path: &std::path::Path) -> Result<Corpus, crate::StoreError> {
    let bytes = std::fs::read(path).map_err(|source| crate::StoreError::Io { path: path.display().to_string(), source })?;
    let corpus: Corpus = crate::store::parse_document(path, &bytes, CORPUS_FORMAT_VERSION as u64)?;
    corpus.validate().map_err(|(pointer, message)| crate::StoreError::Schema {
        path: path.display().to_string(),
        pointer,
        message,
    })?;
    Ok(corpus)
}

pub fn save_corpus(path: &std::path::Path, corpus: &Corpus) -> Result<(), crate::StoreError> {
    let mut bytes = serde_json::to_vec(corpus).expect("corpora serialize");
    bytes.push(b'\n');
    crate::store::write_atomic(path, &bytes)
}
