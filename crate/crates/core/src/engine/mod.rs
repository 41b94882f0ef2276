//! Session engine: ordered event handling per session, shared model and
//! knowledge snapshots, and a background trainer.
//!
//! Each session sits behind its own mutex, so its events apply one at a
//! time in arrival order while sessions proceed in parallel. The model and
//! knowledge base are immutable snapshots behind `Arc`s; readers clone the
//! pointer and publication replaces it under a short write lock. Training
//! runs on a worker thread against a copy and never holds a session lock.

pub mod protocol;
pub mod server;
mod trainer;

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, Sender};
use std::sync::{Arc, Condvar, Mutex, RwLock};
use std::thread::JoinHandle;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{InkError, ModelError, StoreError};
use crate::features::{extract_features, FeatureVector};
use crate::ink::{BBox, InkSession, Stroke};
use crate::nefclass::FuzzyModel;
use crate::recognize::recognize;
use crate::render::{to_latex, to_mathml};
use crate::store::{CorrectionSample, CorrectionsFile, Store};
use crate::structure::rules::validate_rules;
use crate::structure::{AnalysisReport, Diagnostic, ExprNode, HeuristicRule, KnowledgeBase};
use crate::train::cg::CgConfig;
use crate::train::ga::GaConfig;
use crate::train::{LabeledSample, DEFAULT_CALIBRATION_TARGET};
use trainer::Job;

pub use trainer::{TrainKind, TrainReport};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error(transparent)]
    Ink(#[from] InkError),
    #[error("unknown label {0}; set add_class to introduce it")]
    UnknownLabel(String),
    #[error("invalid rule: {0}")]
    InvalidRule(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("no training data: {0}")]
    NoTrainingData(String),
    #[error("engine is shutting down")]
    ShuttingDown,
}

impl EngineError {
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::UnknownSession(_) => "unknown_session",
            EngineError::Ink(InkError::UnknownStroke(_)) => "unknown_stroke",
            EngineError::Ink(InkError::DuplicateStrokeId(_)) => "duplicate_stroke",
            EngineError::Ink(_) => "invalid_stroke",
            EngineError::UnknownLabel(_) => "unknown_label",
            EngineError::InvalidRule(_) => "invalid_rule",
            EngineError::Model(_) => "model_error",
            EngineError::Store(_) => "store_error",
            EngineError::NoTrainingData(_) => "no_training_data",
            EngineError::ShuttingDown => "shutting_down",
        }
    }
}

/// Published classifier with a version that increases on every swap.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSnapshot {
    pub version: u64,
    pub model: FuzzyModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Correction {
    /// The stroke's true label.
    Label {
        stroke_id: String,
        label: String,
        #[serde(default)]
        add_class: bool,
    },
    /// A heuristic rule added to, or replacing one in, the user overlay.
    Rule { rule: HeuristicRule },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    StrokeAdded(Stroke),
    StrokeDeleted(String),
    CorrectionApplied(Correction),
    TrainRequested(TrainKind),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolView {
    pub id: String,
    pub label: String,
    pub confidence: f64,
    pub bbox: BBox,
    pub strokes: Vec<String>,
}

/// What a client sees after an event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session: String,
    pub revision: u64,
    pub model_version: u64,
    pub symbols: Vec<SymbolView>,
    pub tree: ExprNode,
    pub latex: String,
    pub mathml: String,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionState {
    pub id: String,
    pub revision: u64,
    pub ink: InkSession,
    /// User-assigned stroke labels.
    pub overrides: BTreeMap<String, String>,
    pub model_version: u64,
    pub report: AnalysisReport,
    pub latex: String,
    pub mathml: String,
}

impl SessionState {
    pub fn new(id: &str) -> Self {
        let tree = ExprNode::empty();
        Self {
            id: id.into(),
            revision: 0,
            ink: InkSession::new(),
            overrides: BTreeMap::new(),
            model_version: 0,
            latex: to_latex(&tree),
            mathml: to_mathml(&tree),
            report: AnalysisReport { symbols: vec![], placements: vec![], tree, diagnostics: vec![] },
        }
    }

    /// Session-side effect of `event` against fixed snapshots, followed by
    /// full re-analysis. On error the state is unchanged.
    pub fn apply(&mut self, event: &Event, model: &ModelSnapshot, knowledge: &KnowledgeBase) -> Result<(), EngineError> {
        let mut next = self.clone();
        match event {
            Event::StrokeAdded(stroke) => next.ink.add_stroke(stroke.clone())?,
            Event::StrokeDeleted(id) => {
                next.ink.delete_stroke(id)?;
                next.overrides.remove(id);
            }
            Event::CorrectionApplied(Correction::Label { stroke_id, label, .. }) => {
                if model.model.class_index(label).is_none() {
                    return Err(EngineError::UnknownLabel(label.clone()));
                }
                next.ink.record_correction(stroke_id, label)?;
                next.overrides.insert(stroke_id.clone(), label.clone());
            }
            Event::CorrectionApplied(Correction::Rule { .. }) | Event::TrainRequested(_) => {}
        }
        next.refresh(model, knowledge)?;
        next.revision += 1;
        *self = next;
        Ok(())
    }

    fn refresh(&mut self, model: &ModelSnapshot, knowledge: &KnowledgeBase) -> Result<(), EngineError> {
        self.report = recognize(&model.model, knowledge, self.ink.strokes(), &self.overrides)?;
        self.model_version = model.version;
        self.latex = to_latex(&self.report.tree);
        self.mathml = to_mathml(&self.report.tree);
        Ok(())
    }

    pub fn view(&self) -> SessionView {
        SessionView {
            session: self.id.clone(),
            revision: self.revision,
            model_version: self.model_version,
            symbols: self
                .report
                .symbols
                .iter()
                .map(|s| SymbolView {
                    id: s.id.clone(),
                    label: s.label.clone(),
                    confidence: s.confidence,
                    bbox: s.bbox,
                    strokes: s.strokes.clone(),
                })
                .collect(),
            tree: self.report.tree.clone(),
            latex: self.latex.clone(),
            mathml: self.mathml.clone(),
            diagnostics: self.report.diagnostics.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub ga: GaConfig,
    pub cg: CgConfig,
    pub calibration_target: f64,
    /// Queue a fine-tune after every label correction.
    pub finetune_on_correction: bool,
    /// Labeled samples used for GA retraining and as fine-tuning context.
    pub base_samples: Vec<LabeledSample>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            ga: GaConfig::default(),
            cg: CgConfig::default(),
            calibration_target: DEFAULT_CALIBRATION_TARGET,
            finetune_on_correction: true,
            base_samples: Vec::new(),
        }
    }
}

/// Result of [`Engine::handle`].
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub view: SessionView,
    pub retrain_scheduled: bool,
}

pub(crate) struct Shared {
    config: EngineConfig,
    model: RwLock<Arc<ModelSnapshot>>,
    knowledge: RwLock<Arc<KnowledgeBase>>,
    store: Mutex<Option<Store>>,
    reservoir: Mutex<CorrectionsFile>,
    pending: Mutex<usize>,
    idle: Condvar,
}

impl Shared {
    pub(crate) fn model(&self) -> Arc<ModelSnapshot> {
        self.model.read().expect("model lock").clone()
    }

    fn knowledge(&self) -> Arc<KnowledgeBase> {
        self.knowledge.read().expect("knowledge lock").clone()
    }

    /// Publishes `model`, carrying over classes added since it was copied.
    pub(crate) fn publish(&self, mut model: FuzzyModel) -> Arc<ModelSnapshot> {
        let mut slot = self.model.write().expect("model lock");
        for label in &slot.model.class_labels {
            model.add_class(label);
        }
        let snap = Arc::new(ModelSnapshot { version: slot.version + 1, model });
        *slot = snap.clone();
        snap
    }

    fn job_done(&self) {
        let mut n = self.pending.lock().expect("pending lock");
        *n -= 1;
        if *n == 0 {
            self.idle.notify_all();
        }
    }
}

pub struct Engine {
    shared: Arc<Shared>,
    sessions: RwLock<HashMap<String, Arc<Mutex<SessionState>>>>,
    next_session: AtomicU64,
    jobs: Mutex<Option<Sender<Job>>>,
    worker: Mutex<Option<JoinHandle<()>>>,
}

impl Engine {
    pub fn new(model: FuzzyModel, knowledge: KnowledgeBase, config: EngineConfig) -> Self {
        Self::build(model, knowledge, config, None)
    }

    /// Engine persisting corrections and retrained models to `store`.
    pub fn with_store(store: Store, config: EngineConfig) -> Self {
        let model = store.model().model.clone();
        let knowledge = store.knowledge().knowledge.clone();
        Self::build(model, knowledge, config, Some(store))
    }

    fn build(model: FuzzyModel, knowledge: KnowledgeBase, config: EngineConfig, store: Option<Store>) -> Self {
        let reservoir = store.as_ref().map(|s| s.corrections().clone()).unwrap_or_default();
        let shared = Arc::new(Shared {
            config,
            model: RwLock::new(Arc::new(ModelSnapshot { version: 1, model })),
            knowledge: RwLock::new(Arc::new(knowledge)),
            store: Mutex::new(store),
            reservoir: Mutex::new(reservoir),
            pending: Mutex::new(0),
            idle: Condvar::new(),
        });
        let (tx, rx) = mpsc::channel();
        let worker = {
            let shared = shared.clone();
            std::thread::Builder::new()
                .name("nefmath-trainer".into())
                .spawn(move || trainer::run(shared, rx))
                .expect("trainer thread starts")
        };
        Self {
            shared,
            sessions: RwLock::new(HashMap::new()),
            next_session: AtomicU64::new(1),
            jobs: Mutex::new(Some(tx)),
            worker: Mutex::new(Some(worker)),
        }
    }

    pub fn model(&self) -> Arc<ModelSnapshot> {
        self.shared.model()
    }

    pub fn knowledge(&self) -> Arc<KnowledgeBase> {
        self.shared.knowledge()
    }

    pub fn create_session(&self) -> SessionView {
        let id = format!("session-{}", self.next_session.fetch_add(1, Ordering::Relaxed));
        let state = SessionState::new(&id);
        let view = state.view();
        self.sessions.write().expect("sessions lock").insert(id, Arc::new(Mutex::new(state)));
        view
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<SessionState>>, EngineError> {
        self.sessions
            .read()
            .expect("sessions lock")
            .get(id)
            .cloned()
            .ok_or_else(|| EngineError::UnknownSession(id.into()))
    }

    /// Current state of a session without applying anything.
    pub fn snapshot(&self, session: &str) -> Result<SessionView, EngineError> {
        Ok(self.session(session)?.lock().expect("session lock").view())
    }

    /// Full state of a session, for replay comparisons.
    pub fn state(&self, session: &str) -> Result<SessionState, EngineError> {
        Ok(self.session(session)?.lock().expect("session lock").clone())
    }

    pub fn handle(&self, session: &str, event: Event) -> Result<Outcome, EngineError> {
        let cell = self.session(session)?;
        let mut state = cell.lock().expect("session lock");
        let mut retrain = false;
        match &event {
            Event::CorrectionApplied(Correction::Label { stroke_id, label, add_class }) => {
                let stroke = state.ink.stroke(stroke_id).ok_or_else(|| InkError::UnknownStroke(stroke_id.clone()))?.clone();
                let mut model = self.model();
                if model.model.class_index(label).is_none() {
                    if !add_class {
                        return Err(EngineError::UnknownLabel(label.clone()));
                    }
                    let mut grown = model.model.clone();
                    grown.add_class(label);
                    model = self.shared.publish(grown);
                }
                let x = extract_features(&stroke, &model.model.features);
                self.record_sample(&x, label, *add_class)?;
                retrain = self.shared.config.finetune_on_correction;
                state.apply(&event, &self.model(), &self.knowledge())?;
                if retrain {
                    self.submit(Job::FineTune { sample: (x, label.clone()) })?;
                }
            }
            Event::CorrectionApplied(Correction::Rule { rule }) => {
                validate_rules(std::slice::from_ref(rule)).map_err(|(_, m)| EngineError::InvalidRule(m))?;
                self.update_knowledge(rule)?;
                state.apply(&event, &self.model(), &self.knowledge())?;
            }
            Event::TrainRequested(kind) => {
                let (tx, _rx) = mpsc::channel();
                self.submit(Job::Train { kind: *kind, reply: tx })?;
                state.apply(&event, &self.model(), &self.knowledge())?;
            }
            _ => state.apply(&event, &self.model(), &self.knowledge())?,
        }
        Ok(Outcome { view: state.view(), retrain_scheduled: retrain })
    }

    fn record_sample(&self, x: &FeatureVector, label: &str, add_class: bool) -> Result<(), EngineError> {
        let mut store = self.shared.store.lock().expect("store lock");
        if let Some(store) = store.as_mut() {
            store.record_correction(&crate::store::Correction {
                sample: Some((x.clone(), label.to_owned())),
                rules: vec![],
                add_class,
            })?;
        }
        self.shared
            .reservoir
            .lock()
            .expect("reservoir lock")
            .push(CorrectionSample { features: x.0.clone(), label: label.to_owned() });
        Ok(())
    }

    fn update_knowledge(&self, rule: &HeuristicRule) -> Result<(), EngineError> {
        let mut store = self.shared.store.lock().expect("store lock");
        if let Some(store) = store.as_mut() {
            store.record_correction(&crate::store::Correction { sample: None, rules: vec![rule.clone()], add_class: false })?;
        }
        let mut slot = self.shared.knowledge.write().expect("knowledge lock");
        let mut kb = (**slot).clone();
        kb.upsert_overlay_rule(rule.clone());
        *slot = Arc::new(kb);
        Ok(())
    }

    fn submit(&self, job: Job) -> Result<(), EngineError> {
        let jobs = self.jobs.lock().expect("jobs lock");
        let tx = jobs.as_ref().ok_or(EngineError::ShuttingDown)?;
        *self.shared.pending.lock().expect("pending lock") += 1;
        tx.send(job).map_err(|_| {
            self.shared.job_done();
            EngineError::ShuttingDown
        })
    }

    /// Runs a trainer on the worker thread and waits for it. Jobs queued
    /// earlier finish first.
    pub fn train(&self, kind: TrainKind) -> Result<TrainReport, EngineError> {
        let (tx, rx) = mpsc::channel();
        self.submit(Job::Train { kind, reply: tx })?;
        rx.recv().map_err(|_| EngineError::ShuttingDown)?
    }

    /// Blocks until every queued training job has finished.
    pub fn wait_idle(&self) {
        let mut n = self.shared.pending.lock().expect("pending lock");
        while *n > 0 {
            n = self.shared.idle.wait(n).expect("pending lock");
        }
    }

    /// Corrections held in memory (mirrors the store when present).
    pub fn reservoir(&self) -> CorrectionsFile {
        self.shared.reservoir.lock().expect("reservoir lock").clone()
    }
}

impl Drop for Engine {
    fn drop(&mut self) {
        self.jobs.lock().expect("jobs lock").take();
        if let Some(w) = self.worker.lock().expect("worker lock").take() {
            let _ = w.join();
        }
    }
}
