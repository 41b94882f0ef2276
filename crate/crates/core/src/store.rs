//! File-backed persistence for the classifier, the knowledge base and the
//! correction reservoir.
//!
//! Every document is JSON with a top-level `"version"`. Writes go to a
//! temporary sibling that is synced and then renamed over the target, so a
//! reader sees either the old or the new document. A writer holds an
//! advisory lock on the store directory; plain loads take no lock.

use std::collections::VecDeque;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::StoreError;
use crate::features::FeatureVector;
use crate::nefclass::FuzzyModel;
use crate::structure::rules::validate_rules;
use crate::structure::{HeuristicRule, KnowledgeBase};
use crate::train::LabeledSample;

pub const MODEL_FORMAT_VERSION: u64 = 1;
pub const KNOWLEDGE_FORMAT_VERSION: u64 = 1;
pub const CORRECTIONS_FORMAT_VERSION: u64 = 1;
pub const RESERVOIR_CAPACITY: usize = 1024;

const LOCK_NAME: &str = ".nefmath.lock";
const TEMP_MARKER: &str = ".tmp-";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// `ga`, `cg` or `manual`.
    pub trainer: String,
    /// SHA-256 of the trainer configuration as canonical JSON.
    pub config_digest: String,
    pub seed: u64,
    pub training_samples: usize,
    /// Seconds since the epoch, taken from `SOURCE_DATE_EPOCH` when set.
    #[serde(default)]
    pub created_at: Option<u64>,
}

impl Provenance {
    pub fn new<C: Serialize>(trainer: &str, config: &C, seed: u64, training_samples: usize) -> Self {
        Self {
            trainer: trainer.into(),
            config_digest: config_digest(config),
            seed,
            training_samples,
            created_at: std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.trim().parse().ok()),
        }
    }
}

pub fn config_digest<C: Serialize>(config: &C) -> String {
    let bytes = serde_json::to_vec(config).expect("configurations serialize");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u64,
    pub model: FuzzyModel,
    pub provenance: Provenance,
}

impl ModelFile {
    pub fn new(model: FuzzyModel, provenance: Provenance) -> Self {
        Self { version: MODEL_FORMAT_VERSION, model, provenance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeFile {
    pub version: u64,
    #[serde(flatten)]
    pub knowledge: KnowledgeBase,
}

impl KnowledgeFile {
    pub fn new(knowledge: KnowledgeBase) -> Self {
        Self { version: KNOWLEDGE_FORMAT_VERSION, knowledge }
    }

    pub fn builtin() -> Self {
        Self::new(KnowledgeBase::builtin())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionSample {
    pub features: Vec<f64>,
    pub label: String,
}

/// Bounded FIFO of corrected samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionsFile {
    pub version: u64,
    pub capacity: usize,
    pub samples: VecDeque<CorrectionSample>,
}

impl Default for CorrectionsFile {
    fn default() -> Self {
        Self { version: CORRECTIONS_FORMAT_VERSION, capacity: RESERVOIR_CAPACITY, samples: VecDeque::new() }
    }
}

impl CorrectionsFile {
    pub fn push(&mut self, sample: CorrectionSample) {
        self.samples.push_back(sample);
        while self.samples.len() > self.capacity.max(1) {
            self.samples.pop_front();
        }
    }

    /// Samples whose label the model knows, as class indices, oldest first.
    pub fn labeled(&self, model: &FuzzyModel) -> Vec<LabeledSample> {
        self.samples
            .iter()
            .filter(|s| s.features.len() == model.input_count)
            .filter_map(|s| model.class_index(&s.label).map(|c| (FeatureVector(s.features.clone()), c)))
            .collect()
    }
}

/// Where a simulated crash interrupts an atomic write.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultPoint {
    /// Only part of the document reached the temporary file.
    MidTempWrite,
    /// The temporary file is complete but was never renamed.
    BeforeRename,
}

fn io_err(path: &Path, source: std::io::Error) -> StoreError {
    StoreError::Io { path: path.display().to_string(), source }
}

fn temp_path(path: &Path) -> PathBuf {
    static COUNTER: AtomicU64 = AtomicU64::new(0);
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let n = COUNTER.fetch_add(1, Ordering::Relaxed);
    path.with_file_name(format!(".{name}{TEMP_MARKER}{}-{n}", std::process::id()))
}

fn sync_dir(dir: &Path) {
    // directory fsync is unsupported on some platforms; the rename is
    // still atomic there
    if let Ok(d) = File::open(dir) {
        let _ = d.sync_all();
    }
}

/// Replaces `path` with `bytes` so that readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    write_atomic_with_fault(path, bytes, None)
}

/// [`write_atomic`] that stops at `fault`, leaving the disk as a crash at
/// that point would. The target is untouched in every fault case.
pub fn write_atomic_with_fault(path: &Path, bytes: &[u8], fault: Option<FaultPoint>) -> Result<(), StoreError> {
    let tmp = temp_path(path);
    let mut f = OpenOptions::new().write(true).create_new(true).open(&tmp).map_err(|e| io_err(&tmp, e))?;
    let cut = if fault == Some(FaultPoint::MidTempWrite) { bytes.len() / 2 } else { bytes.len() };
    f.write_all(&bytes[..cut]).map_err(|e| io_err(&tmp, e))?;
    f.sync_all().map_err(|e| io_err(&tmp, e))?;
    drop(f);
    if fault.is_some() {
        return Err(io_err(path, std::io::Error::other("injected crash")));
    }
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))?;
    if let Some(dir) = path.parent() {
        sync_dir(if dir.as_os_str().is_empty() { Path::new(".") } else { dir });
    }
    Ok(())
}

fn to_bytes<T: Serialize>(doc: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(doc).expect("documents serialize");
    bytes.push(b'\n');
    bytes
}

/// Parses a versioned document, distinguishing truncation, version and
/// schema failures.
pub fn parse_document<T: DeserializeOwned>(path: &Path, bytes: &[u8], expected: u64) -> Result<T, StoreError> {
    let name = path.display().to_string();
    let value: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| {
        if e.is_eof() {
            StoreError::Partial { path: name.clone() }
        } else {
            StoreError::Schema { path: name.clone(), pointer: String::new(), message: e.to_string() }
        }
    })?;
    match value.get("version").and_then(|v| v.as_u64()) {
        Some(v) if v == expected => {}
        Some(found) => return Err(StoreError::Version { path: name, found, expected }),
        None => {
            return Err(StoreError::Schema {
                path: name,
                pointer: "/version".into(),
                message: "missing or non-integer version".into(),
            })
        }
    }
    serde_path_to_error::deserialize(value).map_err(|e| StoreError::Schema {
        path: name,
        pointer: pointer_of(e.path()),
        message: e.inner().to_string(),
    })
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    path.iter()
        .filter_map(|s| match s {
            Segment::Seq { index } => Some(format!("/{index}")),
            Segment::Map { key } => Some(format!("/{key}")),
            Segment::Enum { variant } => Some(format!("/{variant}")),
            Segment::Unknown => None,
        })
        .collect()
}

fn read(path: &Path) -> Result<Vec<u8>, StoreError> {
    fs::read(path).map_err(|e| io_err(path, e))
}

fn schema(path: &Path, pointer: &str, message: impl Into<String>) -> StoreError {
    StoreError::Schema { path: path.display().to_string(), pointer: pointer.into(), message: message.into() }
}

pub fn validate_model_file(path: &Path, file: &ModelFile) -> Result<(), StoreError> {
    file.model.validate().map_err(|e| schema(path, "/model", e.to_string()))
}

pub fn validate_knowledge_file(path: &Path, file: &KnowledgeFile) -> Result<(), StoreError> {
    let kb = &file.knowledge;
    kb.position_table
        .validate()
        .map_err(|(group, msg)| schema(path, &format!("/position_table/groups/{group}"), msg))?;
    validate_rules(&kb.rules).map_err(|(i, msg)| schema(path, &format!("/rules/{i}"), msg))?;
    validate_rules(&kb.overlay.rules).map_err(|(i, msg)| schema(path, &format!("/overlay/rules/{i}"), msg))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ModelFile, StoreError> {
    let file: ModelFile = parse_document(path, &read(path)?, MODEL_FORMAT_VERSION)?;
    validate_model_file(path, &file)?;
    Ok(file)
}

pub fn save_model(path: &Path, file: &ModelFile) -> Result<(), StoreError> {
    validate_model_file(path, file)?;
    write_atomic(path, &to_bytes(file))
}

pub fn load_knowledge(path: &Path) -> Result<KnowledgeFile, StoreError> {
    let file: KnowledgeFile = parse_document(path, &read(path)?, KNOWLEDGE_FORMAT_VERSION)?;
    validate_knowledge_file(path, &file)?;
    Ok(file)
}

pub fn save_knowledge(path: &Path, file: &KnowledgeFile) -> Result<(), StoreError> {
    validate_knowledge_file(path, file)?;
    write_atomic(path, &to_bytes(file))
}

pub fn load_corrections(path: &Path) -> Result<CorrectionsFile, StoreError> {
    parse_document(path, &read(path)?, CORRECTIONS_FORMAT_VERSION)
}

pub fn save_corrections(path: &Path, file: &CorrectionsFile) -> Result<(), StoreError> {
    write_atomic(path, &to_bytes(file))
}

/// Model and knowledge as one pair.
pub fn load(model_path: &Path, knowledge_path: &Path) -> Result<(ModelFile, KnowledgeFile), StoreError> {
    Ok((load_model(model_path)?, load_knowledge(knowledge_path)?))
}

pub fn save(model_path: &Path, model: &ModelFile, knowledge_path: &Path, knowledge: &KnowledgeFile) -> Result<(), StoreError> {
    validate_model_file(model_path, model)?;
    validate_knowledge_file(knowledge_path, knowledge)?;
    save_model(model_path, model)?;
    save_knowledge(knowledge_path, knowledge)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StorePaths {
    pub model: PathBuf,
    pub knowledge: PathBuf,
    pub corrections: PathBuf,
}

impl StorePaths {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            model: dir.join("model.json"),
            knowledge: dir.join("knowledge.json"),
            corrections: dir.join("corrections.json"),
        }
    }

    fn dir(&self) -> PathBuf {
        match self.model.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        }
    }
}

/// One user correction: a relabeled sample, rule updates, or both.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Correction {
    pub sample: Option<(FeatureVector, String)>,
    pub rules: Vec<HeuristicRule>,
    /// Permits a label the model does not know yet.
    pub add_class: bool,
}

/// Exclusive writer over one store directory.
///
/// A missing knowledge file starts from the shipped knowledge base and a
/// missing reservoir starts empty; the model must exist.
#[derive(Debug)]
pub struct Store {
    paths: StorePaths,
    _lock: File,
    model: ModelFile,
    knowledge: KnowledgeFile,
    corrections: CorrectionsFile,
}

impl Store {
    pub fn open(paths: StorePaths) -> Result<Self, StoreError> {
        let dir = paths.dir();
        let lock_path = dir.join(LOCK_NAME);
        let lock = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&lock_path)
            .map_err(|e| io_err(&lock_path, e))?;
        match lock.try_lock() {
            Ok(()) => {}
            Err(fs::TryLockError::WouldBlock) => return Err(StoreError::Locked),
            Err(fs::TryLockError::Error(e)) => return Err(io_err(&lock_path, e)),
        }
        remove_stale_temps(&dir);
        let model = load_model(&paths.model)?;
        let knowledge =
            if paths.knowledge.exists() { load_knowledge(&paths.knowledge)? } else { KnowledgeFile::builtin() };
        let corrections =
            if paths.corrections.exists() { load_corrections(&paths.corrections)? } else { CorrectionsFile::default() };
        Ok(Self { paths, _lock: lock, model, knowledge, corrections })
    }

    pub fn open_dir(dir: &Path) -> Result<Self, StoreError> {
        Self::open(StorePaths::in_dir(dir))
    }

    pub fn paths(&self) -> &StorePaths {
        &self.paths
    }

    pub fn model(&self) -> &ModelFile {
        &self.model
    }

    pub fn knowledge(&self) -> &KnowledgeFile {
        &self.knowledge
    }

    pub fn corrections(&self) -> &CorrectionsFile {
        &self.corrections
    }

    pub fn save_model(&mut self, file: ModelFile) -> Result<(), StoreError> {
        save_model(&self.paths.model, &file)?;
        self.model = file;
        Ok(())
    }

    /// Appends the sample to the reservoir and upserts overlay rules. Both
    /// documents are on disk when this returns.
    pub fn record_correction(&mut self, correction: &Correction) -> Result<(), StoreError> {
        let mut model = self.model.clone();
        let mut corrections = self.corrections.clone();
        let mut knowledge = self.knowledge.clone();
        if let Some((x, label)) = &correction.sample {
            if model.model.class_index(label).is_none() {
                if !correction.add_class {
                    return Err(StoreError::UnknownLabel(label.clone()));
                }
                model.model.add_class(label);
            }
            corrections.push(CorrectionSample { features: x.0.clone(), label: label.clone() });
        }
        for rule in &correction.rules {
            knowledge.knowledge.upsert_overlay_rule(rule.clone());
        }
        validate_knowledge_file(&self.paths.knowledge, &knowledge)?;
        if model != self.model {
            save_model(&self.paths.model, &model)?;
        }
        if correction.sample.is_some() {
            save_corrections(&self.paths.corrections, &corrections)?;
        }
        if !correction.rules.is_empty() {
            save_knowledge(&self.paths.knowledge, &knowledge)?;
        }
        self.model = model;
        self.corrections = corrections;
        self.knowledge = knowledge;
        Ok(())
    }
}

fn remove_stale_temps(dir: &Path) {
    let Ok(entries) = fs::read_dir(dir) else { return };
    for e in entries.flatten() {
        let name = e.file_name();
        let name = name.to_string_lossy();
        if name.starts_with('.') && name.contains(TEMP_MARKER) {
            let _ = fs::remove_file(e.path());
        }
    }
}
