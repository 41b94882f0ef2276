use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InkError {
    #[error("malformed ink document at byte {offset}: {message}")]
    Malformed { offset: usize, message: String },
    #[error("unsupported ink format version {0}")]
    Version(u32),
    #[error("stroke {stroke} has {count} points, at least 2 required")]
    TooFewPoints { stroke: String, count: usize },
    #[error("stroke {stroke} has non-finite coordinates")]
    NonFinite { stroke: String },
    #[error("stroke {stroke} has non-monotone timestamps")]
    NonMonotoneTime { stroke: String },
    #[error("duplicate stroke id {0}")]
    DuplicateStrokeId(String),
    #[error("unknown stroke id {0}")]
    UnknownStroke(String),
    #[error("edit log replay does not reproduce the stroke list")]
    ReplayMismatch,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("feature vector has length {got}, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("model has no rules")]
    NoRules,
    #[error("chromosome has length {got}, partition needs {expected}")]
    ChromosomeLength { expected: usize, got: usize },
    #[error("invalid model: {0}")]
    Invalid(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("reconstruction did not reach a fixed point within {cap} firings; rules involved: {rules:?}")]
    RuleCycle { cap: usize, rules: Vec<String> },
    #[error("unmatched bracket {label} ({id})")]
    UnmatchedBracket { label: String, id: String },
    #[error("mismatched brackets {open} ({open_id}) and {close} ({close_id})")]
    MismatchedBracket { open: String, open_id: String, close: String, close_id: String },
    #[error("{construct} ({id}) is missing its {slot}")]
    EmptySlot { construct: String, id: String, slot: String },
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: document is truncated or partially written")]
    Partial { path: String },
    #[error("{path}: unsupported version {found}, expected {expected}")]
    Version { path: String, found: u64, expected: u64 },
    #[error("{path}: schema violation at {pointer}: {message}")]
    Schema { path: String, pointer: String, message: String },
    #[error("unknown label {0}; pass add_class to introduce it")]
    UnknownLabel(String),
    #[error("store directory is locked by another writer")]
    Locked,
}
