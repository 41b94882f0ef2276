//! Recognition engine for handwritten mathematical expressions entered
//! with a pen, one stroke at a time.
//!
//! Strokes are turned into fixed-length feature vectors ([`features`]) and
//! classified by a neuro-fuzzy network ([`nefclass`]) whose membership
//! functions are fitted by a genetic algorithm ([`train::ga`]) and adapted
//! online by conjugate gradients ([`train::cg`]). Classified strokes go
//! through structural analysis ([`structure`]) which yields an expression
//! tree, rendered to LaTeX or MathML by [`render`].

pub mod error;
pub mod features;
pub mod ink;
pub mod nefclass;
pub mod train;
pub mod corpus;
pub mod structure;
pub mod render;
pub mod store;
pub mod recognize;
pub mod eval;
pub mod engine;

pub use error::{AnalysisError, InkError, ModelError, StoreError};
