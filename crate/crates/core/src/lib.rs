//! Prompt exploration for text-to-image ideation.
//!
//! A user picks part of a prompt, says whether to add detail to it or swap
//! it for alternatives, and sets how far from the original to wander. The
//! [`engine`] turns that into four varied suggestions, [`session`] records
//! the branching history, [`concreteness`] marks vague words worth exploring,
//! and [`metrics`] summarizes how broad an exploration was.

pub mod concreteness;
pub mod engine;
pub mod metrics;
pub mod providers;
pub mod session;
pub mod testkit;
pub mod vector;

pub use concreteness::{annotate_prompt, tokenize, ConcretenessAnnotation, Lexicon};
pub use engine::{Engine, EngineConfig, EngineError, ExpansionMode, ExpansionRequest, SuggestionSet};
pub use session::{NodeId, Session, SessionError};
