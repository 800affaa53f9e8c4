//! Schema lineage records and the gated composite metric used to score
//! predicted lineages against gold annotations.
//!
//! The crate is organized by pipeline stage:
//!
//! * [`lineage`]: the four-field lineage record and its canonical text form
//! * [`response`]: the format gate over raw model responses
//! * [`set_match`] and [`code_sim`]: component scores for tables, columns and code
//! * [`scorer`] and [`config`]: the composite score and its aggregates
//! * [`corpus`]: scripts, record files, difficulty labels and prompts
//! * [`report`]: deterministic score reports

pub mod code_sim;
pub mod config;
pub mod corpus;
pub mod levenshtein;
pub mod lineage;
pub mod report;
pub mod response;
pub mod scorer;
pub mod set_match;
pub mod weights;

pub use config::EvaluationConfig;
pub use lineage::{LineageTask, SchemaLineage};
pub use scorer::{ScoredRecord, Scorer};
