//! Scripts, gold and prediction records, difficulty labels and prompts.

mod difficulty;
mod manifest;
pub mod prompt;
mod records;
mod script;

use std::path::Path;

use thiserror::Error;

use crate::lineage::LineageTask;
pub use difficulty::{detect_features, difficulty_level, Difficulty, Features};
pub use manifest::{Corpus, MANIFEST_FILE};
pub use prompt::{build_prompt, task_prompt, PromptSpec, Strategy, WorkedExample};
pub use records::{
    gold_findings, load_gold, load_predictions, parse_gold_line, GoldFinding, GoldRecord, GoldSet, PredictionRecord,
};
pub use script::{parse_multilang_script, PipelineScript, Segment, SEGMENT_DELIMITER};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {reason}")]
    MalformedRecord { path: String, line: usize, reason: String },
    #[error("duplicate gold task {0}")]
    DuplicateGoldTask(LineageTask),
    #[error("script `{0}` has no code segments")]
    EmptyScript(String),
    #[error("difficulty features are missing")]
    MissingFeatures,
    #[error("unknown difficulty level `{0}` (expected easy, medium or hard)")]
    UnknownDifficulty(String),
    #[error("unknown prompting strategy `{0}`")]
    UnknownStrategy(String),
    #[error("strategy {strategy} takes {} example(s) and {} trace(s), got {examples} and {traces}", strategy.arity(), if strategy.is_cot() { strategy.arity() } else { 0 })]
    ArityMismatch {
        strategy: Strategy,
        examples: usize,
        traces: usize,
    },
    #[error("invalid manifest: {0}")]
    Manifest(String),
}

impl CorpusError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
