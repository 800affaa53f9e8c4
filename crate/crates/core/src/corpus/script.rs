//! Multi-language pipeline scripts.

use serde::{Deserialize, Serialize};

use super::{CorpusError, Features};
use crate::code_sim::Language;
use crate::corpus::Difficulty;

/// Line that marks a language transition inside a script.
pub const SEGMENT_DELIMITER: &str = ">>>>>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub language: Option<Language>,
    pub code: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineScript {
    pub script_id: String,
    pub segments: Vec<Segment>,
    pub declared_features: Option<Features>,
    pub difficulty: Option<Difficulty>,
}

impl PipelineScript {
    /// Script text with segments re-joined by the delimiter line.
    pub fn render(&self) -> String {
        let parts: Vec<&str> = self.segments.iter().map(|s| s.code.as_str()).collect();
        parts.join(&format!("\n\n{SEGMENT_DELIMITER}\n\n"))
    }
}

/// Splits raw script text on lines consisting solely of `>>>>>`.
///
/// Segments are trimmed and empty ones dropped; language tags are left
/// unset (the manifest supplies them).
pub fn parse_multilang_script(script_id: &str, raw: &str) -> Result<PipelineScript, CorpusError> {
    let mut segments = Vec::new();
    let mut current = String::new();
    let mut flush = |current: &mut String| {
        let code = current.trim();
        if !code.is_empty() {
            segments.push(Segment {
                language: None,
                code: code.to_owned(),
            });
        }
        current.clear();
    };
    for line in raw.split_inclusive('\n') {
        if line.trim() == SEGMENT_DELIMITER {
            flush(&mut current);
        } else {
            current.push_str(line);
        }
    }
    flush(&mut current);
    if segments.is_empty() {
        return Err(CorpusError::EmptyScript(script_id.to_owned()));
    }
    Ok(PipelineScript {
        script_id: script_id.to_owned(),
        segments,
        declared_features: None,
        difficulty: None,
    })
}
