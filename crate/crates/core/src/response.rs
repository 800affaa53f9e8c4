//! Format gate for raw model responses.
//!
//! A response passes only when it carries the expected tag scaffolding and
//! its answer block parses as a lineage dictionary. Failures never raise;
//! they become a zero score with a reason attached.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lineage::{parse_lineage_dict, DictSyntax, LineageError, SchemaLineage};

pub const THINK_OPEN: &str = "<think>";
pub const THINK_CLOSE: &str = "</think>";
pub const ANSWER_OPEN: &str = "<answer>";
pub const ANSWER_CLOSE: &str = "</answer>";

/// Scaffolding the model was asked to produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResponseMode {
    /// `<think>…</think>` followed by `<answer>…</answer>`.
    Reasoning,
    /// A lone `<answer>…</answer>`; any think tag is a violation.
    AnswerOnly,
}

impl std::fmt::Display for ResponseMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ResponseMode::Reasoning => "reasoning",
            ResponseMode::AnswerOnly => "answer-only",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TagError {
    #[error("missing {0} tag")]
    MissingTag(&'static str),
    #[error("{0} appears more than once")]
    DuplicateTag(&'static str),
    #[error("{0} is never closed")]
    UnclosedTag(&'static str),
    #[error("think block present in answer-only mode")]
    UnexpectedThinkBlock,
    #[error("{0}")]
    MisplacedTag(&'static str),
}

/// Why a response scored zero on the format gate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatFailure {
    #[error(transparent)]
    Tags(#[from] TagError),
    #[error(transparent)]
    Dict(#[from] LineageError),
}

/// Inner texts of the recognized blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Blocks<'a> {
    pub think: Option<&'a str>,
    pub answer: &'a str,
}

/// Locates the think and answer blocks of `raw`.
///
/// Exactly one answer block is required. In reasoning mode exactly one think
/// block is required as well and it must close before the answer opens. Tag
/// matching is literal and case-sensitive; anything outside the blocks is
/// ignored.
pub fn extract_blocks(raw: &str, mode: ResponseMode) -> Result<Blocks<'_>, TagError> {
    let think = match mode {
        ResponseMode::AnswerOnly => {
            if raw.contains(THINK_OPEN) || raw.contains(THINK_CLOSE) {
                return Err(TagError::UnexpectedThinkBlock);
            }
            None
        }
        ResponseMode::Reasoning => Some(find_block(raw, THINK_OPEN, THINK_CLOSE)?),
    };
    let answer = find_block(raw, ANSWER_OPEN, ANSWER_CLOSE)?;
    if let Some(think) = &think {
        if think.close_end > answer.open_start {
            return Err(TagError::MisplacedTag(
                "think block must close before the answer block opens",
            ));
        }
    }
    Ok(Blocks {
        think: think.map(|b| b.inner),
        answer: answer.inner,
    })
}

struct Located<'a> {
    inner: &'a str,
    open_start: usize,
    close_end: usize,
}

fn find_block<'a>(raw: &'a str, open: &'static str, close: &'static str) -> Result<Located<'a>, TagError> {
    let opens: Vec<usize> = raw.match_indices(open).map(|(i, _)| i).collect();
    let closes: Vec<usize> = raw.match_indices(close).map(|(i, _)| i).collect();
    match (opens.as_slice(), closes.as_slice()) {
        ([], []) => Err(TagError::MissingTag(open)),
        ([_, _, ..], _) => Err(TagError::DuplicateTag(open)),
        (_, [_, _, ..]) => Err(TagError::DuplicateTag(close)),
        ([_], []) => Err(TagError::UnclosedTag(open)),
        ([], [_]) => Err(TagError::MissingTag(open)),
        ([o], [c]) if c < o => Err(TagError::MisplacedTag("closing tag precedes its opening tag")),
        ([o], [c]) => Ok(Located {
            inner: &raw[o + open.len()..*c],
            open_start: *o,
            close_end: c + close.len(),
        }),
    }
}

/// Result of the format gate: M_fmt plus whatever was recovered.
#[derive(Debug, Clone, PartialEq)]
pub struct FormatVerdict {
    pub score: u8,
    pub lineage: Option<SchemaLineage>,
    pub failure: Option<FormatFailure>,
}

/// Computes the binary format score of a raw response.
pub fn format_score(raw: &str, mode: ResponseMode, syntax: DictSyntax) -> FormatVerdict {
    match extract_blocks(raw, mode)
        .map_err(FormatFailure::from)
        .and_then(|blocks| parse_lineage_dict(blocks.answer.trim(), syntax).map_err(FormatFailure::from))
    {
        Ok(lineage) => FormatVerdict {
            score: 1,
            lineage: Some(lineage),
            failure: None,
        },
        Err(failure) => FormatVerdict {
            score: 0,
            lineage: None,
            failure: Some(failure),
        },
    }
}

/// A raw response together with its parsed blocks and format verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelResponse {
    pub raw: String,
    pub mode: ResponseMode,
    pub think_block: Option<String>,
    pub answer_block: Option<String>,
    pub format_ok: u8,
    pub lineage: Option<SchemaLineage>,
    pub failure: Option<FormatFailure>,
}

impl ModelResponse {
    pub fn parse(raw: impl Into<String>, mode: ResponseMode, syntax: DictSyntax) -> Self {
        let raw = raw.into();
        let (think_block, answer_block) = match extract_blocks(&raw, mode) {
            Ok(b) => (b.think.map(str::to_owned), Some(b.answer.to_owned())),
            Err(_) => (None, None),
        };
        let verdict = format_score(&raw, mode, syntax);
        Self {
            raw,
            mode,
            think_block,
            answer_block,
            format_ok: verdict.score,
            lineage: verdict.lineage,
            failure: verdict.failure,
        }
    }

    /// Best-effort lineage for component diagnostics.
    ///
    /// Equals [`ModelResponse::lineage`] when the gate passed. Otherwise, if
    /// the response holds exactly one well-formed answer block whose body
    /// parses, that lineage is returned even though the scaffolding failed.
    pub fn diagnostic_lineage(&self, syntax: DictSyntax) -> Option<SchemaLineage> {
        if let Some(l) = &self.lineage {
            return Some(l.clone());
        }
        let answer = find_block(&self.raw, ANSWER_OPEN, ANSWER_CLOSE).ok()?;
        parse_lineage_dict(answer.inner.trim(), syntax).ok()
    }
}

/// Wraps a lineage as a well-formed answer-only response.
pub fn wrap_as_answer(lineage: &SchemaLineage) -> String {
    format!("{ANSWER_OPEN} {} {ANSWER_CLOSE}", lineage.canonical_serialize())
}

#[cfg(test)]
mod tests {
    use super::*;

    const DICT: &str = r#"{"source_schema":"a","source_table":"t","transformation":"x","aggregation":""}"#;

    #[test]
    fn answer_only_block() {
        let raw = format!("<answer>{DICT}</answer>");
        let b = extract_blocks(&raw, ResponseMode::AnswerOnly).unwrap();
        assert_eq!(b.think, None);
        assert_eq!(b.answer, DICT);
    }

    #[test]
    fn reasoning_blocks() {
        let raw = format!("<think>x</think><answer>{DICT}</answer>");
        let b = extract_blocks(&raw, ResponseMode::Reasoning).unwrap();
        assert_eq!(b.think, Some("x"));
        assert_eq!(b.answer, DICT);
    }

    #[test]
    fn think_block_in_answer_only_mode_is_rejected() {
        let raw = format!("<think>x</think><answer>{DICT}</answer>");
        assert_eq!(
            extract_blocks(&raw, ResponseMode::AnswerOnly),
            Err(TagError::UnexpectedThinkBlock)
        );
        assert_eq!(
            format_score(&raw, ResponseMode::AnswerOnly, DictSyntax::Strict).score,
            0
        );
    }

    #[test]
    fn tag_errors() {
        use ResponseMode::*;
        assert_eq!(
            extract_blocks("no tags", AnswerOnly),
            Err(TagError::MissingTag(ANSWER_OPEN))
        );
        assert_eq!(
            extract_blocks("<answer>a</answer><answer>b</answer>", AnswerOnly),
            Err(TagError::DuplicateTag(ANSWER_OPEN))
        );
        assert_eq!(
            extract_blocks("<answer>{", AnswerOnly),
            Err(TagError::UnclosedTag(ANSWER_OPEN))
        );
        assert_eq!(
            extract_blocks("<answer>a</answer>", Reasoning),
            Err(TagError::MissingTag(THINK_OPEN))
        );
        assert_eq!(
            extract_blocks("<think>x<answer>a</answer>", Reasoning),
            Err(TagError::UnclosedTag(THINK_OPEN))
        );
        assert!(matches!(
            extract_blocks("<answer>a</answer><think>x</think>", Reasoning),
            Err(TagError::MisplacedTag(_))
        ));
        assert!(matches!(
            extract_blocks("</answer>a<answer>", AnswerOnly),
            Err(TagError::MisplacedTag(_))
        ));
        // tags are case-sensitive
        assert_eq!(
            extract_blocks("<ANSWER>a</ANSWER>", AnswerOnly),
            Err(TagError::MissingTag(ANSWER_OPEN))
        );
    }

    #[test]
    fn format_score_examples() {
        let ok = format!("Sure.\n<answer>\n{DICT}\n</answer>\nDone.");
        let v = format_score(&ok, ResponseMode::AnswerOnly, DictSyntax::Strict);
        assert_eq!(v.score, 1);
        assert!(v.lineage.is_some());

        let wrong_key = ok.replace("source_schema", "sourceschema");
        let v = format_score(&wrong_key, ResponseMode::AnswerOnly, DictSyntax::Strict);
        assert_eq!(v.score, 0);
        assert!(matches!(
            v.failure,
            Some(FormatFailure::Dict(LineageError::KeySetMismatch(_)))
        ));

        let truncated = format!("<answer>{}", &DICT[..20]);
        let v = format_score(&truncated, ResponseMode::AnswerOnly, DictSyntax::Strict);
        assert_eq!(v.score, 0);
        assert_eq!(v.failure, Some(FormatFailure::Tags(TagError::UnclosedTag(ANSWER_OPEN))));
    }

    #[test]
    fn empty_think_block_is_accepted() {
        let raw = format!("<think></think><answer>{DICT}</answer>");
        assert_eq!(format_score(&raw, ResponseMode::Reasoning, DictSyntax::Strict).score, 1);
    }

    #[test]
    fn markdown_fenced_dict_fails_strict_gate() {
        let raw = format!("<answer>```json\n{DICT}\n```</answer>");
        assert_eq!(
            format_score(&raw, ResponseMode::AnswerOnly, DictSyntax::Strict).score,
            0
        );
    }

    #[test]
    fn diagnostic_lineage_survives_scaffolding_failure() {
        let raw = format!("<think>x</think><answer>{DICT}</answer>");
        let r = ModelResponse::parse(raw, ResponseMode::AnswerOnly, DictSyntax::Strict);
        assert_eq!(r.format_ok, 0);
        assert!(r.lineage.is_none());
        assert!(r.diagnostic_lineage(DictSyntax::Strict).is_some());
    }

    #[test]
    fn wrapped_lineage_passes_the_gate() {
        let l = parse_lineage_dict(DICT, DictSyntax::Strict).unwrap();
        let r = ModelResponse::parse(wrap_as_answer(&l), ResponseMode::AnswerOnly, DictSyntax::Strict);
        assert_eq!(r.format_ok, 1);
        assert_eq!(r.lineage, Some(l));
    }
}
