//! Prompt construction for the seven prompting strategies.
//!
//! Three templates exist: base (answer-only, no examples), few-shot
//! (answer-only with 1-3 worked examples) and chain-of-thought (think plus
//! answer, with 1-3 worked examples each carrying a reasoning trace). The
//! field-definition paragraph between the output scaffold and the script
//! lives in its own template file.
//!
//! A prompt is built once per script; [`task_prompt`] appends the target
//! column for each query.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CorpusError, PipelineScript};
use crate::lineage::{lineage_from_record, SchemaLineage};
use crate::response::{wrap_as_answer, ResponseMode, THINK_CLOSE, THINK_OPEN};

const ANSWER_ONLY_TEMPLATE: &str = include_str!("../../templates/answer_only.txt");
const REASONING_TEMPLATE: &str = include_str!("../../templates/reasoning.txt");
const INSTRUCTIONS: &str = include_str!("../../templates/instructions.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "base")]
    Base,
    #[serde(rename = "one-shot")]
    OneShot,
    #[serde(rename = "two-shot")]
    TwoShot,
    #[serde(rename = "three-shot")]
    ThreeShot,
    #[serde(rename = "cot-1")]
    Cot1,
    #[serde(rename = "cot-2")]
    Cot2,
    #[serde(rename = "cot-3")]
    Cot3,
}

impl Strategy {
    pub const ALL: [Strategy; 7] = [
        Strategy::Base,
        Strategy::OneShot,
        Strategy::TwoShot,
        Strategy::ThreeShot,
        Strategy::Cot1,
        Strategy::Cot2,
        Strategy::Cot3,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Base => "base",
            Strategy::OneShot => "one-shot",
            Strategy::TwoShot => "two-shot",
            Strategy::ThreeShot => "three-shot",
            Strategy::Cot1 => "cot-1",
            Strategy::Cot2 => "cot-2",
            Strategy::Cot3 => "cot-3",
        }
    }

    /// Number of worked examples the strategy takes.
    pub fn arity(self) -> usize {
        match self {
            Strategy::Base => 0,
            Strategy::OneShot | Strategy::Cot1 => 1,
            Strategy::TwoShot | Strategy::Cot2 => 2,
            Strategy::ThreeShot | Strategy::Cot3 => 3,
        }
    }

    pub fn is_cot(self) -> bool {
        matches!(self, Strategy::Cot1 | Strategy::Cot2 | Strategy::Cot3)
    }

    /// Scaffolding expected in responses to this strategy.
    pub fn response_mode(self) -> ResponseMode {
        if self.is_cot() {
            ResponseMode::Reasoning
        } else {
            ResponseMode::AnswerOnly
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| CorpusError::UnknownStrategy(s.to_owned()))
    }
}

/// A solved lineage used as an in-prompt example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WorkedExample {
    pub script_id: String,
    pub target_schema: String,
    pub lineage: SchemaLineage,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExample {
    script_id: String,
    target_schema: String,
    lineage: serde_json::Value,
    trace: Option<String>,
}

/// Loads worked examples from a JSONL file (gold-record lines with an optional `trace`).
pub fn load_examples(path: &Path) -> Result<Vec<WorkedExample>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    let malformed = |line, reason: String| CorpusError::MalformedRecord {
        path: path.display().to_string(),
        line,
        reason,
    };
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let raw: RawExample = serde_json::from_str(l).map_err(|e| malformed(i + 1, e.to_string()))?;
            let lineage = lineage_from_record(raw.lineage).map_err(|e| malformed(i + 1, e.to_string()))?;
            Ok(WorkedExample {
                script_id: raw.script_id,
                target_schema: raw.target_schema,
                lineage,
                trace: raw.trace.filter(|t| !t.trim().is_empty()),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptSpec<'a> {
    pub strategy: Strategy,
    pub script: &'a PipelineScript,
    pub examples: Vec<WorkedExample>,
    pub traces: Vec<String>,
}

impl<'a> PromptSpec<'a> {
    /// Takes the first examples from `pool` that come from other scripts
    /// (and, for chain-of-thought, carry a trace).
    pub fn from_pool(
        strategy: Strategy,
        script: &'a PipelineScript,
        pool: &[WorkedExample],
    ) -> Result<Self, CorpusError> {
        let examples: Vec<WorkedExample> = pool
            .iter()
            .filter(|e| e.script_id != script.script_id)
            .filter(|e| !strategy.is_cot() || e.trace.is_some())
            .take(strategy.arity())
            .cloned()
            .collect();
        let traces = if strategy.is_cot() {
            examples.iter().filter_map(|e| e.trace.clone()).collect()
        } else {
            Vec::new()
        };
        let spec = Self {
            strategy,
            script,
            examples,
            traces,
        };
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> Result<(), CorpusError> {
        let want = self.strategy.arity();
        let want_traces = if self.strategy.is_cot() { want } else { 0 };
        if self.examples.len() != want || self.traces.len() != want_traces {
            return Err(CorpusError::ArityMismatch {
                strategy: self.strategy,
                examples: self.examples.len(),
                traces: self.traces.len(),
            });
        }
        Ok(())
    }
}

fn render_examples(examples: &[WorkedExample], traces: &[String]) -> String {
    let mut out = String::new();
    for (i, example) in examples.iter().enumerate() {
        out.push_str(&format!(
            "\n\nExample {} (target column: {}):\n",
            i + 1,
            example.target_schema
        ));
        if let Some(trace) = traces.get(i) {
            out.push_str(&format!("{THINK_OPEN} {} {THINK_CLOSE}\n", trace.trim()));
        }
        out.push_str(&wrap_as_answer(&example.lineage));
    }
    out
}

/// Renders the shared per-script prompt.
pub fn build_prompt(spec: &PromptSpec<'_>) -> Result<String, CorpusError> {
    spec.check()?;
    let template = if spec.strategy.is_cot() {
        REASONING_TEMPLATE
    } else {
        ANSWER_ONLY_TEMPLATE
    };
    let mut prompt = template
        .trim_end()
        .replace("{instructions}", INSTRUCTIONS.trim_end())
        .replace("{script}", &spec.script.render());
    if spec.strategy != Strategy::Base {
        prompt.push_str("\n\nExamples:");
        prompt.push_str(&render_examples(&spec.examples, &spec.traces));
    }
    prompt.push('\n');
    Ok(prompt)
}

/// Appends the per-task query to a script prompt.
pub fn task_prompt(script_prompt: &str, target_schema: &str) -> String {
    format!("{script_prompt}\nTarget Column: {target_schema}\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_multilang_script;
    use crate::lineage::{parse_lineage_dict, DictSyntax};

    fn example(script: &str, trace: Option<&str>) -> WorkedExample {
        WorkedExample {
            script_id: script.into(),
            target_schema: "Total".into(),
            lineage: parse_lineage_dict(
                r#"{"source_schema":"amount","source_table":"tx","transformation":"SUM(amount) AS Total","aggregation":"SUM()"}"#,
                DictSyntax::Strict,
            )
            .unwrap(),
            trace: trace.map(str::to_owned),
        }
    }

    fn script() -> PipelineScript {
        parse_multilang_script("s", "SELECT a AS b FROM t").unwrap()
    }

    #[test]
    fn base_prompt() {
        let s = script();
        let p = build_prompt(&PromptSpec::from_pool(Strategy::Base, &s, &[]).unwrap()).unwrap();
        assert!(p.contains("Your response must include <answer> </answer> part:"));
        assert!(p.contains("Data Pipeline Script: SELECT a AS b FROM t"));
        assert!(!p.contains("Examples:"));
        assert!(!p.contains("<think>"));
        assert!(p.contains("  \"source_schema\": \"...\",\n"));
        assert!(!p.contains("{{") && !p.contains("{instructions}"));
    }

    #[test]
    fn cot_prompt_has_two_part_scaffold_and_trace() {
        let s = script();
        let pool = [example("other", Some("read tx, sum amount"))];
        let p = build_prompt(&PromptSpec::from_pool(Strategy::Cot1, &s, &pool).unwrap()).unwrap();
        assert!(p.contains("1. <think> ... </think>\n2. <answer> {"));
        assert!(p.contains("<think> read tx, sum amount </think>"));
        assert!(p.contains("Example 1 (target column: Total):"));
    }

    #[test]
    fn few_shot_prompt_is_answer_only() {
        let s = script();
        let pool = [example("x", None), example("y", None), example("s", None)];
        let spec = PromptSpec::from_pool(Strategy::TwoShot, &s, &pool).unwrap();
        let p = build_prompt(&spec).unwrap();
        assert!(p.contains("Example 2"));
        assert!(!p.contains("<think>"));
        // examples from the script itself are skipped
        assert!(PromptSpec::from_pool(Strategy::ThreeShot, &s, &pool).is_err());
    }

    #[test]
    fn arity_mismatch() {
        let s = script();
        let spec = PromptSpec {
            strategy: Strategy::TwoShot,
            script: &s,
            examples: vec![example("x", None)],
            traces: vec![],
        };
        assert!(matches!(build_prompt(&spec), Err(CorpusError::ArityMismatch { .. })));
        // chain-of-thought needs traces
        assert!(PromptSpec::from_pool(Strategy::Cot1, &s, &[example("x", None)]).is_err());
    }

    #[test]
    fn task_prompt_appends_target() {
        assert_eq!(task_prompt("P\n", "Total"), "P\n\nTarget Column: Total\n");
    }

    #[test]
    fn strategy_names() {
        for s in Strategy::ALL {
            assert_eq!(s.as_str().parse::<Strategy>().unwrap(), s);
        }
        assert!("four-shot".parse::<Strategy>().is_err());
        assert_eq!(Strategy::Cot2.response_mode(), ResponseMode::Reasoning);
    }
}
