//! Line-delimited gold and prediction records.
//!
//! Gold line: `{"script_id":…,"target_schema":…,"lineage":{…}}`.
//! Prediction line: `{"script_id":…,"target_schema":…,"trial_id":…,"raw_response":…}`
//! with optional `seed` and `note`.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CorpusError;
use crate::lineage::{lineage_from_record, LineageTask, SchemaLineage};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GoldRecord {
    #[serde(flatten)]
    pub task: LineageTask,
    pub lineage: SchemaLineage,
}

impl GoldRecord {
    /// Canonical one-line form.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("gold record serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionRecord {
    pub script_id: String,
    pub target_schema: String,
    pub trial_id: String,
    pub raw_response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Why the response is empty, when the request failed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl PredictionRecord {
    pub fn task(&self) -> LineageTask {
        LineageTask::new(&self.script_id, &self.target_schema)
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("prediction record serializes")
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGold {
    script_id: String,
    target_schema: String,
    lineage: serde_json::Value,
}

/// Parses one gold line.
pub fn parse_gold_line(line: &str) -> Result<GoldRecord, String> {
    let raw: RawGold = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let lineage = lineage_from_record(raw.lineage).map_err(|e| e.to_string())?;
    Ok(GoldRecord {
        task: LineageTask::new(raw.script_id, raw.target_schema),
        lineage,
    })
}

fn open(path: &Path) -> Result<BufReader<File>, CorpusError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CorpusError::io(path, e))
}

/// Non-blank lines with their 1-based numbers.
fn lines(path: &Path) -> Result<Vec<(usize, String)>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        if !line.trim().is_empty() {
            out.push((i + 1, line));
        }
    }
    Ok(out)
}

/// Gold records in file order, keyed for lookup.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GoldSet {
    records: Vec<GoldRecord>,
    index: BTreeMap<LineageTask, usize>,
}

impl GoldSet {
    pub fn new(records: Vec<GoldRecord>) -> Result<Self, CorpusError> {
        let mut index = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            if index.insert(r.task.clone(), i).is_some() {
                return Err(CorpusError::DuplicateGoldTask(r.task.clone()));
            }
        }
        Ok(Self { records, index })
    }

    pub fn records(&self) -> &[GoldRecord] {
        &self.records
    }

    pub fn get(&self, task: &LineageTask) -> Option<&GoldRecord> {
        self.index.get(task).map(|&i| &self.records[i])
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Distinct script ids in first-seen order.
    pub fn script_ids(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.records
            .iter()
            .map(|r| r.task.script_id.as_str())
            .filter(|id| seen.insert(*id))
            .collect()
    }

    /// Canonical JSONL rendering.
    pub fn to_jsonl(&self) -> String {
        self.records.iter().map(|r| r.to_line() + "\n").collect()
    }
}

pub fn load_gold(path: &Path) -> Result<GoldSet, CorpusError> {
    let records = lines(path)?
        .into_iter()
        .map(|(line, text)| {
            parse_gold_line(&text).map_err(|reason| CorpusError::MalformedRecord {
                path: path.display().to_string(),
                line,
                reason,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    GoldSet::new(records)
}

/// A problem with one gold line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldFinding {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for GoldFinding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Checks every gold line, collecting findings instead of stopping at the
/// first one. Only I/O failures are errors.
pub fn gold_findings(path: &Path) -> Result<Vec<GoldFinding>, CorpusError> {
    let mut findings = Vec::new();
    let mut seen: BTreeMap<LineageTask, usize> = BTreeMap::new();
    for (line, text) in lines(path)? {
        match parse_gold_line(&text) {
            Ok(record) => {
                if let Some(first) = seen.insert(record.task.clone(), line) {
                    findings.push(GoldFinding {
                        line,
                        message: format!("duplicate task {} (first on line {first})", record.task),
                    });
                }
            }
            Err(message) => findings.push(GoldFinding { line, message }),
        }
    }
    Ok(findings)
}

pub fn load_predictions(path: &Path) -> Result<Vec<PredictionRecord>, CorpusError> {
    lines(path)?
        .into_iter()
        .map(|(line, text)| {
            serde_json::from_str(&text).map_err(|e| CorpusError::MalformedRecord {
                path: path.display().to_string(),
                line,
                reason: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    const G1: &str = r#"{"script_id":"s1","target_schema":"A","lineage":{"source_schema":"a","source_table":"t","transformation":"a AS A","aggregation":""}}"#;
    const G2: &str = r#"{"script_id":"s1","target_schema":"B","lineage":{"source_schema":"b","source_table":"t","transformation":"b AS B","aggregation":""}}"#;
    const G3: &str = r#"{"script_id":"s2","target_schema":"A","lineage":{"source_schema":"a","source_table":"u","transformation":"SUM(a) AS A","aggregation":"SUM() GROUP BY k"}}"#;

    fn file(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn findings_carry_line_numbers() {
        let split = r#"{"script_id":"s3","target_schema":"C","lineage":{"source_schema":["c"],"source_table":["t"],"transformation":["c<CODEEND>AS C"],"aggregation":[]}}"#;
        let text = format!("{G1}\n\n{G1}\n{split}\nnot json\n{G2}\n");
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        let findings = gold_findings(f.path()).unwrap();
        let lines: Vec<usize> = findings.iter().map(|f| f.line).collect();
        assert_eq!(lines, vec![3, 4, 5]);
        assert!(findings[0].message.contains("first on line 1"));
        assert!(findings[1].message.contains("<CODEEND>"), "{}", findings[1]);
    }

    #[test]
    fn three_line_gold() {
        let f = file(&[G1, "", G2, G3]);
        let gold = load_gold(f.path()).unwrap();
        assert_eq!(gold.len(), 3);
        assert_eq!(gold.script_ids(), ["s1", "s2"]);
        assert!(gold.get(&LineageTask::new("s2", "A")).is_some());
        // canonical input re-serializes byte-identically
        assert_eq!(gold.to_jsonl(), format!("{G1}\n{G2}\n{G3}\n"));
    }

    #[test]
    fn missing_task_field_reports_line() {
        let bad = r#"{"script_id":"s1","lineage":{"source_schema":"a","source_table":"t","transformation":"","aggregation":""}}"#;
        let f = file(&[G1, bad]);
        match load_gold(f.path()) {
            Err(CorpusError::MalformedRecord { line, reason, .. }) => {
                assert_eq!(line, 2);
                assert!(reason.contains("target_schema"), "{reason}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_gold_task() {
        let f = file(&[G1, G1]);
        assert!(matches!(load_gold(f.path()), Err(CorpusError::DuplicateGoldTask(_))));
    }

    #[test]
    fn missing_file_is_io() {
        assert!(matches!(
            load_gold(Path::new("/nonexistent/gold.jsonl")),
            Err(CorpusError::Io { .. })
        ));
    }

    #[test]
    fn predictions_round_trip() {
        let p = PredictionRecord {
            script_id: "s1".into(),
            target_schema: "A".into(),
            trial_id: "t0".into(),
            raw_response: "<answer>{}</answer>".into(),
            seed: Some(7),
            note: None,
        };
        let f = file(&[&p.to_line()]);
        assert_eq!(load_predictions(f.path()).unwrap(), [p]);
        let f = file(&[r#"{"script_id":"s1","target_schema":"A","raw_response":""}"#]);
        assert!(matches!(
            load_predictions(f.path()),
            Err(CorpusError::MalformedRecord { line: 1, .. })
        ));
    }
}
