//! Scoring runs and their reports.
//!
//! A run scores one or more trials of predictions against a gold set. The
//! outputs are deterministic: records follow gold order, maps are sorted,
//! and every float is rounded to 12 decimal places before it is written so
//! that last-bit differences in transcendental functions across platforms do
//! not leak into the files.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code_sim::{CodeWeights, ParserPool};
use crate::config::{CompositeWeights, EvaluationConfig};
use crate::corpus::{Difficulty, GoldSet, PredictionRecord};
use crate::lineage::{DictSyntax, LineageTask};
use crate::response::ResponseMode;
use crate::scorer::{
    corpus_score, script_scores, stratify, trial_stats, AggregateError, ScoredRecord, Scorer, Strata, TrialStats,
};
use crate::set_match::TableWeights;

pub const REPORT_FORMAT_VERSION: u32 = 1;
pub const STD_CONVENTION: &str = "population";
pub const MISSING_PREDICTION: &str = "missing prediction";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("trial `{trial}`: prediction for unknown task {task}")]
    UnknownTask { trial: String, task: LineageTask },
    #[error("trial `{trial}`: more than one prediction for {task}")]
    DuplicatePrediction { trial: String, task: LineageTask },
    #[error("no predictions to score")]
    NoPredictions,
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
    #[error("reports are not comparable: {0}")]
    IncompatibleReports(String),
}

/// Rounds to 12 decimal places.
pub fn round12(x: f64) -> f64 {
    let r = (x * 1e12).round() / 1e12;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn round_record(mut r: ScoredRecord) -> ScoredRecord {
    r.m_tbl = round12(r.m_tbl);
    r.m_trf = round12(r.m_trf);
    r.m_agg = round12(r.m_agg);
    r.slice = round12(r.slice);
    r
}

fn round_strata(s: Strata) -> Strata {
    Strata {
        easy: s.easy.map(round12),
        medium: s.medium.map(round12),
        hard: s.hard.map(round12),
    }
}

fn round_stats(t: TrialStats) -> TrialStats {
    TrialStats {
        mean: round12(t.mean),
        std: round12(t.std),
        trials: t.trials,
    }
}

/// Scoring settings recorded in a report; two reports are comparable only
/// when these agree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    pub mode: ResponseMode,
    pub dict_syntax: DictSyntax,
    pub custom_lexicons: bool,
    pub table: TableWeights,
    pub transformation: CodeWeights,
    pub aggregation: CodeWeights,
    pub composite: CompositeWeights,
}

impl From<&EvaluationConfig> for ReportConfig {
    fn from(c: &EvaluationConfig) -> Self {
        Self {
            mode: c.mode,
            dict_syntax: c.dict_syntax,
            custom_lexicons: c.lexicons.is_some(),
            table: c.table,
            transformation: c.transformation,
            aggregation: c.aggregation,
            composite: c.composite,
        }
    }
}

impl ReportConfig {
    fn same_weights(&self, other: &Self) -> bool {
        self.table == other.table
            && self.transformation == other.transformation
            && self.aggregation == other.aggregation
            && self.composite == other.composite
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptSummary {
    pub score: f64,
    pub schema_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub difficulty: Option<Difficulty>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial_id: String,
    pub corpus: f64,
    pub script_count: usize,
    pub record_count: usize,
    pub format_failures: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub missing: Vec<LineageTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strata: Option<Strata>,
    pub per_script: BTreeMap<String, ScriptSummary>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StrataStats {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub easy: Option<TrialStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub medium: Option<TrialStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hard: Option<TrialStats>,
}

impl StrataStats {
    pub fn get(&self, level: Difficulty) -> Option<&TrialStats> {
        match level {
            Difficulty::Easy => self.easy.as_ref(),
            Difficulty::Medium => self.medium.as_ref(),
            Difficulty::Hard => self.hard.as_ref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub corpus: TrialStats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strata: Option<StrataStats>,
}

/// Structured score report of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<String>,
    pub std_convention: String,
    pub config: ReportConfig,
    pub trials: Vec<TrialSummary>,
    pub summary: ReportSummary,
}

/// Report plus the per-record scores behind it, grouped by trial.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: CorpusReport,
    pub records: Vec<(String, Vec<ScoredRecord>)>,
}

/// Optional run labels.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunLabels {
    pub model: Option<String>,
    pub strategy: Option<String>,
}

/// Scores one trial: every gold task gets a record, in gold order.
///
/// Tasks without a prediction score 0 and are listed as missing. Work is
/// spread over the current rayon pool with one parser pool per worker.
pub fn score_trial(
    scorer: &Scorer,
    gold: &GoldSet,
    trial_id: &str,
    predictions: &[&PredictionRecord],
) -> Result<(Vec<ScoredRecord>, Vec<LineageTask>), ReportError> {
    let mut by_task: HashMap<LineageTask, &str> = HashMap::with_capacity(predictions.len());
    for p in predictions {
        let task = p.task();
        if gold.get(&task).is_none() {
            return Err(ReportError::UnknownTask {
                trial: trial_id.to_owned(),
                task,
            });
        }
        if by_task.insert(task.clone(), &p.raw_response).is_some() {
            return Err(ReportError::DuplicatePrediction {
                trial: trial_id.to_owned(),
                task,
            });
        }
    }
    let records: Vec<ScoredRecord> = gold
        .records()
        .par_iter()
        .map_init(ParserPool::new, |pool, g| match by_task.get(&g.task) {
            Some(raw) => scorer.score_raw(pool, g.task.clone(), raw, &g.lineage),
            None => ScoredRecord {
                task: g.task.clone(),
                m_fmt: 0,
                m_src: 0,
                m_tbl: 0.0,
                m_trf: 0.0,
                m_agg: 0.0,
                slice: 0.0,
                diagnostics: vec![MISSING_PREDICTION.to_owned()],
            },
        })
        .map(round_record)
        .collect();
    let missing = gold
        .records()
        .iter()
        .filter(|g| !by_task.contains_key(&g.task))
        .map(|g| g.task.clone())
        .collect();
    Ok((records, missing))
}

/// Scores every trial found in `predictions` and builds the report.
///
/// Trials are identified by `trial_id` and reported in sorted order. When
/// `labels` is given, every script must carry a difficulty label and strata
/// are included.
pub fn evaluate(
    scorer: &Scorer,
    gold: &GoldSet,
    predictions: &[PredictionRecord],
    labels: Option<&BTreeMap<String, String>>,
    run: &RunLabels,
) -> Result<Evaluation, ReportError> {
    let mut trials: BTreeMap<&str, Vec<&PredictionRecord>> = BTreeMap::new();
    for p in predictions {
        trials.entry(&p.trial_id).or_default().push(p);
    }
    if trials.is_empty() {
        return Err(ReportError::NoPredictions);
    }

    let mut summaries = Vec::with_capacity(trials.len());
    let mut all_records = Vec::with_capacity(trials.len());
    for (trial_id, preds) in trials {
        let (records, missing) = score_trial(scorer, gold, trial_id, &preds)?;
        let per_script = script_scores(&records);
        let values: Vec<f64> = per_script.values().map(|s| s.score).collect();
        let corpus = corpus_score(&values)?;
        let strata = labels
            .map(|l| {
                let scores = per_script.iter().map(|(k, v)| (k.clone(), v.score)).collect();
                stratify(&scores, l)
            })
            .transpose()?;
        summaries.push(TrialSummary {
            trial_id: trial_id.to_owned(),
            corpus: round12(corpus),
            script_count: per_script.len(),
            record_count: records.len(),
            format_failures: records.iter().filter(|r| r.m_fmt == 0).count(),
            missing,
            strata: strata.map(round_strata),
            per_script: per_script
                .into_iter()
                .map(|(id, s)| {
                    let difficulty = labels.and_then(|l| l.get(&id)).and_then(|d| d.parse().ok());
                    (
                        id,
                        ScriptSummary {
                            score: round12(s.score),
                            schema_count: s.schema_count,
                            difficulty,
                        },
                    )
                })
                .collect(),
        });
        all_records.push((trial_id.to_owned(), records));
    }

    let corpus_values: Vec<f64> = summaries.iter().map(|t| t.corpus).collect();
    let strata = labels.map(|_| {
        let level_stats = |level: Difficulty| {
            let values: Vec<f64> = summaries
                .iter()
                .filter_map(|t| t.strata.and_then(|s| s.get(level)))
                .collect();
            trial_stats(&values).ok().map(round_stats)
        };
        StrataStats {
            easy: level_stats(Difficulty::Easy),
            medium: level_stats(Difficulty::Medium),
            hard: level_stats(Difficulty::Hard),
        }
    });
    let report = CorpusReport {
        format_version: REPORT_FORMAT_VERSION,
        model: run.model.clone(),
        strategy: run.strategy.clone(),
        std_convention: STD_CONVENTION.to_owned(),
        config: ReportConfig::from(scorer.config()),
        trials: summaries,
        summary: ReportSummary {
            corpus: round_stats(trial_stats(&corpus_values)?),
            strata,
        },
    };
    Ok(Evaluation {
        report,
        records: all_records,
    })
}

impl CorpusReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

fn fmt_score(x: f64) -> String {
    format!("{x:.6}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_score).unwrap_or_else(|| "-".to_owned())
}

/// Aligned plain-text table from rows of cells; the first row is the header.
pub fn aligned_table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, cell)| format!("{cell:<w$}", w = widths[c]))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// Tab-separated rows; the first row is the header.
pub fn tsv(rows: &[Vec<String>]) -> String {
    rows.iter().map(|r| r.join("\t") + "\n").collect()
}

impl Evaluation {
    /// Report files by name: structured report, per-record JSON lines, flat
    /// table and aligned summary. Contents depend only on the inputs.
    pub fn output_files(&self) -> Vec<(&'static str, String)> {
        vec![
            ("report.json", self.report.to_json()),
            ("records.jsonl", self.records_jsonl()),
            ("scores.tsv", tsv(&self.record_rows())),
            ("summary.txt", self.report.summary_text()),
        ]
    }

    /// Flat per-record table.
    pub fn record_rows(&self) -> Vec<Vec<String>> {
        let mut rows = vec![[
            "trial_id",
            "script_id",
            "target_schema",
            "m_fmt",
            "m_src",
            "m_tbl",
            "m_trf",
            "m_agg",
            "slice",
        ]
        .map(str::to_owned)
        .to_vec()];
        for (trial, records) in &self.records {
            for r in records {
                rows.push(vec![
                    trial.clone(),
                    r.task.script_id.clone(),
                    r.task.target_schema.clone(),
                    r.m_fmt.to_string(),
                    r.m_src.to_string(),
                    fmt_score(r.m_tbl),
                    fmt_score(r.m_trf),
                    fmt_score(r.m_agg),
                    fmt_score(r.slice),
                ]);
            }
        }
        rows
    }

    /// Records as JSON lines, each tagged with its trial.
    pub fn records_jsonl(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            trial_id: &'a str,
            #[serde(flatten)]
            record: &'a ScoredRecord,
        }
        let mut out = String::new();
        for (trial, records) in &self.records {
            for record in records {
                out.push_str(
                    &serde_json::to_string(&Line {
                        trial_id: trial,
                        record,
                    })
                    .expect("record serializes"),
                );
                out.push('\n');
            }
        }
        out
    }
}

impl CorpusReport {
    /// Human-readable summary: per-trial corpus and strata, then mean and std.
    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        if let Some(m) = &self.model {
            let _ = writeln!(out, "model: {m}");
        }
        if let Some(s) = &self.strategy {
            let _ = writeln!(out, "strategy: {s}");
        }
        let _ = writeln!(out, "std: {}", self.std_convention);
        out.push('\n');

        let mut rows = vec![[
            "trial",
            "corpus",
            "easy",
            "medium",
            "hard",
            "scripts",
            "records",
            "format_fail",
            "missing",
        ]
        .map(str::to_owned)
        .to_vec()];
        for t in &self.trials {
            let s = t.strata.unwrap_or_default();
            rows.push(vec![
                t.trial_id.clone(),
                fmt_score(t.corpus),
                fmt_opt(s.easy),
                fmt_opt(s.medium),
                fmt_opt(s.hard),
                t.script_count.to_string(),
                t.record_count.to_string(),
                t.format_failures.to_string(),
                t.missing.len().to_string(),
            ]);
        }
        let strata = self.summary.strata.clone().unwrap_or_default();
        let pick = |f: fn(&TrialStats) -> f64| {
            let level = |d| fmt_opt(strata.get(d).map(f));
            vec![
                fmt_score(f(&self.summary.corpus)),
                level(Difficulty::Easy),
                level(Difficulty::Medium),
                level(Difficulty::Hard),
            ]
        };
        let mut mean_row = vec!["mean".to_owned()];
        mean_row.extend(pick(|t| t.mean));
        let mut std_row = vec!["std".to_owned()];
        std_row.extend(pick(|t| t.std));
        rows.push(mean_row);
        rows.push(std_row);
        out.push_str(&aligned_table(&rows));

        for t in &self.trials {
            let _ = writeln!(out, "\ntrial {}", t.trial_id);
            let mut rows = vec![["script", "difficulty", "schemas", "score"].map(str::to_owned).to_vec()];
            for (id, s) in &t.per_script {
                rows.push(vec![
                    id.clone(),
                    s.difficulty.map(|d| d.to_string()).unwrap_or_else(|| "-".into()),
                    s.schema_count.to_string(),
                    fmt_score(s.score),
                ]);
            }
            out.push_str(&aligned_table(&rows));
        }
        out
    }
}

/// (model, strategy)
pub type CellKey = (String, String);

/// Model x strategy comparison across reports.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub models: Vec<String>,
    pub strategies: Vec<String>,
    /// (model, strategy) -> corpus mean and std across trials
    pub cells: BTreeMap<CellKey, TrialStats>,
    /// (model, strategy) -> per-level stats
    pub strata: BTreeMap<CellKey, StrataStats>,
}

fn label(value: &Option<String>, fallback: &str) -> String {
    value.clone().unwrap_or_else(|| fallback.to_owned())
}

/// Builds the comparison table; all reports must share weights.
///
/// `names` supplies a fallback label per report (typically the file name)
/// for reports without model or strategy labels.
pub fn compare_reports(reports: &[CorpusReport], names: &[String]) -> Result<Comparison, ReportError> {
    let Some(first) = reports.first() else {
        return Err(ReportError::IncompatibleReports("no reports given".into()));
    };
    for (r, name) in reports.iter().zip(names) {
        if !r.config.same_weights(&first.config) {
            return Err(ReportError::IncompatibleReports(format!(
                "{name} uses different weights than {}",
                names[0]
            )));
        }
        if r.format_version != first.format_version {
            return Err(ReportError::IncompatibleReports(format!(
                "{name} has a different report format version"
            )));
        }
    }
    let mut models = Vec::new();
    let mut strategies = Vec::new();
    let mut cells = BTreeMap::new();
    let mut strata = BTreeMap::new();
    for (r, name) in reports.iter().zip(names) {
        let model = label(&r.model, name);
        let strategy = label(&r.strategy, "-");
        if !models.contains(&model) {
            models.push(model.clone());
        }
        if !strategies.contains(&strategy) {
            strategies.push(strategy.clone());
        }
        let key = (model, strategy);
        if cells.insert(key.clone(), r.summary.corpus).is_some() {
            return Err(ReportError::IncompatibleReports(format!(
                "two reports for model `{}` and strategy `{}`",
                key.0, key.1
            )));
        }
        if let Some(s) = &r.summary.strata {
            strata.insert(key, s.clone());
        }
    }
    Ok(Comparison {
        models,
        strategies,
        cells,
        strata,
    })
}

impl Comparison {
    /// Model rows by strategy columns, cells as `mean ± std`.
    pub fn table_rows(&self) -> Vec<Vec<String>> {
        let mut header = vec!["model".to_owned()];
        header.extend(self.strategies.iter().cloned());
        let mut rows = vec![header];
        for m in &self.models {
            let mut row = vec![m.clone()];
            for s in &self.strategies {
                row.push(match self.cells.get(&(m.clone(), s.clone())) {
                    Some(t) => format!("{} ± {}", fmt_score(t.mean), fmt_score(t.std)),
                    None => "-".to_owned(),
                });
            }
            rows.push(row);
        }
        rows
    }

    /// Plot-ready long table: model, strategy, mean, std.
    pub fn table_series(&self) -> Vec<Vec<String>> {
        let mut rows = vec![["model", "strategy", "mean", "std", "trials"]
            .map(str::to_owned)
            .to_vec()];
        for ((m, s), t) in &self.cells {
            rows.push(vec![
                m.clone(),
                s.clone(),
                fmt_score(t.mean),
                fmt_score(t.std),
                t.trials.to_string(),
            ]);
        }
        rows
    }

    /// One series per (model, strategy): a row per difficulty level.
    pub fn strata_series(&self) -> Vec<(CellKey, Vec<Vec<String>>)> {
        self.strata
            .iter()
            .map(|(key, s)| {
                let mut rows = vec![["level", "mean", "std", "trials"].map(str::to_owned).to_vec()];
                for level in Difficulty::ALL {
                    rows.push(match s.get(level) {
                        Some(t) => vec![
                            level.to_string(),
                            fmt_score(t.mean),
                            fmt_score(t.std),
                            t.trials.to_string(),
                        ],
                        None => vec![level.to_string(), "-".into(), "-".into(), "0".into()],
                    });
                }
                (key.clone(), rows)
            })
            .collect()
    }
}
