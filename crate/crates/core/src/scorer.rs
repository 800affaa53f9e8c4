//! Composite lineage score and its script, corpus and trial aggregates.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code_sim::{component_code_score, LexiconSet, ParserPool};
use crate::config::{ConfigError, EvaluationConfig};
use crate::corpus::Difficulty;
use crate::lineage::{LineageTask, SchemaLineage};
use crate::response::{ModelResponse, ResponseMode};
use crate::set_match::{source_schema_score, table_score};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AggregateError {
    #[error("script has no scored records")]
    EmptyScript,
    #[error("records from different scripts passed as one script: `{0}` and `{1}`")]
    MixedScripts(String, String),
    #[error("corpus has no scripts")]
    EmptyCorpus,
    #[error("script `{0}` has no valid difficulty label")]
    UnlabeledScript(String),
    #[error("no trials to summarize")]
    NoTrials,
}

/// Per-record component scores and the gated composite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredRecord {
    pub task: LineageTask,
    pub m_fmt: u8,
    pub m_src: u8,
    pub m_tbl: f64,
    pub m_trf: f64,
    pub m_agg: f64,
    pub slice: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

/// Gated composite of the five components.
pub fn composite(config: &EvaluationConfig, m_fmt: u8, m_src: u8, m_tbl: f64, m_trf: f64, m_agg: f64) -> f64 {
    let w = &config.composite;
    let inner = w.omega_tbl * m_tbl + w.omega_trf * m_trf + w.omega_agg * m_agg;
    f64::from(m_fmt) * f64::from(m_src) * inner
}

/// A validated config together with its loaded lexicons.
#[derive(Debug, Clone)]
pub struct Scorer {
    config: EvaluationConfig,
    lexicons: LexiconSet,
}

impl Scorer {
    pub fn new(config: EvaluationConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let lexicons = match &config.lexicons {
            Some(path) => LexiconSet::load(path)?,
            None => LexiconSet::default(),
        };
        Ok(Self { config, lexicons })
    }

    pub fn with_lexicons(config: EvaluationConfig, lexicons: LexiconSet) -> Result<Self, ConfigError> {
        config.validate()?;
        Ok(Self { config, lexicons })
    }

    pub fn config(&self) -> &EvaluationConfig {
        &self.config
    }

    pub fn lexicons(&self) -> &LexiconSet {
        &self.lexicons
    }

    pub fn mode(&self) -> ResponseMode {
        self.config.mode
    }

    /// Parses and scores one raw response.
    pub fn score_raw(&self, pool: &mut ParserPool, task: LineageTask, raw: &str, gold: &SchemaLineage) -> ScoredRecord {
        let response = ModelResponse::parse(raw, self.config.mode, self.config.dict_syntax);
        self.slice_score(pool, task, &response, gold)
    }

    /// Scores a parsed response against its gold lineage.
    ///
    /// Components are computed even when the format gate fails, from
    /// whatever lineage the answer block still yields. With no recoverable
    /// lineage the components are reported as 0.
    pub fn slice_score(
        &self,
        pool: &mut ParserPool,
        task: LineageTask,
        response: &ModelResponse,
        gold: &SchemaLineage,
    ) -> ScoredRecord {
        let mut diagnostics = Vec::new();
        if let Some(failure) = &response.failure {
            diagnostics.push(format!("format: {failure}"));
        }
        let Some(pred) = response.diagnostic_lineage(self.config.dict_syntax) else {
            diagnostics.push("no recoverable lineage; components reported as 0".to_owned());
            return ScoredRecord {
                task,
                m_fmt: response.format_ok,
                m_src: 0,
                m_tbl: 0.0,
                m_trf: 0.0,
                m_agg: 0.0,
                slice: 0.0,
                diagnostics,
            };
        };
        let m_fmt = response.format_ok;
        let m_src = source_schema_score(pred.source_schema(), gold.source_schema());
        // weights were validated when the scorer was built
        let m_tbl = table_score(pred.source_table(), gold.source_table(), self.config.table)
            .expect("validated weights")
            .combined;
        let m_trf = component_code_score(
            pool,
            pred.transformation(),
            gold.transformation(),
            self.config.transformation,
            &self.lexicons,
        )
        .expect("validated weights")
        .combined;
        let m_agg = component_code_score(
            pool,
            pred.aggregation(),
            gold.aggregation(),
            self.config.aggregation,
            &self.lexicons,
        )
        .expect("validated weights")
        .combined;
        if m_src == 0 {
            diagnostics.push("source columns differ from gold".to_owned());
        }
        ScoredRecord {
            task,
            m_fmt,
            m_src,
            m_tbl,
            m_trf,
            m_agg,
            slice: composite(&self.config, m_fmt, m_src, m_tbl, m_trf, m_agg),
            diagnostics,
        }
    }
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Mean record score of one script.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScriptScore {
    pub score: f64,
    pub schema_count: usize,
}

pub fn script_score(records: &[ScoredRecord]) -> Result<ScriptScore, AggregateError> {
    let first = records.first().ok_or(AggregateError::EmptyScript)?;
    if let Some(other) = records.iter().find(|r| r.task.script_id != first.task.script_id) {
        return Err(AggregateError::MixedScripts(
            first.task.script_id.clone(),
            other.task.script_id.clone(),
        ));
    }
    Ok(ScriptScore {
        score: mean(records.iter().map(|r| r.slice)).expect("non-empty"),
        schema_count: records.len(),
    })
}

/// Groups records by script and scores each script.
pub fn script_scores(records: &[ScoredRecord]) -> BTreeMap<String, ScriptScore> {
    let mut groups: BTreeMap<&str, Vec<ScoredRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(&r.task.script_id).or_default().push(r.clone());
    }
    groups
        .into_iter()
        .map(|(id, recs)| (id.to_owned(), script_score(&recs).expect("grouped by script")))
        .collect()
}

/// Unweighted mean over scripts.
pub fn corpus_score(script_scores: &[f64]) -> Result<f64, AggregateError> {
    mean(script_scores.iter().copied()).ok_or(AggregateError::EmptyCorpus)
}

/// Mean script score per difficulty level; levels without scripts are absent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Strata {
    pub easy: Option<f64>,
    pub medium: Option<f64>,
    pub hard: Option<f64>,
}

impl Strata {
    pub fn get(&self, level: Difficulty) -> Option<f64> {
        match level {
            Difficulty::Easy => self.easy,
            Difficulty::Medium => self.medium,
            Difficulty::Hard => self.hard,
        }
    }
}

/// Stratifies script scores by difficulty label (`easy`, `medium`, `hard`).
pub fn stratify(scores: &BTreeMap<String, f64>, labels: &BTreeMap<String, String>) -> Result<Strata, AggregateError> {
    let mut buckets: BTreeMap<Difficulty, Vec<f64>> = BTreeMap::new();
    for (script, &score) in scores {
        let level = labels
            .get(script)
            .and_then(|l| l.parse::<Difficulty>().ok())
            .ok_or_else(|| AggregateError::UnlabeledScript(script.clone()))?;
        buckets.entry(level).or_default().push(score);
    }
    let level_mean = |level| buckets.get(&level).and_then(|v| mean(v.iter().copied()));
    Ok(Strata {
        easy: level_mean(Difficulty::Easy),
        medium: level_mean(Difficulty::Medium),
        hard: level_mean(Difficulty::Hard),
    })
}

/// Mean and population standard deviation across trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub mean: f64,
    pub std: f64,
    pub trials: usize,
}

pub fn trial_stats(values: &[f64]) -> Result<TrialStats, AggregateError> {
    let m = mean(values.iter().copied()).ok_or(AggregateError::NoTrials)?;
    let var = mean(values.iter().map(|v| (v - m) * (v - m))).expect("non-empty");
    Ok(TrialStats {
        mean: m,
        std: var.sqrt(),
        trials: values.len(),
    })
}
