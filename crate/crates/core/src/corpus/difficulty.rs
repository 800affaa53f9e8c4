//! Script difficulty from three complexity factors.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{CorpusError, PipelineScript};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

impl Difficulty {
    pub const ALL: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Medium, Difficulty::Hard];

    pub fn as_str(self) -> &'static str {
        match self {
            Difficulty::Easy => "easy",
            Difficulty::Medium => "medium",
            Difficulty::Hard => "hard",
        }
    }

    /// Level of a 0..=3 factor score.
    pub fn from_score(score: u8) -> Difficulty {
        match score {
            0 | 1 => Difficulty::Easy,
            2 => Difficulty::Medium,
            _ => Difficulty::Hard,
        }
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Difficulty {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "easy" => Ok(Difficulty::Easy),
            "medium" => Ok(Difficulty::Medium),
            "hard" => Ok(Difficulty::Hard),
            _ => Err(CorpusError::UnknownDifficulty(s.to_owned())),
        }
    }
}

/// The three complexity factors of a script.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Features {
    pub source_count: u32,
    pub has_transformation_chain: bool,
    pub has_aggregation: bool,
}

impl Features {
    /// Number of factors present, 0..=3.
    pub fn score(&self) -> u8 {
        u8::from(self.source_count >= 3) + u8::from(self.has_transformation_chain) + u8::from(self.has_aggregation)
    }
}

pub fn difficulty_level(features: Option<&Features>) -> Result<Difficulty, CorpusError> {
    features
        .map(|f| Difficulty::from_score(f.score()))
        .ok_or(CorpusError::MissingFeatures)
}

static PY_IMPORT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*(from\s+\S+\s+)?import\s").unwrap());
static PY_READ: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"(?:\.read\b[\w.]*|\bread_\w+|\.table)\s*\(\s*['"]([^'"]+)['"]"#).unwrap());
static SQL_SOURCE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(?:from|join)\s+([A-Za-z_\[`][\w.\[\]`]*)").unwrap());
static SQL_CTE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)(?:\bwith|,)\s*([A-Za-z_]\w*)\s+as\s*\(").unwrap());
static SQL_SUBQUERY: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\b(?:from|join)\s*\(\s*select\b").unwrap());
static ASSIGNMENT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(?:var\s+|val\s+)?([A-Za-z_]\w*)\s*=[^=](.*)$").unwrap());
static IDENT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[A-Za-z_]\w*").unwrap());
static AGGREGATE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)\b(?:sum|count|avg|mean|min|max|stddev|variance|collect_list|collect_set|approx_count_distinct)\s*\(|\bgroup\s+by\b|\.(?:agg|groupby|pivot)\s*\(",
    )
    .unwrap()
});

/// Advisory factor scan of a script.
///
/// Sources are the distinct read paths and `FROM`/`JOIN` relations of a
/// segment (CTE names excluded), maximized over segments. A chain is an
/// assignment derived from a variable that was itself derived from another
/// assigned variable, a CTE, or a subquery in `FROM`. Aggregation is any
/// aggregate call, `GROUP BY`, `agg`, `groupBy` or `pivot`.
pub fn detect_features(script: &PipelineScript) -> Features {
    let mut source_count = 0;
    let mut chain = false;
    let mut aggregation = false;
    for segment in &script.segments {
        let code: String = segment
            .code
            .lines()
            .filter(|l| !PY_IMPORT.is_match(l) && !l.trim_start().starts_with('#') && !l.trim_start().starts_with("--"))
            .collect::<Vec<_>>()
            .join("\n");
        let ctes: BTreeSet<String> = SQL_CTE.captures_iter(&code).map(|c| c[1].to_lowercase()).collect();
        let mut sources: BTreeSet<String> = PY_READ.captures_iter(&code).map(|c| c[1].to_owned()).collect();
        sources.extend(
            SQL_SOURCE
                .captures_iter(&code)
                .map(|c| c[1].to_lowercase())
                .filter(|name| !ctes.contains(name)),
        );
        source_count = source_count.max(sources.len() as u32);
        chain |= !ctes.is_empty() || SQL_SUBQUERY.is_match(&code) || assignment_depth(&code) >= 2;
        aggregation |= AGGREGATE.is_match(&code);
    }
    Features {
        source_count,
        has_transformation_chain: chain,
        has_aggregation: aggregation,
    }
}

/// Longest derivation path through variable assignments.
fn assignment_depth(code: &str) -> u32 {
    let mut depth: HashMap<&str, u32> = HashMap::new();
    let mut deepest = 0;
    for line in code.lines() {
        let Some(c) = ASSIGNMENT.captures(line) else {
            continue;
        };
        let target = c.get(1).unwrap().as_str();
        let rhs = c.get(2).unwrap().as_str();
        let d = IDENT
            .find_iter(rhs)
            .filter(|m| m.as_str() != target)
            .filter_map(|m| depth.get(m.as_str()))
            .map(|d| d + 1)
            .max()
            .unwrap_or(0);
        deepest = deepest.max(d);
        depth.insert(target, d);
    }
    deepest
}
