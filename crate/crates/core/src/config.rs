//! Evaluation configuration: metric weights, response mode and lexicons.
//!
//! The file format is TOML. Every section and key is required; unknown keys
//! are rejected so that a typo cannot silently fall back to a default.
//!
//! ```toml
//! mode = "answer-only"        # or "reasoning"
//! dict_syntax = "strict"      # or "lenient"
//! # lexicons = "lexicons.toml" # optional, relative to this file
//!
//! [table]
//! w_exact = 0.7
//! w_fuzzy = 0.3
//!
//! [transformation]
//! w_bleu = 0.5
//! w_weighted_bleu = 0.3
//! w_ast = 0.2
//!
//! [aggregation]
//! w_bleu = 0.5
//! w_weighted_bleu = 0.3
//! w_ast = 0.2
//!
//! [composite]
//! omega_tbl = 0.4
//! omega_trf = 0.4
//! omega_agg = 0.2
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code_sim::lexicon::LexiconError;
use crate::code_sim::CodeWeights;
use crate::lineage::DictSyntax;
use crate::response::ResponseMode;
use crate::set_match::TableWeights;
use crate::weights::{check_weights, WeightError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Weights(#[from] WeightError),
    #[error("invalid config lexicons: {0}")]
    Lexicons(#[from] LexiconError),
}

/// Outer weights of the composite score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositeWeights {
    pub omega_tbl: f64,
    pub omega_trf: f64,
    pub omega_agg: f64,
}

impl CompositeWeights {
    pub const DEFAULT: Self = Self {
        omega_tbl: 0.4,
        omega_trf: 0.4,
        omega_agg: 0.2,
    };

    pub fn validate(&self) -> Result<(), WeightError> {
        check_weights("composite", &[self.omega_tbl, self.omega_trf, self.omega_agg])
    }
}

impl Default for CompositeWeights {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationConfig {
    pub mode: ResponseMode,
    pub dict_syntax: DictSyntax,
    /// Keyword lexicon file; the bundled lexicons are used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lexicons: Option<PathBuf>,
    pub table: TableWeights,
    pub transformation: CodeWeights,
    pub aggregation: CodeWeights,
    pub composite: CompositeWeights,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            mode: ResponseMode::AnswerOnly,
            dict_syntax: DictSyntax::Strict,
            lexicons: None,
            table: TableWeights::DEFAULT,
            transformation: CodeWeights::DEFAULT,
            aggregation: CodeWeights::DEFAULT,
            composite: CompositeWeights::DEFAULT,
        }
    }
}

impl EvaluationConfig {
    /// Parses and validates a config document. A relative lexicon path is
    /// kept as written.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Loads a config file; a relative lexicon path is resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut config = Self::from_toml_str(&text)?;
        if let (Some(lexicons), Some(dir)) = (&config.lexicons, path.parent()) {
            if lexicons.is_relative() {
                config.lexicons = Some(dir.join(lexicons));
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), WeightError> {
        self.table.validate()?;
        self.transformation.validate("transformation")?;
        self.aggregation.validate("aggregation")?;
        self.composite.validate()
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    /// True when both configs score identically, ignoring where lexicons live.
    pub fn same_weights(&self, other: &Self) -> bool {
        self.table == other.table
            && self.transformation == other.transformation
            && self.aggregation == other.aggregation
            && self.composite == other.composite
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SHIPPED: &str = r#"
mode = "answer-only"
dict_syntax = "strict"

[table]
w_exact = 0.7
w_fuzzy = 0.3

[transformation]
w_bleu = 0.5
w_weighted_bleu = 0.3
w_ast = 0.2

[aggregation]
w_bleu = 0.5
w_weighted_bleu = 0.3
w_ast = 0.2

[composite]
omega_tbl = 0.4
omega_trf = 0.4
omega_agg = 0.2
"#;

    #[test]
    fn shipped_values_equal_defaults() {
        assert_eq!(
            EvaluationConfig::from_toml_str(SHIPPED).unwrap(),
            EvaluationConfig::default()
        );
        let round = EvaluationConfig::from_toml_str(&EvaluationConfig::default().to_toml_string()).unwrap();
        assert_eq!(round, EvaluationConfig::default());
    }

    #[test]
    fn missing_key_is_named() {
        let text = SHIPPED.replace("omega_agg = 0.2\n", "");
        let err = EvaluationConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains("omega_agg"), "{err}");
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = SHIPPED.replace("w_ast = 0.2\n", "w_ast = 0.2\nw_tree = 0.0\n");
        assert!(EvaluationConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn off_by_more_than_tolerance_is_rejected() {
        let text = SHIPPED.replace("omega_agg = 0.2", "omega_agg = 0.200000002");
        assert!(matches!(
            EvaluationConfig::from_toml_str(&text),
            Err(ConfigError::Weights(WeightError::BadSum { name: "composite", .. }))
        ));
        let text = SHIPPED.replace("omega_agg = 0.2", "omega_agg = 0.2000000000001");
        assert!(EvaluationConfig::from_toml_str(&text).is_ok());
    }
}
