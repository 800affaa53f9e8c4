//! Transformation and aggregation scoring.
//!
//! A snippet field is scored as a whole: its snippets are joined with the
//! canonical separator and compared with BLEU, keyword-weighted BLEU and a
//! language-attributed mixture of per-language AST similarities.

pub mod ast;
pub mod bleu;
pub mod lexicon;
pub mod tokenize;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::weights::{check_weights, WeightError};
pub use ast::{ast_similarity, ParserPool};
pub use bleu::{bleu, bleu_tokens, weighted_bleu_tokens};
pub use lexicon::{language_weights, Language, LanguageLexicon, LexiconSet};
pub use tokenize::tokenize_code;

/// Keyword-weighted BLEU between two snippet sequences.
pub fn weighted_bleu(pred: &[String], gold: &[String], lexicons: &LexiconSet) -> f64 {
    let pred = bleu::join(pred);
    let gold = bleu::join(gold);
    weighted_bleu_tokens(&tokenize_code(&pred), &tokenize_code(&gold), |t| lexicons.is_keyword(t))
}

/// Language-attributed AST similarity.
///
/// Weights come from keyword hits in `gold`; languages with zero weight are
/// not parsed.
pub fn multi_ast(pool: &mut ParserPool, pred: &str, gold: &str, lexicons: &LexiconSet) -> f64 {
    multi_ast_weighted(pool, pred, gold, &language_weights(gold, lexicons))
}

fn multi_ast_weighted(pool: &mut ParserPool, pred: &str, gold: &str, weights: &BTreeMap<Language, f64>) -> f64 {
    weights
        .iter()
        .filter(|(_, w)| **w > 0.0)
        .map(|(&lang, w)| w * ast_similarity(pool, pred, gold, lang))
        .sum()
}

/// Mixture weights of a snippet-field score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeWeights {
    pub w_bleu: f64,
    pub w_weighted_bleu: f64,
    pub w_ast: f64,
}

impl CodeWeights {
    pub const DEFAULT: Self = Self {
        w_bleu: 0.5,
        w_weighted_bleu: 0.3,
        w_ast: 0.2,
    };

    pub fn validate(&self, name: &'static str) -> Result<(), WeightError> {
        check_weights(name, &[self.w_bleu, self.w_weighted_bleu, self.w_ast])
    }

    pub fn combine(&self, bleu: f64, weighted_bleu: f64, ast_multi: f64) -> f64 {
        self.w_bleu * bleu + self.w_weighted_bleu * weighted_bleu + self.w_ast * ast_multi
    }
}

impl Default for CodeWeights {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeScoreBreakdown {
    pub bleu: f64,
    pub weighted_bleu: f64,
    pub ast_multi: f64,
    pub language_weights: BTreeMap<Language, f64>,
    pub combined: f64,
}

/// Scores one snippet field (transformation or aggregation).
pub fn component_code_score(
    pool: &mut ParserPool,
    pred: &[String],
    gold: &[String],
    weights: CodeWeights,
    lexicons: &LexiconSet,
) -> Result<CodeScoreBreakdown, WeightError> {
    weights.validate("code")?;
    let pred_text = bleu::join(pred);
    let gold_text = bleu::join(gold);
    let pred_tokens = tokenize_code(&pred_text);
    let gold_tokens = tokenize_code(&gold_text);
    let bleu = bleu_tokens(&pred_tokens, &gold_tokens);
    let weighted_bleu = weighted_bleu_tokens(&pred_tokens, &gold_tokens, |t| lexicons.is_keyword(t));
    let language_weights = language_weights(&gold_text, lexicons);
    let ast_multi = multi_ast_weighted(pool, &pred_text, &gold_text, &language_weights);
    Ok(CodeScoreBreakdown {
        bleu,
        weighted_bleu,
        ast_multi,
        combined: weights.combine(bleu, weighted_bleu, ast_multi),
        language_weights,
    })
}
