//! BLEU and keyword-weighted BLEU over code tokens.
//!
//! Both compare a single prediction against a single reference. The n-gram
//! order is `min(4, reference length)` with uniform weights, so that short
//! reference snippets still score 1 against themselves. No smoothing is
//! applied: a zero n-gram precision yields a zero score.

use std::collections::HashMap;

use super::tokenize::tokenize_code;

pub const MAX_ORDER: usize = 4;

/// Unigram weight of keyword tokens in [`weighted_bleu_tokens`]; other tokens weigh 1.
pub const KEYWORD_WEIGHT: f64 = 5.0;

/// BLEU between two snippet sequences, each joined with the canonical separator.
pub fn bleu(pred: &[String], gold: &[String]) -> f64 {
    let pred = join(pred);
    let gold = join(gold);
    bleu_tokens(&tokenize_code(&pred), &tokenize_code(&gold))
}

pub(crate) fn join(snippets: &[String]) -> String {
    snippets.join(" <CODEEND> ")
}

fn ngram_counts<'t, 's>(tokens: &'s [&'t str], n: usize) -> HashMap<&'s [&'t str], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped matches and total predicted n-grams of order `n`.
fn modified_precision(pred: &[&str], gold: &[&str], n: usize) -> (usize, usize) {
    let pred_counts = ngram_counts(pred, n);
    let gold_counts = ngram_counts(gold, n);
    let matched = pred_counts
        .iter()
        .map(|(gram, &c)| c.min(gold_counts.get(gram).copied().unwrap_or(0)))
        .sum();
    (matched, pred.len().saturating_sub(n - 1))
}

fn brevity_penalty(pred_len: usize, gold_len: usize) -> f64 {
    if pred_len >= gold_len {
        1.0
    } else {
        (1.0 - gold_len as f64 / pred_len as f64).exp()
    }
}

/// Shared scaffold: empty conventions, order selection, geometric mean and
/// brevity penalty. `unigram` supplies the order-1 ratio.
fn score(pred: &[&str], gold: &[&str], unigram: impl FnOnce() -> f64) -> f64 {
    match (pred.is_empty(), gold.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let order = MAX_ORDER.min(gold.len());
    let mut log_sum = 0.0;
    let p1 = unigram();
    if p1 <= 0.0 {
        return 0.0;
    }
    log_sum += p1.ln();
    for n in 2..=order {
        let (matched, total) = modified_precision(pred, gold, n);
        if matched == 0 || total == 0 {
            return 0.0;
        }
        log_sum += (matched as f64 / total as f64).ln();
    }
    brevity_penalty(pred.len(), gold.len()) * (log_sum / order as f64).exp()
}

/// Standard BLEU on token sequences.
pub fn bleu_tokens(pred: &[&str], gold: &[&str]) -> f64 {
    score(pred, gold, || {
        let (matched, total) = modified_precision(pred, gold, 1);
        if total == 0 {
            0.0
        } else {
            matched as f64 / total as f64
        }
    })
}

/// Keyword-weighted BLEU on token sequences.
///
/// The unigram term is a weighted match ratio over the reference: each
/// clipped unigram match counts with its token weight, normalized by the
/// weighted reference unigram count. Keywords weigh [`KEYWORD_WEIGHT`].
/// Higher orders and the brevity penalty are as in [`bleu_tokens`].
pub fn weighted_bleu_tokens(pred: &[&str], gold: &[&str], is_keyword: impl Fn(&str) -> bool) -> f64 {
    score(pred, gold, || {
        let weight = |t: &str| if is_keyword(t) { KEYWORD_WEIGHT } else { 1.0 };
        let pred_counts = ngram_counts(pred, 1);
        let gold_counts = ngram_counts(gold, 1);
        let mut matched = 0.0;
        let mut total = 0.0;
        for (gram, &c) in &gold_counts {
            let w = weight(gram[0]);
            total += w * c as f64;
            matched += w * c.min(pred_counts.get(gram).copied().unwrap_or(0)) as f64;
        }
        matched / total
    })
}
