//! Source-column and source-table matching.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::levenshtein::normalized_similarity;
use crate::weights::{check_weights, WeightError};

/// Exact, case-sensitive set equality of source columns; returns 0 or 1.
pub fn source_schema_score(pred: &BTreeSet<String>, gold: &BTreeSet<String>) -> u8 {
    u8::from(pred == gold)
}

/// F1 over exact string matches. Two empty sets score 1; one empty set scores 0.
pub fn exact_f1(pred: &BTreeSet<String>, gold: &BTreeSet<String>) -> f64 {
    match (pred.is_empty(), gold.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let hits = pred.intersection(gold).count() as f64;
    let precision = hits / pred.len() as f64;
    let recall = hits / gold.len() as f64;
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Levenshtein similarity ratio normalized by the longer string.
pub fn fuzzy_match(a: &str, b: &str) -> f64 {
    normalized_similarity(a, b)
}

/// Mean of fuzzy precision and fuzzy recall, each the average best-match
/// similarity from one set into the other.
pub fn fuzzy_f(pred: &BTreeSet<String>, gold: &BTreeSet<String>) -> f64 {
    match (pred.is_empty(), gold.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    // similarity matrix, rows = pred, cols = gold
    let sims: Vec<Vec<f64>> = pred
        .iter()
        .map(|p| gold.iter().map(|g| fuzzy_match(p, g)).collect())
        .collect();
    let precision = sims
        .iter()
        .map(|row| row.iter().copied().fold(0.0, f64::max))
        .sum::<f64>()
        / pred.len() as f64;
    let recall = (0..gold.len())
        .map(|j| sims.iter().map(|row| row[j]).fold(0.0, f64::max))
        .sum::<f64>()
        / gold.len() as f64;
    0.5 * (precision + recall)
}

/// Mixture weights for the source-table score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableWeights {
    pub w_exact: f64,
    pub w_fuzzy: f64,
}

impl TableWeights {
    pub const DEFAULT: Self = Self {
        w_exact: 0.7,
        w_fuzzy: 0.3,
    };

    pub fn validate(&self) -> Result<(), WeightError> {
        check_weights("table", &[self.w_exact, self.w_fuzzy])
    }
}

impl Default for TableWeights {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableMatchBreakdown {
    pub exact_f1: f64,
    pub fuzzy_f: f64,
    pub combined: f64,
}

/// Source-table score: `w_exact * F1 + w_fuzzy * F_u`.
pub fn table_score(
    pred: &BTreeSet<String>,
    gold: &BTreeSet<String>,
    weights: TableWeights,
) -> Result<TableMatchBreakdown, WeightError> {
    weights.validate()?;
    let exact = exact_f1(pred, gold);
    let fuzzy = fuzzy_f(pred, gold);
    Ok(TableMatchBreakdown {
        exact_f1: exact,
        fuzzy_f: fuzzy,
        combined: weights.w_exact * exact + weights.w_fuzzy * fuzzy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    /// Brute-force F1 by counting every (pred, gold) pair.
    fn f1_by_counting(pred: &BTreeSet<String>, gold: &BTreeSet<String>) -> f64 {
        let mut tp = 0usize;
        for p in pred {
            for g in gold {
                if p == g {
                    tp += 1;
                }
            }
        }
        let fp = pred.len() - tp;
        let fn_ = gold.len() - tp;
        if pred.is_empty() && gold.is_empty() {
            1.0
        } else if tp == 0 {
            0.0
        } else {
            2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
        }
    }

    #[test]
    fn source_schema_examples() {
        assert_eq!(source_schema_score(&set(&["a", "b"]), &set(&["b", "a"])), 1);
        assert_eq!(source_schema_score(&set(&["a", "b"]), &set(&["a"])), 0);
        assert_eq!(source_schema_score(&set(&["Amount"]), &set(&["amount"])), 0);
        assert_eq!(source_schema_score(&set(&[]), &set(&[])), 1);
    }

    #[test]
    fn exact_f1_examples() {
        assert_eq!(exact_f1(&set(&["t1", "t2"]), &set(&["t1", "t2"])), 1.0);
        let v = exact_f1(&set(&["t1"]), &set(&["t1", "t2"]));
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
        assert!((v - f1_by_counting(&set(&["t1"]), &set(&["t1", "t2"]))).abs() < 1e-12);
        assert_eq!(exact_f1(&set(&[]), &set(&[])), 1.0);
        assert_eq!(exact_f1(&set(&[]), &set(&["t"])), 0.0);
        assert_eq!(exact_f1(&set(&["x"]), &set(&["t"])), 0.0);
    }

    #[test]
    fn fuzzy_examples() {
        assert_eq!(fuzzy_match("Customers", "Customers"), 1.0);
        assert!((fuzzy_match("Customers", "db.Customers") - 0.75).abs() < 1e-12);
        assert_eq!(fuzzy_match("a", ""), 0.0);
        assert_eq!(fuzzy_f(&set(&["t"]), &set(&["t"])), 1.0);
        let v = fuzzy_f(&set(&["Customers"]), &set(&["db.Customers"]));
        assert!((v - 0.75).abs() < 1e-9);
        assert_eq!(fuzzy_f(&set(&[]), &set(&["t"])), 0.0);
        assert_eq!(fuzzy_f(&set(&[]), &set(&[])), 1.0);
    }

    #[test]
    fn fuzzy_f_hand_expanded_asymmetric_case() {
        // pred {abc, xyz} vs gold {abd}: precision = (2/3 + 0)/2, recall = 2/3
        let v = fuzzy_f(&set(&["abc", "xyz"]), &set(&["abd"]));
        assert!((v - 0.5 * (1.0 / 3.0 + 2.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn table_score_examples() {
        let s = set(&["a.b", "c"]);
        let b = table_score(&s, &s, TableWeights::DEFAULT).unwrap();
        assert_eq!(b.combined, 1.0);

        let b = table_score(&set(&["Customers"]), &set(&["db.Customers"]), TableWeights::DEFAULT).unwrap();
        assert_eq!(b.exact_f1, 0.0);
        assert!((b.combined - 0.225).abs() < 1e-12);

        let bad = TableWeights {
            w_exact: 0.6,
            w_fuzzy: 0.3,
        };
        assert!(table_score(&s, &s, bad).is_err());
    }

    fn small_set() -> impl Strategy<Value = BTreeSet<String>> {
        prop::collection::btree_set("[a-d.]{0,6}", 0..4)
    }

    proptest! {
        #[test]
        fn scores_are_bounded_and_symmetric(p in small_set(), g in small_set()) {
            let f1 = exact_f1(&p, &g);
            let fu = fuzzy_f(&p, &g);
            prop_assert!((0.0..=1.0).contains(&f1));
            prop_assert!((0.0..=1.0).contains(&fu));
            prop_assert!((fu - fuzzy_f(&g, &p)).abs() < 1e-12);
            prop_assert!((f1 - f1_by_counting(&p, &g)).abs() < 1e-12);
            prop_assert_eq!(f1 == 1.0, p == g);
            if f1 == 1.0 {
                prop_assert_eq!(fu, 1.0);
            }
            let combined = table_score(&p, &g, TableWeights::DEFAULT).unwrap().combined;
            prop_assert!((0.0..=1.0 + 1e-12).contains(&combined));
        }

        #[test]
        fn fuzzy_match_is_symmetric(a in "\\PC{0,12}", b in "\\PC{0,12}") {
            prop_assert_eq!(fuzzy_match(&a, &b), fuzzy_match(&b, &a));
        }

        #[test]
        fn self_match(x in small_set()) {
            prop_assert_eq!(source_schema_score(&x, &x), 1);
        }
    }
}
