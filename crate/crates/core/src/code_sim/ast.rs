//! Structural similarity of code fragments via error-tolerant parse trees.
//!
//! Each fragment is parsed with the tree-sitter grammar of the requested
//! language. Every node with at least one named child contributes one
//! subtree, serialized by node kinds only (leaf text is dropped), and the
//! two subtree multisets are compared with F1.
//!
//! # Threading
//!
//! A [`ParserPool`] holds mutable parser state and must not be shared
//! between workers: give each worker its own pool (for example with
//! `rayon`'s `map_init`). Scores computed with different pools are
//! identical and can be moved freely across threads.

use std::collections::HashMap;
use std::fmt;

use tree_sitter::{Language as Grammar, Node, Parser};

use super::lexicon::Language;
use super::tokenize::tokenize_code;
use crate::lineage::{split_codeend, CODEEND};

/// SQL statements accepted by the grammar as-is; other SQL fragments are
/// parsed as a select-list expression.
const SQL_STATEMENT_STARTS: &[&str] = &[
    "SELECT", "WITH", "INSERT", "UPDATE", "DELETE", "CREATE", "ALTER", "DROP", "MERGE", "SET", "DECLARE", "FROM",
];

/// One parser per candidate language.
pub struct ParserPool {
    sql: Parser,
    python: Parser,
    csharp: Parser,
}

impl fmt::Debug for ParserPool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParserPool").finish_non_exhaustive()
    }
}

impl Default for ParserPool {
    fn default() -> Self {
        Self::new()
    }
}

fn parser_for(grammar: Grammar) -> Parser {
    let mut parser = Parser::new();
    parser
        .set_language(&grammar)
        .expect("bundled grammar matches the tree-sitter ABI");
    parser
}

impl ParserPool {
    pub fn new() -> Self {
        Self {
            sql: parser_for(tree_sitter_sequel::LANGUAGE.into()),
            python: parser_for(tree_sitter_python::LANGUAGE.into()),
            csharp: parser_for(tree_sitter_c_sharp::LANGUAGE.into()),
        }
    }

    fn parser(&mut self, language: Language) -> &mut Parser {
        match language {
            Language::Sql => &mut self.sql,
            Language::Python => &mut self.python,
            Language::CSharp => &mut self.csharp,
        }
    }

    /// Subtree multiset of `text` under `language`. Text holding `<CODEEND>`
    /// separators is parsed one snippet at a time.
    pub fn subtrees(&mut self, text: &str, language: Language) -> SubtreeBag {
        let mut bag = SubtreeBag::default();
        let fragments = if text.contains(CODEEND) {
            split_codeend(text)
        } else if text.trim().is_empty() {
            Vec::new()
        } else {
            vec![text.trim().to_owned()]
        };
        for fragment in &fragments {
            let source = match language {
                Language::Sql if !starts_sql_statement(fragment) => format!("SELECT {fragment}"),
                _ => fragment.clone(),
            };
            let Some(tree) = self.parser(language).parse(&source, None) else {
                continue;
            };
            collect(tree.root_node(), &mut bag);
        }
        bag
    }
}

fn starts_sql_statement(fragment: &str) -> bool {
    tokenize_code(fragment)
        .first()
        .is_some_and(|t| SQL_STATEMENT_STARTS.iter().any(|k| k.eq_ignore_ascii_case(t)))
}

/// Multiset of serialized subtrees.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SubtreeBag {
    counts: HashMap<String, usize>,
    total: usize,
}

impl SubtreeBag {
    /// Number of internal nodes, i.e. subtrees in the bag.
    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn count(&self, serialized: &str) -> usize {
        self.counts.get(serialized).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.counts.iter().map(|(k, v)| (k.as_str(), *v))
    }

    fn insert(&mut self, serialized: String) {
        *self.counts.entry(serialized).or_insert(0) += 1;
        self.total += 1;
    }

    /// Size of the multiset intersection.
    pub fn overlap(&self, other: &SubtreeBag) -> usize {
        let (small, large) = if self.counts.len() <= other.counts.len() {
            (self, other)
        } else {
            (other, self)
        };
        small.counts.iter().map(|(k, &c)| c.min(large.count(k))).sum()
    }
}

fn kind_label(node: Node<'_>) -> String {
    if node.is_missing() {
        format!("MISSING {}", node.kind())
    } else {
        node.kind().to_owned()
    }
}

/// Serializes `node` over its named descendants and records every internal
/// node on the way. Returns the serialization of `node`.
fn collect(node: Node<'_>, bag: &mut SubtreeBag) -> String {
    let mut cursor = node.walk();
    let children: Vec<Node<'_>> = node.named_children(&mut cursor).collect();
    if children.is_empty() {
        return kind_label(node);
    }
    let mut out = String::new();
    out.push('(');
    out.push_str(&kind_label(node));
    for child in children {
        out.push(' ');
        out.push_str(&collect(child, bag));
    }
    out.push(')');
    bag.insert(out.clone());
    out
}

fn normalized(text: &str) -> String {
    tokenize_code(text).join(" ")
}

/// Subtree-multiset F1 between two fragments under one grammar.
///
/// When either side has no internal nodes the score is 1 if the two texts
/// are equal after whitespace normalization and 0 otherwise.
pub fn ast_similarity(pool: &mut ParserPool, pred: &str, gold: &str, language: Language) -> f64 {
    let pred_bag = pool.subtrees(pred, language);
    let gold_bag = pool.subtrees(gold, language);
    bag_similarity(&pred_bag, &gold_bag, || normalized(pred) == normalized(gold))
}

fn bag_similarity(pred: &SubtreeBag, gold: &SubtreeBag, texts_equal: impl FnOnce() -> bool) -> f64 {
    if pred.is_empty() || gold.is_empty() {
        return if texts_equal() { 1.0 } else { 0.0 };
    }
    let overlap = pred.overlap(gold);
    2.0 * overlap as f64 / (pred.len() + gold.len()) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_snippets_score_one() {
        let mut pool = ParserPool::new();
        for (text, lang) in [
            ("SELECT a FROM t", Language::Sql),
            ("df.withColumn(\"a\", F.col(\"a\"))", Language::Python),
            ("var x = items.Where(i => i.Ok).Count();", Language::CSharp),
        ] {
            assert_eq!(ast_similarity(&mut pool, text, text, lang), 1.0);
        }
    }

    #[test]
    fn leaves_are_dropped() {
        let mut pool = ParserPool::new();
        // oracle: both fragments parse to the same kind structure
        let a = pool.subtrees("SUM(a)", Language::Sql);
        let b = pool.subtrees("SUM(b)", Language::Sql);
        assert!(!a.is_empty());
        assert_eq!(a, b);
        assert_eq!(ast_similarity(&mut pool, "SUM(a)", "SUM(b)", Language::Sql), 1.0);
    }

    #[test]
    fn python_call_subtrees_by_hand() {
        let mut pool = ParserPool::new();
        let bag = pool.subtrees("f(x)", Language::Python);
        // module, expression_statement, call, argument_list
        assert_eq!(bag.len(), 4);
        assert_eq!(bag.count("(argument_list identifier)"), 1);
        assert_eq!(bag.count("(call identifier (argument_list identifier))"), 1);
    }

    #[test]
    fn garbage_falls_back_to_text_equality() {
        let empty = SubtreeBag::default();
        assert_eq!(bag_similarity(&empty, &empty, || true), 1.0);
        assert_eq!(bag_similarity(&empty, &empty, || false), 0.0);
        let mut pool = ParserPool::new();
        assert_eq!(ast_similarity(&mut pool, "%%%##", "%%%##", Language::CSharp), 1.0);
        assert_eq!(ast_similarity(&mut pool, "", "", Language::Sql), 1.0);
        assert_eq!(ast_similarity(&mut pool, "", "SUM(x)", Language::Sql), 0.0);
    }

    #[test]
    fn structural_difference_lowers_the_score() {
        let mut pool = ParserPool::new();
        let v = ast_similarity(&mut pool, "a AS b", "SUM(a) AS b", Language::Sql);
        assert!(v > 0.0 && v < 1.0, "{v}");
    }

    #[test]
    fn snippet_sequences_are_parsed_per_snippet() {
        let mut pool = ParserPool::new();
        let joined = pool.subtrees("SUM(a) <CODEEND> b AS c", Language::Sql);
        let first = pool.subtrees("SUM(a)", Language::Sql);
        let second = pool.subtrees("b AS c", Language::Sql);
        assert_eq!(joined.len(), first.len() + second.len());
    }
}
