//! Code tokenizer shared by BLEU, weighted BLEU and language attribution.
//!
//! Whitespace separates tokens. Identifiers, numbers and quoted literals
//! stay whole; every other character is a token of its own. The snippet
//! separator `<CODEEND>` is kept as a single token.

use crate::lineage::CODEEND;

/// Splits `text` into tokens. Case is preserved.
pub fn tokenize_code(text: &str) -> Vec<&str> {
    let mut tokens = Vec::new();
    let mut rest = text;
    while let Some(c) = rest.chars().next() {
        if c.is_whitespace() {
            rest = &rest[c.len_utf8()..];
            continue;
        }
        let len = if rest.starts_with(CODEEND) {
            CODEEND.len()
        } else if matches!(c, '"' | '\'' | '`') {
            quoted_len(rest, c)
        } else if c.is_alphabetic() || c == '_' {
            word_len(rest, false)
        } else if c.is_ascii_digit() {
            word_len(rest, true)
        } else {
            c.len_utf8()
        };
        tokens.push(&rest[..len]);
        rest = &rest[len..];
    }
    tokens
}

fn word_len(s: &str, numeric: bool) -> usize {
    let mut chars = s.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        let continues = c.is_alphanumeric()
            || c == '_'
            || (numeric && c == '.' && chars.peek().is_some_and(|(_, n)| n.is_ascii_digit()));
        if !continues {
            return i;
        }
    }
    s.len()
}

/// Length of a literal opened by `quote`, including both quotes. Backslash
/// escapes the next character and a doubled quote stays inside the literal.
/// An unterminated literal runs to the end of the text.
fn quoted_len(s: &str, quote: char) -> usize {
    let mut chars = s.char_indices().skip(1).peekable();
    while let Some((i, c)) = chars.next() {
        if c == '\\' {
            chars.next();
        } else if c == quote {
            if chars.peek().is_some_and(|&(_, n)| n == quote) {
                chars.next();
            } else {
                return i + c.len_utf8();
            }
        }
    }
    s.len()
}
