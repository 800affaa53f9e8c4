//! Unit-cost Levenshtein distance over Unicode scalar values.
//!
//! Strings whose shorter side fits in a machine word go through the
//! bit-parallel recurrence of Hyyrö (2003), one `u64` step per character of
//! the longer string. Longer inputs use the classic two-row table.

use std::cmp::Ordering;

/// Edit distance with unit insert, delete and substitute costs.
pub fn levenshtein(a: &str, b: &str) -> usize {
    if a == b {
        return 0;
    }
    let a_len = a.chars().count();
    let b_len = b.chars().count();
    // pattern = shorter string
    let (pattern, pattern_len, text, text_len) = match a_len.cmp(&b_len) {
        Ordering::Greater => (b, b_len, a, a_len),
        _ => (a, a_len, b, b_len),
    };
    if pattern_len == 0 {
        return text_len;
    }
    if pattern_len <= 64 {
        bit_parallel(pattern, pattern_len, text)
    } else {
        two_row(pattern, text, text_len)
    }
}

/// Similarity ratio `1 - distance / max(len)`, with two empty strings scoring 1.
pub fn normalized_similarity(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / longest as f64
}

/// Per-character match masks for a pattern of at most 64 characters.
struct PatternMasks {
    chars: [char; 64],
    masks: [u64; 64],
    len: usize,
}

impl PatternMasks {
    fn new(pattern: &str) -> Self {
        let mut out = Self {
            chars: ['\0'; 64],
            masks: [0; 64],
            len: 0,
        };
        for (i, c) in pattern.chars().enumerate() {
            let bit = 1u64 << i;
            match out.chars[..out.len].iter().position(|&k| k == c) {
                Some(slot) => out.masks[slot] |= bit,
                None => {
                    out.chars[out.len] = c;
                    out.masks[out.len] = bit;
                    out.len += 1;
                }
            }
        }
        out
    }

    #[inline]
    fn get(&self, c: char) -> u64 {
        self.chars[..self.len]
            .iter()
            .position(|&k| k == c)
            .map_or(0, |slot| self.masks[slot])
    }
}

fn bit_parallel(pattern: &str, m: usize, text: &str) -> usize {
    let peq = PatternMasks::new(pattern);
    let last = 1u64 << (m - 1);
    let mut pv = u64::MAX;
    let mut mv = 0u64;
    let mut score = m;
    for c in text.chars() {
        let eq = peq.get(c);
        let xv = eq | mv;
        let xh = ((eq & pv).wrapping_add(pv) ^ pv) | eq;
        let mut ph = mv | !(xh | pv);
        let mut mh = pv & xh;
        if ph & last != 0 {
            score += 1;
        } else if mh & last != 0 {
            score -= 1;
        }
        // row 0 of the table grows by one per text character
        ph = (ph << 1) | 1;
        mh <<= 1;
        pv = mh | !(xv | ph);
        mv = ph & xv;
    }
    score
}

fn two_row(pattern: &str, text: &str, text_len: usize) -> usize {
    let text: Vec<char> = text.chars().collect();
    let mut prev: Vec<usize> = (0..=text_len).collect();
    let mut cur = vec![0usize; text_len + 1];
    for (i, pc) in pattern.chars().enumerate() {
        cur[0] = i + 1;
        for (j, &tc) in text.iter().enumerate() {
            let substitute = prev[j] + usize::from(pc != tc);
            cur[j + 1] = substitute.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[text_len]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive(a: &[char], b: &[char]) -> usize {
        match (a.split_first(), b.split_first()) {
            (None, _) => b.len(),
            (_, None) => a.len(),
            (Some((x, ar)), Some((y, br))) => {
                if x == y {
                    naive(ar, br)
                } else {
                    1 + naive(ar, br).min(naive(a, br)).min(naive(ar, b))
                }
            }
        }
    }

    #[test]
    fn known_distances() {
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("Customers", "db.Customers"), 3);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("abc", ""), 3);
        assert_eq!(levenshtein("", ""), 0);
        assert_eq!(levenshtein("é", "e"), 1);
    }

    #[test]
    fn both_paths_agree_past_the_word_boundary() {
        let a: String = "ab".repeat(40);
        let b: String = "ba".repeat(41);
        let ac: Vec<char> = a.chars().collect();
        let bc: Vec<char> = b.chars().collect();
        assert_eq!(levenshtein(&a, &b), two_row(&a, &b, bc.len()));
        assert_eq!(two_row(&a, &b, bc.len()), two_row(&b, &a, ac.len()));
        let p = "x".repeat(64);
        let t = format!("{}y", "x".repeat(70));
        assert_eq!(levenshtein(&p, &t), 7);
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(normalized_similarity("Customers", "Customers"), 1.0);
        assert_eq!(normalized_similarity("Customers", "db.Customers"), 0.75);
        assert_eq!(normalized_similarity("a", ""), 0.0);
        assert_eq!(normalized_similarity("", ""), 1.0);
    }

    proptest! {
        #[test]
        fn matches_naive_recursion(a in "[abc]{0,7}", b in "[abc]{0,7}") {
            let ac: Vec<char> = a.chars().collect();
            let bc: Vec<char> = b.chars().collect();
            prop_assert_eq!(levenshtein(&a, &b), naive(&ac, &bc));
        }

        #[test]
        fn paths_agree_on_unicode(a in "\\PC{0,70}", b in "\\PC{0,90}") {
            let (p, t) = if a.chars().count() <= b.chars().count() { (&a, &b) } else { (&b, &a) };
            prop_assert_eq!(levenshtein(&a, &b), two_row(p, t, t.chars().count()));
        }

        #[test]
        fn symmetric(a in "\\PC{0,20}", b in "\\PC{0,20}") {
            prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
        }
    }
}
