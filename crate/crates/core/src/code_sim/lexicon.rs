//! Candidate languages and their keyword lexicons.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::tokenize::tokenize_code;

const DEFAULT_LEXICONS: &str = include_str!("../../lexicons/default.toml");

/// Languages with a grammar behind [`super::ast::ParserPool`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Sql,
    Python,
    #[serde(rename = "csharp")]
    CSharp,
}

impl Language {
    pub const ALL: [Language; 3] = [Language::Sql, Language::Python, Language::CSharp];

    pub fn as_str(self) -> &'static str {
        match self {
            Language::Sql => "sql",
            Language::Python => "python",
            Language::CSharp => "csharp",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unsupported language `{0}` (expected sql, python or csharp)")]
pub struct UnsupportedLanguage(pub String);

impl FromStr for Language {
    type Err = UnsupportedLanguage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sql" | "tsql" | "sparksql" => Ok(Language::Sql),
            "python" | "py" | "pyspark" => Ok(Language::Python),
            "csharp" | "c#" | "cs" => Ok(Language::CSharp),
            _ => Err(UnsupportedLanguage(s.to_owned())),
        }
    }
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("reading lexicon file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing lexicon file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Language(#[from] UnsupportedLanguage),
    #[error("language `{0}` is defined more than once")]
    Duplicate(Language),
    #[error("language `{0}` has an empty keyword list")]
    Empty(Language),
    #[error("lexicon file defines no languages")]
    NoLanguages,
}

/// Keywords that signal one language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LanguageLexicon {
    language: Language,
    case_sensitive: bool,
    // lowercased when not case-sensitive
    keywords: HashSet<String>,
}

impl LanguageLexicon {
    pub fn new<I, S>(language: Language, case_sensitive: bool, keywords: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let keywords: HashSet<String> = keywords
            .into_iter()
            .map(|k| {
                let k = k.as_ref().trim();
                if case_sensitive {
                    k.to_owned()
                } else {
                    k.to_lowercase()
                }
            })
            .filter(|k| !k.is_empty())
            .collect();
        if keywords.is_empty() {
            return Err(LexiconError::Empty(language));
        }
        Ok(Self {
            language,
            case_sensitive,
            keywords,
        })
    }

    pub fn language(&self) -> Language {
        self.language
    }

    pub fn case_sensitive(&self) -> bool {
        self.case_sensitive
    }

    pub fn contains(&self, token: &str) -> bool {
        if self.case_sensitive {
            self.keywords.contains(token)
        } else {
            self.keywords.contains(&token.to_lowercase())
        }
    }

    pub fn keywords(&self) -> impl Iterator<Item = &str> {
        self.keywords.iter().map(String::as_str)
    }
}

/// The candidate language set with one lexicon per language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconSet {
    lexicons: Vec<LanguageLexicon>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LexiconFile {
    language: Vec<LexiconEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LexiconEntry {
    name: String,
    case_sensitive: bool,
    keywords: Vec<String>,
}

impl LexiconSet {
    pub fn new(mut lexicons: Vec<LanguageLexicon>) -> Result<Self, LexiconError> {
        if lexicons.is_empty() {
            return Err(LexiconError::NoLanguages);
        }
        lexicons.sort_by_key(|l| l.language);
        if let Some(w) = lexicons.windows(2).find(|w| w[0].language == w[1].language) {
            return Err(LexiconError::Duplicate(w[0].language));
        }
        Ok(Self { lexicons })
    }

    pub fn from_toml_str(text: &str) -> Result<Self, LexiconError> {
        let file: LexiconFile = toml::from_str(text)?;
        let lexicons = file
            .language
            .into_iter()
            .map(|entry| LanguageLexicon::new(entry.name.parse()?, entry.case_sensitive, entry.keywords))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(lexicons)
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn languages(&self) -> impl Iterator<Item = Language> + '_ {
        self.lexicons.iter().map(|l| l.language)
    }

    pub fn lexicons(&self) -> &[LanguageLexicon] {
        &self.lexicons
    }

    /// True when `token` is a keyword of any candidate language.
    pub fn is_keyword(&self, token: &str) -> bool {
        self.lexicons.iter().any(|l| l.contains(token))
    }

    /// Keyword hits per language over `tokens`. A token listed by several
    /// lexicons counts once for each of them.
    pub fn hits<'a>(&self, tokens: impl IntoIterator<Item = &'a str>) -> BTreeMap<Language, usize> {
        let mut counts: BTreeMap<Language, usize> = self.languages().map(|l| (l, 0)).collect();
        for token in tokens {
            for lexicon in &self.lexicons {
                if lexicon.contains(token) {
                    *counts.entry(lexicon.language).or_default() += 1;
                }
            }
        }
        counts
    }
}

impl Default for LexiconSet {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_LEXICONS).expect("bundled lexicons are valid")
    }
}

/// Share of keyword hits per language in `text`.
///
/// Falls back to uniform weights over the candidate set when `text` contains
/// no keywords at all. The weights always sum to one.
pub fn language_weights(text: &str, lexicons: &LexiconSet) -> BTreeMap<Language, f64> {
    let hits = lexicons.hits(tokenize_code(text));
    let total: usize = hits.values().sum();
    if total == 0 {
        let uniform = 1.0 / hits.len() as f64;
        return hits.into_keys().map(|l| (l, uniform)).collect();
    }
    hits.into_iter().map(|(l, n)| (l, n as f64 / total as f64)).collect()
}
