//! Corpus directory layout: a TOML manifest plus one file per script.
//!
//! ```toml
//! gold = "gold.jsonl"          # optional
//! examples = "examples.jsonl"  # optional, worked examples for prompts
//!
//! [[script]]
//! id = "orders_rollup"
//! file = "scripts/orders_rollup.txt"
//! languages = ["python", "sql"] # one per segment, optional
//! difficulty = "medium"         # optional, wins over features
//! [script.features]             # optional
//! source_count = 2
//! has_transformation_chain = true
//! has_aggregation = true
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::prompt::WorkedExample;
use super::{difficulty_level, parse_multilang_script, CorpusError, Difficulty, Features, PipelineScript};
use crate::code_sim::Language;

pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    gold: Option<PathBuf>,
    examples: Option<PathBuf>,
    #[serde(default)]
    script: Vec<ScriptEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptEntry {
    id: String,
    file: PathBuf,
    #[serde(default)]
    languages: Vec<String>,
    difficulty: Option<String>,
    features: Option<Features>,
}

/// A loaded corpus: scripts with their declared metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub root: PathBuf,
    pub scripts: Vec<PipelineScript>,
    pub gold_path: Option<PathBuf>,
    pub examples: Vec<WorkedExample>,
}

impl Corpus {
    /// Loads `manifest.toml` from `dir`, or the given manifest file.
    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let manifest_path = if path.is_dir() {
            path.join(MANIFEST_FILE)
        } else {
            path.to_path_buf()
        };
        let root = manifest_path.parent().unwrap_or(Path::new(".")).to_path_buf();
        let text = std::fs::read_to_string(&manifest_path).map_err(|e| CorpusError::io(&manifest_path, e))?;
        let manifest: ManifestFile = toml::from_str(&text).map_err(|e| CorpusError::Manifest(e.to_string()))?;

        let mut seen = BTreeSet::new();
        let mut scripts = Vec::with_capacity(manifest.script.len());
        for entry in manifest.script {
            if !seen.insert(entry.id.clone()) {
                return Err(CorpusError::Manifest(format!("script `{}` listed twice", entry.id)));
            }
            let file = root.join(&entry.file);
            let raw = std::fs::read_to_string(&file).map_err(|e| CorpusError::io(&file, e))?;
            let mut script = parse_multilang_script(&entry.id, &raw)?;
            if !entry.languages.is_empty() {
                if entry.languages.len() != script.segments.len() {
                    return Err(CorpusError::Manifest(format!(
                        "script `{}` declares {} languages but has {} segments",
                        entry.id,
                        entry.languages.len(),
                        script.segments.len()
                    )));
                }
                for (segment, lang) in script.segments.iter_mut().zip(&entry.languages) {
                    let lang: Language = lang
                        .parse()
                        .map_err(|e| CorpusError::Manifest(format!("script `{}`: {e}", entry.id)))?;
                    segment.language = Some(lang);
                }
            }
            script.declared_features = entry.features;
            script.difficulty = match &entry.difficulty {
                Some(label) => Some(label.parse()?),
                None => entry.features.as_ref().map(|f| difficulty_level(Some(f))).transpose()?,
            };
            scripts.push(script);
        }

        let examples = match &manifest.examples {
            Some(p) => super::prompt::load_examples(&root.join(p))?,
            None => Vec::new(),
        };
        Ok(Self {
            gold_path: manifest.gold.map(|p| root.join(p)),
            root,
            scripts,
            examples,
        })
    }

    pub fn script(&self, id: &str) -> Option<&PipelineScript> {
        self.scripts.iter().find(|s| s.script_id == id)
    }

    /// Declared difficulty labels of every labeled script.
    pub fn difficulty_labels(&self) -> BTreeMap<String, String> {
        self.scripts
            .iter()
            .filter_map(|s| s.difficulty.map(|d| (s.script_id.clone(), d.as_str().to_owned())))
            .collect()
    }

    pub fn difficulty_of(&self, id: &str) -> Option<Difficulty> {
        self.script(id).and_then(|s| s.difficulty)
    }
}
