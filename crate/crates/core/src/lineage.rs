//! Schema lineage records and their canonical text form.
//!
//! A lineage traces one output column back to its origins through four
//! fields: the source columns, the source tables, the ordered transformation
//! snippets and the ordered aggregation snippets. On the wire it is a flat
//! key-value object whose values are all strings:
//!
//! ```text
//! {"source_schema":"amount, customer_id","source_table":"raw.tx","transformation":"SUM(amount) AS Total","aggregation":"SUM() GROUP BY customer_id"}
//! ```
//!
//! Source columns are comma separated, source tables are separated by `;`
//! (commas are accepted on input), and snippets are separated by the literal
//! `<CODEEND>` token.

use std::collections::BTreeSet;
use std::fmt;

use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Literal separator between snippets in the transformation and aggregation fields.
pub const CODEEND: &str = "<CODEEND>";

pub const KEY_SOURCE_SCHEMA: &str = "source_schema";
pub const KEY_SOURCE_TABLE: &str = "source_table";
pub const KEY_TRANSFORMATION: &str = "transformation";
pub const KEY_AGGREGATION: &str = "aggregation";

/// The four required keys, in canonical order.
pub const LINEAGE_KEYS: [&str; 4] = [KEY_SOURCE_SCHEMA, KEY_SOURCE_TABLE, KEY_TRANSFORMATION, KEY_AGGREGATION];

const SNIPPET_JOINER: &str = " <CODEEND> ";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LineageError {
    #[error("malformed lineage dictionary: {0}")]
    MalformedDict(String),
    #[error("lineage key set mismatch: {0}")]
    KeySetMismatch(String),
    #[error("invalid element in `{field}`: {reason}")]
    InvalidElement { field: &'static str, reason: String },
}

/// One target column of one pipeline script.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LineageTask {
    pub script_id: String,
    pub target_schema: String,
}

impl LineageTask {
    pub fn new(script_id: impl Into<String>, target_schema: impl Into<String>) -> Self {
        Self {
            script_id: script_id.into(),
            target_schema: target_schema.into(),
        }
    }
}

impl fmt::Display for LineageTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.script_id, self.target_schema)
    }
}

/// Object syntax accepted by [`parse_lineage_dict`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DictSyntax {
    /// Standard JSON object with double-quoted strings.
    #[default]
    Strict,
    /// JSON5: single-quoted strings, unquoted keys and trailing commas are tolerated.
    Lenient,
}

/// One schema lineage in canonical form.
///
/// Source columns and tables are sets (order and duplicates carry no
/// meaning); snippet fields are sequences. Every element is non-empty and
/// free of surrounding whitespace, and values can only be built through
/// [`SchemaLineage::new`] or the parsers, which uphold those invariants.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SchemaLineage {
    source_schema: BTreeSet<String>,
    source_table: BTreeSet<String>,
    transformation: Vec<String>,
    aggregation: Vec<String>,
}

impl SchemaLineage {
    pub fn new<S, T, F, A>(
        source_schema: S,
        source_table: T,
        transformation: F,
        aggregation: A,
    ) -> Result<Self, LineageError>
    where
        S: IntoIterator,
        S::Item: Into<String>,
        T: IntoIterator,
        T::Item: Into<String>,
        F: IntoIterator,
        F::Item: Into<String>,
        A: IntoIterator,
        A::Item: Into<String>,
    {
        let lineage = Self {
            source_schema: source_schema.into_iter().map(Into::into).collect(),
            source_table: source_table.into_iter().map(Into::into).collect(),
            transformation: transformation.into_iter().map(Into::into).collect(),
            aggregation: aggregation.into_iter().map(Into::into).collect(),
        };
        lineage.validate()?;
        Ok(lineage)
    }

    pub fn source_schema(&self) -> &BTreeSet<String> {
        &self.source_schema
    }

    pub fn source_table(&self) -> &BTreeSet<String> {
        &self.source_table
    }

    pub fn transformation(&self) -> &[String] {
        &self.transformation
    }

    pub fn aggregation(&self) -> &[String] {
        &self.aggregation
    }

    /// Transformation snippets joined with the canonical separator.
    pub fn transformation_text(&self) -> String {
        self.transformation.join(SNIPPET_JOINER)
    }

    /// Aggregation snippets joined with the canonical separator.
    pub fn aggregation_text(&self) -> String {
        self.aggregation.join(SNIPPET_JOINER)
    }

    /// Checks every element against the canonical-form invariants.
    pub fn validate(&self) -> Result<(), LineageError> {
        for column in &self.source_schema {
            check_element(KEY_SOURCE_SCHEMA, column)?;
            if column.contains(',') {
                return Err(invalid(KEY_SOURCE_SCHEMA, format!("{column:?} contains a comma")));
            }
        }
        for table in &self.source_table {
            check_element(KEY_SOURCE_TABLE, table)?;
            if !is_properly_nested(table) {
                return Err(invalid(
                    KEY_SOURCE_TABLE,
                    format!("{table:?} has unbalanced parentheses"),
                ));
            }
            if split_outside_parens(table).len() != 1 {
                return Err(invalid(
                    KEY_SOURCE_TABLE,
                    format!("{table:?} contains a table separator outside parentheses"),
                ));
            }
        }
        for (field, snippets) in [
            (KEY_TRANSFORMATION, &self.transformation),
            (KEY_AGGREGATION, &self.aggregation),
        ] {
            for snippet in snippets {
                check_element(field, snippet)?;
                if snippet.contains(CODEEND) {
                    return Err(invalid(field, format!("{snippet:?} contains {CODEEND}")));
                }
            }
        }
        Ok(())
    }

    /// Deterministic one-line rendering; parses back to an equal value.
    pub fn canonical_serialize(&self) -> String {
        serde_json::to_string(self).expect("string-valued map always serializes")
    }

    fn field_texts(&self) -> [(&'static str, String); 4] {
        [
            (KEY_SOURCE_SCHEMA, join_set(&self.source_schema, ", ")),
            (KEY_SOURCE_TABLE, join_set(&self.source_table, "; ")),
            (KEY_TRANSFORMATION, self.transformation_text()),
            (KEY_AGGREGATION, self.aggregation_text()),
        ]
    }
}

fn join_set(set: &BTreeSet<String>, sep: &str) -> String {
    set.iter().map(String::as_str).collect::<Vec<_>>().join(sep)
}

fn invalid(field: &'static str, reason: String) -> LineageError {
    LineageError::InvalidElement { field, reason }
}

fn check_element(field: &'static str, value: &str) -> Result<(), LineageError> {
    if value.trim().is_empty() {
        return Err(invalid(field, "empty element".into()));
    }
    if value.trim() != value {
        return Err(invalid(field, format!("{value:?} has surrounding whitespace")));
    }
    Ok(())
}

/// Renders `lineage` with schemas sorted and comma-joined, tables sorted and
/// semicolon-joined and snippets joined with ` <CODEEND> `.
pub fn canonical_serialize(lineage: &SchemaLineage) -> String {
    lineage.canonical_serialize()
}

/// Splits a snippet field on `<CODEEND>`, trimming pieces and dropping empty ones.
pub fn split_codeend(field_text: &str) -> Vec<String> {
    field_text
        .split(CODEEND)
        .map(str::trim)
        .filter(|piece| !piece.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Parses a comma-separated column list into a deduplicated set.
pub fn parse_schema_list(text: &str) -> BTreeSet<String> {
    text.split(',')
        .map(str::trim)
        .filter(|piece| !piece.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Parses a table list separated by `;` or `,`.
///
/// Separators inside parentheses do not split, provided the parentheses in
/// `text` are properly nested. Otherwise parentheses are treated as ordinary
/// characters.
pub fn parse_table_list(text: &str) -> BTreeSet<String> {
    let pieces = if is_properly_nested(text) {
        split_outside_parens(text)
    } else {
        text.split([';', ',']).collect()
    };
    pieces
        .into_iter()
        .map(str::trim)
        .filter(|piece| !piece.is_empty())
        .map(str::to_owned)
        .collect()
}

fn is_properly_nested(text: &str) -> bool {
    let mut depth = 0usize;
    for c in text.chars() {
        match c {
            '(' => depth += 1,
            ')' => match depth.checked_sub(1) {
                Some(d) => depth = d,
                None => return false,
            },
            _ => {}
        }
    }
    depth == 0
}

fn split_outside_parens(text: &str) -> Vec<&str> {
    let mut pieces = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ';' | ',' if depth == 0 => {
                pieces.push(&text[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    pieces.push(&text[start..]);
    pieces
}

/// Parses the body of an answer block into a lineage.
///
/// The object must carry exactly the four lineage keys (case-sensitive, no
/// duplicates), each with a string value.
pub fn parse_lineage_dict(text: &str, syntax: DictSyntax) -> Result<SchemaLineage, LineageError> {
    let entries: RawEntries = match syntax {
        DictSyntax::Strict => serde_json::from_str(text).map_err(|e| LineageError::MalformedDict(e.to_string()))?,
        DictSyntax::Lenient => json5::from_str(text).map_err(|e| LineageError::MalformedDict(e.to_string()))?,
    };
    lineage_from_entries(entries.0, false)
}

/// Builds a lineage from a record-file object.
///
/// Besides the string form accepted by [`parse_lineage_dict`], each field may
/// be an array of already separated elements. Elements are taken as given and
/// must satisfy the canonical-form invariants.
pub fn lineage_from_record(value: serde_json::Value) -> Result<SchemaLineage, LineageError> {
    match value {
        serde_json::Value::Object(map) => lineage_from_entries(map.into_iter().collect(), true),
        other => Err(LineageError::MalformedDict(format!("expected an object, got {other}"))),
    }
}

enum FieldValue {
    Text(String),
    Items(Vec<String>),
}

fn lineage_from_entries(
    entries: Vec<(String, serde_json::Value)>,
    allow_items: bool,
) -> Result<SchemaLineage, LineageError> {
    let mut fields: [Option<FieldValue>; 4] = Default::default();
    for (key, value) in entries {
        let Some(slot) = LINEAGE_KEYS.iter().position(|k| *k == key) else {
            return Err(LineageError::KeySetMismatch(format!("unexpected key `{key}`")));
        };
        if fields[slot].is_some() {
            return Err(LineageError::KeySetMismatch(format!("duplicate key `{key}`")));
        }
        match value {
            serde_json::Value::String(s) => fields[slot] = Some(FieldValue::Text(s)),
            serde_json::Value::Array(items) if allow_items => {
                let items = items
                    .into_iter()
                    .map(|item| match item {
                        serde_json::Value::String(s) => Ok(s),
                        other => Err(LineageError::MalformedDict(format!(
                            "element of `{key}` is not a string: {other}"
                        ))),
                    })
                    .collect::<Result<_, _>>()?;
                fields[slot] = Some(FieldValue::Items(items));
            }
            other => {
                return Err(LineageError::MalformedDict(format!(
                    "value of `{key}` is not a string: {other}"
                )))
            }
        }
    }
    let missing: Vec<&str> = LINEAGE_KEYS
        .iter()
        .zip(&fields)
        .filter(|(_, v)| v.is_none())
        .map(|(k, _)| *k)
        .collect();
    if !missing.is_empty() {
        return Err(LineageError::KeySetMismatch(format!(
            "missing key(s) {}",
            missing.iter().map(|k| format!("`{k}`")).collect::<Vec<_>>().join(", ")
        )));
    }
    let [schema, table, transformation, aggregation] = fields.map(|f| f.expect("checked above"));
    let lineage = SchemaLineage {
        source_schema: match schema {
            FieldValue::Text(t) => parse_schema_list(&t),
            FieldValue::Items(items) => items.into_iter().collect(),
        },
        source_table: match table {
            FieldValue::Text(t) => parse_table_list(&t),
            FieldValue::Items(items) => items.into_iter().collect(),
        },
        transformation: match transformation {
            FieldValue::Text(t) => split_codeend(&t),
            FieldValue::Items(items) => items,
        },
        aggregation: match aggregation {
            FieldValue::Text(t) => split_codeend(&t),
            FieldValue::Items(items) => items,
        },
    };
    lineage.validate()?;
    Ok(lineage)
}

/// Object entries in document order, duplicates preserved.
struct RawEntries(Vec<(String, serde_json::Value)>);

impl<'de> Deserialize<'de> for RawEntries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct EntriesVisitor;

        impl<'de> Visitor<'de> for EntriesVisitor {
            type Value = RawEntries;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a key-value object")
            }

            fn visit_map<M: MapAccess<'de>>(self, mut map: M) -> Result<RawEntries, M::Error> {
                let mut entries = Vec::new();
                while let Some((key, value)) = map.next_entry::<String, serde_json::Value>()? {
                    entries.push((key, value));
                }
                Ok(RawEntries(entries))
            }
        }

        deserializer.deserialize_map(EntriesVisitor)
    }
}

impl Serialize for SchemaLineage {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(4))?;
        for (key, value) in self.field_texts() {
            map.serialize_entry(key, &value)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for SchemaLineage {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let entries = RawEntries::deserialize(deserializer)?;
        lineage_from_entries(entries.0, false).map_err(de::Error::custom)
    }
}
