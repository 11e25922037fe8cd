//! Literature QA pairs and the exact nearest-neighbour index over their
//! question embeddings.

mod embed;
mod index;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use embed::{cosine, Embedder, HashingEmbedder, DEFAULT_DIM};
pub use index::{load_index, load_index_with, save_index, RetrievalHit, VectorIndex, DEFAULT_K};

#[derive(Debug, thiserror::Error)]
pub enum LiteratureError {
    #[error("cannot read {path}: {source}")]
    FileUnreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("pair {index} is malformed: {reason}")]
    MalformedPair { index: usize, reason: String },
    #[error("text is empty")]
    EmptyText,
    #[error("pair id {0} is already indexed")]
    DuplicateId(u64),
    #[error("vector has dimension {got}, index expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("index snapshot error: {0}")]
    Snapshot(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QaPair {
    pub id: u64,
    pub question: String,
    pub answer: String,
    pub title: String,
    pub doi: String,
}

impl QaPair {
    pub fn validate(&self) -> Result<(), String> {
        for (field, value) in [
            ("question", &self.question),
            ("answer", &self.answer),
            ("doi", &self.doi),
        ] {
            if value.trim().is_empty() {
                return Err(format!("{field} is empty"));
            }
        }
        Ok(())
    }
}

/// Pairs-file entry; `id` defaults to the position in the array.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PairIn {
    id: Option<u64>,
    question: String,
    answer: String,
    #[serde(default)]
    title: String,
    doi: String,
}

pub fn parse_pairs(text: &str) -> Result<Vec<QaPair>, LiteratureError> {
    let raw: Vec<serde_json::Value> =
        serde_json::from_str(text).map_err(|e| LiteratureError::MalformedPair {
            index: 0,
            reason: format!("not a JSON array of objects: {e}"),
        })?;
    raw.into_iter()
        .enumerate()
        .map(|(index, v)| {
            let p: PairIn =
                serde_json::from_value(v).map_err(|e| LiteratureError::MalformedPair {
                    index,
                    reason: e.to_string(),
                })?;
            let pair = QaPair {
                id: p.id.unwrap_or(index as u64),
                question: p.question,
                answer: p.answer,
                title: p.title,
                doi: p.doi,
            };
            pair.validate()
                .map_err(|reason| LiteratureError::MalformedPair { index, reason })?;
            Ok(pair)
        })
        .collect()
}

pub fn load_pairs(path: impl AsRef<Path>) -> Result<Vec<QaPair>, LiteratureError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| LiteratureError::FileUnreadable {
        path: path.display().to_string(),
        source,
    })?;
    parse_pairs(&text)
}

pub fn save_pairs(pairs: &[QaPair], path: impl AsRef<Path>) -> Result<(), LiteratureError> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(pairs).expect("pairs serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(|source| LiteratureError::FileUnreadable {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn replay_pairs() {
        let pairs = parse_pairs(fixtures::REPLAY_LITERATURE).unwrap();
        let dois: Vec<&str> = pairs.iter().map(|p| p.doi.as_str()).collect();
        assert_eq!(dois, ["1103.1580v2", "0907.3089v1", "0908.3314v1"]);
    }

    #[test]
    fn empty_array() {
        assert!(parse_pairs("[]").unwrap().is_empty());
    }

    #[test]
    fn malformed_entries_are_located() {
        let text =
            r#"[{"question":"q","answer":"a","doi":"d"},{"question":"","answer":"a","doi":"d"}]"#;
        assert!(matches!(
            parse_pairs(text),
            Err(LiteratureError::MalformedPair { index: 1, .. })
        ));
        let missing = r#"[{"question":"q","doi":"d"}]"#;
        assert!(matches!(
            parse_pairs(missing),
            Err(LiteratureError::MalformedPair { index: 0, .. })
        ));
    }

    #[test]
    fn ids_default_to_position() {
        let text = r#"[{"question":"q","answer":"a","doi":"d"},{"question":"r","answer":"b","doi":"e","id":40}]"#;
        let ids: Vec<u64> = parse_pairs(text).unwrap().iter().map(|p| p.id).collect();
        assert_eq!(ids, [0, 40]);
    }
}
