//! Document and QA-item ingest from line-delimited JSON.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {reason}")]
    Malformed {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("{path}:{line}: duplicate id {id:?} (first seen on line {first_line})")]
    DuplicateId {
        path: PathBuf,
        line: usize,
        first_line: usize,
        id: String,
    },
}

/// A corpus unit. Documents are graph nodes and are never chunked.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
}

impl Document {
    /// The string sent to the embedding provider.
    pub fn embedding_text(&self, embed_title: bool) -> String {
        match (&self.title, embed_title) {
            (Some(title), true) if !title.is_empty() => format!("{title}\n{}", self.text),
            _ => self.text.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaItem {
    pub id: String,
    pub question: String,
    #[serde(default, rename = "answers")]
    pub gold_answers: Vec<String>,
}

/// NFC-normalizes and collapses every whitespace run to a single space.
/// Case is preserved since entity strings are matched exactly.
pub fn normalize_text(raw: &str) -> String {
    let nfc: String = raw.nfc().collect();
    nfc.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Deserialize)]
struct RawDocument {
    id: String,
    text: String,
    #[serde(default)]
    title: Option<String>,
}

#[derive(Deserialize)]
struct RawQaItem {
    id: String,
    question: String,
    #[serde(default)]
    answers: Vec<String>,
}

/// Loads a JSONL corpus (`{"id", "text", "title"?}` per line) in file order.
///
/// Blank lines are ignored. Ids must be unique and texts nonempty after
/// normalization.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Document>, CorpusError> {
    let path = path.as_ref();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut docs = Vec::new();
    for_each_record(path, |line_no, raw: RawDocument| {
        let id = raw.id.trim().to_string();
        if id.is_empty() {
            return Err(malformed(path, line_no, "empty id"));
        }
        let text = normalize_text(&raw.text);
        if text.is_empty() {
            return Err(malformed(path, line_no, "empty text"));
        }
        if let Some(&first_line) = seen.get(&id) {
            return Err(CorpusError::DuplicateId {
                path: path.to_path_buf(),
                line: line_no,
                first_line,
                id,
            });
        }
        seen.insert(id.clone(), line_no);
        let title = raw.title.map(|t| normalize_text(&t)).filter(|t| !t.is_empty());
        docs.push(Document { id, text, title });
        Ok(())
    })?;
    Ok(docs)
}

/// Loads a JSONL QA dataset (`{"id", "question", "answers": [..]}` per line).
pub fn load_qa_items(path: impl AsRef<Path>) -> Result<Vec<QaItem>, CorpusError> {
    let path = path.as_ref();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut items = Vec::new();
    for_each_record(path, |line_no, raw: RawQaItem| {
        let question = normalize_text(&raw.question);
        if question.is_empty() {
            return Err(malformed(path, line_no, "empty question"));
        }
        if let Some(&first_line) = seen.get(&raw.id) {
            return Err(CorpusError::DuplicateId {
                path: path.to_path_buf(),
                line: line_no,
                first_line,
                id: raw.id,
            });
        }
        seen.insert(raw.id.clone(), line_no);
        items.push(QaItem {
            id: raw.id,
            question,
            gold_answers: raw.answers.iter().map(|a| normalize_text(a)).collect(),
        });
        Ok(())
    })?;
    Ok(items)
}

fn malformed(path: &Path, line: usize, reason: impl Into<String>) -> CorpusError {
    CorpusError::Malformed {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

fn for_each_record<T, F>(path: &Path, mut f: F) -> Result<(), CorpusError>
where
    T: serde::de::DeserializeOwned,
    F: FnMut(usize, T) -> Result<(), CorpusError>,
{
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let record: T =
            serde_json::from_str(&line).map_err(|e| malformed(path, line_no, e.to_string()))?;
        f(line_no, record)?;
    }
    Ok(())
}
