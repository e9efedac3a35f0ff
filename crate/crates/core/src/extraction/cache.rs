use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ExtractionError, Triple};

/// One JSONL line of the extraction cache.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub doc_id: String,
    pub template_hash: String,
    pub model: String,
    pub triples: Vec<[String; 3]>,
}

type CacheKey = (String, String, String);

/// Append-only extraction cache keyed by `(doc id, template hash, model)`.
/// Later records for the same key win.
#[derive(Debug)]
pub struct ExtractionCache {
    path: PathBuf,
    entries: HashMap<CacheKey, Vec<[String; 3]>>,
    writer: Option<File>,
}

impl ExtractionCache {
    /// Opens (or prepares to create) the cache at `path`.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, ExtractionError> {
        let path = path.as_ref().to_path_buf();
        let mut entries = HashMap::new();
        if path.exists() {
            let file = File::open(&path).map_err(|e| cache_err(&path, e))?;
            for (idx, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| cache_err(&path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: CacheRecord = serde_json::from_str(&line)
                    .map_err(|e| cache_err(&path, format!("line {}: {e}", idx + 1)))?;
                entries.insert((rec.doc_id, rec.template_hash, rec.model), rec.triples);
            }
        }
        Ok(Self {
            path,
            entries,
            writer: None,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, doc_id: &str, template_hash: &str, model: &str) -> Option<Vec<Triple>> {
        let key = (doc_id.to_string(), template_hash.to_string(), model.to_string());
        self.entries.get(&key).map(|triples| {
            triples
                .iter()
                .map(|[h, r, t]| Triple::new(h.as_str(), r.as_str(), t.as_str(), doc_id))
                .collect()
        })
    }

    pub fn insert(
        &mut self,
        doc_id: &str,
        template_hash: &str,
        model: &str,
        triples: &[Triple],
    ) -> Result<(), ExtractionError> {
        let record = CacheRecord {
            doc_id: doc_id.to_string(),
            template_hash: template_hash.to_string(),
            model: model.to_string(),
            triples: triples
                .iter()
                .map(|t| [t.head.clone(), t.relation.clone(), t.tail.clone()])
                .collect(),
        };
        if self.writer.is_none() {
            if let Some(parent) = self.path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| cache_err(&self.path, e))?;
            }
            let file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&self.path)
                .map_err(|e| cache_err(&self.path, e))?;
            self.writer = Some(file);
        }
        let mut line = serde_json::to_string(&record).map_err(|e| cache_err(&self.path, e))?;
        line.push('\n');
        if let Some(w) = self.writer.as_mut() {
            w.write_all(line.as_bytes()).map_err(|e| cache_err(&self.path, e))?;
        }
        self.entries.insert(
            (record.doc_id, record.template_hash, record.model),
            record.triples,
        );
        Ok(())
    }
}

fn cache_err(path: &Path, e: impl std::fmt::Display) -> ExtractionError {
    ExtractionError::Cache {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_wire_shape() {
        let rec = CacheRecord {
            doc_id: "d1".into(),
            template_hash: "abc".into(),
            model: "m".into(),
            triples: vec![["a".into(), "r".into(), "b".into()]],
        };
        assert_eq!(
            serde_json::to_string(&rec).unwrap(),
            r#"{"doc_id":"d1","template_hash":"abc","model":"m","triples":[["a","r","b"]]}"#
        );
    }

    #[test]
    fn persists_across_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("cache.jsonl");
        let mut cache = ExtractionCache::open(&path).unwrap();
        assert!(cache.is_empty());
        cache
            .insert("d1", "h", "m", &[Triple::new("a", "r", "b", "d1")])
            .unwrap();
        let reopened = ExtractionCache::open(&path).unwrap();
        assert_eq!(reopened.get("d1", "h", "m").unwrap(), vec![Triple::new("a", "r", "b", "d1")]);
        assert!(reopened.get("d1", "h", "other-model").is_none());
    }

    #[test]
    fn corrupt_line_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        std::fs::write(&path, "{oops\n").unwrap();
        let err = ExtractionCache::open(&path).unwrap_err();
        assert!(err.to_string().contains("line 1"));
    }
}
