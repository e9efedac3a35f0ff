//! On-disk index layout.
//!
//! ```text
//! manifest.json     version, K, model identity, dimension, counts, checksums
//! documents.jsonl   {"id", "text", "title"?} per line
//! triples.jsonl     {"h", "r", "t", "source_doc"} per line
//! vectors.bin       document vectors then entity vectors, f32 little-endian
//! edges.bin         per source document: u64 count, then (u64 target, f32 weight)
//! ```
//!
//! Entity order is not stored: it is the first-appearance order of entity
//! strings over `triples.jsonl`, the same order the builder assigns.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Edge, HierarchicalIndexGraph, HigError, Manifest};
use crate::corpus::Document;
use crate::extraction::Triple;
use crate::providers::Embedding;

pub const FORMAT_VERSION: &str = "HIGv1";

const MANIFEST: &str = "manifest.json";
const DOCUMENTS: &str = "documents.jsonl";
const TRIPLES: &str = "triples.jsonl";
const VECTORS: &str = "vectors.bin";
const EDGES: &str = "edges.bin";

#[derive(Serialize, Deserialize)]
struct ManifestFile {
    #[serde(flatten)]
    manifest: Manifest,
    checksums: BTreeMap<String, String>,
}

fn io_err(path: &Path, source: std::io::Error) -> HigError {
    HigError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn corrupt(section: &str, reason: impl Into<String>) -> HigError {
    HigError::CorruptSection {
        section: section.to_string(),
        reason: reason.into(),
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn jsonl<T: Serialize>(items: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        // serializing plain data structs cannot fail
        out.extend(serde_json::to_vec(item).unwrap_or_default());
        out.push(b'\n');
    }
    out
}

/// Writes `graph` into directory `dir`, creating it if needed. Files other
/// than the index sections (such as an extraction cache) are left alone.
pub fn save_index(graph: &HierarchicalIndexGraph, dir: impl AsRef<Path>) -> Result<(), HigError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;

    let mut vectors = Vec::with_capacity(
        (graph.doc_vectors.len() + graph.entity_vectors.len()) * graph.manifest.dimension * 4,
    );
    for v in graph.doc_vectors.iter().chain(&graph.entity_vectors) {
        for x in &v.0 {
            vectors.extend_from_slice(&x.to_le_bytes());
        }
    }
    let mut edges = Vec::new();
    for list in &graph.doc_edges {
        edges.extend_from_slice(&(list.len() as u64).to_le_bytes());
        for e in list {
            edges.extend_from_slice(&(e.target as u64).to_le_bytes());
            edges.extend_from_slice(&e.weight.to_le_bytes());
        }
    }
    let sections: [(&str, Vec<u8>); 4] = [
        (DOCUMENTS, jsonl(&graph.documents)),
        (TRIPLES, jsonl(&graph.triples)),
        (VECTORS, vectors),
        (EDGES, edges),
    ];
    let mut checksums = BTreeMap::new();
    for (name, bytes) in &sections {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
        checksums.insert(name.to_string(), sha256_hex(bytes));
    }
    let manifest = ManifestFile {
        manifest: graph.manifest.clone(),
        checksums,
    };
    let path = dir.join(MANIFEST);
    let mut text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| corrupt(MANIFEST, e.to_string()))?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| io_err(&path, e))
}

fn read_section(dir: &Path, name: &str, checksums: &BTreeMap<String, String>) -> Result<Vec<u8>, HigError> {
    let path = dir.join(name);
    let bytes = fs::read(&path).map_err(|e| io_err(&path, e))?;
    let expected = checksums
        .get(name)
        .ok_or_else(|| corrupt(name, "no checksum in manifest"))?;
    if &sha256_hex(&bytes) != expected {
        return Err(corrupt(name, "checksum mismatch"));
    }
    Ok(bytes)
}

fn parse_jsonl<T: for<'de> Deserialize<'de>>(name: &str, bytes: &[u8]) -> Result<Vec<T>, HigError> {
    let text = std::str::from_utf8(bytes).map_err(|e| corrupt(name, e.to_string()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| corrupt(name, format!("line {}: {e}", i + 1)))
        })
        .collect()
}

struct Reader<'a> {
    name: &'static str,
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], HigError> {
        let end = self.pos + N;
        let slice = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| corrupt(self.name, format!("truncated at byte {}", self.pos)))?;
        self.pos = end;
        let mut out = [0u8; N];
        out.copy_from_slice(slice);
        Ok(out)
    }

    fn u64(&mut self) -> Result<u64, HigError> {
        self.take::<8>().map(u64::from_le_bytes)
    }

    fn f32(&mut self) -> Result<f32, HigError> {
        self.take::<4>().map(f32::from_le_bytes)
    }
}

/// Loads an index written by [`save_index`], verifying the format version,
/// every section checksum and length, and all graph invariants.
pub fn load_index(dir: impl AsRef<Path>) -> Result<HierarchicalIndexGraph, HigError> {
    let dir = dir.as_ref();
    let manifest_path = dir.join(MANIFEST);
    let text = fs::read_to_string(&manifest_path).map_err(|e| io_err(&manifest_path, e))?;
    let raw: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| corrupt(MANIFEST, e.to_string()))?;
    let version = raw.get("version").and_then(|v| v.as_str()).unwrap_or_default();
    if version != FORMAT_VERSION {
        return Err(HigError::VersionMismatch {
            found: version.to_string(),
            supported: FORMAT_VERSION.to_string(),
        });
    }
    let ManifestFile { manifest, checksums } =
        serde_json::from_value(raw).map_err(|e| corrupt(MANIFEST, e.to_string()))?;
    let counts = manifest.counts;
    let dim = manifest.dimension;

    let vectors = read_section(dir, VECTORS, &checksums)?;
    let expected_len = (counts.documents + counts.entities) * dim * 4;
    if vectors.len() != expected_len {
        return Err(corrupt(
            VECTORS,
            format!("expected {expected_len} bytes, found {}", vectors.len()),
        ));
    }
    let documents: Vec<Document> = parse_jsonl(DOCUMENTS, &read_section(dir, DOCUMENTS, &checksums)?)?;
    let triples: Vec<Triple> = parse_jsonl(TRIPLES, &read_section(dir, TRIPLES, &checksums)?)?;
    if documents.len() != counts.documents {
        return Err(corrupt(DOCUMENTS, format!("expected {} records, found {}", counts.documents, documents.len())));
    }
    if triples.len() != counts.triples {
        return Err(corrupt(TRIPLES, format!("expected {} records, found {}", counts.triples, triples.len())));
    }

    let mut all_vectors: Vec<Embedding> = vectors
        .chunks_exact(dim.max(1) * 4)
        .map(|chunk| {
            Embedding(
                chunk
                    .chunks_exact(4)
                    .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                    .collect(),
            )
        })
        .collect();
    if dim == 0 {
        all_vectors = vec![Embedding(Vec::new()); counts.documents + counts.entities];
    }
    if all_vectors.iter().any(|v| v.0.iter().any(|x| !x.is_finite())) {
        return Err(corrupt(VECTORS, "non-finite component"));
    }
    let entity_vectors = all_vectors.split_off(counts.documents);
    let doc_vectors = all_vectors;

    let edge_bytes = read_section(dir, EDGES, &checksums)?;
    let mut reader = Reader {
        name: EDGES,
        bytes: &edge_bytes,
        pos: 0,
    };
    let mut doc_edges = Vec::with_capacity(counts.documents);
    for src in 0..counts.documents {
        let n = reader.u64()? as usize;
        if n > manifest.k || n >= counts.documents.max(1) {
            return Err(corrupt(EDGES, format!("document {src} lists {n} edges")));
        }
        let mut list = Vec::with_capacity(n);
        for _ in 0..n {
            let target = reader.u64()? as usize;
            let weight = reader.f32()?;
            if target >= counts.documents || target == src || !weight.is_finite() {
                return Err(corrupt(EDGES, format!("invalid edge {src} -> {target}")));
            }
            list.push(Edge { target, weight });
        }
        doc_edges.push(list);
    }
    if reader.pos != edge_bytes.len() {
        return Err(corrupt(EDGES, "trailing bytes"));
    }

    HierarchicalIndexGraph::from_parts(
        manifest,
        documents,
        doc_vectors,
        doc_edges,
        entity_vectors,
        triples,
    )
}
