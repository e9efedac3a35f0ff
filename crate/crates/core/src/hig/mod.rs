//! The hierarchical index graph: a document similarity layer over an
//! entity-level knowledge graph.

mod build;
mod docgraph;
mod persist;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Document;
use crate::extraction::{ExtractionError, TemplateLanguage, Triple};
use crate::providers::{Embedding, ProviderError, VectorError};

pub use build::{build_hig, BuildConfig, BuildOutput, BuildStats};
pub use docgraph::{build_document_graph, Edge};
pub use persist::{load_index, save_index, FORMAT_VERSION};

#[derive(Debug, Error)]
pub enum HigError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("duplicate document id {0:?}")]
    DuplicateDocument(String),
    #[error("unknown document {0:?}")]
    UnknownDocument(String),
    #[error("hops must be at least 1")]
    ZeroHops,
    #[error("vector error at document {position}: {source}")]
    Vector {
        position: usize,
        #[source]
        source: VectorError,
    },
    #[error("embedding {what} failed: {source}")]
    Embedding {
        what: String,
        #[source]
        source: ProviderError,
    },
    #[error(transparent)]
    Extraction(#[from] ExtractionError),
    #[error("index version {found:?} is not supported (expected {supported:?})")]
    VersionMismatch { found: String, supported: String },
    #[error("corrupt index section {section}: {reason}")]
    CorruptSection { section: String, reason: String },
    #[error("index invariant violated: {0}")]
    Invariant(String),
    #[error("index I/O on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Entry counts recorded in the manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub documents: usize,
    pub edges: usize,
    pub entities: usize,
    pub triples: usize,
}

/// Build provenance of an index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    /// Neighbours per document in the document layer.
    pub k: usize,
    pub embedding_model: String,
    pub dimension: usize,
    pub completion_model: String,
    pub template_language: TemplateLanguage,
    pub template_hash: String,
    pub embed_title: bool,
    pub counts: Counts,
}

/// Immutable two-layer index. Every constructor ([`build_hig`],
/// [`load_index`], [`HierarchicalIndexGraph::from_parts`]) checks the
/// structural invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchicalIndexGraph {
    manifest: Manifest,
    documents: Vec<Document>,
    doc_vectors: Vec<Embedding>,
    doc_edges: Vec<Vec<Edge>>,
    entities: Vec<String>,
    entity_vectors: Vec<Embedding>,
    triples: Vec<Triple>,
    doc_index: HashMap<String, usize>,
    entity_index: HashMap<String, usize>,
    entity_docs: Vec<Vec<usize>>,
    doc_entities: Vec<Vec<usize>>,
    entity_triples: Vec<Vec<usize>>,
}

/// Entity strings in first-appearance order over `triples` (head, then tail).
pub(crate) fn entities_in_order(triples: &[Triple]) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for t in triples {
        for e in [&t.head, &t.tail] {
            if seen.insert(e.as_str()) {
                out.push(e.clone());
            }
        }
    }
    out
}

impl HierarchicalIndexGraph {
    /// Assembles the graph, deriving the lookups and validating invariants.
    pub fn from_parts(
        manifest: Manifest,
        documents: Vec<Document>,
        doc_vectors: Vec<Embedding>,
        doc_edges: Vec<Vec<Edge>>,
        entity_vectors: Vec<Embedding>,
        triples: Vec<Triple>,
    ) -> Result<Self, HigError> {
        let invariant = |msg: String| Err(HigError::Invariant(msg));
        let m = documents.len();
        if doc_vectors.len() != m || doc_edges.len() != m {
            return invariant(format!(
                "{m} documents but {} vectors and {} edge lists",
                doc_vectors.len(),
                doc_edges.len()
            ));
        }
        let mut doc_index = HashMap::with_capacity(m);
        for (i, d) in documents.iter().enumerate() {
            if doc_index.insert(d.id.clone(), i).is_some() {
                return Err(HigError::DuplicateDocument(d.id.clone()));
            }
        }
        let entities = entities_in_order(&triples);
        if entity_vectors.len() != entities.len() {
            return invariant(format!(
                "{} entities but {} entity vectors",
                entities.len(),
                entity_vectors.len()
            ));
        }
        for v in doc_vectors.iter().chain(&entity_vectors) {
            if v.dim() != manifest.dimension {
                return invariant(format!(
                    "vector of dimension {} in an index of dimension {}",
                    v.dim(),
                    manifest.dimension
                ));
            }
        }
        for (src, edges) in doc_edges.iter().enumerate() {
            if edges.len() > manifest.k {
                return invariant(format!(
                    "document {src} has {} edges with K = {}",
                    edges.len(),
                    manifest.k
                ));
            }
            for e in edges {
                if e.target >= m || e.target == src {
                    return invariant(format!("document {src} has invalid edge target {}", e.target));
                }
            }
        }
        let entity_index: HashMap<String, usize> = entities
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        let mut entity_docs = vec![Vec::new(); entities.len()];
        let mut doc_entities = vec![Vec::new(); m];
        let mut entity_triples = vec![Vec::new(); entities.len()];
        for (ti, t) in triples.iter().enumerate() {
            let Some(&doc) = doc_index.get(&t.source_doc) else {
                return invariant(format!("triple {ti} cites unknown document {:?}", t.source_doc));
            };
            if t.head.is_empty() || t.relation.is_empty() || t.tail.is_empty() {
                return invariant(format!("triple {ti} has an empty part"));
            }
            for e in [&t.head, &t.tail] {
                let ei = entity_index[e.as_str()];
                entity_docs[ei].push(doc);
                doc_entities[doc].push(ei);
                if entity_triples[ei].last() != Some(&ti) {
                    entity_triples[ei].push(ti);
                }
            }
        }
        for list in entity_docs.iter_mut().chain(doc_entities.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        let counts = Counts {
            documents: m,
            edges: doc_edges.iter().map(Vec::len).sum(),
            entities: entities.len(),
            triples: triples.len(),
        };
        if counts != manifest.counts {
            return invariant(format!(
                "manifest counts {:?} disagree with contents {:?}",
                manifest.counts, counts
            ));
        }
        Ok(Self {
            manifest,
            documents,
            doc_vectors,
            doc_edges,
            entities,
            entity_vectors,
            triples,
            doc_index,
            entity_index,
            entity_docs,
            doc_entities,
            entity_triples,
        })
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn doc_position(&self, doc_id: &str) -> Option<usize> {
        self.doc_index.get(doc_id).copied()
    }

    pub fn doc_vector(&self, position: usize) -> &Embedding {
        &self.doc_vectors[position]
    }

    pub fn doc_vectors(&self) -> &[Embedding] {
        &self.doc_vectors
    }

    /// Outgoing edges of the document at `position`, strongest first.
    pub fn edges(&self, position: usize) -> &[Edge] {
        &self.doc_edges[position]
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn entity_vectors(&self) -> &[Embedding] {
        &self.entity_vectors
    }

    pub fn entity_position(&self, entity: &str) -> Option<usize> {
        self.entity_index.get(entity).copied()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    /// Positions of the documents mentioning entity `entity_pos`, ascending.
    pub fn entity_doc_positions(&self, entity_pos: usize) -> &[usize] {
        &self.entity_docs[entity_pos]
    }

    /// Entity positions mentioned by the document at `position`, ascending.
    pub fn doc_entity_positions(&self, position: usize) -> &[usize] {
        &self.doc_entities[position]
    }

    /// Indices of triples with `entity_pos` as head or tail, ascending.
    pub fn entity_triple_indices(&self, entity_pos: usize) -> &[usize] {
        &self.entity_triples[entity_pos]
    }

    /// Ids of the documents an entity string occurs in.
    pub fn entity_to_docs(&self, entity: &str) -> Option<Vec<&str>> {
        let e = self.entity_position(entity)?;
        Some(
            self.entity_docs[e]
                .iter()
                .map(|&d| self.documents[d].id.as_str())
                .collect(),
        )
    }

    /// Entity strings extracted from a document.
    pub fn doc_to_entities(&self, doc_id: &str) -> Option<Vec<&str>> {
        let d = self.doc_position(doc_id)?;
        Some(
            self.doc_entities[d]
                .iter()
                .map(|&e| self.entities[e].as_str())
                .collect(),
        )
    }

    /// Documents reachable within `hops` directed edges of `position`
    /// (excluding itself), each with the largest product of edge weights
    /// over any walk of at most `hops` edges reaching it. Ordered by position.
    pub fn neighbors_of(&self, position: usize, hops: usize) -> Vec<(usize, f64)> {
        // Track max and min products per node: with negative edge weights a
        // minimal product can become the maximum one hop later.
        let mut best: BTreeMap<usize, f64> = BTreeMap::new();
        let mut frontier: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
        frontier.insert(position, (1.0, 1.0));
        for _ in 0..hops {
            let mut next: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
            for (&u, &(hi, lo)) in &frontier {
                for edge in &self.doc_edges[u] {
                    let w = f64::from(edge.weight);
                    let (a, b) = (hi * w, lo * w);
                    let (cand_hi, cand_lo) = (a.max(b), a.min(b));
                    next.entry(edge.target)
                        .and_modify(|(h, l)| {
                            *h = h.max(cand_hi);
                            *l = l.min(cand_lo);
                        })
                        .or_insert((cand_hi, cand_lo));
                }
            }
            for (&v, &(hi, _)) in &next {
                if v != position {
                    best.entry(v).and_modify(|b| *b = b.max(hi)).or_insert(hi);
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        best.into_iter().collect()
    }

    /// [`Self::neighbors_of`] keyed by document id.
    pub fn neighbors(&self, doc_id: &str, hops: usize) -> Result<Vec<(&str, f64)>, HigError> {
        if hops == 0 {
            return Err(HigError::ZeroHops);
        }
        let pos = self
            .doc_position(doc_id)
            .ok_or_else(|| HigError::UnknownDocument(doc_id.to_string()))?;
        Ok(self
            .neighbors_of(pos, hops)
            .into_iter()
            .map(|(d, w)| (self.documents[d].id.as_str(), w))
            .collect())
    }
}
