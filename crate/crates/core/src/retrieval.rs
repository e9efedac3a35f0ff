//! Single-pass two-stage retrieval over a [`HierarchicalIndexGraph`].
//!
//! 1. The query is embedded once and the `N` most similar documents become
//!    seeds (weight 1).
//! 2. Seeds are expanded along the document graph by a collaboration
//!    [`Strategy`], giving every candidate document an attention weight `w`.
//! 3. Every entity of a candidate document scores `w * cos(entity, query)`
//!    (with the largest `w` of the candidates it occurs in). Entities scoring
//!    strictly above `lambda` contribute their triples; the best `T` triples
//!    are returned.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::{elapsed_ms, Clock, SystemClock};
use crate::extraction::Triple;
use crate::hig::HierarchicalIndexGraph;
use crate::providers::{cosine_similarity, Embedding, EmbeddingProvider, ProviderError, VectorError};

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("invalid retrieval parameters: {0}")]
    InvalidParams(String),
    #[error("query vector: {0}")]
    Vector(#[from] VectorError),
    #[error("embedding the query failed: {0}")]
    Provider(#[from] ProviderError),
    #[error("index was built with embedding model {index:?} but the query provider is {provider:?}")]
    ModelMismatch { index: String, provider: String },
    #[error("index is empty")]
    EmptyGraph,
}

/// Document-level collaboration strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Strategy {
    /// Seeds plus all one-hop neighbours, every candidate weighted 1.
    OneHop,
    /// Seeds plus all one-hop neighbours, weighted by edge similarity.
    Attentive,
    /// Seeds plus everything within `hops` edges, weighted by the best
    /// product of edge similarities along the way.
    MultiHop { hops: usize },
}

pub const DEFAULT_MULTI_HOPS: usize = 2;

impl Strategy {
    pub fn validate(&self) -> Result<(), RetrievalError> {
        match self {
            Strategy::MultiHop { hops } if *hops < 2 => Err(RetrievalError::InvalidParams(
                format!("multi-hop strategy needs hops >= 2, got {hops}"),
            )),
            _ => Ok(()),
        }
    }

    /// Parses `one-hop`, `attentive` or `multi-hop`; `hops` applies to the last.
    pub fn parse(name: &str, hops: Option<usize>) -> Result<Self, RetrievalError> {
        let s = match name.to_ascii_lowercase().replace('_', "-").as_str() {
            "one-hop" => Strategy::OneHop,
            "attentive" => Strategy::Attentive,
            "multi-hop" => Strategy::MultiHop {
                hops: hops.unwrap_or(DEFAULT_MULTI_HOPS),
            },
            other => {
                return Err(RetrievalError::InvalidParams(format!(
                    "unknown strategy {other:?} (expected one-hop, attentive or multi-hop)"
                )))
            }
        };
        s.validate()?;
        Ok(s)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::OneHop => "one-hop",
            Strategy::Attentive => "attentive",
            Strategy::MultiHop { .. } => "multi-hop",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalParams {
    /// Seed documents matched directly against the query.
    pub n: usize,
    /// Maximum number of triples returned.
    pub t: usize,
    /// Entity score threshold (strict).
    pub lambda: f64,
    pub strategy: Strategy,
}

impl RetrievalParams {
    pub fn validate(&self) -> Result<(), RetrievalError> {
        if self.n < 1 {
            return Err(RetrievalError::InvalidParams("N must be at least 1".into()));
        }
        if self.t < 1 {
            return Err(RetrievalError::InvalidParams("T must be at least 1".into()));
        }
        if !self.lambda.is_finite() {
            return Err(RetrievalError::InvalidParams("lambda must be finite".into()));
        }
        self.strategy.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateDoc {
    #[serde(skip)]
    pub position: usize,
    pub doc_id: String,
    #[serde(rename = "w")]
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredTriple {
    /// Position of the triple in the index.
    #[serde(skip)]
    pub index: usize,
    #[serde(rename = "h")]
    pub head: String,
    #[serde(rename = "r")]
    pub relation: String,
    #[serde(rename = "t")]
    pub tail: String,
    pub score: f64,
    pub source_doc: String,
    /// Candidate weight of the entity that produced `score`.
    #[serde(skip)]
    pub weight: f64,
}

impl ScoredTriple {
    pub fn triple(&self) -> Triple {
        Triple::new(&*self.head, &*self.relation, &*self.tail, &*self.source_doc)
    }

    pub fn render(&self) -> String {
        format!("({}; {}; {})", self.head, self.relation, self.tail)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Accounting {
    pub embed_calls: u64,
    pub completion_calls: u64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievedContext {
    pub query: String,
    pub triples: Vec<ScoredTriple>,
    pub candidates: Vec<CandidateDoc>,
    pub accounting: Accounting,
}

fn by_weight_then_position(a: &CandidateDoc, b: &CandidateDoc) -> Ordering {
    b.weight
        .partial_cmp(&a.weight)
        .unwrap_or(Ordering::Equal)
        .then(a.position.cmp(&b.position))
}

/// The `n` documents most similar to the query, weight 1, ties by position.
pub fn retrieve_top_n_documents(
    query_vec: &Embedding,
    graph: &HierarchicalIndexGraph,
    n: usize,
) -> Result<Vec<CandidateDoc>, RetrievalError> {
    if n < 1 {
        return Err(RetrievalError::InvalidParams("N must be at least 1".into()));
    }
    let mut scored = graph
        .doc_vectors()
        .iter()
        .enumerate()
        .map(|(i, v)| cosine_similarity(query_vec, v).map(|s| (i, s)))
        .collect::<Result<Vec<_>, _>>()?;
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));
    scored.truncate(n);
    Ok(scored
        .into_iter()
        .map(|(position, _)| CandidateDoc {
            position,
            doc_id: graph.documents()[position].id.clone(),
            weight: 1.0,
        })
        .collect())
}

/// Expands seeds into the candidate set. A document reached more than once
/// (or that is itself a seed) keeps its largest weight. The result is
/// ordered by weight descending, then corpus position.
pub fn expand_candidates(
    seeds: &[CandidateDoc],
    graph: &HierarchicalIndexGraph,
    strategy: Strategy,
) -> Vec<CandidateDoc> {
    let mut weights: BTreeMap<usize, f64> = BTreeMap::new();
    let mut offer = |pos: usize, w: f64| {
        weights
            .entry(pos)
            .and_modify(|cur| *cur = cur.max(w))
            .or_insert(w);
    };
    for seed in seeds {
        offer(seed.position, seed.weight);
        match strategy {
            Strategy::OneHop => {
                for e in graph.edges(seed.position) {
                    offer(e.target, 1.0);
                }
            }
            Strategy::Attentive => {
                for e in graph.edges(seed.position) {
                    offer(e.target, f64::from(e.weight));
                }
            }
            Strategy::MultiHop { hops } => {
                for (pos, w) in graph.neighbors_of(seed.position, hops) {
                    offer(pos, w);
                }
            }
        }
    }
    let mut out: Vec<CandidateDoc> = weights
        .into_iter()
        .map(|(position, weight)| CandidateDoc {
            position,
            doc_id: graph.documents()[position].id.clone(),
            weight,
        })
        .collect();
    out.sort_by(by_weight_then_position);
    out
}

/// Scores the entities of the candidate documents against the query and
/// returns the top `t` triples of entities scoring strictly above `lambda`.
///
/// A triple is reachable through its head or tail entity and must come from
/// a candidate document; it takes the better of its endpoint scores.
/// Identical `(h, r, t)` from several documents appear once, keeping the
/// highest score (then the earliest index). Output is sorted by score
/// descending, ties by index position.
pub fn retrieve_triples(
    query_vec: &Embedding,
    candidates: &[CandidateDoc],
    graph: &HierarchicalIndexGraph,
    lambda: f64,
    t: usize,
) -> Result<Vec<ScoredTriple>, RetrievalError> {
    if t < 1 {
        return Err(RetrievalError::InvalidParams("T must be at least 1".into()));
    }
    let candidate_w: HashMap<usize, f64> =
        candidates.iter().map(|c| (c.position, c.weight)).collect();

    let mut entity_w: BTreeMap<usize, f64> = BTreeMap::new();
    for c in candidates {
        for &e in graph.doc_entity_positions(c.position) {
            entity_w
                .entry(e)
                .and_modify(|w| *w = w.max(c.weight))
                .or_insert(c.weight);
        }
    }

    // triple index -> (score, weight)
    let mut best: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    for (&e, &w) in &entity_w {
        let score = w * cosine_similarity(&graph.entity_vectors()[e], query_vec)?;
        if score <= lambda {
            continue;
        }
        for &ti in graph.entity_triple_indices(e) {
            let source = &graph.triples()[ti].source_doc;
            let in_candidates = graph
                .doc_position(source)
                .is_some_and(|p| candidate_w.contains_key(&p));
            if !in_candidates {
                continue;
            }
            best.entry(ti)
                .and_modify(|cur| {
                    if score > cur.0 {
                        *cur = (score, w);
                    }
                })
                .or_insert((score, w));
        }
    }

    let mut ranked: Vec<(usize, f64, f64)> = best.into_iter().map(|(i, (s, w))| (i, s, w)).collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));

    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(t.min(ranked.len()));
    for (index, score, weight) in ranked {
        let tr = &graph.triples()[index];
        if !seen.insert(tr.key()) {
            continue;
        }
        out.push(ScoredTriple {
            index,
            head: tr.head.clone(),
            relation: tr.relation.clone(),
            tail: tr.tail.clone(),
            score,
            source_doc: tr.source_doc.clone(),
            weight,
        });
        if out.len() == t {
            break;
        }
    }
    Ok(out)
}

/// Full retrieval for one question: exactly one embedding call, no
/// completion calls.
pub fn retrieve(
    question: &str,
    graph: &HierarchicalIndexGraph,
    params: &RetrievalParams,
    embed: &dyn EmbeddingProvider,
) -> Result<RetrievedContext, RetrievalError> {
    retrieve_with_clock(question, graph, params, embed, &SystemClock::default())
}

pub fn retrieve_with_clock(
    question: &str,
    graph: &HierarchicalIndexGraph,
    params: &RetrievalParams,
    embed: &dyn EmbeddingProvider,
    clock: &dyn Clock,
) -> Result<RetrievedContext, RetrievalError> {
    let start = clock.now();
    params.validate()?;
    if graph.is_empty() {
        return Err(RetrievalError::EmptyGraph);
    }
    let identity = embed.identity();
    if identity != graph.manifest().embedding_model {
        return Err(RetrievalError::ModelMismatch {
            index: graph.manifest().embedding_model.clone(),
            provider: identity,
        });
    }
    let query_vec = embed
        .embed(&[question.to_string()])?
        .into_iter()
        .next()
        .ok_or_else(|| ProviderError::Decode {
            url: identity.clone(),
            message: "no vector returned for the query".into(),
        })?;
    let seeds = retrieve_top_n_documents(&query_vec, graph, params.n)?;
    let candidates = expand_candidates(&seeds, graph, params.strategy);
    let triples = retrieve_triples(&query_vec, &candidates, graph, params.lambda, params.t)?;
    Ok(RetrievedContext {
        query: question.to_string(),
        triples,
        candidates,
        accounting: Accounting {
            embed_calls: 1,
            completion_calls: 0,
            wall_ms: elapsed_ms(clock, start),
        },
    })
}
