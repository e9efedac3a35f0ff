#![allow(dead_code)]

use std::path::PathBuf;

use kgr_core::hig::{build_document_graph, Counts, Manifest, FORMAT_VERSION};
use kgr_core::providers::mock::{load_rules, MockCompletion, MockFallback};
use kgr_core::{
    load_corpus, load_qa_items, Document, Embedding, HierarchicalIndexGraph, QaItem,
    TemplateLanguage, Triple,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture_corpus() -> Vec<Document> {
    load_corpus(fixture("corpus.jsonl")).unwrap()
}

pub fn fixture_qa() -> Vec<QaItem> {
    load_qa_items(fixture("qa.jsonl")).unwrap()
}

/// Extraction and answer replies for the fixture; unmatched prompts echo
/// their last line.
pub fn fixture_completion() -> MockCompletion {
    MockCompletion::scripted(load_rules(fixture("replies.jsonl")).unwrap(), MockFallback::EchoLastLine)
}

/// Nonzero vector with components in [-1, 1].
pub fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f32> {
    loop {
        let v: Vec<f32> = (0..dim).map(|_| rng.random_range(-1.0f32..=1.0)).collect();
        if v.iter().any(|x| *x != 0.0) {
            return v;
        }
    }
}

/// `m` vectors where roughly a quarter repeat an earlier vector exactly,
/// so equal similarities and their tie-break are exercised.
pub fn vectors_with_duplicates(rng: &mut ChaCha8Rng, m: usize, dim: usize) -> Vec<Embedding> {
    let mut out: Vec<Embedding> = Vec::with_capacity(m);
    for _ in 0..m {
        if !out.is_empty() && rng.random_bool(0.25) {
            let j = rng.random_range(0..out.len());
            out.push(out[j].clone());
        } else {
            out.push(Embedding(random_vector(rng, dim)));
        }
    }
    out
}

/// A random but valid index: random vectors, top-`k` document edges and
/// random triples over a small entity vocabulary.
pub fn random_graph(rng: &mut ChaCha8Rng, max_docs: usize, max_triples: usize) -> HierarchicalIndexGraph {
    let m = rng.random_range(1..=max_docs);
    let dim = rng.random_range(1..=8);
    let k = rng.random_range(0..=4);
    let doc_vectors = vectors_with_duplicates(rng, m, dim);
    let edges = build_document_graph(&doc_vectors, k).unwrap();
    let documents: Vec<Document> = (0..m)
        .map(|i| Document {
            id: format!("doc-{i}"),
            text: format!("text of document {i}"),
            title: rng.random_bool(0.5).then(|| format!("Title {i}")),
        })
        .collect();
    let vocab = rng.random_range(2..=12);
    let n_triples = rng.random_range(0..=max_triples);
    let triples: Vec<Triple> = (0..n_triples)
        .map(|_| {
            let h = rng.random_range(0..vocab);
            let t = rng.random_range(0..vocab);
            Triple::new(
                format!("entity {h}"),
                format!("rel {}", rng.random_range(0..3)),
                format!("entity {t}"),
                documents[rng.random_range(0..m)].id.clone(),
            )
        })
        .collect();
    let mut entities: Vec<&str> = Vec::new();
    for t in &triples {
        for e in [t.head.as_str(), t.tail.as_str()] {
            if !entities.contains(&e) {
                entities.push(e);
            }
        }
    }
    let entity_vectors: Vec<Embedding> = (0..entities.len())
        .map(|_| Embedding(random_vector(rng, dim)))
        .collect();
    let manifest = Manifest {
        version: FORMAT_VERSION.into(),
        k,
        embedding_model: "random".into(),
        dimension: dim,
        completion_model: "random".into(),
        template_language: TemplateLanguage::English,
        template_hash: "0".repeat(32),
        embed_title: false,
        counts: Counts {
            documents: m,
            edges: edges.iter().map(Vec::len).sum(),
            entities: entities.len(),
            triples: triples.len(),
        },
    };
    HierarchicalIndexGraph::from_parts(manifest, documents, doc_vectors, edges, entity_vectors, triples)
        .unwrap()
}

/// Cosine similarity computed independently of the library.
pub fn oracle_cosine(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| f64::from(*x) * f64::from(*y)).sum();
    let na: f64 = a.iter().map(|x| f64::from(*x).powi(2)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| f64::from(*x).powi(2)).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0)
}
