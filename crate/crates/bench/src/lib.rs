//! Synthetic inputs for the benchmarks.

use kgr_core::hig::{build_document_graph, Counts, Manifest, FORMAT_VERSION};
use kgr_core::{Document, Embedding, HierarchicalIndexGraph, TemplateLanguage, Triple};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_vectors(seed: u64, count: usize, dim: usize) -> Vec<Embedding> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| Embedding((0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect()))
        .collect()
}

/// An index of `docs` documents with `triples_per_doc` triples each over a
/// vocabulary of `docs` entities. `embedding_model` must match the embedder
/// used to query it.
pub fn synthetic_graph(
    seed: u64,
    docs: usize,
    triples_per_doc: usize,
    dim: usize,
    k: usize,
    embedding_model: &str,
) -> HierarchicalIndexGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let doc_vectors = random_vectors(seed, docs, dim);
    let edges = build_document_graph(&doc_vectors, k).expect("valid vectors");
    let documents: Vec<Document> = (0..docs)
        .map(|i| Document {
            id: format!("d{i}"),
            text: format!("document {i}"),
            title: None,
        })
        .collect();
    let mut triples = Vec::with_capacity(docs * triples_per_doc);
    for d in &documents {
        for _ in 0..triples_per_doc {
            triples.push(Triple::new(
                format!("e{}", rng.random_range(0..docs)),
                "related to",
                format!("e{}", rng.random_range(0..docs)),
                d.id.clone(),
            ));
        }
    }
    let mut seen = std::collections::HashSet::new();
    let entities = triples
        .iter()
        .flat_map(|t| [t.head.clone(), t.tail.clone()])
        .filter(|e| seen.insert(e.clone()))
        .count();
    let entity_vectors = random_vectors(seed.wrapping_add(1), entities, dim);
    let manifest = Manifest {
        version: FORMAT_VERSION.into(),
        k,
        embedding_model: embedding_model.into(),
        dimension: dim,
        completion_model: "none".into(),
        template_language: TemplateLanguage::English,
        template_hash: "0".repeat(32),
        embed_title: false,
        counts: Counts {
            documents: docs,
            edges: edges.iter().map(Vec::len).sum(),
            entities,
            triples: triples.len(),
        },
    };
    HierarchicalIndexGraph::from_parts(manifest, documents, doc_vectors, edges, entity_vectors, triples)
        .expect("consistent parts")
}
