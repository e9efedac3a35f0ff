use std::collections::HashSet;

use super::{
    build_document_graph, entities_in_order, Counts, HierarchicalIndexGraph, HigError, Manifest,
    FORMAT_VERSION,
};
use crate::corpus::Document;
use crate::extraction::{extract_corpus, ExtractionCache, PromptTemplate};
use crate::providers::{CompletionProvider, Embedding, EmbeddingProvider};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildConfig {
    /// Neighbours per document in the document layer.
    pub k: usize,
    pub template: PromptTemplate,
    /// Prepend the title to the text sent to the embedder.
    pub embed_title: bool,
}

impl BuildConfig {
    pub fn new(k: usize, template: PromptTemplate) -> Self {
        Self {
            k,
            template,
            embed_title: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub embed_calls: usize,
    pub completion_calls: usize,
    pub cache_hits: usize,
    pub skipped_groups: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug)]
pub struct BuildOutput {
    pub graph: HierarchicalIndexGraph,
    pub stats: BuildStats,
}

/// Builds both layers of the index.
///
/// Documents are embedded, each document's knowledge graph is extracted
/// (through `cache` when given), entity strings are merged on exact match
/// and each distinct entity is embedded once, and finally the document
/// layer is linked by top-`k` cosine similarity.
pub fn build_hig(
    corpus: &[Document],
    embed: &dyn EmbeddingProvider,
    completion: &dyn CompletionProvider,
    cfg: &BuildConfig,
    cache: Option<&mut ExtractionCache>,
) -> Result<BuildOutput, HigError> {
    if corpus.is_empty() {
        return Err(HigError::EmptyCorpus);
    }
    let mut ids = HashSet::new();
    for d in corpus {
        if !ids.insert(d.id.as_str()) {
            return Err(HigError::DuplicateDocument(d.id.clone()));
        }
    }
    cfg.template.validate()?;
    let mut stats = BuildStats::default();

    let doc_texts: Vec<String> = corpus.iter().map(|d| d.embedding_text(cfg.embed_title)).collect();
    let doc_vectors = embed_all(embed, &doc_texts, &mut stats, || {
        format!(
            "documents {}..{}",
            corpus[0].id,
            corpus[corpus.len() - 1].id
        )
    })?;
    let dimension = doc_vectors[0].dim();

    let extraction = extract_corpus(corpus, &cfg.template, completion, cache)?;
    stats.completion_calls = extraction.stats.completion_calls;
    stats.cache_hits = extraction.stats.cache_hits;
    stats.skipped_groups = extraction.stats.skipped_groups;
    stats.warnings = extraction.stats.warnings;
    let triples: Vec<_> = extraction.per_document.into_iter().flatten().collect();

    let entities = entities_in_order(&triples);
    let entity_vectors = if entities.is_empty() {
        Vec::new()
    } else {
        embed_all(embed, &entities, &mut stats, || format!("{} entities", entities.len()))?
    };
    if let Some(v) = entity_vectors.iter().find(|v| v.dim() != dimension) {
        return Err(HigError::Invariant(format!(
            "entity vectors have dimension {} but documents {dimension}",
            v.dim()
        )));
    }

    let doc_edges = build_document_graph(&doc_vectors, cfg.k)?;
    let manifest = Manifest {
        version: FORMAT_VERSION.to_string(),
        k: cfg.k,
        embedding_model: embed.identity(),
        dimension,
        completion_model: completion.model_name(),
        template_language: cfg.template.language,
        template_hash: cfg.template.hash(),
        embed_title: cfg.embed_title,
        counts: Counts {
            documents: corpus.len(),
            edges: doc_edges.iter().map(Vec::len).sum(),
            entities: entities.len(),
            triples: triples.len(),
        },
    };
    let graph = HierarchicalIndexGraph::from_parts(
        manifest,
        corpus.to_vec(),
        doc_vectors,
        doc_edges,
        entity_vectors,
        triples,
    )?;
    Ok(BuildOutput { graph, stats })
}

fn embed_all(
    embed: &dyn EmbeddingProvider,
    texts: &[String],
    stats: &mut BuildStats,
    what: impl Fn() -> String,
) -> Result<Vec<Embedding>, HigError> {
    stats.embed_calls += 1;
    let vectors = embed.embed(texts).map_err(|source| HigError::Embedding {
        what: what(),
        source,
    })?;
    if vectors.len() != texts.len() {
        return Err(HigError::Invariant(format!(
            "embedding {} returned {} vectors for {} inputs",
            what(),
            vectors.len(),
            texts.len()
        )));
    }
    Ok(vectors)
}
