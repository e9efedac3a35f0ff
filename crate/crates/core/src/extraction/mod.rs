//! Knowledge-graph extraction: prompt construction, completion, and parsing.

mod cache;
mod parse;
mod prompt;
mod templates;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use thiserror::Error;

use crate::corpus::Document;
use crate::providers::{CompletionProvider, ProviderError};

pub use cache::{CacheRecord, ExtractionCache};
pub use parse::{parse_triples, ParseOutcome, Triple};
pub use prompt::{build_extraction_prompt, FewShotExample, PromptTemplate, TemplateLanguage};

#[derive(Debug, Error)]
pub enum ExtractionError {
    #[error("invalid template: {0}")]
    Template(String),
    #[error("extraction failed for document {doc_id}: {source}")]
    Provider {
        doc_id: String,
        #[source]
        source: ProviderError,
    },
    #[error("extraction cache {path}: {message}")]
    Cache { path: String, message: String },
}

/// Result of extracting one document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentExtraction {
    pub triples: Vec<Triple>,
    pub skipped: usize,
    /// Set when groups were skipped or nothing parsed.
    pub warning: Option<String>,
}

/// Prompts the completion provider for one document and parses its reply.
pub fn extract_document_kg(
    doc: &Document,
    template: &PromptTemplate,
    completion: &dyn CompletionProvider,
) -> Result<DocumentExtraction, ExtractionError> {
    let prompt = build_extraction_prompt(doc, template)?;
    let reply = completion
        .complete(&prompt)
        .map_err(|source| ExtractionError::Provider {
            doc_id: doc.id.clone(),
            source,
        })?;
    let parsed = parse_triples(&reply, &doc.id);
    let warning = if parsed.triples.is_empty() {
        Some(format!(
            "document {}: no triples parsed ({} malformed groups)",
            doc.id, parsed.skipped
        ))
    } else if parsed.skipped > 0 {
        Some(format!(
            "document {}: skipped {} malformed groups",
            doc.id, parsed.skipped
        ))
    } else {
        None
    };
    if let Some(w) = &warning {
        tracing::warn!("{w}");
    }
    Ok(DocumentExtraction {
        triples: parsed.triples,
        skipped: parsed.skipped,
        warning,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExtractionStats {
    pub completion_calls: usize,
    pub cache_hits: usize,
    pub skipped_groups: usize,
    pub warnings: Vec<String>,
}

/// Per-document triples in corpus order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusExtraction {
    pub per_document: Vec<Vec<Triple>>,
    pub stats: ExtractionStats,
}

/// Extracts every document, consulting and then updating `cache`.
///
/// Uncached documents run concurrently, at most `completion.max_in_flight()`
/// at a time. Newly extracted results are written to the cache in corpus
/// order even when another document fails, so a retried build never repeats
/// a completed call. The first failing document (by corpus position) is
/// reported.
pub fn extract_corpus(
    docs: &[Document],
    template: &PromptTemplate,
    completion: &dyn CompletionProvider,
    mut cache: Option<&mut ExtractionCache>,
) -> Result<CorpusExtraction, ExtractionError> {
    template.validate()?;
    let template_hash = template.hash();
    let model = completion.model_name();

    let mut per_document: Vec<Option<Vec<Triple>>> = docs
        .iter()
        .map(|d| {
            cache
                .as_deref()
                .and_then(|c| c.get(&d.id, &template_hash, &model))
        })
        .collect();
    let mut stats = ExtractionStats {
        cache_hits: per_document.iter().filter(|t| t.is_some()).count(),
        ..Default::default()
    };

    let pending: Vec<usize> = (0..docs.len()).filter(|&i| per_document[i].is_none()).collect();
    let results: Mutex<Vec<(usize, Result<DocumentExtraction, ExtractionError>)>> =
        Mutex::new(Vec::with_capacity(pending.len()));
    let next = AtomicUsize::new(0);
    let workers = completion.max_in_flight().max(1).min(pending.len());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let slot = next.fetch_add(1, Ordering::SeqCst);
                let Some(&doc_idx) = pending.get(slot) else {
                    break;
                };
                let r = extract_document_kg(&docs[doc_idx], template, completion);
                results
                    .lock()
                    .unwrap_or_else(|e| e.into_inner())
                    .push((doc_idx, r));
            });
        }
    });

    let mut results = results.into_inner().unwrap_or_else(|e| e.into_inner());
    results.sort_by_key(|(i, _)| *i);
    stats.completion_calls = results.len();
    let mut first_error = None;
    for (doc_idx, r) in results {
        match r {
            Ok(ex) => {
                stats.skipped_groups += ex.skipped;
                stats.warnings.extend(ex.warning);
                if let Some(c) = cache.as_deref_mut() {
                    c.insert(&docs[doc_idx].id, &template_hash, &model, &ex.triples)?;
                }
                per_document[doc_idx] = Some(ex.triples);
            }
            Err(e) => {
                if first_error.is_none() {
                    first_error = Some(e);
                }
            }
        }
    }
    if let Some(e) = first_error {
        return Err(e);
    }
    Ok(CorpusExtraction {
        per_document: per_document.into_iter().map(Option::unwrap_or_default).collect(),
        stats,
    })
}
