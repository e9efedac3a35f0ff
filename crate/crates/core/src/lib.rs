//! Two-layer hierarchical index graph over a document corpus, with
//! single-pass knowledge retrieval.
//!
//! The index stacks a document similarity graph (each document linked to its
//! `K` most cosine-similar neighbours) on top of an entity-level knowledge
//! graph extracted per document by a completion model. A query is embedded
//! once, matched against documents, expanded along the document graph with
//! one of three collaboration strategies, and answered with the triples of
//! entities whose weighted similarity to the query clears a threshold.

pub mod clock;
pub mod corpus;
pub mod evaluation;
pub mod extraction;
pub mod generation;
pub mod hig;
pub mod params;
pub mod providers;
pub mod retrieval;
mod text;

pub use corpus::{load_corpus, load_qa_items, normalize_text, Document, QaItem};
pub use evaluation::{bleu, exact_match, rouge_l, run_benchmark, EvalReport};
pub use extraction::{PromptTemplate, TemplateLanguage, Triple};
pub use generation::{answer, assemble_answer_prompt, generate_answer, AnswerStyle};
pub use hig::{build_hig, load_index, save_index, BuildConfig, HierarchicalIndexGraph};
pub use params::{Preset, Profile};
pub use providers::{
    cosine_similarity, CompletionProvider, Embedding, EmbeddingProvider, ProviderConfig,
    ProviderError,
};
pub use retrieval::{
    retrieve, Accounting, CandidateDoc, RetrievalParams, RetrievedContext, ScoredTriple, Strategy,
};
pub use text::tokenize;
