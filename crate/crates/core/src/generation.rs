//! Final answer generation from retrieved triples.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::{elapsed_ms, Clock, SystemClock};
use crate::hig::HierarchicalIndexGraph;
use crate::providers::{CompletionProvider, EmbeddingProvider, ProviderError};
use crate::retrieval::{retrieve_with_clock, RetrievalError, RetrievalParams, RetrievedContext};

pub const SHORT_FORM_INSTRUCTION: &str = "Answer the question using the knowledge triples below. \
Reply with a short answer span only (a name, date, number or phrase), without explanation.";

pub const LONG_FORM_INSTRUCTION: &str = "Answer the question using the knowledge triples below. \
Write a complete and fluent answer of one or more sentences.";

pub const NO_KNOWLEDGE_NOTICE: &str =
    "No retrieved knowledge is available for this question; answer from what you know.";

/// Default layout. The question is kept on the final line.
pub const DEFAULT_ANSWER_TEMPLATE: &str =
    "{{instruction}}\n\nKnowledge:\n{{triples}}\n\nQuestion:\n{{question}}";

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("answer template: {0}")]
    Template(String),
    #[error("cannot read answer template {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("question is empty")]
    EmptyQuestion,
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error("answer generation failed: {0}")]
    Provider(#[from] ProviderError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerStyle {
    /// Short extractive span, scored with exact match.
    #[default]
    ShortForm,
    /// Free-form sentences, scored with BLEU and Rouge-L.
    LongForm,
}

impl AnswerStyle {
    pub fn instruction(self) -> &'static str {
        match self {
            AnswerStyle::ShortForm => SHORT_FORM_INSTRUCTION,
            AnswerStyle::LongForm => LONG_FORM_INSTRUCTION,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AnswerStyle::ShortForm => "short",
            AnswerStyle::LongForm => "long",
        }
    }
}

impl FromStr for AnswerStyle {
    type Err = GenerationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "short" | "short_form" | "short-form" => Ok(AnswerStyle::ShortForm),
            "long" | "long_form" | "long-form" => Ok(AnswerStyle::LongForm),
            other => Err(GenerationError::Template(format!(
                "unknown answer style {other:?} (expected short or long)"
            ))),
        }
    }
}

/// Plain-text prompt layout with `{{triples}}` and `{{question}}`
/// placeholders and an optional `{{instruction}}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerTemplate {
    body: String,
}

impl Default for AnswerTemplate {
    fn default() -> Self {
        Self {
            body: DEFAULT_ANSWER_TEMPLATE.to_string(),
        }
    }
}

impl AnswerTemplate {
    pub fn new(body: impl Into<String>) -> Result<Self, GenerationError> {
        let body = body.into();
        for needed in ["{{triples}}", "{{question}}"] {
            if !body.contains(needed) {
                return Err(GenerationError::Template(format!("missing placeholder {needed}")));
            }
        }
        Ok(Self { body })
    }

    pub fn from_file(path: &Path) -> Result<Self, GenerationError> {
        let body = std::fs::read_to_string(path).map_err(|source| GenerationError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::new(body.trim_end().to_string())
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    pub fn render(&self, question: &str, context: &RetrievedContext, style: AnswerStyle) -> String {
        let triples = if context.triples.is_empty() {
            NO_KNOWLEDGE_NOTICE.to_string()
        } else {
            context
                .triples
                .iter()
                .map(|t| t.render())
                .collect::<Vec<_>>()
                .join("\n")
        };
        self.body
            .replace("{{instruction}}", style.instruction())
            .replace("{{triples}}", &triples)
            .replace("{{question}}", question)
    }
}

/// The answer prompt under the default layout: instruction, one
/// `(h; r; t)` line per triple in score order, then the question.
pub fn assemble_answer_prompt(question: &str, context: &RetrievedContext, style: AnswerStyle) -> String {
    AnswerTemplate::default().render(question, context, style)
}

/// One completion call on the assembled prompt; the reply is trimmed.
pub fn generate_answer(
    question: &str,
    context: &RetrievedContext,
    completion: &dyn CompletionProvider,
    style: AnswerStyle,
) -> Result<String, GenerationError> {
    generate_with_template(&AnswerTemplate::default(), question, context, completion, style)
}

pub fn generate_with_template(
    template: &AnswerTemplate,
    question: &str,
    context: &RetrievedContext,
    completion: &dyn CompletionProvider,
    style: AnswerStyle,
) -> Result<String, GenerationError> {
    if question.trim().is_empty() {
        return Err(GenerationError::EmptyQuestion);
    }
    let prompt = template.render(question, context, style);
    Ok(completion.complete(&prompt)?.trim().to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsweredQuery {
    #[serde(flatten)]
    pub context: RetrievedContext,
    pub answer: String,
}

/// Retrieval followed by generation. The context's accounting covers both
/// steps.
#[allow(clippy::too_many_arguments)]
pub fn answer_query(
    question: &str,
    graph: &HierarchicalIndexGraph,
    params: &RetrievalParams,
    embed: &dyn EmbeddingProvider,
    completion: &dyn CompletionProvider,
    template: &AnswerTemplate,
    style: AnswerStyle,
    clock: &dyn Clock,
) -> Result<AnsweredQuery, GenerationError> {
    let start = clock.now();
    let mut context = retrieve_with_clock(question, graph, params, embed, clock)?;
    let answer = generate_with_template(template, question, &context, completion, style)?;
    context.accounting.completion_calls += 1;
    context.accounting.wall_ms = elapsed_ms(clock, start);
    Ok(AnsweredQuery { context, answer })
}

/// [`answer_query`] with the default template and the system clock.
pub fn answer(
    question: &str,
    graph: &HierarchicalIndexGraph,
    params: &RetrievalParams,
    embed: &dyn EmbeddingProvider,
    completion: &dyn CompletionProvider,
    style: AnswerStyle,
) -> Result<AnsweredQuery, GenerationError> {
    answer_query(
        question,
        graph,
        params,
        embed,
        completion,
        &AnswerTemplate::default(),
        style,
        &SystemClock::default(),
    )
}
