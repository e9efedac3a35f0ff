use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::templates::{CHINESE_EXAMPLES, ENGLISH_EXAMPLES, INSTRUCTION};
use super::ExtractionError;
use crate::corpus::Document;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateLanguage {
    English,
    Chinese,
}

impl std::str::FromStr for TemplateLanguage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "english" | "en" => Ok(Self::English),
            "chinese" | "zh" => Ok(Self::Chinese),
            other => Err(format!("unknown template language {other:?}")),
        }
    }
}

impl std::fmt::Display for TemplateLanguage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::English => "english",
            Self::Chinese => "chinese",
        })
    }
}

/// One worked example: source text and the triples expected for it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub text: String,
    pub triples: String,
}

/// In-context extraction prompt: an instruction plus at least one example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub instruction: String,
    pub few_shot_examples: Vec<FewShotExample>,
    pub language: TemplateLanguage,
}

impl PromptTemplate {
    pub fn new(
        instruction: impl Into<String>,
        few_shot_examples: Vec<FewShotExample>,
        language: TemplateLanguage,
    ) -> Result<Self, ExtractionError> {
        let template = Self {
            instruction: instruction.into(),
            few_shot_examples,
            language,
        };
        template.validate()?;
        Ok(template)
    }

    /// Built-in template for the given language.
    pub fn builtin(language: TemplateLanguage) -> Self {
        let examples = match language {
            TemplateLanguage::English => &ENGLISH_EXAMPLES,
            TemplateLanguage::Chinese => &CHINESE_EXAMPLES,
        };
        Self {
            instruction: INSTRUCTION.to_string(),
            few_shot_examples: examples
                .iter()
                .map(|(text, triples)| FewShotExample {
                    text: text.to_string(),
                    triples: triples.to_string(),
                })
                .collect(),
            language,
        }
    }

    pub fn english() -> Self {
        Self::builtin(TemplateLanguage::English)
    }

    pub fn chinese() -> Self {
        Self::builtin(TemplateLanguage::Chinese)
    }

    pub fn validate(&self) -> Result<(), ExtractionError> {
        if self.few_shot_examples.is_empty() {
            return Err(ExtractionError::Template(
                "template needs at least one few-shot example".into(),
            ));
        }
        if self.instruction.trim().is_empty() {
            return Err(ExtractionError::Template("template instruction is empty".into()));
        }
        Ok(())
    }

    /// Content hash used as part of the extraction cache key.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.language.to_string().as_bytes());
        hasher.update([0]);
        hasher.update(self.instruction.as_bytes());
        for ex in &self.few_shot_examples {
            hasher.update([0]);
            hasher.update(ex.text.as_bytes());
            hasher.update([0]);
            hasher.update(ex.triples.as_bytes());
        }
        hex::encode(&hasher.finalize()[..16])
    }
}

pub(crate) const SEPARATOR: &str = "#";

/// Lays out instruction, `#`-separated Text/Triples example blocks, and the
/// target document with an empty Triples slot.
pub fn build_extraction_prompt(
    doc: &Document,
    template: &PromptTemplate,
) -> Result<String, ExtractionError> {
    template.validate()?;
    if doc.text.is_empty() {
        return Err(ExtractionError::Template(format!(
            "document {} has empty text",
            doc.id
        )));
    }
    let mut prompt = String::with_capacity(
        template.instruction.len()
            + doc.text.len()
            + template
                .few_shot_examples
                .iter()
                .map(|e| e.text.len() + e.triples.len() + 32)
                .sum::<usize>(),
    );
    prompt.push_str(&template.instruction);
    prompt.push('\n');
    for ex in &template.few_shot_examples {
        prompt.push_str(SEPARATOR);
        prompt.push_str("\nText: ");
        prompt.push_str(&ex.text);
        prompt.push_str("\nTriples: ");
        prompt.push_str(&ex.triples);
        prompt.push('\n');
    }
    prompt.push_str(SEPARATOR);
    prompt.push_str("\nText: ");
    prompt.push_str(&doc.text);
    prompt.push_str("\nTriples:");
    Ok(prompt)
}
