use serde::{Deserialize, Serialize};

use crate::corpus::normalize_text;

/// One `(head; relation; tail)` fact and the document it came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triple {
    #[serde(rename = "h")]
    pub head: String,
    #[serde(rename = "r")]
    pub relation: String,
    #[serde(rename = "t")]
    pub tail: String,
    pub source_doc: String,
}

impl Triple {
    pub fn new(
        head: impl Into<String>,
        relation: impl Into<String>,
        tail: impl Into<String>,
        source_doc: impl Into<String>,
    ) -> Self {
        Self {
            head: head.into(),
            relation: relation.into(),
            tail: tail.into(),
            source_doc: source_doc.into(),
        }
    }

    /// Surface form used both in extraction output and answer prompts.
    pub fn render(&self) -> String {
        format!("({}; {}; {})", self.head, self.relation, self.tail)
    }

    pub fn key(&self) -> (&str, &str, &str) {
        (&self.head, &self.relation, &self.tail)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseOutcome {
    /// Well-formed triples in appearance order, first occurrence kept.
    pub triples: Vec<Triple>,
    /// Groups without exactly three nonempty parts.
    pub skipped: usize,
    /// Well-formed groups dropped as exact repeats.
    pub duplicates: usize,
    /// Parenthesized candidate groups found.
    pub groups: usize,
}

/// Scans LLM output for parenthesized groups.
///
/// A group opens at `(` and closes when nesting returns to zero, or early at
/// a `)` followed by `,` and another `(` (the separator between triples), so
/// a stray `(` inside an entity cannot swallow the rest of the output. An
/// unterminated trailing group is still returned.
fn candidate_groups(output: &str) -> Vec<&str> {
    let bytes = output.as_bytes();
    let mut groups = Vec::new();
    let mut i = 0;
    while let Some(off) = output[i..].find('(') {
        let start = i + off + 1;
        let mut depth = 1usize;
        let mut j = start;
        let mut end = None;
        while j < bytes.len() {
            match bytes[j] {
                b'(' => depth += 1,
                b')' => {
                    if separator_follows(bytes, j + 1) {
                        end = Some(j);
                        break;
                    }
                    depth -= 1;
                    if depth == 0 {
                        end = Some(j);
                        break;
                    }
                }
                _ => {}
            }
            j += 1;
        }
        match end {
            Some(e) => {
                groups.push(&output[start..e]);
                i = e + 1;
            }
            None => {
                groups.push(&output[start..]);
                break;
            }
        }
    }
    groups
}

/// True when `bytes[from..]` starts with optional whitespace, `,`, optional
/// whitespace and `(`.
fn separator_follows(bytes: &[u8], from: usize) -> bool {
    let mut k = from;
    while k < bytes.len() && bytes[k].is_ascii_whitespace() {
        k += 1;
    }
    if k >= bytes.len() || bytes[k] != b',' {
        return false;
    }
    k += 1;
    while k < bytes.len() && bytes[k].is_ascii_whitespace() {
        k += 1;
    }
    k < bytes.len() && bytes[k] == b'('
}

/// Total parser: malformed groups are counted, never fatal.
pub fn parse_triples(llm_output: &str, source_doc: &str) -> ParseOutcome {
    let mut outcome = ParseOutcome::default();
    let mut seen = std::collections::HashSet::new();
    for group in candidate_groups(llm_output) {
        outcome.groups += 1;
        let parts: Vec<String> = group.split(';').map(normalize_text).collect();
        if parts.len() != 3 || parts.iter().any(String::is_empty) {
            outcome.skipped += 1;
            continue;
        }
        let mut parts = parts.into_iter();
        let triple = Triple {
            head: parts.next().unwrap_or_default(),
            relation: parts.next().unwrap_or_default(),
            tail: parts.next().unwrap_or_default(),
            source_doc: source_doc.to_string(),
        };
        if seen.insert((triple.head.clone(), triple.relation.clone(), triple.tail.clone())) {
            outcome.triples.push(triple);
        } else {
            outcome.duplicates += 1;
        }
    }
    outcome
}
