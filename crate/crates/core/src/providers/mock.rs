//! Deterministic offline providers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{check_embed_input, CompletionProvider, Embedding, EmbeddingProvider, ProviderError};
use crate::text::tokenize;

pub const MOCK_DIMENSION: usize = 64;

/// Bag-of-tokens embedder: each distinct token hashes (with the seed) to a
/// pseudo-random direction, a text is the count-weighted sum of its token
/// directions, unit-normalized. Token order does not matter, and texts that
/// share words get positive cosine.
#[derive(Debug, Clone)]
pub struct MockEmbedder {
    seed: u64,
    dimension: usize,
}

impl MockEmbedder {
    pub fn new(seed: u64) -> Self {
        Self::with_dimension(seed, MOCK_DIMENSION)
    }

    pub fn with_dimension(seed: u64, dimension: usize) -> Self {
        Self {
            seed,
            dimension: dimension.max(1),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn token_direction(&self, token: &str, out: &mut [f64]) {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(token.as_bytes());
        let digest = hasher.finalize();
        let mut key = [0u8; 8];
        key.copy_from_slice(&digest[..8]);
        let mut rng = ChaCha8Rng::seed_from_u64(u64::from_le_bytes(key));
        for slot in out.iter_mut() {
            *slot += rng.random_range(-1.0f64..1.0);
        }
    }

    /// Embeds a single text. Pure in `(seed, dimension, token multiset)`.
    pub fn embed_one(&self, text: &str) -> Embedding {
        let mut tokens = bag_of_tokens(text);
        if tokens.is_empty() {
            tokens.push(text.to_string());
        }
        tokens.sort_unstable();
        let mut acc = vec![0.0f64; self.dimension];
        for token in &tokens {
            self.token_direction(token, &mut acc);
        }
        let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            // only reachable for pathological cancellation; fall back to an axis
            acc[0] = 1.0;
            return Embedding(acc.iter().map(|&v| v as f32).collect());
        }
        Embedding(acc.iter().map(|&v| (v / norm) as f32).collect())
    }
}

fn bag_of_tokens(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .flat_map(|tok| {
            tok.split(|c: char| !c.is_alphanumeric())
                .filter(|s| !s.is_empty())
                .map(str::to_lowercase)
                .collect::<Vec<_>>()
        })
        .collect()
}

impl EmbeddingProvider for MockEmbedder {
    fn identity(&self) -> String {
        format!("mock:seed={}:dim={}", self.seed, self.dimension)
    }

    fn dimension(&self) -> Option<usize> {
        Some(self.dimension)
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>, ProviderError> {
        check_embed_input(texts)?;
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

/// One scripted reply: the first rule whose `needle` occurs in the prompt wins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockRule {
    #[serde(rename = "match")]
    pub needle: String,
    #[serde(flatten)]
    pub outcome: MockOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MockOutcome {
    Reply(String),
    /// Simulates a transport failure carrying this message.
    Error(String),
}

/// What the mock does when no rule matches.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MockFallback {
    /// Returns the last nonempty line of the prompt.
    #[default]
    EchoLastLine,
    Canned(String),
    Error,
}

#[derive(Debug, Clone, Default)]
pub struct MockCompletion {
    rules: Vec<MockRule>,
    fallback: MockFallback,
}

pub const MOCK_URL: &str = "mock://completion";

impl MockCompletion {
    pub fn canned(reply: impl Into<String>) -> Self {
        Self {
            rules: Vec::new(),
            fallback: MockFallback::Canned(reply.into()),
        }
    }

    pub fn echo_last_line() -> Self {
        Self::default()
    }

    pub fn failing() -> Self {
        Self {
            rules: Vec::new(),
            fallback: MockFallback::Error,
        }
    }

    pub fn scripted(rules: Vec<MockRule>, fallback: MockFallback) -> Self {
        Self { rules, fallback }
    }

    pub fn with_reply(mut self, needle: impl Into<String>, reply: impl Into<String>) -> Self {
        self.rules.push(MockRule {
            needle: needle.into(),
            outcome: MockOutcome::Reply(reply.into()),
        });
        self
    }

    pub fn with_error(mut self, needle: impl Into<String>, message: impl Into<String>) -> Self {
        self.rules.push(MockRule {
            needle: needle.into(),
            outcome: MockOutcome::Error(message.into()),
        });
        self
    }
}

/// Reads scripted rules from a JSONL file, one `{"match", "reply"|"error"}`
/// object per line. Blank lines are skipped.
pub fn load_rules(path: impl AsRef<std::path::Path>) -> Result<Vec<MockRule>, ProviderError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| ProviderError::Config(format!("cannot read {}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| {
                ProviderError::Config(format!("{} line {}: {e}", path.display(), i + 1))
            })
        })
        .collect()
}

impl CompletionProvider for MockCompletion {
    fn model_name(&self) -> String {
        "mock".into()
    }

    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        if prompt.is_empty() {
            return Err(ProviderError::Precondition("empty prompt".into()));
        }
        let outcome = self
            .rules
            .iter()
            .find(|r| prompt.contains(r.needle.as_str()))
            .map(|r| r.outcome.clone());
        let reply = match outcome {
            Some(MockOutcome::Reply(r)) => r,
            Some(MockOutcome::Error(message)) => {
                return Err(ProviderError::Transport {
                    url: MOCK_URL.into(),
                    message,
                })
            }
            None => match &self.fallback {
                MockFallback::EchoLastLine => prompt
                    .lines()
                    .rev()
                    .find(|l| !l.trim().is_empty())
                    .unwrap_or_default()
                    .to_string(),
                MockFallback::Canned(r) => r.clone(),
                MockFallback::Error => {
                    return Err(ProviderError::Transport {
                        url: MOCK_URL.into(),
                        message: "mock configured to fail".into(),
                    })
                }
            },
        };
        if reply.is_empty() {
            return Err(ProviderError::EmptyResponse {
                url: MOCK_URL.into(),
            });
        }
        Ok(reply)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::cosine_similarity;

    fn strings(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn equal_inputs_give_identical_vectors() {
        let m = MockEmbedder::new(0);
        let v = m.embed(&strings(&["a", "a"])).unwrap();
        assert_eq!(v[0], v[1]);
    }

    #[test]
    fn distinct_inputs_give_distinct_unit_vectors() {
        let m = MockEmbedder::new(0);
        let v = m.embed(&strings(&["a", "b"])).unwrap();
        assert_ne!(v[0], v[1]);
        assert_eq!(v[0].dim(), MOCK_DIMENSION);
        assert_eq!(v[1].dim(), MOCK_DIMENSION);
        for e in &v {
            assert!((e.norm() - 1.0).abs() < 1e-6);
        }
        assert!(cosine_similarity(&v[0], &v[1]).unwrap() < 0.999);
    }

    #[test]
    fn empty_batch_and_empty_text_rejected() {
        let m = MockEmbedder::new(0);
        assert!(matches!(m.embed(&[]), Err(ProviderError::Precondition(_))));
        assert!(matches!(m.embed(&strings(&[""])), Err(ProviderError::Precondition(_))));
    }

    #[test]
    fn token_order_and_case_do_not_matter() {
        let m = MockEmbedder::new(7);
        assert_eq!(m.embed_one("Adam Collis filmmaker"), m.embed_one("filmmaker, adam collis"));
        assert_ne!(m.embed_one("adam bob"), m.embed_one("adam adam bob"));
    }

    #[test]
    fn seed_changes_vectors_and_repeats_are_byte_identical() {
        let a = MockEmbedder::new(0).embed_one("Paris");
        let b = MockEmbedder::new(1).embed_one("Paris");
        assert_ne!(a, b);
        let again = MockEmbedder::new(0).embed_one("Paris");
        let bits = |e: &Embedding| e.0.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&again));
    }

    #[test]
    fn shared_words_raise_similarity() {
        let m = MockEmbedder::new(0);
        let q = m.embed_one("Who directed Love in the Ruins?");
        let related = m.embed_one("Love in the Ruins");
        let unrelated = m.embed_one("Marilyn Manson");
        assert!(
            cosine_similarity(&q, &related).unwrap() > cosine_similarity(&q, &unrelated).unwrap()
        );
    }

    #[test]
    fn completion_behaviours() {
        assert_eq!(MockCompletion::canned("R").complete("anything").unwrap(), "R");
        assert!(matches!(
            MockCompletion::canned("R").complete(""),
            Err(ProviderError::Precondition(_))
        ));
        assert_eq!(MockCompletion::echo_last_line().complete("a\nQ?\n\n").unwrap(), "Q?");
        let scripted = MockCompletion::echo_last_line()
            .with_reply("alpha", "A")
            .with_error("beta", "boom");
        assert_eq!(scripted.complete("xx alpha").unwrap(), "A");
        assert!(matches!(
            scripted.complete("beta"),
            Err(ProviderError::Transport { .. })
        ));
        assert!(MockCompletion::failing().complete("x").is_err());
        assert!(matches!(
            MockCompletion::canned("").complete("x"),
            Err(ProviderError::EmptyResponse { .. })
        ));
    }

    #[test]
    fn rule_serde_shape() {
        let rule: MockRule = serde_json::from_str(r#"{"match":"q","reply":"A"}"#).unwrap();
        assert_eq!(rule.outcome, MockOutcome::Reply("A".into()));
        let rule: MockRule = serde_json::from_str(r#"{"match":"q","error":"down"}"#).unwrap();
        assert_eq!(rule.outcome, MockOutcome::Error("down".into()));
    }

    #[test]
    fn rules_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        std::fs::write(&path, "{\"match\":\"a\",\"reply\":\"x\"}\n\n{\"match\":\"b\",\"error\":\"down\"}\n").unwrap();
        let rules = load_rules(&path).unwrap();
        assert_eq!(rules.len(), 2);
        assert_eq!(rules[1].outcome, MockOutcome::Error("down".into()));
        std::fs::write(&path, "{\"match\":\"a\"}\n").unwrap();
        assert!(load_rules(&path).unwrap_err().to_string().contains("line 1"));
    }
}
