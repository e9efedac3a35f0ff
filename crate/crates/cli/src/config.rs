//! Provider configuration file and parameter resolution.
//!
//! ```toml
//! [embedding]
//! kind = "openai"            # or "mock"
//! base_url = "http://localhost:8000"
//! model_name = "my-embedding-model"
//!
//! [completion]
//! kind = "mock"
//! replies = "replies.jsonl"  # {"match": .., "reply": ..} per line
//! fallback = "echo-last-line"
//!
//! [params]
//! preset = "hotpotqa"
//! lambda = 0.2
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use kgr_core::providers::http::{HttpCompletion, HttpEmbedder};
use kgr_core::providers::mock::{load_rules, MockCompletion, MockEmbedder, MockFallback};
use kgr_core::{CompletionProvider, EmbeddingProvider, Preset, ProviderConfig};
use serde::Deserialize;

use crate::UsageError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub preset: Option<Preset>,
    pub k: Option<usize>,
    pub n: Option<usize>,
    pub t: Option<usize>,
    pub lambda: Option<f64>,
    pub strategy: Option<String>,
    pub hops: Option<usize>,
    pub style: Option<String>,
    pub embed_title: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub embedding: Option<toml::Table>,
    pub completion: Option<toml::Table>,
    #[serde(default)]
    pub params: ParamsSection,
    /// Directory of the config file; relative paths inside it resolve here.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read provider config {}", path.display()))?;
        let mut cfg: FileConfig = toml::from_str(&text)
            .map_err(|e| UsageError(format!("provider config {}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }
}

fn kind(section: &toml::Table, what: &str) -> Result<String> {
    match section.get("kind") {
        Some(toml::Value::String(k)) => Ok(k.clone()),
        Some(_) => Err(UsageError(format!("[{what}] kind must be a string")).into()),
        None => Err(UsageError(format!("[{what}] needs kind = \"openai\" or \"mock\"")).into()),
    }
}

fn without_kind(section: &toml::Table) -> toml::Table {
    let mut t = section.clone();
    t.remove("kind");
    t
}

fn http_config(section: &toml::Table, what: &str) -> Result<ProviderConfig> {
    toml::Value::Table(without_kind(section))
        .try_into()
        .map_err(|e| UsageError(format!("[{what}]: {e}")).into())
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MockEmbeddingSection {
    seed: Option<u64>,
    dimension: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MockCompletionSection {
    replies: Option<PathBuf>,
    #[serde(default)]
    fallback: Option<String>,
    reply: Option<String>,
}

/// The embedder named by the config; the offline mock when there is none.
/// `seed` (from the command line) overrides the mock's configured seed.
pub fn embedder(cfg: Option<&FileConfig>, seed: Option<u64>) -> Result<Box<dyn EmbeddingProvider>> {
    let Some(section) = cfg.and_then(|c| c.embedding.as_ref()) else {
        return Ok(Box::new(MockEmbedder::new(seed.unwrap_or(0))));
    };
    match kind(section, "embedding")?.as_str() {
        "openai" => Ok(Box::new(HttpEmbedder::new(http_config(section, "embedding")?)?)),
        "mock" => {
            let m: MockEmbeddingSection = toml::Value::Table(without_kind(section))
                .try_into()
                .map_err(|e| UsageError(format!("[embedding]: {e}")))?;
            let seed = seed.or(m.seed).unwrap_or(0);
            Ok(Box::new(match m.dimension {
                Some(d) if d > 0 => MockEmbedder::with_dimension(seed, d),
                Some(_) => bail!(UsageError("[embedding] dimension must be positive".into())),
                None => MockEmbedder::new(seed),
            }))
        }
        other => Err(UsageError(format!("[embedding] unknown kind {other:?}")).into()),
    }
}

pub fn completion(cfg: Option<&FileConfig>) -> Result<Box<dyn CompletionProvider>> {
    let Some(cfg) = cfg else {
        return Ok(Box::new(MockCompletion::echo_last_line()));
    };
    let Some(section) = cfg.completion.as_ref() else {
        return Ok(Box::new(MockCompletion::echo_last_line()));
    };
    match kind(section, "completion")?.as_str() {
        "openai" => Ok(Box::new(HttpCompletion::new(http_config(section, "completion")?)?)),
        "mock" => {
            let m: MockCompletionSection = toml::Value::Table(without_kind(section))
                .try_into()
                .map_err(|e| UsageError(format!("[completion]: {e}")))?;
            let fallback = match (m.fallback.as_deref(), m.reply) {
                (None | Some("echo-last-line"), None) => MockFallback::EchoLastLine,
                (None | Some("canned"), Some(r)) => MockFallback::Canned(r),
                (Some("error"), None) => MockFallback::Error,
                (Some(f), _) => bail!(UsageError(format!(
                    "[completion] fallback {f:?} (expected echo-last-line, canned with reply, or error)"
                ))),
            };
            let rules = match m.replies {
                Some(p) => load_rules(cfg.base_dir.join(p))?,
                None => Vec::new(),
            };
            Ok(Box::new(MockCompletion::scripted(rules, fallback)))
        }
        other => Err(UsageError(format!("[completion] unknown kind {other:?}")).into()),
    }
}
