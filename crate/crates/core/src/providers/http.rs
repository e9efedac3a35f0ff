//! OpenAI-compatible HTTP providers (`/v1/embeddings`, `/v1/chat/completions`).

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use reqwest::blocking::Client;
use serde::Deserialize;
use serde_json::json;

use super::{
    check_dimensions, check_embed_input, CompletionProvider, Embedding, EmbeddingProvider,
    InFlightGate, ProviderConfig, ProviderError,
};

struct Endpoint {
    config: ProviderConfig,
    url: String,
    client: Client,
    gate: InFlightGate,
    api_key: Option<String>,
}

impl Endpoint {
    fn new(config: ProviderConfig, path: &str) -> Result<Self, ProviderError> {
        config.validate()?;
        let url = format!("{}{path}", config.base_url.trim_end_matches('/'));
        let client = Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build()
            .map_err(|e| ProviderError::Config(e.to_string()))?;
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.is_empty());
        if api_key.is_none() {
            tracing::debug!(var = %config.api_key_env, "no API key in environment; sending unauthenticated requests");
        }
        Ok(Self {
            gate: InFlightGate::new(config.max_in_flight),
            config,
            url,
            client,
            api_key,
        })
    }

    fn truncate<'a>(&self, text: &'a str) -> &'a str {
        match self.config.max_input_chars {
            Some(limit) => match text.char_indices().nth(limit) {
                Some((byte, _)) => &text[..byte],
                None => text,
            },
            None => text,
        }
    }

    /// POSTs `body`, retrying retryable failures with exponential backoff.
    fn post<T: for<'de> Deserialize<'de>>(
        &self,
        body: &serde_json::Value,
    ) -> Result<T, ProviderError> {
        let mut attempt = 0u32;
        loop {
            let result = {
                let _permit = self.gate.acquire();
                self.post_once(body)
            };
            match result {
                Err(e) if e.is_retryable() && attempt < self.config.retries => {
                    let delay = self.config.backoff_ms.saturating_mul(1u64 << attempt.min(16));
                    tracing::warn!(url = %self.url, attempt, error = %e, "retrying provider request");
                    std::thread::sleep(Duration::from_millis(delay));
                    attempt += 1;
                }
                other => return other,
            }
        }
    }

    fn post_once<T: for<'de> Deserialize<'de>>(
        &self,
        body: &serde_json::Value,
    ) -> Result<T, ProviderError> {
        let mut req = self.client.post(&self.url).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| ProviderError::Transport {
            url: self.url.clone(),
            message: e.to_string(),
        })?;
        let status = resp.status();
        let text = resp.text().map_err(|e| ProviderError::Transport {
            url: self.url.clone(),
            message: e.to_string(),
        })?;
        if !status.is_success() {
            return Err(ProviderError::Status {
                url: self.url.clone(),
                status: status.as_u16(),
                body: text.chars().take(512).collect(),
            });
        }
        serde_json::from_str(&text).map_err(|e| ProviderError::Decode {
            url: self.url.clone(),
            message: e.to_string(),
        })
    }
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    embedding: Vec<f32>,
    #[serde(default)]
    index: Option<usize>,
}

#[derive(Deserialize)]
struct ChatResponse {
    #[serde(default)]
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    #[serde(default)]
    content: Option<String>,
}

pub struct HttpEmbedder {
    endpoint: Endpoint,
}

impl HttpEmbedder {
    pub fn new(config: ProviderConfig) -> Result<Self, ProviderError> {
        Ok(Self {
            endpoint: Endpoint::new(config, "/v1/embeddings")?,
        })
    }

    pub fn url(&self) -> &str {
        &self.endpoint.url
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Embedding>, ProviderError> {
        let input: Vec<&str> = texts.iter().map(|t| self.endpoint.truncate(t)).collect();
        let body = json!({ "model": self.endpoint.config.model_name, "input": input });
        let resp: EmbeddingResponse = self.endpoint.post(&body)?;
        if resp.data.len() != texts.len() {
            return Err(ProviderError::Decode {
                url: self.endpoint.url.clone(),
                message: format!("expected {} embeddings, got {}", texts.len(), resp.data.len()),
            });
        }
        // Responses may carry explicit indices; otherwise position is order.
        let mut slots: Vec<Option<Embedding>> = vec![None; texts.len()];
        for (pos, datum) in resp.data.into_iter().enumerate() {
            let idx = datum.index.unwrap_or(pos);
            let slot = slots.get_mut(idx).ok_or_else(|| ProviderError::Decode {
                url: self.endpoint.url.clone(),
                message: format!("embedding index {idx} out of range"),
            })?;
            *slot = Some(Embedding::new(datum.embedding)?);
        }
        slots
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                s.ok_or_else(|| ProviderError::Decode {
                    url: self.endpoint.url.clone(),
                    message: format!("missing embedding for input {i}"),
                })
            })
            .collect()
    }
}

impl EmbeddingProvider for HttpEmbedder {
    fn identity(&self) -> String {
        format!("openai:{}", self.endpoint.config.model_name)
    }

    fn dimension(&self) -> Option<usize> {
        self.endpoint.config.dimension
    }

    fn max_in_flight(&self) -> usize {
        self.endpoint.config.max_in_flight
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>, ProviderError> {
        check_embed_input(texts)?;
        let chunks: Vec<&[String]> = texts.chunks(self.endpoint.config.batch_size).collect();
        let mut results: Vec<Option<Result<Vec<Embedding>, ProviderError>>> =
            (0..chunks.len()).map(|_| None).collect();
        if chunks.len() == 1 {
            results[0] = Some(self.embed_batch(chunks[0]));
        } else {
            let next = AtomicUsize::new(0);
            let workers = self.endpoint.gate.limit().min(chunks.len());
            let collected = std::sync::Mutex::new(&mut results);
            std::thread::scope(|s| {
                for _ in 0..workers {
                    s.spawn(|| loop {
                        let i = next.fetch_add(1, Ordering::SeqCst);
                        let Some(chunk) = chunks.get(i) else { break };
                        let r = self.embed_batch(chunk);
                        let failed = r.is_err();
                        collected.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(r);
                        if failed {
                            break;
                        }
                    });
                }
            });
        }
        let mut out = Vec::with_capacity(texts.len());
        for r in results.into_iter().flatten() {
            out.extend(r?);
        }
        if out.len() != texts.len() {
            return Err(ProviderError::Decode {
                url: self.endpoint.url.clone(),
                message: "embedding batch aborted".into(),
            });
        }
        check_dimensions(&out, self.dimension())?;
        Ok(out)
    }
}

pub struct HttpCompletion {
    endpoint: Endpoint,
}

impl HttpCompletion {
    pub fn new(config: ProviderConfig) -> Result<Self, ProviderError> {
        Ok(Self {
            endpoint: Endpoint::new(config, "/v1/chat/completions")?,
        })
    }

    pub fn url(&self) -> &str {
        &self.endpoint.url
    }
}

impl CompletionProvider for HttpCompletion {
    fn model_name(&self) -> String {
        self.endpoint.config.model_name.clone()
    }

    fn max_in_flight(&self) -> usize {
        self.endpoint.config.max_in_flight
    }

    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        if prompt.is_empty() {
            return Err(ProviderError::Precondition("empty prompt".into()));
        }
        let body = json!({
            "model": self.endpoint.config.model_name,
            "messages": [{ "role": "user", "content": self.endpoint.truncate(prompt) }],
        });
        let resp: ChatResponse = self.endpoint.post(&body)?;
        resp.choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .filter(|c| !c.is_empty())
            .ok_or_else(|| ProviderError::EmptyResponse {
                url: self.endpoint.url.clone(),
            })
    }
}
