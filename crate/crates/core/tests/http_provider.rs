//! OpenAI-compatible providers against a local in-process HTTP server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;

use kgr_core::providers::http::{HttpCompletion, HttpEmbedder};
use kgr_core::{CompletionProvider, EmbeddingProvider, ProviderConfig, ProviderError};
use serde_json::{json, Value};

#[derive(Debug, Clone)]
struct Seen {
    path: String,
    authorization: Option<String>,
    body: Value,
}

type Handler = dyn Fn(usize, &Seen) -> (u16, String) + Send + Sync;

struct Server {
    base_url: String,
    seen: Arc<Mutex<Vec<Seen>>>,
}

fn read_request(stream: &mut TcpStream) -> Option<Seen> {
    let mut reader = BufReader::new(stream.try_clone().ok()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line).ok()?;
    let path = request_line.split_whitespace().nth(1)?.to_string();
    let mut len = 0usize;
    let mut authorization = None;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line).ok()?;
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        let (name, value) = line.split_once(':')?;
        match name.to_ascii_lowercase().as_str() {
            "content-length" => len = value.trim().parse().ok()?,
            "authorization" => authorization = Some(value.trim().to_string()),
            _ => {}
        }
    }
    let mut body = vec![0u8; len];
    reader.read_exact(&mut body).ok()?;
    Some(Seen {
        path,
        authorization,
        body: serde_json::from_slice(&body).unwrap_or(Value::Null),
    })
}

fn serve(handler: Box<Handler>) -> Server {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let base_url = format!("http://{}", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    let handler: Arc<Handler> = Arc::from(handler);
    let counter = Arc::new(AtomicUsize::new(0));
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { break };
            let log = Arc::clone(&log);
            let handler = Arc::clone(&handler);
            let counter = Arc::clone(&counter);
            thread::spawn(move || {
                let Some(req) = read_request(&mut stream) else { return };
                let n = counter.fetch_add(1, Ordering::SeqCst);
                let (status, body) = handler(n, &req);
                log.lock().unwrap().push(req);
                let resp = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
                let _ = stream.write_all(resp.as_bytes());
            });
        }
    });
    Server { base_url, seen }
}

fn config(base_url: &str) -> ProviderConfig {
    let mut c = ProviderConfig::new(base_url, "test-model");
    c.api_key_env = "KGR_TEST_UNSET_KEY_VARIABLE".into();
    c.backoff_ms = 1;
    c.timeout_secs = 5.0;
    c
}

fn embedding_reply(req: &Seen) -> String {
    // Returned in reverse order to exercise reordering by index.
    let inputs = req.body["input"].as_array().unwrap();
    let mut data: Vec<Value> = inputs
        .iter()
        .enumerate()
        .map(|(i, t)| json!({"index": i, "embedding": [t.as_str().unwrap().len() as f32, 1.0]}))
        .collect();
    data.reverse();
    json!({ "data": data }).to_string()
}

#[test]
fn embeddings_are_batched_and_reordered() {
    let server = serve(Box::new(|_, req| (200, embedding_reply(req))));
    let mut cfg = config(&server.base_url);
    cfg.batch_size = 2;
    cfg.dimension = Some(2);
    let embedder = HttpEmbedder::new(cfg).unwrap();
    assert_eq!(embedder.identity(), "openai:test-model");

    let texts: Vec<String> = ["a", "bb", "ccc", "dddd", "eeeee"].iter().map(|s| s.to_string()).collect();
    let vectors = embedder.embed(&texts).unwrap();
    let firsts: Vec<f32> = vectors.iter().map(|v| v.as_slice()[0]).collect();
    assert_eq!(firsts, vec![1.0, 2.0, 3.0, 4.0, 5.0]);

    let seen = server.seen.lock().unwrap();
    assert_eq!(seen.len(), 3);
    for req in seen.iter() {
        assert_eq!(req.path, "/v1/embeddings");
        assert_eq!(req.body["model"], "test-model");
        assert!(req.authorization.is_none());
    }
}

#[test]
fn declared_dimension_is_enforced() {
    let server = serve(Box::new(|_, req| (200, embedding_reply(req))));
    let mut cfg = config(&server.base_url);
    cfg.dimension = Some(3);
    let err = HttpEmbedder::new(cfg).unwrap().embed(&["x".to_string()]).unwrap_err();
    assert!(matches!(err, ProviderError::DimensionMismatch { expected: 3, found: 2 }), "{err}");
}

#[test]
fn completion_returns_first_choice() {
    let server = serve(Box::new(|_, _| {
        (200, json!({"choices": [{"message": {"role": "assistant", "content": "Paris"}}]}).to_string())
    }));
    let completion = HttpCompletion::new(config(&server.base_url)).unwrap();
    assert_eq!(completion.model_name(), "test-model");
    assert_eq!(completion.complete("Where?").unwrap(), "Paris");
    let seen = server.seen.lock().unwrap();
    assert_eq!(seen[0].path, "/v1/chat/completions");
    assert_eq!(seen[0].body["messages"][0]["role"], "user");
    assert_eq!(seen[0].body["messages"][0]["content"], "Where?");
}

#[test]
fn server_errors_are_retried() {
    let server = serve(Box::new(|n, _| {
        if n < 2 {
            (503, "busy".to_string())
        } else {
            (200, json!({"choices": [{"message": {"content": "ok"}}]}).to_string())
        }
    }));
    let completion = HttpCompletion::new(config(&server.base_url)).unwrap();
    assert_eq!(completion.complete("p").unwrap(), "ok");
    assert_eq!(server.seen.lock().unwrap().len(), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let server = serve(Box::new(|_, _| (400, "bad request".to_string())));
    let completion = HttpCompletion::new(config(&server.base_url)).unwrap();
    let err = completion.complete("p").unwrap_err();
    assert!(matches!(err, ProviderError::Status { status: 400, .. }), "{err}");
    assert_eq!(server.seen.lock().unwrap().len(), 1);
}

#[test]
fn empty_content_is_an_error() {
    let server = serve(Box::new(|_, _| {
        (200, json!({"choices": [{"message": {"content": ""}}]}).to_string())
    }));
    let err = HttpCompletion::new(config(&server.base_url)).unwrap().complete("p").unwrap_err();
    assert!(matches!(err, ProviderError::EmptyResponse { .. }), "{err}");
}

#[test]
fn unreachable_endpoint_is_a_transport_error() {
    let port = {
        let l = TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().port()
    };
    let mut cfg = config(&format!("http://127.0.0.1:{port}"));
    cfg.retries = 0;
    let err = HttpCompletion::new(cfg).unwrap().complete("p").unwrap_err();
    assert!(matches!(err, ProviderError::Transport { .. }), "{err}");
    assert!(err.to_string().contains(&port.to_string()));
}

#[test]
fn bearer_token_is_sent_when_set() {
    let server = serve(Box::new(|_, req| (200, embedding_reply(req))));
    let mut cfg = config(&server.base_url);
    cfg.api_key_env = "KGR_TEST_HTTP_PROVIDER_KEY".into();
    // Only this test touches the variable.
    unsafe { std::env::set_var("KGR_TEST_HTTP_PROVIDER_KEY", "sekrit") };
    let embedder = HttpEmbedder::new(cfg).unwrap();
    embedder.embed(&["x".to_string()]).unwrap();
    let seen = server.seen.lock().unwrap();
    assert_eq!(seen[0].authorization.as_deref(), Some("Bearer sekrit"));
}
