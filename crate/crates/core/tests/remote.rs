//! Remote embedding provider and HTTP completer against an in-process stub
//! server.

mod common;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use saracoder::completer::{CompleteError, Completer, CompletionInput, HttpCompleter};
use saracoder::embedding::{
    contract, cosine, EmbedError, EmbedRequest, EmbeddingProvider, LocalHashProvider, RemoteProvider, EMBEDDING_DIM, MAX_BATCH,
};
use saracoder::store::SnippetStore;
use serde_json::{json, Value};

type Handler = dyn Fn(&str, &str, &Value) -> (u16, Value) + Send + Sync;

struct Stub {
    url: String,
    log: Arc<Mutex<Vec<(String, Value)>>>,
}

impl Stub {
    fn start(handler: impl Fn(&str, &str, &Value) -> (u16, Value) + Send + Sync + 'static) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let log = Arc::new(Mutex::new(Vec::new()));
        let handler: Arc<Handler> = Arc::new(handler);
        let shared = Arc::clone(&log);
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { break };
                let (handler, log) = (Arc::clone(&handler), Arc::clone(&shared));
                thread::spawn(move || serve(stream, handler.as_ref(), &log));
            }
        });
        Stub { url, log }
    }

    fn requests(&self) -> Vec<(String, Value)> {
        self.log.lock().unwrap().clone()
    }
}

fn serve(stream: TcpStream, handler: &Handler, log: &Mutex<Vec<(String, Value)>>) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut line = String::new();
    if reader.read_line(&mut line).unwrap_or(0) == 0 {
        return;
    }
    let mut parts = line.split_whitespace();
    let (method, path) = (parts.next().unwrap_or("").to_string(), parts.next().unwrap_or("").to_string());
    let mut length = 0;
    loop {
        let mut header = String::new();
        reader.read_line(&mut header).unwrap();
        if header.trim().is_empty() {
            break;
        }
        if let Some((name, value)) = header.split_once(':') {
            if name.eq_ignore_ascii_case("content-length") {
                length = value.trim().parse().unwrap();
            }
        }
    }
    let mut body = vec![0; length];
    reader.read_exact(&mut body).unwrap();
    let body: Value = if body.is_empty() { Value::Null } else { serde_json::from_slice(&body).unwrap() };
    log.lock().unwrap().push((format!("{method} {path}"), body.clone()));
    let (status, reply) = handler(&method, &path, &body);
    let text = reply.to_string();
    let mut stream = stream;
    let _ = write!(
        stream,
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
        text.len()
    );
}

/// Service stand-in: local hash vectors, the batch cap, and `/health`.
fn embed_service(method: &str, path: &str, body: &Value) -> (u16, Value) {
    match (method, path) {
        ("GET", "/health") => (200, json!({"status": "ok", "dim": EMBEDDING_DIM, "model": "stub"})),
        ("POST", "/embed") => {
            let request: EmbedRequest = serde_json::from_value(body.clone()).unwrap();
            if request.texts.len() > MAX_BATCH {
                return (413, json!({"error": "batch too large"}));
            }
            let vectors: Vec<Vec<f64>> =
                LocalHashProvider.embed(&request.texts).unwrap().iter().map(|v| v.values().to_vec()).collect();
            (200, json!({ "vectors": vectors }))
        }
        _ => (404, json!({"error": "not found"})),
    }
}

fn fast(url: &str) -> RemoteProvider {
    RemoteProvider::with_policy(url, Duration::from_secs(5), 2)
}

fn texts(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("value_{i} = compute(item_{i})")).collect()
}

#[test]
fn remote_provider_meets_contract() {
    let stub = Stub::start(embed_service);
    let provider = fast(&stub.url);
    contract::check(&provider);
    let health = provider.health().unwrap();
    assert_eq!(health.status, "ok");
    assert_eq!(health.metadata["model"], "stub");
}

#[test]
fn health_rejects_wrong_dimension() {
    let stub = Stub::start(|_, _, _| (200, json!({"status": "ok", "dim": 512})));
    assert!(matches!(fast(&stub.url).health(), Err(EmbedError::Protocol(_))));
}

#[test]
fn large_inputs_are_batched() {
    let stub = Stub::start(embed_service);
    let input = texts(150);
    let vectors = fast(&stub.url).embed(&input).unwrap();
    assert_eq!(vectors.len(), 150);
    let direct = LocalHashProvider.embed(&input[149..]).unwrap();
    assert!((cosine(&vectors[149], &direct[0]) - 1.0).abs() <= 1e-12, "last vector out of order");
    let sizes: Vec<usize> = stub.requests().iter().map(|(_, b)| b["texts"].as_array().unwrap().len()).collect();
    assert_eq!(sizes, [64, 64, 22]);
}

#[test]
fn client_errors_are_not_retried() {
    let stub = Stub::start(|_, _, _| (422, json!({"error": "empty text"})));
    match fast(&stub.url).embed(&texts(1)) {
        Err(EmbedError::Remote { status, message }) => {
            assert_eq!(status, 422);
            assert_eq!(message, "empty text");
        }
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(stub.requests().len(), 1);
}

#[test]
fn server_errors_are_retried() {
    let stub = Stub::start(|_, _, _| (503, json!({"error": "warming up"})));
    assert!(matches!(fast(&stub.url).embed(&texts(1)), Err(EmbedError::Transport { retries: 2, .. })));
    assert_eq!(stub.requests().len(), 3);

    let calls = Mutex::new(0);
    let flaky = Stub::start(move |m, p, b| {
        let mut n = calls.lock().unwrap();
        *n += 1;
        if *n == 1 {
            (500, json!({"error": "transient"}))
        } else {
            embed_service(m, p, b)
        }
    });
    assert_eq!(fast(&flaky.url).embed(&texts(2)).unwrap().len(), 2);
    assert_eq!(flaky.requests().len(), 2);
}

#[test]
fn malformed_responses_are_protocol_errors() {
    let stub = Stub::start(|_, _, _| (200, json!({"vectors": [[1.0, 0.0]]})));
    assert!(matches!(fast(&stub.url).embed(&texts(1)), Err(EmbedError::Protocol(_))));
    let short = Stub::start(|_, _, _| (200, json!({"vectors": []})));
    assert!(matches!(fast(&short.url).embed(&texts(1)), Err(EmbedError::Protocol(_))));
}

#[test]
fn refused_connection_is_transport_error() {
    let provider = RemoteProvider::with_policy("http://127.0.0.1:9", Duration::from_secs(2), 1);
    assert!(matches!(provider.embed(&texts(1)), Err(EmbedError::Transport { .. })));
}

#[test]
fn http_completer_round_trip() {
    let stub = Stub::start(|_, path, body| {
        assert_eq!(path, "/complete");
        (200, json!({"completion": format!("tokens={}", body["max_tokens"])}))
    });
    let store = SnippetStore::from_records(Vec::new());
    let input = CompletionInput { prompt: "x = ", max_tokens: 16, top_snippet: None, store: &store };
    assert_eq!(HttpCompleter::new(&stub.url).complete(&input).unwrap(), "tokens=16");
    assert_eq!(stub.requests()[0].1, json!({"prompt": "x = ", "max_tokens": 16}));

    let rejecting = Stub::start(|_, _, _| (400, json!({"error": "prompt too long"})));
    let err = HttpCompleter::new(&rejecting.url).complete(&input).unwrap_err();
    assert!(matches!(err, CompleteError::Rejected(ref m) if m.contains("prompt too long")), "{err}");
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = saracoder::cli::run(std::iter::once("saracoder").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn cli_against_remote_services() {
    let dir = tempfile::tempdir().unwrap();
    common::write_fixture(dir.path());
    let index = dir.path().join("idx");
    let ctx = dir.path().join("ctx.py");
    std::fs::write(&ctx, common::QUERY).unwrap();
    let (index, ctx) = (index.to_str().unwrap(), ctx.to_str().unwrap());
    assert_eq!(cli(&["index", dir.path().to_str().unwrap(), "--out", index]).0, 0);
    let request = ["--index", index, "--context", ctx, "--file", "main.py"];

    // a remote service serving the local vectors ranks exactly like local
    let stub = Stub::start(embed_service);
    let (code, remote, err) = cli(&[&["retrieve"][..], &request, &["--embedder", "remote", "--embed-endpoint", &stub.url]].concat());
    assert_eq!(code, 0, "{err}");
    let (_, local, _) = cli(&[&["retrieve"][..], &request].concat());
    assert_eq!(remote, local);

    let completer = Stub::start(|_, _, _| (200, json!({"completion": "array(total)"})));
    let (code, out, _) = cli(&[&["complete"][..], &request, &["--completer", &completer.url]].concat());
    assert_eq!(code, 0);
    assert_eq!(out, "array(total)\n");

    let (code, _, err) = cli(&[&["complete"][..], &request, &["--completer", "http://127.0.0.1:9"]].concat());
    assert_eq!(code, 3, "{err}");
}
