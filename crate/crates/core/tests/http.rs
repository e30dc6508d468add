//! The HTTP clients against a one-thread loopback server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;

use pgakv_core::embed::EmbeddingProvider;
use pgakv_core::llm::ChatClient;
use pgakv_core::{LlmClient, LlmError, LlmParams, RemoteEmbedder};

struct Request {
    head: String,
    body: serde_json::Value,
}

/// Serves one canned `(status, body)` per connection and reports what it got.
fn serve(responses: Vec<(u16, String)>) -> (String, mpsc::Receiver<Request>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for (status, body) in responses {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream);
            let mut head = String::new();
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                head.push_str(&line);
            }
            let len = head
                .lines()
                .find_map(|l| {
                    let (k, v) = l.split_once(':')?;
                    k.eq_ignore_ascii_case("content-length")
                        .then(|| v.trim().parse::<usize>().unwrap())
                })
                .unwrap_or(0);
            let mut raw = vec![0; len];
            reader.read_exact(&mut raw).unwrap();
            tx.send(Request {
                head,
                body: serde_json::from_slice(&raw).unwrap_or(serde_json::Value::Null),
            })
            .unwrap();
            let mut stream = reader.into_inner();
            write!(
                stream,
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    (url, rx)
}

#[test]
fn chat_client_posts_params_and_reads_first_choice() {
    let (url, rx) = serve(vec![(
        200,
        r#"{"choices":[{"message":{"role":"assistant","content":"Berlin"}}]}"#.into(),
    )]);
    let client = ChatClient::new(&url, "test-model", Some("secret".into())).unwrap();
    let params = LlmParams {
        temperature: 0.7,
        max_tokens: 32,
        seed: Some(2),
    };
    assert_eq!(client.complete("Capital of Germany?", &params).unwrap(), "Berlin");
    let req = rx.recv().unwrap();
    assert!(req.head.starts_with("POST /chat/completions "));
    assert!(req.head.to_ascii_lowercase().contains("authorization: bearer secret"));
    assert_eq!(req.body["model"], "test-model");
    assert_eq!(req.body["messages"][0]["content"], "Capital of Germany?");
    assert_eq!(req.body["temperature"], 0.7);
    assert_eq!(req.body["max_tokens"], 32);
    assert_eq!(req.body["seed"], 2);
}

#[test]
fn chat_client_reports_status_and_shape_errors() {
    let (url, _rx) = serve(vec![(429, "slow down".into()), (200, r#"{"choices":[]}"#.into())]);
    let client = ChatClient::new(&url, "m", None).unwrap();
    let p = LlmParams::greedy(8);
    match client.complete("q", &p) {
        Err(LlmError::Status { status: 429, body }) => assert_eq!(body, "slow down"),
        other => panic!("{other:?}"),
    }
    assert!(matches!(client.complete("q", &p), Err(LlmError::Decode(_))));
}

#[test]
fn remote_embedder_probes_dimension_and_normalizes() {
    let (url, rx) = serve(vec![
        (200, r#"{"vectors":[[1.0,0.0,0.0]]}"#.into()),
        (200, r#"{"vectors":[[3.0,4.0,0.0],[0.0,0.0,2.0]]}"#.into()),
        (200, r#"{"vectors":[[1.0,0.0,0.0]]}"#.into()),
    ]);
    let e = RemoteEmbedder::connect(&url).unwrap();
    assert_eq!(e.dimension(), 3);
    assert_eq!(e.fingerprint(), format!("remote/{url}/d3"));
    rx.recv().unwrap();
    let v = e.embed(&["a".into(), "b".into()]).unwrap();
    assert_eq!(v, vec![vec![0.6, 0.8, 0.0], vec![0.0, 0.0, 1.0]]);
    assert_eq!(rx.recv().unwrap().body["texts"], serde_json::json!(["a", "b"]));
    // one vector for two texts
    assert!(e.embed(&["a".into(), "b".into()]).is_err());
}
