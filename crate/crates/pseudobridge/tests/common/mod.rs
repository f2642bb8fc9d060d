#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Instant;

use serde_json::{json, Value};

#[derive(Debug, Clone)]
pub struct Recorded {
    pub path: String,
    pub headers: Vec<(String, String)>,
    pub body: Value,
    pub at: Instant,
}

impl Recorded {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.iter().find(|(k, _)| k.eq_ignore_ascii_case(name)).map(|(_, v)| v.as_str())
    }

    /// Text of the user message.
    pub fn prompt(&self) -> String {
        self.body["messages"][1]["content"].as_str().unwrap_or_default().to_string()
    }
}

/// Minimal HTTP/1.1 server answering each request through `reply`, which
/// gets the request index and body and returns status and response body.
pub struct MockServer {
    pub base_url: String,
    pub requests: Arc<Mutex<Vec<Recorded>>>,
}

impl MockServer {
    pub fn start<F>(reply: F) -> Self
    where
        F: Fn(usize, &Value) -> (u16, String) + Send + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let base_url = format!("http://{}/v1", listener.local_addr().unwrap());
        let requests = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&requests);
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { continue };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut request_line = String::new();
                if reader.read_line(&mut request_line).is_err() {
                    continue;
                }
                let path = request_line.split_whitespace().nth(1).unwrap_or_default().to_string();
                let mut headers = Vec::new();
                let mut length = 0usize;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                        break;
                    }
                    if let Some((k, v)) = line.trim_end().split_once(':') {
                        if k.eq_ignore_ascii_case("content-length") {
                            length = v.trim().parse().unwrap_or(0);
                        }
                        headers.push((k.to_string(), v.trim().to_string()));
                    }
                }
                let mut body = vec![0u8; length];
                let _ = reader.read_exact(&mut body);
                let body: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
                let index = {
                    let mut log = log.lock().unwrap();
                    log.push(Recorded { path, headers, body: body.clone(), at: Instant::now() });
                    log.len() - 1
                };
                let (status, text) = reply(index, &body);
                let response = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
                    text.len()
                );
                let _ = stream.write_all(response.as_bytes());
                let _ = stream.flush();
            }
        });
        Self { base_url, requests }
    }

    pub fn recorded(&self) -> Vec<Recorded> {
        self.requests.lock().unwrap().clone()
    }
}

/// A chat-completions response carrying `content`.
pub fn completion(content: &str) -> String {
    json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": content}}]}).to_string()
}

pub const ALL_FIVES: &str =
    r#"{"readability": 5, "correctness": 5, "completeness": 5, "conciseness": 5, "maintainability": 5}"#;

/// Answers like a cooperative model: pseudo-code, two variants, top scores.
pub fn cooperative(_: usize, body: &Value) -> (u16, String) {
    let prompt = body["messages"][1]["content"].as_str().unwrap_or_default();
    let content = if prompt.contains("score it from 1") {
        ALL_FIVES.to_string()
    } else if prompt.contains("implementations of the pseudo-code") {
        json!({"variants": ["def add(x, y):\n    return x + y", "def add(p, q):\n    s = p + q\n    return s"]}).to_string()
    } else {
        "```\nFUNCTION add(a, b):\n    RETURN a + b\n```".to_string()
    };
    (200, completion(&content))
}
