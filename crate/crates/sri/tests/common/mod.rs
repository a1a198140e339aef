//! Scripted OpenAI-compatible endpoint for end-to-end tests.

#![allow(dead_code)]

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use serde_json::{json, Value};
use sri::core::prompting::{build_prompt, PromptBody, PromptOptions, PromptStyle};
use sri::core::synthesis::SriSample;

#[derive(Debug, Clone)]
pub enum Mode {
    /// Answer each prompt with its scripted reply; unknown prompts get 404.
    Scripted(HashMap<String, String>),
    /// Answer everything with the same text.
    Fixed(String),
    /// Fail the first `n` requests for each prompt with `status`, then script.
    FailFirst {
        n: usize,
        status: u16,
        replies: HashMap<String, String>,
    },
    /// Always answer with this HTTP status.
    Status(u16),
}

struct State {
    mode: Mode,
    requests: AtomicUsize,
    seen: Mutex<HashMap<String, usize>>,
}

pub struct MockServer {
    pub url: String,
    state: Arc<State>,
    stop: Arc<AtomicBool>,
    addr: std::net::SocketAddr,
    handle: Option<JoinHandle<()>>,
}

impl MockServer {
    pub fn start(mode: Mode) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind");
        let addr = listener.local_addr().unwrap();
        let state = Arc::new(State {
            mode,
            requests: AtomicUsize::new(0),
            seen: Mutex::new(HashMap::new()),
        });
        let stop = Arc::new(AtomicBool::new(false));
        let (st, sp) = (state.clone(), stop.clone());
        let handle = thread::spawn(move || {
            for conn in listener.incoming() {
                if sp.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(conn) = conn else { continue };
                let st = st.clone();
                thread::spawn(move || serve(conn, &st));
            }
        });
        MockServer {
            url: format!("http://{addr}/v1"),
            state,
            stop,
            addr,
            handle: Some(handle),
        }
    }

    pub fn requests(&self) -> usize {
        self.state.requests.load(Ordering::SeqCst)
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn prompt_key(body: &Value) -> String {
    if let Some(p) = body.get("prompt").and_then(Value::as_str) {
        return p.to_string();
    }
    body["messages"]
        .as_array()
        .and_then(|m| m.iter().rev().find(|m| m["role"] == "user"))
        .and_then(|m| m["content"].as_str())
        .unwrap_or_default()
        .to_string()
}

fn reply(state: &State, body: &Value) -> (u16, String) {
    let key = prompt_key(body);
    let text = |t: &str| {
        let choice = if body.get("prompt").is_some() {
            json!({"index": 0, "text": t, "finish_reason": "stop"})
        } else {
            json!({"index": 0, "message": {"role": "assistant", "content": t}, "finish_reason": "stop"})
        };
        (200, json!({"id": "mock", "object": "chat.completion", "choices": [choice]}).to_string())
    };
    let scripted = |replies: &HashMap<String, String>| match replies.get(&key) {
        Some(t) => text(t),
        None => (404, "{\"error\":\"unknown prompt\"}".to_string()),
    };
    match &state.mode {
        Mode::Scripted(replies) => scripted(replies),
        Mode::Fixed(t) => text(t),
        Mode::Status(code) => (*code, "{\"error\":\"scripted\"}".to_string()),
        Mode::FailFirst { n, status, replies } => {
            let count = {
                let mut seen = state.seen.lock().unwrap();
                let c = seen.entry(key.clone()).or_insert(0);
                *c += 1;
                *c
            };
            if count <= *n {
                (*status, "{\"error\":\"flaky\"}".to_string())
            } else {
                scripted(replies)
            }
        }
    }
}

fn serve(conn: TcpStream, state: &State) {
    let mut reader = BufReader::new(conn.try_clone().expect("clone stream"));
    let mut writer = conn;
    let mut length = 0usize;
    let mut line = String::new();
    loop {
        line.clear();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return;
        }
        let l = line.trim_end();
        if l.is_empty() {
            break;
        }
        if let Some((name, value)) = l.split_once(':') {
            if name.eq_ignore_ascii_case("content-length") {
                length = value.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; length];
    if reader.read_exact(&mut body).is_err() {
        return;
    }
    state.requests.fetch_add(1, Ordering::SeqCst);
    let parsed: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
    let (status, payload) = reply(state, &parsed);
    let head = format!(
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        payload.len()
    );
    let _ = writer.write_all(head.as_bytes());
    let _ = writer.write_all(payload.as_bytes());
    let _ = writer.flush();
}

/// Prompt-to-reply script in which every sample is answered correctly for
/// `style`: the ground-truth block for SRI, a fenced middle for the natural
/// language styles and the bare middle for raw FIM.
pub fn echo_script(samples: &[SriSample], style: PromptStyle, opts: &PromptOptions) -> HashMap<String, String> {
    samples
        .iter()
        .map(|s| {
            let bundle = build_prompt(&s.task, style, opts);
            let key = match &bundle.body {
                PromptBody::Chat { user, .. } => user.clone(),
                PromptBody::Raw { prompt } => prompt.clone(),
            };
            let reply = match style {
                PromptStyle::Sri => s.ground_truth.render(),
                PromptStyle::TokenFim => s.task.middle.clone(),
                _ => format!("```\n{}\n```", s.task.middle.trim_end_matches('\n')),
            };
            (key, reply)
        })
        .collect()
}

pub fn fixture_corpus_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus")
}
