//! Stub classifier service for the wire-protocol tests.
#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

use tutor_attention::classify::{classify_name_in_context, ClassifierContext, ClassifyRequest, NatureLexicon};

pub struct Reply {
    pub status: u16,
    pub body: String,
}

impl Reply {
    pub fn ok(body: impl Into<String>) -> Reply {
        Reply { status: 200, body: body.into() }
    }
}

/// HTTP/1.1 server answering every request with `handler(call, path,
/// body)`, where `call` counts requests from zero. One request per
/// connection.
pub struct StubServer {
    pub url: String,
    pub calls: Arc<AtomicUsize>,
}

impl StubServer {
    pub fn start<F>(handler: F) -> StubServer
    where
        F: Fn(usize, &str, &str) -> Reply + Send + Sync + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let calls = Arc::new(AtomicUsize::new(0));
        let counter = Arc::clone(&calls);
        let handler = Arc::new(handler);
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { break };
                let call = counter.fetch_add(1, Ordering::SeqCst);
                let handler = Arc::clone(&handler);
                thread::spawn(move || {
                    let mut reader = BufReader::new(stream.try_clone().unwrap());
                    let mut request_line = String::new();
                    reader.read_line(&mut request_line).unwrap();
                    let path = request_line.split_whitespace().nth(1).unwrap_or("").to_string();
                    let mut length = 0;
                    loop {
                        let mut line = String::new();
                        reader.read_line(&mut line).unwrap();
                        let line = line.trim_end();
                        if line.is_empty() {
                            break;
                        }
                        if let Some((k, v)) = line.split_once(':') {
                            if k.eq_ignore_ascii_case("content-length") {
                                length = v.trim().parse().unwrap();
                            }
                        }
                    }
                    let mut body = vec![0; length];
                    reader.read_exact(&mut body).unwrap();
                    let reply = handler(call, &path, &String::from_utf8(body).unwrap());
                    let _ = write!(
                        stream,
                        "HTTP/1.1 {} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                        reply.status,
                        reply.body.len(),
                        reply.body
                    );
                });
            }
        });
        StubServer { url, calls }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

/// Answers with the local context heuristic and the default lexicon.
pub fn heuristic_response(req: &ClassifyRequest) -> serde_json::Value {
    let ctx = ClassifierContext::new(req.pretext.clone(), req.target.clone());
    serde_json::json!({
        "recipient": classify_name_in_context(&ctx).code().unwrap(),
        "nature": NatureLexicon::default().label(&req.target).as_str(),
        "session_id": req.session_id,
        "utterance_index": req.utterance_index,
    })
}

pub fn heuristic_handler(_call: usize, path: &str, body: &str) -> Reply {
    match path {
        "/classify_batch" => {
            let reqs: Vec<ClassifyRequest> = serde_json::from_str(body).unwrap();
            Reply::ok(serde_json::Value::Array(reqs.iter().map(heuristic_response).collect()).to_string())
        }
        "/classify" => {
            let req: ClassifyRequest = serde_json::from_str(body).unwrap();
            Reply::ok(heuristic_response(&req).to_string())
        }
        _ => Reply { status: 404, body: "{}".into() },
    }
}
