use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::{
    validate_scores, ClassifierContext, LabelSource, LabeledUtterance, NatureLabel, RecipientLabel,
};
use crate::{Error, Result};

/// Body of `POST /classify`; `POST /classify_batch` takes a list of these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyRequest {
    pub session_id: String,
    pub utterance_index: usize,
    pub pretext: Vec<String>,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyResponse {
    pub recipient: i64,
    pub nature: String,
    #[serde(default)]
    pub scores: BTreeMap<String, f64>,
    /// Echoed request key; checked when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utterance_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    /// Base URL, e.g. `http://127.0.0.1:8080`.
    pub endpoint: String,
    pub max_retries: u32,
    pub initial_backoff_ms: u64,
    pub max_backoff_ms: u64,
    pub timeout_ms: u64,
    pub max_in_flight: usize,
    pub batch_size: usize,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            endpoint: "http://127.0.0.1:8080".into(),
            max_retries: 3,
            initial_backoff_ms: 200,
            max_backoff_ms: 5_000,
            timeout_ms: 30_000,
            max_in_flight: 4,
            batch_size: 64,
        }
    }
}

/// Blocking client for the classifier wire protocol.
pub struct RemoteClassifier {
    client: reqwest::blocking::Client,
    config: RemoteConfig,
}

enum Failure {
    Retryable(String),
    Fatal(Error),
}

impl RemoteClassifier {
    pub fn new(config: RemoteConfig) -> Result<RemoteClassifier> {
        if config.max_in_flight == 0 || config.batch_size == 0 {
            return Err(Error::Config("max_in_flight and batch_size must be positive".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| Error::Config(format!("http client: {e}")))?;
        Ok(RemoteClassifier { client, config })
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.config.endpoint.trim_end_matches('/'), path)
    }

    fn post<B: Serialize, T: for<'de> Deserialize<'de>>(&self, path: &str, body: &B) -> Result<T> {
        let url = self.url(path);
        let attempts = self.config.max_retries + 1;
        let mut backoff = self.config.initial_backoff_ms;
        let mut last = String::new();
        for attempt in 1..=attempts {
            match self.try_post(&url, body) {
                Ok(v) => return Ok(v),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retryable(msg)) => {
                    warn!("{url}: attempt {attempt}/{attempts} failed: {msg}");
                    last = msg;
                    if attempt < attempts {
                        thread::sleep(Duration::from_millis(backoff));
                        backoff = (backoff * 2).min(self.config.max_backoff_ms);
                    }
                }
            }
        }
        Err(Error::Transport {
            attempts,
            message: last,
        })
    }

    fn try_post<B: Serialize, T: for<'de> Deserialize<'de>>(
        &self,
        url: &str,
        body: &B,
    ) -> std::result::Result<T, Failure> {
        let resp = self
            .client
            .post(url)
            .json(body)
            .send()
            .map_err(|e| Failure::Retryable(e.to_string()))?;
        let status = resp.status();
        if status.is_server_error() {
            return Err(Failure::Retryable(format!("server returned {status}")));
        }
        let text = resp.text().map_err(|e| Failure::Retryable(e.to_string()))?;
        if !status.is_success() {
            return Err(Failure::Fatal(Error::Protocol(format!(
                "server returned {status}: {text}"
            ))));
        }
        serde_json::from_str(&text)
            .map_err(|e| Failure::Fatal(Error::Protocol(format!("malformed response: {e}"))))
    }

    /// Labels one utterance through `POST /classify`.
    pub fn classify(
        &self,
        session_id: &str,
        utterance_index: usize,
        ctx: &ClassifierContext,
    ) -> Result<LabeledUtterance> {
        let req = request(session_id, utterance_index, ctx);
        let resp: ClassifyResponse = self.post("/classify", &req)?;
        response_to_label(&req, resp)
    }

    /// One `POST /classify_batch` call; responses are matched by position.
    pub fn classify_batch(&self, requests: &[ClassifyRequest]) -> Result<Vec<LabeledUtterance>> {
        let resp: Vec<ClassifyResponse> = self.post("/classify_batch", &requests)?;
        if resp.len() != requests.len() {
            return Err(Error::Protocol(format!(
                "batch of {} answered with {} responses",
                requests.len(),
                resp.len()
            )));
        }
        requests
            .iter()
            .zip(resp)
            .map(|(req, r)| response_to_label(req, r))
            .collect()
    }

    /// Labels every request, keeping at most `max_in_flight` batches
    /// outstanding. Output order follows input order.
    pub fn classify_many(&self, requests: &[ClassifyRequest]) -> Result<Vec<LabeledUtterance>> {
        let chunks: Vec<&[ClassifyRequest]> = requests.chunks(self.config.batch_size).collect();
        let next = AtomicUsize::new(0);
        let results: Mutex<Vec<Option<Result<Vec<LabeledUtterance>>>>> =
            Mutex::new((0..chunks.len()).map(|_| None).collect());
        let workers = self.config.max_in_flight.min(chunks.len()).max(1);
        thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= chunks.len() {
                        break;
                    }
                    debug!("batch {i}: {} utterances", chunks[i].len());
                    let out = self.classify_batch(chunks[i]);
                    let failed = out.is_err();
                    results.lock().expect("results lock")[i] = Some(out);
                    if failed {
                        next.store(chunks.len(), Ordering::SeqCst);
                        break;
                    }
                });
            }
        });
        let mut labels = Vec::with_capacity(requests.len());
        for r in results.into_inner().expect("results lock").into_iter().flatten() {
            labels.extend(r?);
        }
        if labels.len() != requests.len() {
            return Err(Error::Protocol("incomplete batch results".into()));
        }
        Ok(labels)
    }
}

pub fn request(session_id: &str, utterance_index: usize, ctx: &ClassifierContext) -> ClassifyRequest {
    ClassifyRequest {
        session_id: session_id.to_string(),
        utterance_index,
        pretext: ctx.pretext.clone(),
        target: ctx.target.clone(),
    }
}

fn response_to_label(req: &ClassifyRequest, resp: ClassifyResponse) -> Result<LabeledUtterance> {
    if resp.session_id.as_deref().is_some_and(|s| s != req.session_id)
        || resp.utterance_index.is_some_and(|i| i != req.utterance_index)
    {
        return Err(Error::Protocol(format!(
            "response key does not match request {}:{}",
            req.session_id, req.utterance_index
        )));
    }
    let recipient = RecipientLabel::from_code(resp.recipient)?;
    let nature: NatureLabel = resp
        .nature
        .parse()
        .map_err(|_| Error::Protocol(format!("unknown nature `{}`", resp.nature)))?;
    let label = LabeledUtterance::new(
        req.session_id.clone(),
        req.utterance_index,
        recipient,
        nature,
        LabelSource::Remote,
    );
    if resp.scores.is_empty() {
        Ok(label)
    } else {
        validate_scores(&resp.scores)?;
        Ok(LabeledUtterance {
            scores: Some(resp.scores),
            ..label
        })
    }
}
