use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{BackendReply, CallKind, ChatRequest, LlmBackend, LlmConfig, LlmError};

/// One scripted reply.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MockEntry {
    Reply(String),
    /// `{"error": "network" | "timeout" | "http" | "bad_reply"}`
    Error {
        error: String,
    },
}

/// Replies per call kind, in call order. The last entry repeats once the
/// script runs out.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MockFixture {
    #[serde(default)]
    pub replies: BTreeMap<CallKind, Vec<MockEntry>>,
    /// Latency reported with every reply, in seconds.
    #[serde(default)]
    pub latency_secs: f64,
}

impl MockFixture {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    pub fn with(mut self, kind: CallKind, entries: impl IntoIterator<Item = MockEntry>) -> Self {
        self.replies.insert(kind, entries.into_iter().collect());
        self
    }
}

type Responder = dyn Fn(&ChatRequest<'_>) -> Option<Result<String, LlmError>> + Send + Sync;

/// A scripted stand-in for the model server.
pub struct MockLlm {
    fixture: MockFixture,
    responder: Option<Box<Responder>>,
    calls: Mutex<BTreeMap<CallKind, u32>>,
}

impl MockLlm {
    pub fn new(fixture: MockFixture) -> Self {
        MockLlm {
            fixture,
            responder: None,
            calls: Mutex::new(BTreeMap::new()),
        }
    }

    /// Every call of `kind` returns `text`.
    pub fn always(kind: CallKind, text: impl Into<String>) -> Self {
        Self::new(MockFixture::default().with(kind, [MockEntry::Reply(text.into())]))
    }

    /// Consulted before the script; returning `None` falls back to it.
    pub fn with_responder(
        mut self,
        f: impl Fn(&ChatRequest<'_>) -> Option<Result<String, LlmError>> + Send + Sync + 'static,
    ) -> Self {
        self.responder = Some(Box::new(f));
        self
    }

    pub fn with_latency(mut self, latency: Duration) -> Self {
        self.fixture.latency_secs = latency.as_secs_f64();
        self
    }

    pub fn calls(&self, kind: CallKind) -> u32 {
        self.calls.lock().unwrap().get(&kind).copied().unwrap_or(0)
    }

    pub fn total_calls(&self) -> u32 {
        self.calls.lock().unwrap().values().sum()
    }
}

impl LlmBackend for MockLlm {
    fn chat(
        &self,
        _config: &LlmConfig,
        request: &ChatRequest<'_>,
    ) -> Result<BackendReply, LlmError> {
        let n = {
            let mut calls = self.calls.lock().unwrap();
            let c = calls.entry(request.kind).or_insert(0);
            *c += 1;
            *c
        };
        let reply = |text: String| BackendReply {
            text,
            simulated_latency: Duration::from_secs_f64(self.fixture.latency_secs.max(0.0)),
        };
        if let Some(f) = &self.responder {
            if let Some(r) = f(request) {
                return r.map(reply);
            }
        }
        let script = self
            .fixture
            .replies
            .get(&request.kind)
            .filter(|s| !s.is_empty())
            .ok_or(LlmError::NotScripted(request.kind))?;
        match &script[(n as usize - 1).min(script.len() - 1)] {
            MockEntry::Reply(text) => Ok(reply(text.clone())),
            MockEntry::Error { error } => Err(match error.as_str() {
                "timeout" => LlmError::Timeout,
                "http" => LlmError::Http {
                    status: 500,
                    body: "scripted".into(),
                },
                "bad_reply" => LlmError::BadReply("scripted".into()),
                other => LlmError::Network(format!("scripted {other}")),
            }),
        }
    }
}
