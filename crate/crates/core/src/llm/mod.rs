//! Chat access to a locally served model, prompt construction, and the
//! rule generation loop with validation and correction turns.

mod guidance;
mod http;
mod mock;
pub mod prompts;
mod rulegen;

use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use guidance::{recovery_guidance, score_objects, RecoveryReply, ScoreReply};
pub use http::HttpBackend;
pub use mock::{MockEntry, MockFixture, MockLlm};
pub use rulegen::{generate_rules, GeneratedRules, KindOutcome, RuleGenError, Transcript};

pub const DEFAULT_ENDPOINT: &str = "http://localhost:11434";
pub const DEFAULT_MODEL: &str = "gemma3:12b";
pub const ENDPOINT_VAR: &str = "LLM_ENDPOINT";
pub const MODEL_VAR: &str = "LLM_MODEL";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// What a call is for. The mock keys its script on this.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CallKind {
    Relaxation,
    Complementary,
    Recovery,
    Scoring,
}

impl fmt::Display for CallKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CallKind::Relaxation => "relaxation",
            CallKind::Complementary => "complementary",
            CallKind::Recovery => "recovery",
            CallKind::Scoring => "scoring",
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LlmConfig {
    pub endpoint: String,
    pub model: String,
    pub timeout: Duration,
    /// Attempts per rule type, at least 1.
    pub max_attempts: u32,
    pub temperature: f64,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint: DEFAULT_ENDPOINT.to_string(),
            model: DEFAULT_MODEL.to_string(),
            timeout: Duration::from_secs(120),
            max_attempts: 3,
            temperature: 0.0,
        }
    }
}

impl LlmConfig {
    /// Defaults overridden by `LLM_ENDPOINT` and `LLM_MODEL` when set.
    pub fn from_env() -> Self {
        let mut c = Self::default();
        if let Ok(e) = std::env::var(ENDPOINT_VAR) {
            c.endpoint = e;
        }
        if let Ok(m) = std::env::var(MODEL_VAR) {
            c.model = m;
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("network failure: {0}")]
    Network(String),
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("request timed out")]
    Timeout,
    #[error("malformed reply: {0}")]
    BadReply(String),
    #[error("no JSON found in reply")]
    NoJson,
    #[error("mock has no reply scripted for {0}")]
    NotScripted(CallKind),
}

pub struct ChatRequest<'a> {
    pub kind: CallKind,
    /// 1-based attempt within a correction loop; 1 for one-off calls.
    pub attempt: u32,
    pub messages: &'a [ChatMessage],
}

pub struct BackendReply {
    pub text: String,
    /// Latency the backend wants charged on top of real elapsed time.
    pub simulated_latency: Duration,
}

pub trait LlmBackend: Send + Sync {
    fn chat(&self, config: &LlmConfig, request: &ChatRequest<'_>)
        -> Result<BackendReply, LlmError>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reply {
    pub text: String,
    /// Measured wall time of the call.
    pub latency: Duration,
    /// Extra time the caller should charge to its clock (mock only).
    pub simulated_latency: Duration,
}

/// A backend plus configuration and an optional transcript file.
#[derive(Clone)]
pub struct Gateway {
    config: LlmConfig,
    backend: Arc<dyn LlmBackend>,
    log: Option<Arc<Mutex<File>>>,
}

impl fmt::Debug for Gateway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Gateway")
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl Gateway {
    pub fn new(config: LlmConfig, backend: Arc<dyn LlmBackend>) -> Self {
        Gateway {
            config,
            backend,
            log: None,
        }
    }

    pub fn http(config: LlmConfig) -> Self {
        let backend = Arc::new(HttpBackend::new(&config));
        Self::new(config, backend)
    }

    pub fn mock(mock: Arc<MockLlm>) -> Self {
        Self::new(LlmConfig::default(), mock)
    }

    /// Appends one JSON line per call to `path`.
    pub fn with_transcript_file(mut self, path: &Path) -> std::io::Result<Self> {
        let f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)?;
        self.log = Some(Arc::new(Mutex::new(f)));
        Ok(self)
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    pub fn config_mut(&mut self) -> &mut LlmConfig {
        &mut self.config
    }

    pub fn chat(
        &self,
        kind: CallKind,
        attempt: u32,
        messages: &[ChatMessage],
    ) -> Result<Reply, LlmError> {
        let started = Instant::now();
        let request = ChatRequest {
            kind,
            attempt,
            messages,
        };
        let result = self.backend.chat(&self.config, &request).map(|r| Reply {
            text: r.text,
            latency: started.elapsed(),
            simulated_latency: r.simulated_latency,
        });
        if let Some(log) = &self.log {
            let record = serde_json::json!({
                "kind": kind,
                "attempt": attempt,
                "model": self.config.model,
                "messages": messages,
                "reply": result.as_ref().ok().map(|r| r.text.as_str()),
                "error": result.as_ref().err().map(|e| e.to_string()),
                "latency_ms": started.elapsed().as_millis() as u64,
            });
            if let Ok(mut f) = log.lock() {
                let _ = writeln!(f, "{record}");
            }
        }
        result
    }
}

/// The first complete JSON object or array in `reply`. Code fences and
/// surrounding prose are skipped.
pub fn extract_json(reply: &str) -> Result<Value, LlmError> {
    let bytes = reply.as_bytes();
    for (start, &b) in bytes.iter().enumerate() {
        if b != b'{' && b != b'[' {
            continue;
        }
        if let Some(end) = balanced_end(&bytes[start..]) {
            if let Ok(v) = serde_json::from_str(&reply[start..start + end]) {
                return Ok(v);
            }
        }
    }
    Err(LlmError::NoJson)
}

/// Length of the bracketed block at the start of `s`, honouring strings.
fn balanced_end(s: &[u8]) -> Option<usize> {
    let mut stack = Vec::new();
    let mut in_str = false;
    let mut escaped = false;
    for (i, &b) in s.iter().enumerate() {
        if in_str {
            match b {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_str = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_str = true,
            b'{' | b'[' => stack.push(b),
            b'}' | b']' => {
                let open = stack.pop()?;
                if (open == b'{') != (b == b'}') {
                    return None;
                }
                if stack.is_empty() {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fenced_reply() {
        let v = extract_json("Here are the rules:\n```json\n{\"rule0\":{}}\n```").unwrap();
        assert_eq!(v, serde_json::json!({"rule0": {}}));
    }

    #[test]
    fn first_of_two_blocks() {
        let v = extract_json("a [1, 2] then {\"x\": 3}").unwrap();
        assert_eq!(v, serde_json::json!([1, 2]));
    }

    #[test]
    fn prose_only() {
        assert_eq!(
            extract_json("I cannot help with that."),
            Err(LlmError::NoJson)
        );
    }

    #[test]
    fn braces_inside_strings() {
        let v = extract_json(r#"x {"a": "}{", "b": [1]} y"#).unwrap();
        assert_eq!(v["a"], "}{");
    }

    #[test]
    fn skips_unparsable_prefix() {
        let v = extract_json("{not json} {\"ok\": true}").unwrap();
        assert_eq!(v["ok"], true);
    }

    #[test]
    fn env_overrides() {
        let c = LlmConfig::default();
        assert_eq!(c.model, "gemma3:12b");
        assert_eq!(c.max_attempts, 3);
        assert_eq!(c.temperature, 0.0);
    }
}
