use std::time::Duration;

use serde_json::{json, Value};

use super::{BackendReply, ChatRequest, LlmBackend, LlmConfig, LlmError};

/// Ollama-style `POST {endpoint}/api/chat`, non-streaming.
pub struct HttpBackend {
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(config: &LlmConfig) -> Self {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .connect_timeout(config.timeout.min(Duration::from_secs(10)))
            .build()
            .expect("HTTP client builds");
        HttpBackend { client }
    }
}

impl LlmBackend for HttpBackend {
    fn chat(
        &self,
        config: &LlmConfig,
        request: &ChatRequest<'_>,
    ) -> Result<BackendReply, LlmError> {
        let url = format!("{}/api/chat", config.endpoint.trim_end_matches('/'));
        let body = json!({
            "model": config.model,
            "messages": request.messages,
            "stream": false,
            "options": {"temperature": config.temperature},
        });
        let resp = self.client.post(&url).json(&body).send().map_err(map_err)?;
        let status = resp.status();
        if !status.is_success() {
            let body = resp.text().unwrap_or_default();
            return Err(LlmError::Http {
                status: status.as_u16(),
                body,
            });
        }
        let v: Value = resp.json().map_err(map_err)?;
        let text = v
            .pointer("/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| LlmError::BadReply("missing message.content".into()))?;
        Ok(BackendReply {
            text: text.to_string(),
            simulated_latency: Duration::ZERO,
        })
    }
}

fn map_err(e: reqwest::Error) -> LlmError {
    if e.is_timeout() {
        LlmError::Timeout
    } else if e.is_decode() {
        LlmError::BadReply(e.to_string())
    } else {
        LlmError::Network(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{ChatMessage, Gateway};

    #[test]
    fn unreachable_endpoint_is_a_network_error() {
        let config = LlmConfig {
            // port 9 (discard) on loopback is closed in the sandbox
            endpoint: "http://127.0.0.1:9".into(),
            timeout: Duration::from_secs(2),
            ..LlmConfig::default()
        };
        let gw = Gateway::http(config);
        let err = gw
            .chat(
                super::super::CallKind::Scoring,
                1,
                &[ChatMessage::user("hi")],
            )
            .unwrap_err();
        assert!(
            matches!(err, LlmError::Network(_) | LlmError::Timeout),
            "{err:?}"
        );
    }
}
