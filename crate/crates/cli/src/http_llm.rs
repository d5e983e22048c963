//! Chat-completions client over blocking HTTP.

use std::time::Duration;

use anyhow::Result;
use serde_json::{json, Value};

use medcorpus_core::llm::{LlmClient, LlmError, LlmRequest};

pub const TOKEN_ENV: &str = "MEDCORPUS_LLM_TOKEN";

pub struct HttpClient {
    http: reqwest::blocking::Client,
    endpoint: String,
    token: Option<String>,
}

impl HttpClient {
    pub fn new(endpoint: &str, token: Option<String>, timeout_secs: u64) -> Result<Self> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(timeout_secs.max(1)))
            .build()?;
        Ok(Self {
            http,
            endpoint: endpoint.to_string(),
            token,
        })
    }
}

/// `choices[0].message.content`, or a top-level `text` field.
pub fn reply_text(body: &Value) -> Option<String> {
    body.pointer("/choices/0/message/content")
        .or_else(|| body.pointer("/choices/0/text"))
        .or_else(|| body.get("text"))
        .and_then(Value::as_str)
        .map(str::to_string)
}

impl LlmClient for HttpClient {
    fn complete(&self, request: &LlmRequest) -> Result<String, LlmError> {
        let payload = json!({
            "model": request.model,
            "temperature": request.temperature,
            "messages": [{ "role": "user", "content": request.prompt }],
        });
        let mut req = self.http.post(&self.endpoint).json(&payload);
        if let Some(t) = &self.token {
            req = req.bearer_auth(t);
        }
        let resp = req.send().map_err(|e| LlmError::Transport(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(LlmError::Transport(format!("HTTP {status}")));
        }
        let body: Value = resp.json().map_err(|e| LlmError::Transport(e.to_string()))?;
        reply_text(&body).ok_or_else(|| LlmError::Transport("response has no completion text".into()))
    }
}
