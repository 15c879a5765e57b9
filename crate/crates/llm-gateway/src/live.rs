use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use genomagent_core::{Pacer, TokenUsage};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::Semaphore;

use crate::error::LlmError;
use crate::gateway::LlmBackend;
use crate::request::{apply_stop_sequences, CompletionRequest, CompletionResult, FinishReason};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LiveConfig {
    /// Base of an OpenAI-compatible API, without the `/chat/completions` suffix.
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub max_in_flight: usize,
    pub requests_per_minute: f64,
    pub timeout_secs: u64,
    pub retries: u32,
    pub initial_backoff_ms: u64,
}

impl Default for LiveConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4o-mini".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            max_in_flight: 4,
            requests_per_minute: 500.0,
            timeout_secs: 120,
            retries: 3,
            initial_backoff_ms: 500,
        }
    }
}

/// OpenAI-compatible chat-completions client.
///
/// Stop sequences are forwarded to the server, which strips them from the
/// output without saying which one fired, so server-side stops surface as
/// [`FinishReason::Stop`]. The same sequences are also applied locally in case
/// a provider ignores them.
pub struct LiveBackend {
    config: LiveConfig,
    client: reqwest::Client,
    in_flight: Arc<Semaphore>,
    pacer: Pacer,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
    usage: Option<ChatUsage>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: Option<String>,
}

#[derive(Deserialize)]
struct ChatUsage {
    prompt_tokens: u64,
    completion_tokens: u64,
}

enum Attempt {
    Retry(String),
    Fatal(String),
}

impl LiveBackend {
    pub fn new(config: LiveConfig) -> Result<Self, LlmError> {
        let client = reqwest::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| LlmError::BackendUnavailable(e.to_string()))?;
        Ok(Self {
            in_flight: Arc::new(Semaphore::new(config.max_in_flight.max(1))),
            pacer: Pacer::per_minute(config.requests_per_minute),
            client,
            config,
        })
    }

    pub fn has_credentials(&self) -> bool {
        std::env::var(&self.config.api_key_env).is_ok_and(|k| !k.trim().is_empty())
    }

    fn body(&self, request: &CompletionRequest) -> serde_json::Value {
        let mut messages = Vec::new();
        if !request.system_prompt.is_empty() {
            messages.push(json!({"role": "system", "content": request.system_prompt}));
        }
        messages.push(json!({"role": "user", "content": request.user_prompt}));
        let mut body = json!({
            "model": self.config.model,
            "messages": messages,
            "max_tokens": request.max_tokens,
            "temperature": request.temperature,
        });
        if !request.stop_sequences.is_empty() {
            // OpenAI accepts at most four stop sequences.
            let stops: Vec<&String> = request.stop_sequences.iter().take(4).collect();
            body["stop"] = json!(stops);
        }
        body
    }

    async fn attempt(&self, key: &str, request: &CompletionRequest) -> Result<CompletionResult, Attempt> {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let response = self
            .client
            .post(&url)
            .bearer_auth(key)
            .json(&self.body(request))
            .send()
            .await
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = response.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(Attempt::Retry(format!("HTTP {status}")));
        }
        if !status.is_success() {
            let text = response.text().await.unwrap_or_default();
            return Err(Attempt::Fatal(format!("HTTP {status}: {}", text.chars().take(300).collect::<String>())));
        }
        let parsed: ChatResponse = response.json().await.map_err(|e| Attempt::Retry(e.to_string()))?;
        let choice = parsed.choices.into_iter().next().ok_or_else(|| Attempt::Fatal("no choices".into()))?;
        let raw = choice.message.content.unwrap_or_default();
        let (kept, matched) = apply_stop_sequences(&raw, &request.stop_sequences);
        let finish_reason = match (matched, choice.finish_reason.as_deref()) {
            (Some(stop), _) => FinishReason::StopSequence(stop.to_string()),
            (None, Some("length")) => FinishReason::Length,
            _ => FinishReason::Stop,
        };
        let usage = parsed
            .usage
            .map(|u| TokenUsage::new(u.prompt_tokens, u.completion_tokens))
            .unwrap_or_default();
        Ok(CompletionResult { text: kept.to_string(), finish_reason, usage })
    }
}

#[async_trait]
impl LlmBackend for LiveBackend {
    fn describe(&self) -> String {
        format!("live:{}", self.config.model)
    }

    async fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, LlmError> {
        let key = std::env::var(&self.config.api_key_env)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| LlmError::BackendUnavailable(format!("{} is not set", self.config.api_key_env)))?;
        let _permit = self.in_flight.acquire().await.map_err(|e| LlmError::BackendUnavailable(e.to_string()))?;

        let mut backoff = Duration::from_millis(self.config.initial_backoff_ms);
        let mut last_error = String::new();
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                tracing::warn!(attempt, error = %last_error, "retrying completion");
                tokio::time::sleep(backoff).await;
                backoff *= 2;
            }
            tokio::time::sleep(self.pacer.reserve()).await;
            match self.attempt(&key, request).await {
                Ok(result) => return Ok(result),
                Err(Attempt::Fatal(msg)) => return Err(LlmError::BackendUnavailable(msg)),
                Err(Attempt::Retry(msg)) => last_error = msg,
            }
        }
        Err(LlmError::BackendUnavailable(format!(
            "gave up after {} retries: {last_error}",
            self.config.retries
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[tokio::test]
    async fn missing_key_fails_fast() {
        let backend = LiveBackend::new(LiveConfig {
            api_key_env: "GENOMAGENT_TEST_KEY_THAT_IS_NEVER_SET".into(),
            ..LiveConfig::default()
        })
        .unwrap();
        assert!(!backend.has_credentials());
        let err = backend.complete(&CompletionRequest::new("", "hi")).await.unwrap_err();
        assert!(matches!(err, LlmError::BackendUnavailable(msg) if msg.contains("is not set")));
    }

    #[test]
    fn request_body_caps_stop_list() {
        let backend = LiveBackend::new(LiveConfig::default()).unwrap();
        let req = CompletionRequest::new("sys", "user").stop(&["a", "b", "c", "d", "e"]);
        let body = backend.body(&req);
        assert_eq!(body["stop"].as_array().unwrap().len(), 4);
        assert_eq!(body["messages"][0]["role"], "system");
        assert_eq!(body["model"], "gpt-4o-mini");
    }
}
