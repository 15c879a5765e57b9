use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use async_trait::async_trait;
use genomagent_core::TokenUsage;
use serde::{Deserialize, Serialize};

use crate::accounting::estimate_tokens;
use crate::error::LlmError;
use crate::gateway::LlmBackend;
use crate::request::{apply_stop_sequences, CompletionRequest, CompletionResult, FinishReason};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Matcher {
    /// Matches only the n-th call (0-based) made against this backend.
    Index(usize),
    /// Matches any call whose system or user prompt contains the text.
    Contains(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockEntry {
    #[serde(flatten)]
    pub matcher: Matcher,
    pub response: String,
}

/// Ordered canned responses. The first entry whose matcher accepts a call
/// answers it; entries are never consumed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MockScript {
    pub entries: Vec<MockEntry>,
}

impl MockScript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn at(mut self, index: usize, response: impl Into<String>) -> Self {
        self.entries.push(MockEntry { matcher: Matcher::Index(index), response: response.into() });
        self
    }

    pub fn when(mut self, needle: impl Into<String>, response: impl Into<String>) -> Self {
        self.entries.push(MockEntry { matcher: Matcher::Contains(needle.into()), response: response.into() });
        self
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LlmError::BackendUnavailable(format!("reading mock script {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| LlmError::BackendUnavailable(format!("parsing mock script {}: {e}", path.display())))
    }

    fn lookup(&self, call_index: usize, prompt: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|e| match &e.matcher {
                Matcher::Index(i) => *i == call_index,
                Matcher::Contains(needle) => prompt.contains(needle.as_str()),
            })
            .map(|e| e.response.as_str())
    }
}

/// Scripted backend. Token usage follows [`estimate_tokens`] on the prompt
/// and on the returned (post-stop) text.
#[derive(Debug, Default)]
pub struct MockBackend {
    script: MockScript,
    calls: AtomicUsize,
}

impl MockBackend {
    pub fn new(script: MockScript) -> Self {
        Self { script, calls: AtomicUsize::new(0) }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

#[async_trait]
impl LlmBackend for MockBackend {
    fn describe(&self) -> String {
        "mock".to_string()
    }

    async fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, LlmError> {
        let call_index = self.calls.fetch_add(1, Ordering::SeqCst);
        let prompt = request.prompt_text();
        let canned = self.script.lookup(call_index, &prompt).ok_or(LlmError::ScriptExhausted { call_index })?;

        let (kept, matched) = apply_stop_sequences(canned, &request.stop_sequences);
        let (text, finish_reason) = match matched {
            Some(stop) => (kept.to_string(), FinishReason::StopSequence(stop.to_string())),
            None => {
                let limit = request.max_tokens as usize * 4;
                if kept.chars().count() > limit {
                    (kept.chars().take(limit).collect(), FinishReason::Length)
                } else {
                    (kept.to_string(), FinishReason::Stop)
                }
            }
        };
        let usage = TokenUsage::new(
            estimate_tokens(&request.system_prompt) + estimate_tokens(&request.user_prompt),
            estimate_tokens(&text),
        );
        Ok(CompletionResult { text, finish_reason, usage })
    }
}
