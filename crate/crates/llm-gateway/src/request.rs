use genomagent_core::TokenUsage;
use serde::{Deserialize, Serialize};

use crate::error::LlmError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub system_prompt: String,
    pub user_prompt: String,
    pub stop_sequences: Vec<String>,
    pub max_tokens: u32,
    pub temperature: f32,
}

impl CompletionRequest {
    pub fn new(system_prompt: impl Into<String>, user_prompt: impl Into<String>) -> Self {
        Self {
            system_prompt: system_prompt.into(),
            user_prompt: user_prompt.into(),
            stop_sequences: Vec::new(),
            max_tokens: 512,
            temperature: 0.0,
        }
    }

    pub fn stop(mut self, stops: &[&str]) -> Self {
        self.stop_sequences = stops.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn max_tokens(mut self, max_tokens: u32) -> Self {
        self.max_tokens = max_tokens;
        self
    }

    pub fn temperature(mut self, temperature: f32) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.max_tokens == 0 {
            return Err(LlmError::InvalidRequest("max_tokens must be at least 1".into()));
        }
        if self.stop_sequences.iter().any(String::is_empty) {
            return Err(LlmError::InvalidRequest("stop sequences must be nonempty".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(LlmError::InvalidRequest(format!("temperature {} outside [0, 2]", self.temperature)));
        }
        Ok(())
    }

    /// Concatenated prompt text, as seen by substring matchers and token estimates.
    pub fn prompt_text(&self) -> String {
        format!("{}\n{}", self.system_prompt, self.user_prompt)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "matched")]
pub enum FinishReason {
    Stop,
    StopSequence(String),
    Length,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionResult {
    pub text: String,
    pub finish_reason: FinishReason,
    pub usage: TokenUsage,
}

/// Cuts `text` at the earliest occurrence of any stop sequence. Returns the
/// kept prefix and the sequence that matched. When two sequences match at
/// the same offset the one listed first wins.
pub fn apply_stop_sequences<'a>(text: &'a str, stops: &[String]) -> (&'a str, Option<&'a str>) {
    let mut best: Option<(usize, usize)> = None;
    for (idx, stop) in stops.iter().enumerate() {
        if let Some(pos) = text.find(stop.as_str()) {
            if best.is_none_or(|(p, _)| pos < p) {
                best = Some((pos, idx));
            }
        }
    }
    match best {
        Some((pos, idx)) => (&text[..pos], Some(&text[pos..pos + stops[idx].len()])),
        None => (text, None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn earliest_stop_wins() {
        let stops = vec!["→".to_string(), "\n\n".to_string()];
        assert_eq!(apply_stop_sequences("call [u]→ rest", &stops), ("call [u]", Some("→")));
        assert_eq!(apply_stop_sequences("Answer: x\n\n[u]→", &stops), ("Answer: x", Some("\n\n")));
        assert_eq!(apply_stop_sequences("plain", &stops), ("plain", None));
        assert_eq!(apply_stop_sequences("plain", &[]), ("plain", None));
    }

    #[test]
    fn validation() {
        assert!(CompletionRequest::new("", "x").validate().is_ok());
        assert!(CompletionRequest::new("", "x").max_tokens(0).validate().is_err());
        assert!(CompletionRequest::new("", "x").stop(&[""]).validate().is_err());
        assert!(CompletionRequest::new("", "x").temperature(2.5).validate().is_err());
    }
}
