//! The single entry point for model calls.
//!
//! [`LlmGateway`] fronts one of three backends: [`LiveBackend`] (an
//! OpenAI-compatible chat endpoint), [`MockBackend`] (a deterministic
//! script) and [`ReplayBackend`] (a cassette directory). Every result
//! carries [`TokenUsage`](genomagent_core::TokenUsage), and [`cost`] turns
//! usage into dollars.

mod accounting;
mod cassette;
mod error;
mod gateway;
mod live;
mod mock;
mod request;

pub use accounting::{cost, estimate_tokens};
pub use cassette::{CassetteRecord, CassetteStore, ReplayBackend};
pub use error::LlmError;
pub use gateway::{LlmBackend, LlmGateway};
pub use live::{LiveBackend, LiveConfig};
pub use mock::{Matcher, MockBackend, MockEntry, MockScript};
pub use request::{apply_stop_sequences, CompletionRequest, CompletionResult, FinishReason};
