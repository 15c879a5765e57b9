//! Domain types shared by every GenomAgent crate.
//!
//! Everything here is an immutable value type (or an append-only record in
//! the case of [`Transcript`]) and is `Send + Sync`, so the orchestrator can
//! hand these across tasks freely.

pub mod api;
pub mod digest;
pub mod engine;
pub mod interval;
pub mod money;
pub mod normalize;
pub mod pacing;
pub mod question;
pub mod task;
pub mod transcript;

pub use api::{ApiRequest, ApiResponse, ContentKind, Method, SourceId};
pub use digest::{sha256_hex, short_digest};
pub use engine::QaEngine;
pub use interval::{parse_interval, GenomicInterval, ParseFailure};
pub use money::{Pricing, PricingError, Rate, TokenUsage, Usd};
pub use normalize::normalize_answer;
pub use pacing::Pacer;
pub use question::{GoldAnswer, Prediction, Question};
pub use task::{Category, TaskKind};
pub use transcript::{
    AgentId, ApiCallRecord, Event, EventDetail, EventKind, FailureReason, Outcome,
    TerminationReason, Transcript,
};
