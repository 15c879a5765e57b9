//! The multi-agent question-answering engine.
//!
//! A question is routed to a task ([`detect_task`]), the task's workflow
//! fans out to its sources in parallel ([`dispatch`]), each response is
//! reduced to a candidate answer ([`handle_response`]) and the candidates
//! are reconciled ([`decide`]). [`GenomAgent`] ties the steps together and
//! records everything in a [`Transcript`](genomagent_core::Transcript).

pub mod cache;
pub mod config;
pub mod decide;
pub mod detect;
pub mod dispatch;
pub mod engine;
mod error;
pub mod fingerprint;
pub mod pipeline;
pub mod program;
pub mod schema;
pub mod session;

pub use cache::{CacheKey, CacheOutcome, ExtractionCache};
pub use config::{Binding, ConsensusPolicy, Endpoint, Entities, Route, SourceSpec, WorkflowConfig, WorkflowSet};
pub use decide::{decide, majority_then_priority};
pub use detect::{detect_by_rules, detect_task};
pub use dispatch::{dispatch, dispatch_all, DbExecutor, DispatchSettings, SourceExecutor, SourceFailure, SourceFetch, SourceResult};
pub use engine::{EngineSettings, GenomAgent};
pub use error::OrchError;
pub use fingerprint::fingerprint;
pub use pipeline::{handle_response, write_extractor, Confidence, Evidence, ResponseContext};
pub use program::{execute_extractor, ExtractionProgram, Instruction};
pub use schema::{summarize_schema, SchemaEntry, SchemaSummary};
pub use session::LlmSession;
