use std::fmt;

use serde::{Deserialize, Serialize};

use crate::api::{Method, SourceId};
use crate::money::{TokenUsage, Usd};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentId {
    TaskDetection,
    Mcp,
    ResponseHandler,
    FeatureExtractor,
    CodeWriter,
    CodeExecutor,
    FinalDecision,
    SingleAgent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    LlmCall,
    ApiCall,
    Extraction,
    Decision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TerminationReason {
    TerminationToken,
    MaxIterations,
    NoApiCall,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiCallRecord {
    pub source: SourceId,
    pub method: Method,
    pub url: String,
    /// HTTP status when a response arrived.
    pub status: Option<u16>,
    /// Transport, fixture or timeout error text when no usable response arrived.
    pub error: Option<String>,
    pub bytes: usize,
    /// Number of records the response parsed into, when the caller knows.
    pub result_count: Option<usize>,
    pub body: Option<String>,
}

impl ApiCallRecord {
    pub fn succeeded(&self) -> bool {
        self.error.is_none() && self.status.is_some_and(|s| (200..300).contains(&s))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventDetail {
    None,
    Llm { purpose: String, finish: String },
    Api(ApiCallRecord),
    Extraction {
        source: Option<SourceId>,
        result_count: usize,
        cache_hit: Option<bool>,
        summary_bytes: Option<usize>,
        error: Option<String>,
    },
    ProgramInvalid { error: String },
    Unclassifiable { reason: String },
    Vote { policy: String, tally: Vec<(String, usize)>, chosen: String },
    Termination { reason: TerminationReason },
    BudgetAbort { spent: Usd, budget: Usd },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub agent: AgentId,
    pub kind: EventKind,
    pub input_digest: String,
    pub output_digest: String,
    pub usage: TokenUsage,
    pub wall_time_ms: u64,
    /// Bytes of retrieved data placed into a model context by this step.
    #[serde(default)]
    pub appended_bytes: u64,
    /// Running USD spend after this event.
    pub cumulative_cost: Usd,
    pub detail: EventDetail,
}

impl Event {
    pub fn new(agent: AgentId, kind: EventKind) -> Self {
        Self {
            agent,
            kind,
            input_digest: String::new(),
            output_digest: String::new(),
            usage: TokenUsage::ZERO,
            wall_time_ms: 0,
            appended_bytes: 0,
            cumulative_cost: Usd::ZERO,
            detail: EventDetail::None,
        }
    }

    pub fn digests(mut self, input: &[u8], output: &[u8]) -> Self {
        self.input_digest = crate::digest::short_digest(input);
        self.output_digest = crate::digest::short_digest(output);
        self
    }

    pub fn usage(mut self, usage: TokenUsage) -> Self {
        self.usage = usage;
        self
    }

    pub fn wall_time_ms(mut self, ms: u64) -> Self {
        self.wall_time_ms = ms;
        self
    }

    pub fn appended_bytes(mut self, bytes: u64) -> Self {
        self.appended_bytes = bytes;
        self
    }

    pub fn detail(mut self, detail: EventDetail) -> Self {
        self.detail = detail;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail")]
pub enum FailureReason {
    BudgetExceeded,
    Unclassifiable,
    AllSourcesFailed,
    NoEvidence,
    NoApiCall,
    MaxIterations,
    Backend(String),
    Incomplete,
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureReason::Backend(msg) => write!(f, "Backend({msg})"),
            other => fmt::Debug::fmt(other, f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason")]
pub enum Outcome {
    Answered,
    Failed(FailureReason),
}

impl Outcome {
    pub fn is_answered(&self) -> bool {
        matches!(self, Outcome::Answered)
    }
}

/// Append-only record of everything that happened while answering one
/// question. `total_usage` is maintained by [`Transcript::push`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub question_id: String,
    events: Vec<Event>,
    total_usage: TokenUsage,
    pub outcome: Outcome,
}

impl Transcript {
    pub fn new(question_id: impl Into<String>) -> Self {
        Self {
            question_id: question_id.into(),
            events: Vec::new(),
            total_usage: TokenUsage::ZERO,
            outcome: Outcome::Failed(FailureReason::Incomplete),
        }
    }

    pub fn push(&mut self, event: Event) {
        self.total_usage += event.usage;
        self.events.push(event);
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn total_usage(&self) -> TokenUsage {
        self.total_usage
    }

    pub fn cumulative_cost(&self) -> Usd {
        self.events.last().map(|e| e.cumulative_cost).unwrap_or(Usd::ZERO)
    }

    pub fn finish(&mut self, outcome: Outcome) {
        self.outcome = outcome;
    }

    /// True when `total_usage` matches the per-event sum (always the case
    /// unless a transcript was edited on disk).
    pub fn usage_consistent(&self) -> bool {
        self.events.iter().map(|e| e.usage).sum::<TokenUsage>() == self.total_usage
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    pub fn api_calls(&self) -> impl Iterator<Item = &ApiCallRecord> {
        self.events.iter().filter_map(|e| match &e.detail {
            EventDetail::Api(rec) => Some(rec),
            _ => None,
        })
    }

    /// JSON of the transcript with wall-clock timings zeroed, for
    /// run-to-run comparisons.
    pub fn timing_free_json(&self) -> String {
        let mut copy = self.clone();
        for e in &mut copy.events {
            e.wall_time_ms = 0;
        }
        serde_json::to_string(&copy).expect("transcript serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_usage_tracks_pushes() {
        let mut t = Transcript::new("q1");
        t.push(Event::new(AgentId::TaskDetection, EventKind::LlmCall).usage(TokenUsage::new(10, 2)));
        t.push(Event::new(AgentId::Mcp, EventKind::ApiCall));
        t.push(Event::new(AgentId::FinalDecision, EventKind::LlmCall).usage(TokenUsage::new(5, 1)));
        assert_eq!(t.total_usage(), TokenUsage::new(15, 3));
        assert!(t.usage_consistent());
        assert_eq!(t.count(EventKind::LlmCall), 2);
    }

    #[test]
    fn serializes_outcome_and_details() {
        let mut t = Transcript::new("q1");
        t.push(
            Event::new(AgentId::SingleAgent, EventKind::Decision)
                .detail(EventDetail::Termination { reason: TerminationReason::NoApiCall }),
        );
        t.finish(Outcome::Failed(FailureReason::NoApiCall));
        let json = serde_json::to_string(&t).unwrap();
        let back: Transcript = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
        assert!(json.contains(r#""status":"Failed""#));
    }
}
