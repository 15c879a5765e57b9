use genomagent_core::FailureReason;
use genomagent_llm::LlmError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OrchError {
    #[error("could not classify question: {0}")]
    Unclassifiable(String),
    #[error("every source failed")]
    AllSourcesFailed,
    #[error("no evidence to decide from")]
    NoEvidence,
    #[error("extraction found nothing: {0}")]
    ExtractionFailed(String),
    #[error("route {route} cannot handle {kind} content")]
    PipelineMismatch { route: String, kind: String },
    #[error("extraction program rejected: {0}")]
    ProgramInvalid(String),
    #[error("question budget exhausted")]
    BudgetExceeded,
    #[error("workflow configuration: {0}")]
    Config(String),
    #[error("model call failed: {0}")]
    Llm(#[from] LlmError),
}

impl OrchError {
    /// How this error shows up as a question outcome.
    pub fn failure_reason(&self) -> FailureReason {
        match self {
            OrchError::Unclassifiable(_) | OrchError::Config(_) => FailureReason::Unclassifiable,
            OrchError::AllSourcesFailed => FailureReason::AllSourcesFailed,
            OrchError::NoEvidence
            | OrchError::ExtractionFailed(_)
            | OrchError::PipelineMismatch { .. }
            | OrchError::ProgramInvalid(_) => FailureReason::NoEvidence,
            OrchError::BudgetExceeded => FailureReason::BudgetExceeded,
            OrchError::Llm(e) => FailureReason::Backend(e.to_string()),
        }
    }
}
