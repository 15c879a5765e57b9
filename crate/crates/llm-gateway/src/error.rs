#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LlmError {
    #[error("invalid completion request: {0}")]
    InvalidRequest(String),
    #[error("LLM backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("mock script has no entry for call #{call_index}")]
    ScriptExhausted { call_index: usize },
    #[error("no cassette record for request digest {digest}")]
    CassetteMiss { digest: String },
    #[error("cassette I/O: {0}")]
    Cassette(String),
}
