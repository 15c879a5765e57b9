use crate::transport::TransportError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DbError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("HTTP {status} from {url}")]
    Http { status: u16, url: String },
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("BLAST response carried no RID")]
    RidNotFound,
    #[error("BLAST job {rid} still waiting after {polls} polls")]
    Timeout { rid: String, polls: u32 },
    #[error("BLAST job {0} failed")]
    JobFailed(String),
}
