use std::sync::Arc;

use async_trait::async_trait;

use crate::cassette::CassetteStore;
use crate::error::LlmError;
use crate::request::{CompletionRequest, CompletionResult};

#[async_trait]
pub trait LlmBackend: Send + Sync {
    /// Short description of the backend mode, e.g. `mock` or `live:gpt-4o-mini`.
    fn describe(&self) -> String;

    async fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, LlmError>;
}

/// Validates requests, forwards them to the configured backend and, when
/// recording is enabled, persists every result to a cassette.
#[derive(Clone)]
pub struct LlmGateway {
    backend: Arc<dyn LlmBackend>,
    recorder: Option<Arc<CassetteStore>>,
}

impl LlmGateway {
    pub fn new(backend: Arc<dyn LlmBackend>) -> Self {
        Self { backend, recorder: None }
    }

    pub fn with_recording(mut self, store: Arc<CassetteStore>) -> Self {
        self.recorder = Some(store);
        self
    }

    pub fn describe(&self) -> String {
        self.backend.describe()
    }

    pub async fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, LlmError> {
        request.validate()?;
        let result = self.backend.complete(request).await?;
        if let Some(store) = &self.recorder {
            store.record(request, &result)?;
        }
        Ok(result)
    }
}

impl std::fmt::Debug for LlmGateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LlmGateway")
            .field("backend", &self.backend.describe())
            .field("recording", &self.recorder.is_some())
            .finish()
    }
}
