use async_trait::async_trait;

use crate::question::{Prediction, Question};
use crate::transcript::Transcript;

/// Anything that can answer a benchmark question end to end.
///
/// Implementations never fail: problems are reported through the
/// transcript's outcome.
#[async_trait]
pub trait QaEngine: Send + Sync {
    fn label(&self) -> &str;

    async fn answer(&self, question: &Question) -> (Prediction, Transcript);
}
