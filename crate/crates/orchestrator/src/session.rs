use std::sync::Arc;
use std::time::Instant;

use genomagent_core::{AgentId, Event, EventDetail, EventKind, Pricing, Transcript, Usd};
use genomagent_llm::{cost, CompletionRequest, CompletionResult, FinishReason, LlmGateway};

use crate::error::OrchError;

/// Per-question state: the transcript being built and the spend against
/// the question's budget. Every model call goes through [`LlmSession::complete`].
pub struct LlmSession {
    gateway: Arc<LlmGateway>,
    pricing: Pricing,
    budget: Usd,
    pub transcript: Transcript,
    llm_calls: usize,
}

impl LlmSession {
    pub fn new(gateway: Arc<LlmGateway>, pricing: Pricing, budget: Usd, question_id: &str) -> Self {
        Self { gateway, pricing, budget, transcript: Transcript::new(question_id), llm_calls: 0 }
    }

    pub fn spent(&self) -> Usd {
        cost(self.transcript.total_usage(), &self.pricing)
    }

    pub fn llm_calls(&self) -> usize {
        self.llm_calls
    }

    /// Appends an event stamped with the running spend.
    pub fn record(&mut self, mut event: Event) {
        event.cumulative_cost = cost(self.transcript.total_usage() + event.usage, &self.pricing);
        self.transcript.push(event);
    }

    /// Runs one completion unless the budget is already used up. A call that
    /// starts under budget is always allowed to finish and is charged in full.
    pub async fn complete(
        &mut self,
        agent: AgentId,
        purpose: &str,
        request: &CompletionRequest,
        appended_bytes: u64,
    ) -> Result<CompletionResult, OrchError> {
        let spent = self.spent();
        if spent >= self.budget {
            self.record(
                Event::new(agent, EventKind::Decision)
                    .detail(EventDetail::BudgetAbort { spent, budget: self.budget }),
            );
            return Err(OrchError::BudgetExceeded);
        }
        let started = Instant::now();
        let result = self.gateway.complete(request).await?;
        self.llm_calls += 1;
        let finish = match &result.finish_reason {
            FinishReason::Stop => "stop".to_string(),
            FinishReason::StopSequence(s) => format!("stop_sequence:{s}"),
            FinishReason::Length => "length".to_string(),
        };
        self.record(
            Event::new(agent, EventKind::LlmCall)
                .digests(request.prompt_text().as_bytes(), result.text.as_bytes())
                .usage(result.usage)
                .wall_time_ms(started.elapsed().as_millis() as u64)
                .appended_bytes(appended_bytes)
                .detail(EventDetail::Llm { purpose: purpose.to_string(), finish }),
        );
        Ok(result)
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }
}
