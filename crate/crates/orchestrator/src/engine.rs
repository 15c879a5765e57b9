use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use genomagent_core::{
    AgentId, Event, EventDetail, EventKind, Outcome, Prediction, Pricing, QaEngine, Question, SourceId, TaskKind, Transcript, Usd,
};
use genomagent_llm::LlmGateway;

use crate::cache::ExtractionCache;
use crate::config::{Endpoint, WorkflowSet};
use crate::decide::decide;
use crate::detect::detect_task;
use crate::dispatch::{dispatch_all, DispatchSettings, SourceExecutor};
use crate::error::OrchError;
use crate::pipeline::{handle_response, ResponseContext};
use crate::session::LlmSession;

#[derive(Debug, Clone)]
pub struct EngineSettings {
    pub label: String,
    pub pricing: Pricing,
    pub budget: Usd,
    pub dispatch: DispatchSettings,
}

impl EngineSettings {
    pub fn new(pricing: Pricing) -> Self {
        Self {
            label: "GenomAgent".into(),
            pricing,
            budget: Usd::from_micros(50_000),
            dispatch: DispatchSettings::default(),
        }
    }

    pub fn budget(mut self, budget: Usd) -> Self {
        self.budget = budget;
        self
    }

    pub fn parallelism(mut self, n: usize) -> Self {
        self.dispatch.parallelism = n;
        self
    }

    pub fn per_source_timeout(mut self, timeout: Duration) -> Self {
        self.dispatch.per_source_timeout = timeout;
        self
    }
}

/// The multi-agent engine: route, fan out, extract, decide.
pub struct GenomAgent {
    gateway: Arc<LlmGateway>,
    executor: Arc<dyn SourceExecutor>,
    workflows: WorkflowSet,
    cache: Arc<ExtractionCache>,
    settings: EngineSettings,
}

impl GenomAgent {
    pub fn new(
        gateway: Arc<LlmGateway>,
        executor: Arc<dyn SourceExecutor>,
        workflows: WorkflowSet,
        cache: Arc<ExtractionCache>,
        settings: EngineSettings,
    ) -> Self {
        Self { gateway, executor, workflows, cache, settings }
    }

    pub fn cache(&self) -> &Arc<ExtractionCache> {
        &self.cache
    }

    async fn run(&self, question: &Question, session: &mut LlmSession) -> Result<(TaskKind, String), OrchError> {
        let (task, entities) = detect_task(&question.text, session).await?;
        let workflow = self.workflows.get(task);
        let bound: Vec<(SourceId, Endpoint)> = workflow
            .sources
            .iter()
            .map(|s| s.endpoint.bind(&entities).map(|e| (s.source, e)))
            .collect::<Result<_, _>>()?;

        let results = dispatch_all(&bound, self.executor.as_ref(), self.settings.dispatch).await;
        for r in &results {
            let calls = match &r.outcome {
                Ok(f) => &f.calls,
                Err(f) => &f.calls,
            };
            for call in calls {
                session.record(
                    Event::new(AgentId::Mcp, EventKind::ApiCall)
                        .digests(call.url.as_bytes(), call.body.as_deref().unwrap_or("").as_bytes())
                        .wall_time_ms(r.elapsed_ms)
                        .detail(EventDetail::Api(call.clone())),
                );
            }
        }
        if results.iter().all(|r| r.outcome.is_err()) {
            return Err(OrchError::AllSourcesFailed);
        }

        let ctx = ResponseContext {
            question: &question.text,
            task,
            target_description: &workflow.target_description,
            json_size_threshold: workflow.json_size_threshold,
            cache: &self.cache,
        };
        let mut evidence = Vec::new();
        for r in &results {
            let spec = &workflow.sources[r.index];
            let Ok(fetch) = &r.outcome else { continue };
            let response = match (&fetch.response, fetch.result_count) {
                (Some(resp), count) if count != Some(0) => resp,
                _ => {
                    session.record(Event::new(AgentId::ResponseHandler, EventKind::Extraction).detail(
                        EventDetail::Extraction {
                            source: Some(r.source),
                            result_count: 0,
                            cache_hit: None,
                            summary_bytes: None,
                            error: None,
                        },
                    ));
                    continue;
                }
            };
            match handle_response(response, spec, &ctx, session).await {
                Ok(e) => evidence.push(e),
                Err(e @ (OrchError::BudgetExceeded | OrchError::Llm(_))) => return Err(e),
                Err(e) => tracing::debug!(source = %r.source, error = %e, "no evidence from source"),
            }
        }
        let answer = decide(&question.text, &evidence, workflow.consensus_policy, session).await?;
        Ok((task, answer))
    }
}

#[async_trait]
impl QaEngine for GenomAgent {
    fn label(&self) -> &str {
        &self.settings.label
    }

    async fn answer(&self, question: &Question) -> (Prediction, Transcript) {
        let mut session =
            LlmSession::new(self.gateway.clone(), self.settings.pricing.clone(), self.settings.budget, &question.id);
        let result = self.run(question, &mut session).await;
        let mut transcript = session.into_transcript();
        match result {
            Ok((task, raw)) => {
                transcript.finish(Outcome::Answered);
                (Prediction::new(raw, task, &question.id), transcript)
            }
            Err(e) => {
                transcript.finish(Outcome::Failed(e.failure_reason()));
                (Prediction::empty(question.task, &question.id), transcript)
            }
        }
    }
}
