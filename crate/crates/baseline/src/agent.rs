use std::sync::Arc;
use std::time::{Duration, Instant};

use async_trait::async_trait;
use genomagent_core::{
    AgentId, ApiCallRecord, ApiRequest, Event, EventDetail, EventKind, FailureReason, Outcome, Prediction, Pricing,
    QaEngine, Question, SourceId, TerminationReason, Transcript,
};
use genomagent_db::HttpTransport;
use genomagent_llm::{cost, CompletionRequest, FinishReason, LlmGateway};
use url::Url;

use crate::extract::{extract_api_call, parse_final_answer, truncate_context};
use crate::prompt::{result_count, PromptAssembly};
use crate::{ANSWER_STOP, CALL_STOP};

#[derive(Debug, Clone)]
pub struct BaselineSettings {
    pub label: String,
    pub pricing: Pricing,
    pub max_iterations: u32,
    /// Byte cap on each API result placed in the prompt. `None` keeps
    /// results whole.
    pub truncate_limit: Option<usize>,
    /// Pause before fetching BLAST results, giving the search time to run.
    pub blast_wait: Duration,
    pub max_tokens: u32,
}

impl BaselineSettings {
    pub fn new(pricing: Pricing) -> Self {
        Self {
            label: "GeneGPT".into(),
            pricing,
            max_iterations: 10,
            truncate_limit: None,
            blast_wait: Duration::from_secs(30),
            max_tokens: 512,
        }
    }
}

/// Where one loop stands: the prompt so far, the calls made and how it
/// ended.
#[derive(Debug, Clone)]
pub struct LoopState {
    pub prompt: String,
    pub api_calls_made: Vec<ApiRequest>,
    pub iteration: u32,
    pub terminated: Option<TerminationReason>,
}

fn source_for(url: &Url) -> Option<SourceId> {
    let host = url.host_str()?.to_ascii_lowercase();
    if host.contains("blast") || url.path().contains("Blast.cgi") {
        Some(SourceId::Blast)
    } else if host.ends_with("ncbi.nlm.nih.gov") {
        Some(SourceId::NcbiEutils)
    } else if host.ends_with("genenames.org") {
        Some(SourceId::Hgnc)
    } else if host.contains("ucsc.edu") {
        Some(SourceId::Ucsc)
    } else {
        None
    }
}

fn is_blast_fetch(url: &Url) -> bool {
    source_for(url) == Some(SourceId::Blast) && url.query_pairs().any(|(k, v)| k == "CMD" && v == "Get")
}

struct Run<'a> {
    transcript: Transcript,
    llm_calls: u32,
    settings: &'a BaselineSettings,
}

impl Run<'_> {
    fn record(&mut self, mut event: Event) {
        let total = self.transcript.total_usage() + event.usage;
        event.cumulative_cost = cost(total, &self.settings.pricing);
        self.transcript.push(event);
    }

    fn terminate(&mut self, reason: TerminationReason) {
        self.record(
            Event::new(AgentId::SingleAgent, EventKind::Decision).detail(EventDetail::Termination { reason }),
        );
    }

    /// Runs one call and returns the text to append to the prompt.
    async fn call(&mut self, url: &Url, http: &dyn HttpTransport) -> (Option<ApiRequest>, String) {
        let started = Instant::now();
        let Some(source) = source_for(url) else {
            let message = format!("error: no API is available at {}", url.host_str().unwrap_or(""));
            self.record(api_event(url, None, None, Some(message.clone()), started));
            return (None, message);
        };
        let request = match ApiRequest::get(source, url.as_str()) {
            Ok(r) => r,
            Err(e) => {
                let message = format!("error: {e}");
                self.record(api_event(url, Some(source), None, Some(message.clone()), started));
                return (None, message);
            }
        };
        if is_blast_fetch(url) && !self.settings.blast_wait.is_zero() {
            tokio::time::sleep(self.settings.blast_wait).await;
        }
        match http.execute(&request).await {
            Ok(response) => {
                let text = response.text().into_owned();
                let appended = truncate_context(&text, self.settings.truncate_limit);
                let status = response.status;
                let mut event = api_event(url, Some(source), Some(status), None, started).appended_bytes(appended.len() as u64);
                if let EventDetail::Api(rec) = &mut event.detail {
                    rec.bytes = response.body.len();
                    rec.result_count = result_count(&text);
                    rec.body = Some(text);
                }
                self.record(event.digests(url.as_str().as_bytes(), &response.body));
                (Some(request), appended)
            }
            Err(e) => {
                let message = format!("error: {e}");
                self.record(api_event(url, Some(source), None, Some(message.clone()), started));
                (Some(request), message)
            }
        }
    }
}

fn api_event(url: &Url, source: Option<SourceId>, status: Option<u16>, error: Option<String>, started: Instant) -> Event {
    Event::new(AgentId::SingleAgent, EventKind::ApiCall)
        .wall_time_ms(started.elapsed().as_millis() as u64)
        .detail(EventDetail::Api(ApiCallRecord {
            source: source.unwrap_or(SourceId::NcbiEutils),
            method: genomagent_core::Method::Get,
            url: url.to_string(),
            status,
            error,
            bytes: 0,
            result_count: None,
            body: None,
        }))
}

/// The stop-token loop. Never fails: every problem ends up in the
/// transcript outcome.
pub async fn run_single_agent(
    question: &Question,
    assembly: &PromptAssembly,
    llm: &LlmGateway,
    http: &dyn HttpTransport,
    settings: &BaselineSettings,
) -> (Prediction, Transcript, LoopState) {
    let mut state = LoopState {
        prompt: assembly.render(&question.text),
        api_calls_made: Vec::new(),
        iteration: 0,
        terminated: None,
    };
    let mut run = Run { transcript: Transcript::new(&question.id), llm_calls: 0, settings };
    let max_iterations = settings.max_iterations.max(1);

    let outcome = loop {
        let request = CompletionRequest::new("", state.prompt.clone())
            .stop(&[CALL_STOP, ANSWER_STOP])
            .max_tokens(settings.max_tokens);
        let started = Instant::now();
        let result = match llm.complete(&request).await {
            Ok(r) => r,
            Err(e) => break Err(FailureReason::Backend(e.to_string())),
        };
        run.llm_calls += 1;
        let finish = match &result.finish_reason {
            FinishReason::Stop => "stop".to_string(),
            FinishReason::StopSequence(s) => format!("stop_sequence:{s}"),
            FinishReason::Length => "length".to_string(),
        };
        run.record(
            Event::new(AgentId::SingleAgent, EventKind::LlmCall)
                .digests(state.prompt.as_bytes(), result.text.as_bytes())
                .usage(result.usage)
                .wall_time_ms(started.elapsed().as_millis() as u64)
                .detail(EventDetail::Llm { purpose: "generate".into(), finish }),
        );

        if result.finish_reason != FinishReason::StopSequence(CALL_STOP.into()) {
            state.terminated = Some(TerminationReason::TerminationToken);
            run.terminate(TerminationReason::TerminationToken);
            break Ok(parse_final_answer(&result.text));
        }
        if state.iteration >= max_iterations {
            state.terminated = Some(TerminationReason::MaxIterations);
            run.terminate(TerminationReason::MaxIterations);
            break Err(FailureReason::MaxIterations);
        }
        let Some(url) = extract_api_call(&result.text) else {
            state.terminated = Some(TerminationReason::NoApiCall);
            run.terminate(TerminationReason::NoApiCall);
            break Err(FailureReason::NoApiCall);
        };
        state.iteration += 1;
        let (request, appended) = run.call(&url, http).await;
        state.api_calls_made.extend(request);
        state.prompt.push_str(&result.text);
        state.prompt.push_str(CALL_STOP);
        state.prompt.push('[');
        state.prompt.push_str(&appended);
        state.prompt.push_str("]\n");
    };

    let mut transcript = run.transcript;
    match outcome {
        Ok(answer) => {
            transcript.finish(Outcome::Answered);
            (Prediction::new(answer, question.task, &question.id), transcript, state)
        }
        Err(reason) => {
            transcript.finish(Outcome::Failed(reason));
            (Prediction::empty(question.task, &question.id), transcript, state)
        }
    }
}

/// The loop packaged as a [`QaEngine`].
pub struct Baseline {
    gateway: Arc<LlmGateway>,
    http: Arc<dyn HttpTransport>,
    assembly: PromptAssembly,
    settings: BaselineSettings,
}

impl Baseline {
    pub fn new(
        gateway: Arc<LlmGateway>,
        http: Arc<dyn HttpTransport>,
        assembly: PromptAssembly,
        settings: BaselineSettings,
    ) -> Self {
        Self { gateway, http, assembly, settings }
    }

    pub fn settings(&self) -> &BaselineSettings {
        &self.settings
    }
}

#[async_trait]
impl QaEngine for Baseline {
    fn label(&self) -> &str {
        &self.settings.label
    }

    async fn answer(&self, question: &Question) -> (Prediction, Transcript) {
        let (prediction, transcript, _) =
            run_single_agent(question, &self.assembly, &self.gateway, self.http.as_ref(), &self.settings).await;
        (prediction, transcript)
    }
}

