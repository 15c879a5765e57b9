//! Turning one source response into a candidate answer.
//!
//! JSON responses under the size threshold are read directly (through the
//! source's binding, or by one model call over the body). Larger ones are
//! first reduced to a [`SchemaSummary`]. HTML responses go through an
//! extraction program, written once per page structure and then reused
//! from the [`ExtractionCache`].

use std::time::Instant;

use genomagent_core::{
    normalize_answer, AgentId, ApiResponse, ContentKind, Event, EventDetail, EventKind, SourceId, TaskKind,
};
use genomagent_llm::CompletionRequest;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cache::{CacheKey, CacheOutcome, ExtractionCache};
use crate::config::{Route, SourceSpec};
use crate::error::OrchError;
use crate::fingerprint::fingerprint;
use crate::program::{execute_extractor, ExtractionProgram, Instruction};
use crate::schema::summarize_schema;
use crate::session::LlmSession;

/// Largest slice of a page shown to the program writer.
const WRITER_SAMPLE_BYTES: usize = 6000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Confidence {
    Parsed,
    LlmExtracted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub source: SourceId,
    /// Raw candidate, as extracted.
    pub raw: String,
    /// Normalized candidate; never empty.
    pub candidate_answer: String,
    pub support: Vec<String>,
    pub confidence: Confidence,
}

/// What the response handler needs to know about the question.
pub struct ResponseContext<'a> {
    pub question: &'a str,
    pub task: TaskKind,
    pub target_description: &'a str,
    pub json_size_threshold: usize,
    pub cache: &'a ExtractionCache,
}

fn canonical_candidate(raw: &str, task: TaskKind) -> String {
    if task == TaskKind::DiseaseAssociation {
        let mut symbols: Vec<String> = genomagent_core::question::split_symbols(raw).into_iter().collect();
        symbols.sort_by_key(|s| s.to_lowercase());
        symbols.dedup_by(|a, b| a.eq_ignore_ascii_case(b));
        symbols.join(", ")
    } else {
        raw.trim().to_string()
    }
}

fn evidence(source: SourceId, raw: &str, support: Vec<String>, confidence: Confidence, task: TaskKind) -> Result<Evidence, OrchError> {
    let raw = canonical_candidate(raw, task);
    let candidate_answer = normalize_answer(&raw, task);
    if candidate_answer.is_empty() || candidate_answer == "none" {
        return Err(OrchError::ExtractionFailed("empty candidate".into()));
    }
    Ok(Evidence { source, raw, candidate_answer, support, confidence })
}

fn extraction_event(
    agent: AgentId,
    source: SourceId,
    input: &[u8],
    result: &Result<Vec<String>, OrchError>,
    cache_hit: Option<bool>,
    summary_bytes: Option<usize>,
) -> Event {
    let (count, error, out) = match result {
        Ok(v) => (v.len(), None, v.join("\n")),
        Err(e) => (0, Some(e.to_string()), String::new()),
    };
    Event::new(agent, EventKind::Extraction).digests(input, out.as_bytes()).detail(EventDetail::Extraction {
        source: Some(source),
        result_count: count,
        cache_hit,
        summary_bytes,
        error,
    })
}

/// Takes the first line of a model reply and strips a leading "Answer:".
fn reply_answer(text: &str) -> String {
    let line = text.trim().lines().next().unwrap_or("").trim();
    let lower = line.to_lowercase();
    let stripped = if lower.starts_with("answer:") { &line["answer:".len()..] } else { line };
    stripped.trim().trim_matches('`').trim().to_string()
}

pub async fn handle_response(
    response: &ApiResponse,
    spec: &SourceSpec,
    ctx: &ResponseContext<'_>,
    session: &mut LlmSession,
) -> Result<Evidence, OrchError> {
    match spec.route {
        Route::Json => {
            if response.content_kind != ContentKind::Json {
                return Err(mismatch(spec.route, response.content_kind));
            }
            json_pipeline(response, spec, ctx, session).await
        }
        Route::Html => {
            if response.content_kind != ContentKind::Html {
                return Err(mismatch(spec.route, response.content_kind));
            }
            html_pipeline(response, spec, ctx, session).await
        }
    }
}

fn mismatch(route: Route, kind: ContentKind) -> OrchError {
    OrchError::PipelineMismatch { route: format!("{route:?}").to_lowercase(), kind: format!("{kind:?}").to_lowercase() }
}

fn run_binding(spec: &SourceSpec, body: &str, target: &str) -> Result<(String, Vec<String>), OrchError> {
    let binding = spec.binding.as_ref().expect("caller checked binding");
    let mut values = Vec::new();
    for program in binding.programs(target)? {
        values.push(execute_extractor(&program, body)?);
    }
    let support = values.iter().flatten().cloned().collect();
    Ok((binding.render(&values), support))
}

async fn json_pipeline(
    response: &ApiResponse,
    spec: &SourceSpec,
    ctx: &ResponseContext<'_>,
    session: &mut LlmSession,
) -> Result<Evidence, OrchError> {
    let body = response.text();
    let doc: Value = serde_json::from_str(&body).map_err(|e| OrchError::ExtractionFailed(format!("body is not JSON: {e}")))?;
    let large = response.body.len() > ctx.json_size_threshold;
    let mut summary_bytes = None;
    let mut summary_text = String::new();
    if large {
        let started = Instant::now();
        let summary = summarize_schema(&doc, ctx.json_size_threshold / 4);
        summary_text = summary.render();
        summary_bytes = Some(summary_text.len());
        session.record(
            Event::new(AgentId::ResponseHandler, EventKind::Extraction)
                .digests(&response.body, summary_text.as_bytes())
                .wall_time_ms(started.elapsed().as_millis() as u64)
                .detail(EventDetail::Extraction {
                    source: Some(spec.source),
                    result_count: summary.entries.len(),
                    cache_hit: None,
                    summary_bytes,
                    error: None,
                }),
        );
    }

    if spec.binding.is_some() {
        let result = run_binding(spec, &body, ctx.target_description);
        let shown = result.as_ref().map(|(r, _)| vec![r.clone()]).map_err(Clone::clone);
        session.record(extraction_event(AgentId::FeatureExtractor, spec.source, &response.body, &shown, None, summary_bytes));
        let (raw, support) = result?;
        return evidence(spec.source, &raw, support, Confidence::Parsed, ctx.task);
    }

    if !large {
        let request = CompletionRequest::new(
            "You read one database response and extract the requested answer. Reply with the answer only, \
             or NONE if the response does not contain it.",
            format!(
                "Question: {}\nExtract: {}\nSource: {}\nResponse:\n{}",
                ctx.question, ctx.target_description, spec.source, body
            ),
        )
        .max_tokens(128);
        let reply = session.complete(AgentId::FeatureExtractor, "extract", &request, response.body.len() as u64).await?;
        let answer = reply_answer(&reply.text);
        return evidence(spec.source, &answer, vec![reply.text], Confidence::LlmExtracted, ctx.task);
    }

    let request = CompletionRequest::new(
        "You are given the outline of a large JSON document. Reply with one JSON path \
         (for example $.result.items[0].name) selecting the requested value, and nothing else.",
        format!(
            "Question: {}\nExtract: {}\nSource: {}\nOutline:\n{}",
            ctx.question, ctx.target_description, spec.source, summary_text
        ),
    )
    .max_tokens(128);
    let reply = session
        .complete(AgentId::FeatureExtractor, "select_path", &request, summary_text.len() as u64)
        .await?;
    let path = reply_answer(&reply.text);
    let program = ExtractionProgram {
        instructions: vec![Instruction::SelectPath(path)],
        target_description: ctx.target_description.to_string(),
    };
    let result = execute_extractor(&program, &body);
    session.record(extraction_event(AgentId::CodeExecutor, spec.source, &response.body, &result, None, summary_bytes));
    let values = result?;
    evidence(spec.source, &values.join(", "), values, Confidence::LlmExtracted, ctx.task)
}

const WRITER_SYSTEM: &str = "Write an extraction program that pulls the requested value out of the page. \
Use only these instructions, separated by commas: SelectCss(\"css selector\"), SelectPath(\"$.json.path\"), \
Nth(index), First, Text, Attr(\"name\"), RegexCapture(\"pattern\", group). Reply with the program only.";

fn sample_of(body: &str) -> &str {
    if body.len() <= WRITER_SAMPLE_BYTES {
        return body;
    }
    let mut cut = WRITER_SAMPLE_BYTES;
    while !body.is_char_boundary(cut) {
        cut -= 1;
    }
    &body[..cut]
}

/// Asks the model for an extraction program. Invalid output is retried
/// once with the validation error appended.
pub async fn write_extractor(sample: &str, target_description: &str, session: &mut LlmSession) -> Result<ExtractionProgram, OrchError> {
    let base = format!("Extract: {target_description}\nPage:\n{sample}");
    let mut prompt = base.clone();
    let mut last_error = String::new();
    for attempt in 0..2 {
        let request = CompletionRequest::new(WRITER_SYSTEM, prompt.clone()).max_tokens(256);
        let reply = session.complete(AgentId::CodeWriter, "write_extractor", &request, sample.len() as u64).await?;
        match ExtractionProgram::parse(&reply.text, target_description) {
            Ok(program) => return Ok(program),
            Err(e) => {
                last_error = e.to_string();
                if attempt == 0 {
                    prompt = format!("{base}\n\nYour previous reply was rejected: {last_error}\nReply with a corrected program only.");
                }
            }
        }
    }
    session.record(
        Event::new(AgentId::CodeWriter, EventKind::Extraction)
            .digests(sample.as_bytes(), last_error.as_bytes())
            .detail(EventDetail::ProgramInvalid { error: last_error.clone() }),
    );
    Err(OrchError::ProgramInvalid(last_error))
}

async fn html_pipeline(
    response: &ApiResponse,
    spec: &SourceSpec,
    ctx: &ResponseContext<'_>,
    session: &mut LlmSession,
) -> Result<Evidence, OrchError> {
    let body = response.text();
    let key = CacheKey {
        source: spec.source,
        endpoint_template: spec.endpoint.template_key(),
        fingerprint: fingerprint(&body),
    };
    let started = Instant::now();
    let outcome = ctx
        .cache
        .get_or_create(&key, || async {
            let program = write_extractor(sample_of(&body), ctx.target_description, session).await?;
            let result = execute_extractor(&program, &body);
            session.record(extraction_event(AgentId::CodeExecutor, spec.source, &response.body, &result, Some(false), None));
            Ok((program, result?))
        })
        .await?;
    let values = match outcome {
        CacheOutcome::Created(_, values) => values,
        CacheOutcome::Hit(program) => {
            let result = execute_extractor(&program, &body);
            session.record(
                extraction_event(AgentId::CodeExecutor, spec.source, &response.body, &result, Some(true), None)
                    .wall_time_ms(started.elapsed().as_millis() as u64),
            );
            result?
        }
    };
    evidence(spec.source, &values.join(", "), values, Confidence::Parsed, ctx.task)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reply_answer_strips_prefix() {
        assert_eq!(reply_answer("Answer: chr8\nbecause"), "chr8");
        assert_eq!(reply_answer("  `PSMB10`  "), "PSMB10");
    }

    #[test]
    fn disease_candidates_are_sorted_sets() {
        assert_eq!(canonical_candidate("SLC4A1, ATP6V0A4, slc4a1", TaskKind::DiseaseAssociation), "ATP6V0A4, SLC4A1");
    }
}
