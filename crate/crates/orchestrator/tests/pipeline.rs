use std::sync::Arc;
use std::time::{Duration, Instant};

use genomagent_core::{ApiResponse, EventDetail, EventKind, Pricing, SourceId, TaskKind, Usd};
use genomagent_db::{Endpoints, StubTransport};
use genomagent_llm::{LlmGateway, MockBackend, MockScript};
use genomagent_orchestrator::{
    dispatch, execute_extractor, handle_response, write_extractor, Binding, Confidence, DbExecutor, DispatchSettings,
    Endpoint, ExtractionCache, ExtractionProgram, LlmSession, OrchError, ResponseContext, Route, SourceSpec,
};
use serde_json::json;

fn session(script: MockScript) -> (LlmSession, Arc<MockBackend>) {
    let mock = Arc::new(MockBackend::new(script));
    let gateway = Arc::new(LlmGateway::new(mock.clone()));
    let pricing = Pricing::new("test", "0.15", "0.60").unwrap();
    (LlmSession::new(gateway, pricing, Usd::from_micros(50_000), "q"), mock)
}

fn json_response(body: &str) -> ApiResponse {
    ApiResponse::new(200, Some("application/json"), body.as_bytes().to_vec(), 0)
}

fn html_response(body: &str) -> ApiResponse {
    ApiResponse::new(200, Some("text/html; charset=utf-8"), body.as_bytes().to_vec(), 0)
}

fn ctx<'a>(cache: &'a ExtractionCache, target: &'a str) -> ResponseContext<'a> {
    ResponseContext {
        question: "Which chromosome is FAM66D gene located on human genome?",
        task: TaskKind::GeneLocation,
        target_description: target,
        json_size_threshold: 16 * 1024,
        cache,
    }
}

fn esummary_spec(binding: Option<Binding>) -> SourceSpec {
    SourceSpec {
        source: SourceId::NcbiEutils,
        route: Route::Json,
        endpoint: Endpoint::EsearchEsummary { db: "gene".into(), term: "{gene}".into() },
        binding,
    }
}

fn ucsc_spec() -> SourceSpec {
    SourceSpec {
        source: SourceId::Ucsc,
        route: Route::Html,
        endpoint: Endpoint::UcscBlat { sequence: "{sequence}".into(), db: "hg38".into(), format: Default::default() },
        binding: None,
    }
}

#[tokio::test]
async fn small_json_with_binding_needs_no_model() {
    let mut body = json!({"header": {"type": "esummary"}, "result": {"uids": ["100132911"], "100132911": {
        "uid": "100132911", "name": "FAM66D", "chromosome": "8", "maplocation": "8p23.1",
        "description": "family with sequence similarity 66 member D"}}})
    .to_string();
    body.push_str(&" ".repeat(2048 - body.len()));
    assert_eq!(body.len(), 2048);
    let binding = Binding { fields: vec![r#"SelectPath("$.result.*.chromosome"), First"#.into()], format: "chr{0}".into() };
    let (mut s, mock) = session(MockScript::new());
    let cache = ExtractionCache::new();
    let ev = handle_response(&json_response(&body), &esummary_spec(Some(binding)), &ctx(&cache, "chromosome"), &mut s)
        .await
        .unwrap();
    assert_eq!(ev.candidate_answer, "chr8");
    assert_eq!(ev.confidence, Confidence::Parsed);
    assert_eq!(mock.calls(), 0);
    assert_eq!(s.transcript.count(EventKind::LlmCall), 0);
}

#[tokio::test]
async fn small_json_without_binding_uses_one_model_call() {
    let body = json!({"response": {"docs": [{"symbol": "FAM66D", "location": "8p23.1"}]}}).to_string();
    let (mut s, mock) = session(MockScript::new().when("FAM66D", "Answer: chr8"));
    let cache = ExtractionCache::new();
    let ev = handle_response(&json_response(&body), &esummary_spec(None), &ctx(&cache, "chromosome"), &mut s).await.unwrap();
    assert_eq!((ev.candidate_answer.as_str(), ev.confidence), ("chr8", Confidence::LlmExtracted));
    assert_eq!(mock.calls(), 1);
}

#[tokio::test]
async fn large_json_is_summarized_then_extracted() {
    let items: Vec<_> = (0..2000)
        .map(|i| json!({"name": format!("GENE{i}"), "chromosome": (i % 22 + 1).to_string(), "notes": "x".repeat(60)}))
        .collect();
    let body = json!({"result": {"count": 2000, "items": items}}).to_string();
    assert!(body.len() > 200 * 1024);
    let (mut s, mock) = session(MockScript::new().when("Outline:", "$.result.items[7].chromosome"));
    let cache = ExtractionCache::new();
    let context = ctx(&cache, "chromosome");
    let ev = handle_response(&json_response(&body), &esummary_spec(None), &context, &mut s).await.unwrap();
    assert_eq!(ev.candidate_answer, "8");
    assert_eq!(mock.calls(), 1);
    let summary_bytes = s
        .transcript
        .events()
        .iter()
        .find_map(|e| match &e.detail {
            EventDetail::Extraction { summary_bytes: Some(n), .. } => Some(*n),
            _ => None,
        })
        .expect("summary event");
    assert!(summary_bytes > 0 && summary_bytes <= context.json_size_threshold / 4);
    // The model saw the outline, not the document.
    let llm = s.transcript.events().iter().find(|e| e.kind == EventKind::LlmCall).unwrap();
    assert_eq!(llm.appended_bytes as usize, summary_bytes);
}

#[tokio::test]
async fn route_must_match_content() {
    let (mut s, _) = session(MockScript::new());
    let cache = ExtractionCache::new();
    let err = handle_response(&html_response("<p>x</p>"), &esummary_spec(None), &ctx(&cache, "t"), &mut s).await.unwrap_err();
    assert!(matches!(err, OrchError::PipelineMismatch { .. }));
    let err = handle_response(&json_response("{}"), &ucsc_spec(), &ctx(&cache, "t"), &mut s).await.unwrap_err();
    assert!(matches!(err, OrchError::PipelineMismatch { .. }));
}

fn blat_page(rows: &[(&str, u64, u64)]) -> String {
    let mut pre = String::new();
    for (chrom, start, end) in rows {
        pre.push_str(&format!(
            "<a href=\"../cgi-bin/hgTracks?db=hg38&position={chrom}:{start}-{end}\">browser</a> <a href=\"../cgi-bin/hgc?o={start}\">details</a> YourSeq 135 1 135 135 100.0% {chrom} + {start} {end} 135\n"
        ));
    }
    format!("<html><head><title>BLAT Search Results</title></head><body><h2>BLAT Search Results</h2><pre>{pre}</pre></body></html>")
}

const BLAT_PROGRAM: &str =
    r#"SelectCss("pre a"), First, Attr("href"), RegexCapture("position=(chr[0-9A-Za-z_]+:[0-9]+-[0-9]+)", 1)"#;

#[tokio::test]
async fn html_program_is_written_once_per_structure() {
    let (mut first, mock) = session(MockScript::new().when("Extract:", BLAT_PROGRAM));
    let cache = ExtractionCache::new();
    let spec = ucsc_spec();
    let a = blat_page(&[("chr8", 7081648, 7081782), ("chr2", 100, 200)]);
    let b = blat_page(&[("chr3", 5000, 5134)]);
    assert_eq!(genomagent_orchestrator::fingerprint(&a), genomagent_orchestrator::fingerprint(&b));

    let ev = handle_response(&html_response(&a), &spec, &ctx(&cache, "interval"), &mut first).await.unwrap();
    assert_eq!(ev.candidate_answer, "chr8:7081648-7081782");
    assert_eq!(mock.calls(), 1);

    let mut second = LlmSession::new(
        Arc::new(LlmGateway::new(mock.clone())),
        Pricing::free("test"),
        Usd::from_micros(50_000),
        "q2",
    );
    let ev = handle_response(&html_response(&b), &spec, &ctx(&cache, "interval"), &mut second).await.unwrap();
    assert_eq!(ev.candidate_answer, "chr3:5000-5134");
    assert_eq!(mock.calls(), 1);
    assert_eq!(second.transcript.count(EventKind::LlmCall), 0);
    let hit = second.transcript.events().iter().any(|e| matches!(e.detail, EventDetail::Extraction { cache_hit: Some(true), .. }));
    assert!(hit);
    assert_eq!(cache.len().await, 1);
}

#[tokio::test]
async fn write_extractor_contract() {
    let (mut s, _) = session(MockScript::new().at(0, r#"SelectCss("td.chr"), First, Text"#));
    let p = write_extractor("<td class='chr'>chr8</td>", "chromosome", &mut s).await.unwrap();
    assert_eq!(p.instructions.len(), 3);

    let (mut s, mock) = session(MockScript::new().at(0, "Here is how I would do it.").at(1, "I cannot write that."));
    let err = write_extractor("<p/>", "x", &mut s).await.unwrap_err();
    assert!(matches!(err, OrchError::ProgramInvalid(_)));
    assert_eq!(mock.calls(), 2);
    assert!(s.transcript.events().iter().any(|e| matches!(e.detail, EventDetail::ProgramInvalid { .. })));

    let (mut s, mock) =
        session(MockScript::new().at(0, "SelectCss(td.chr)").when("rejected", r#"SelectCss("td.chr"), First, Text"#));
    let p = write_extractor("<p/>", "x", &mut s).await.unwrap();
    assert_eq!(p.to_string(), r#"SelectCss("td.chr"), First, Text"#);
    assert_eq!(mock.calls(), 2);
}

#[test]
fn execute_extractor_examples() {
    let p = |t: &str| ExtractionProgram::parse(t, "t").unwrap();
    assert_eq!(execute_extractor(&p(r#"SelectCss("p"), First, Text"#), "<p>chr8</p>").unwrap(), ["chr8"]);
    assert_eq!(execute_extractor(&p(r#"SelectPath("$.result.chr")"#), r#"{"result":{"chr":"chrX"}}"#).unwrap(), ["chrX"]);
    assert!(matches!(
        execute_extractor(&p(r#"SelectCss("table.missing")"#), "<html><body><p>x</p></body></html>"),
        Err(OrchError::ExtractionFailed(_))
    ));
}

fn three_stub_sources(delay: Duration) -> (Arc<StubTransport>, Vec<(SourceId, Endpoint)>) {
    let stub = Arc::new(StubTransport::new());
    let esearch = url::Url::parse_with_params(
        "https://eutils.ncbi.nlm.nih.gov/entrez/eutils/esummary.fcgi",
        &[("db", "gene"), ("id", "1"), ("retmode", "json")],
    )
    .unwrap();
    let esummary = r#"{"result":{"uids":["1"],"1":{"name":"A1BG","chromosome":"19"}}}"#;
    stub.route_delayed(genomagent_core::Method::Get, esearch.as_str(), 200, Some("application/json"), esummary, delay);
    let hgnc = r#"{"response":{"numFound":1,"docs":[{"symbol":"A1BG","location":"19q13.43"}]}}"#;
    stub.route_delayed(
        genomagent_core::Method::Get,
        "https://rest.genenames.org/fetch/symbol/A1BG",
        200,
        Some("application/json"),
        hgnc,
        delay,
    );
    let seq = "ACGT".repeat(6);
    let blat = url::Url::parse_with_params(
        "https://genome.ucsc.edu/cgi-bin/hgBlat",
        &[("userSeq", seq.as_str()), ("type", "DNA"), ("db", "hg38")],
    )
    .unwrap();
    stub.route_delayed(genomagent_core::Method::Get, blat.as_str(), 200, Some("text/html"), "<pre></pre>", delay);
    let sources = vec![
        (SourceId::NcbiEutils, Endpoint::Esummary { db: "gene".into(), id: "1".into() }),
        (SourceId::Hgnc, Endpoint::HgncFetch { field: "symbol".into(), value: "A1BG".into() }),
        (
            SourceId::Ucsc,
            Endpoint::UcscBlat { sequence: seq, db: "hg38".into(), format: genomagent_orchestrator::config::BlatFormat::Html },
        ),
    ];
    (stub, sources)
}

#[tokio::test]
async fn dispatch_fans_out_in_parallel() {
    let (stub, sources) = three_stub_sources(Duration::from_millis(100));
    let exec = DbExecutor::new(stub, Endpoints::default());
    let settings = DispatchSettings { parallelism: 3, per_source_timeout: Duration::from_secs(5) };
    let started = Instant::now();
    let results = dispatch(&sources, &exec, settings).await.unwrap();
    let parallel = started.elapsed();
    assert!(results.iter().all(|r| r.outcome.is_ok()));
    assert!(parallel < Duration::from_millis(250), "{parallel:?}");

    let started = Instant::now();
    dispatch(&sources, &exec, DispatchSettings { parallelism: 1, ..settings }).await.unwrap();
    assert!(started.elapsed() >= Duration::from_millis(300));
}

#[tokio::test]
async fn dispatch_isolates_a_failing_source() {
    let (stub, mut sources) = three_stub_sources(Duration::ZERO);
    sources[1].1 = Endpoint::HgncFetch { field: "symbol".into(), value: "MISSING".into() };
    stub.route(genomagent_core::Method::Get, "https://rest.genenames.org/fetch/symbol/MISSING", 500, None, "err");
    let exec = DbExecutor::new(stub, Endpoints::default());
    let results = dispatch(&sources, &exec, DispatchSettings::default()).await.unwrap();
    let ok: Vec<bool> = results.iter().map(|r| r.outcome.is_ok()).collect();
    assert_eq!(ok, [true, false, true]);
}
