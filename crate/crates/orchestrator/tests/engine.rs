use std::sync::Arc;

use genomagent_core::{
    EventDetail, EventKind, FailureReason, Outcome, Pricing, QaEngine, Question, TaskKind, Usd,
};
use genomagent_db::{Endpoints, StubTransport};
use genomagent_llm::{LlmGateway, MockBackend, MockScript};
use genomagent_orchestrator::{DbExecutor, EngineSettings, ExtractionCache, GenomAgent, WorkflowSet};
use serde_json::json;
use url::Url;

const EUTILS: &str = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils/";

fn esearch_url(term: &str) -> String {
    Url::parse_with_params(
        &format!("{EUTILS}esearch.fcgi"),
        &[("db", "gene"), ("term", term), ("retmode", "json"), ("retmax", "20")],
    )
    .unwrap()
    .to_string()
}

fn esummary_url(db: &str, id: &str) -> String {
    Url::parse_with_params(&format!("{EUTILS}esummary.fcgi"), &[("db", db), ("id", id), ("retmode", "json")])
        .unwrap()
        .to_string()
}

fn engine(stub: Arc<StubTransport>, script: MockScript, budget: Usd) -> (GenomAgent, Arc<MockBackend>) {
    let mock = Arc::new(MockBackend::new(script));
    let gateway = Arc::new(LlmGateway::new(mock.clone()));
    let executor = Arc::new(DbExecutor::new(stub, Endpoints::default()));
    let settings = EngineSettings::new(Pricing::new("test", "0.15", "0.60").unwrap()).budget(budget);
    let agent = GenomAgent::new(gateway, executor, WorkflowSet::builtin(), Arc::new(ExtractionCache::new()), settings);
    (agent, mock)
}

fn fam66d_stub() -> Arc<StubTransport> {
    let stub = Arc::new(StubTransport::new());
    stub.get_json(
        &esearch_url("FAM66D[Gene Name] AND Homo sapiens[Organism]"),
        &json!({"esearchresult": {"count": "1", "idlist": ["100132911"]}}).to_string(),
    );
    stub.get_json(
        &esummary_url("gene", "100132911"),
        &json!({"result": {"uids": ["100132911"], "100132911": {"uid": "100132911", "name": "FAM66D", "chromosome": "8"}}})
            .to_string(),
    );
    stub.get_json(
        "https://rest.genenames.org/fetch/symbol/FAM66D",
        &json!({"response": {"numFound": 1, "docs": [{"symbol": "FAM66D", "location": "8p23.1"}]}}).to_string(),
    );
    stub
}

#[tokio::test]
async fn gene_location_end_to_end() {
    let (agent, mock) = engine(fam66d_stub(), MockScript::new(), Usd::from_micros(50_000));
    let q = Question::new("q-loc", TaskKind::GeneLocation, "Which chromosome is FAM66D gene located on human genome?")
        .unwrap();
    let (prediction, transcript) = agent.answer(&q).await;
    assert_eq!(transcript.outcome, Outcome::Answered);
    assert_eq!(prediction.raw, "chr8");
    assert_eq!(mock.calls(), 0);
    assert_eq!(transcript.count(EventKind::ApiCall), 3);
    assert!(transcript.usage_consistent());
    assert_eq!(transcript.cumulative_cost(), Usd::ZERO);
}

#[tokio::test]
async fn replays_are_identical_apart_from_timing() {
    let q = Question::new("q-loc", TaskKind::GeneLocation, "Which chromosome is FAM66D gene located on human genome?")
        .unwrap();
    let mut seen = Vec::new();
    for _ in 0..3 {
        let (agent, _) = engine(fam66d_stub(), MockScript::new(), Usd::from_micros(50_000));
        let (p, t) = agent.answer(&q).await;
        seen.push((p, t.timing_free_json()));
    }
    assert!(seen.windows(2).all(|w| w[0] == w[1]));
}

#[tokio::test]
async fn zero_budget_aborts_before_any_model_call() {
    let stub = Arc::new(StubTransport::new());
    stub.get_json(
        "https://rest.genenames.org/fetch/symbol/ATP5F1EP2",
        &json!({"response": {"docs": [{"symbol": "ATP5F1EP2", "locus_group": "pseudogene"}]}}).to_string(),
    );
    let (agent, mock) = engine(stub, MockScript::new().when("ATP5F1EP2", "NA"), Usd::ZERO);
    let q = Question::new("q-pc", TaskKind::ProteinCodingGenes, "Is ATP5F1EP2 a protein-coding gene?").unwrap();
    let (prediction, transcript) = agent.answer(&q).await;
    assert_eq!(transcript.outcome, Outcome::Failed(FailureReason::BudgetExceeded));
    assert_eq!(prediction.raw, "");
    assert_eq!(mock.calls(), 0);
    assert_eq!(transcript.count(EventKind::LlmCall), 0);
    assert_eq!(transcript.cumulative_cost(), Usd::ZERO);
    assert!(transcript
        .events()
        .iter()
        .any(|e| matches!(e.detail, EventDetail::BudgetAbort { spent: Usd::ZERO, budget: Usd::ZERO })));
}

#[tokio::test]
async fn empty_results_everywhere_fail_with_no_evidence() {
    let stub = Arc::new(StubTransport::new());
    stub.get_json(
        &esearch_url("NOTAGENE[Gene Name] AND Homo sapiens[Organism]"),
        &json!({"esearchresult": {"count": "0", "idlist": []}}).to_string(),
    );
    stub.get_json(
        "https://rest.genenames.org/fetch/alias_symbol/NOTAGENE",
        &json!({"response": {"numFound": 0, "docs": []}}).to_string(),
    );
    let (agent, _) = engine(stub, MockScript::new(), Usd::from_micros(50_000));
    let q = Question::new("q-alias", TaskKind::GeneAlias, "What is the official gene symbol of NOTAGENE?").unwrap();
    let (_, transcript) = agent.answer(&q).await;
    assert_eq!(transcript.outcome, Outcome::Failed(FailureReason::NoEvidence));
    let calls: Vec<_> = transcript.api_calls().collect();
    assert_eq!(calls.len(), 2);
    assert!(calls.iter().all(|c| c.succeeded() && c.result_count == Some(0)));
}

#[tokio::test]
async fn unroutable_question_asks_the_model_then_gives_up() {
    let stub = Arc::new(StubTransport::new());
    let (agent, mock) = engine(stub.clone(), MockScript::new().at(0, "I am not sure."), Usd::from_micros(50_000));
    let q = Question::new("q-odd", TaskKind::GeneAlias, "Tell me something about genomes.").unwrap();
    let (_, transcript) = agent.answer(&q).await;
    assert_eq!(transcript.outcome, Outcome::Failed(FailureReason::Unclassifiable));
    assert_eq!(mock.calls(), 1);
    assert!(stub.requests().is_empty());
    assert!(transcript.events().iter().any(|e| matches!(e.detail, EventDetail::Unclassifiable { .. })));
}

#[tokio::test]
async fn model_routing_feeds_the_workflow() {
    let reply = r#"{"task": "gene_location", "entities": {"gene": "FAM66D"}}"#;
    let (agent, mock) = engine(fam66d_stub(), MockScript::new().at(0, reply), Usd::from_micros(50_000));
    let q = Question::new("q-free", TaskKind::GeneLocation, "Where in the genome does FAM66D sit?").unwrap();
    let (prediction, transcript) = agent.answer(&q).await;
    assert_eq!(transcript.outcome, Outcome::Answered);
    assert_eq!(prediction.raw, "chr8");
    assert_eq!(mock.calls(), 1);
    assert!(transcript.cumulative_cost() > Usd::ZERO);
}
