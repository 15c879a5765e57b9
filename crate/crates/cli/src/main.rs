//! `genomagent`: ask a question, run the benchmark, record fixtures.
//!
//! Exit codes: 0 success, 1 the question (or some recorded item) failed,
//! 2 configuration or input error.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use genomagent_baseline::{Baseline, BaselineSettings, PromptAssembly, PromptStyle};
use genomagent_core::{short_digest, Outcome, QaEngine, Question, TaskKind, Transcript};
use genomagent_db::{import_manifest, DenyingTransport, Endpoints, FixtureMode, FixtureStore, HttpTransport, LiveTransport};
use genomagent_eval::{emit_report, load_benchmark, run_benchmark, ReportFormat, RunMetadata, RunOptions, SpeciesVocabulary};
use genomagent_llm::{cost, CassetteStore, LiveBackend, LlmBackend, LlmGateway, MockBackend, MockScript, ReplayBackend};
use genomagent_orchestrator::{detect_by_rules, DbExecutor, EngineSettings, ExtractionCache, GenomAgent, WorkflowSet};

use crate::config::{BackendKind, EngineKind, FixtureKind, PromptStyleArg, RunConfig, RunFlags};

#[derive(Parser)]
#[command(name = "genomagent", version, about = "Genomics question answering over NCBI, HGNC and UCSC")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Answer one question and write its transcript.
    Ask {
        question: String,
        /// Task of the question; inferred from its wording when omitted.
        #[arg(long)]
        task: Option<String>,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Run a benchmark directory and write report files.
    Bench {
        dir: PathBuf,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Answer questions against the live services, saving cassettes and fixtures.
    Record {
        #[arg(long, conflicts_with = "benchmark", required_unless_present = "benchmark")]
        question: Option<String>,
        #[arg(long)]
        benchmark: Option<PathBuf>,
        #[arg(long)]
        task: Option<String>,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Write fixtures from a manifest of request/response pairs.
    ImportFixtures {
        manifest: PathBuf,
        #[arg(long)]
        fixture_dir: PathBuf,
    },
}

/// An error with its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn config_error(error: anyhow::Error) -> Failure {
    Failure { code: 2, error }
}

#[tokio::main]
async fn main() -> ExitCode {
    let level = std::env::var("RUST_LOG")
        .ok()
        .and_then(|v| v.parse::<tracing::Level>().ok())
        .unwrap_or(tracing::Level::WARN);
    tracing_subscriber::fmt().with_max_level(level).with_writer(std::io::stderr).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ask { question, task, run } => ask(&question, task.as_deref(), &run).await,
        Command::Bench { dir, run } => bench(&dir, &run).await,
        Command::Record { question, benchmark, task, run } => {
            record(question.as_deref(), benchmark.as_deref(), task.as_deref(), &run).await
        }
        Command::ImportFixtures { manifest, fixture_dir } => import(&manifest, &fixture_dir),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}

fn transport(cfg: &RunConfig) -> Result<Arc<dyn HttpTransport>> {
    let live = || -> Result<Arc<dyn HttpTransport>> {
        let per_second = if std::env::var("NCBI_API_KEY").is_ok() { 10.0 } else { 3.0 };
        Ok(Arc::new(LiveTransport::new(LiveTransport::DEFAULT_TIMEOUT, per_second)?))
    };
    Ok(match cfg.fixtures {
        FixtureKind::Passthrough => live()?,
        FixtureKind::Replay => {
            let dir = cfg.fixture_dir.as_ref().context("fixture directory")?;
            Arc::new(FixtureStore::open(dir, FixtureMode::Replay, Arc::new(DenyingTransport::new()))?)
        }
        FixtureKind::Record => {
            let dir = cfg.fixture_dir.as_ref().context("fixture directory")?;
            Arc::new(FixtureStore::open(dir, FixtureMode::Record, live()?)?)
        }
    })
}

fn gateway(cfg: &RunConfig, recording: Option<Arc<CassetteStore>>) -> Result<Arc<LlmGateway>> {
    let backend: Arc<dyn LlmBackend> = match cfg.backend {
        BackendKind::Live => Arc::new(LiveBackend::new(cfg.live.clone())?),
        BackendKind::Mock => {
            let path = cfg.mock_script.as_ref().context("mock script")?;
            Arc::new(MockBackend::new(MockScript::load(path)?))
        }
        BackendKind::Replay => {
            let dir = cfg.cassette_dir.as_ref().context("cassette directory")?;
            Arc::new(ReplayBackend::new(Arc::new(CassetteStore::open(dir)?)))
        }
    };
    let mut gateway = LlmGateway::new(backend);
    if let Some(store) = recording {
        gateway = gateway.with_recording(store);
    }
    Ok(Arc::new(gateway))
}

fn engine(cfg: &RunConfig, recording: Option<Arc<CassetteStore>>) -> Result<Box<dyn QaEngine>> {
    let gateway = gateway(cfg, recording)?;
    let http = transport(cfg)?;
    let replaying = cfg.fixtures == FixtureKind::Replay;
    Ok(match cfg.engine {
        EngineKind::Agent => {
            let workflows = match &cfg.workflows {
                Some(dir) => WorkflowSet::load_dir(dir)?,
                None => WorkflowSet::builtin(),
            };
            let mut executor = DbExecutor::new(http, Endpoints::default());
            if replaying {
                executor = executor.with_blast_polling(60, Duration::ZERO);
            }
            let settings = EngineSettings::new(cfg.pricing.clone()).budget(cfg.budget);
            Box::new(GenomAgent::new(gateway, Arc::new(executor), workflows, Arc::new(ExtractionCache::new()), settings))
        }
        EngineKind::Baseline => {
            let style = match cfg.prompt_style {
                PromptStyleArg::Full => PromptStyle::Full,
                PromptStyleArg::Slim => PromptStyle::Slim,
            };
            let assembly = match &cfg.prompts {
                Some(dir) => PromptAssembly::from_dir(dir, style)?,
                None => PromptAssembly::builtin(style),
            };
            let mut settings = BaselineSettings::new(cfg.pricing.clone());
            if replaying {
                settings.blast_wait = Duration::ZERO;
            }
            Box::new(Baseline::new(gateway, http, assembly, settings))
        }
    })
}

fn question_for(text: &str, task: Option<&str>) -> Result<Question> {
    let task = match task {
        Some(t) => t.parse::<TaskKind>()?,
        None => detect_by_rules(text).map(|(t, _)| t).unwrap_or(TaskKind::GeneAlias),
    };
    let id = format!("ask-{}", short_digest(text.as_bytes()));
    Ok(Question::new(id, task, text)?)
}

fn write_transcript(dir: &Path, transcript: &Transcript) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(format!("{}.json", transcript.question_id));
    let mut text = serde_json::to_string_pretty(transcript)?;
    text.push('\n');
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

async fn ask(text: &str, task: Option<&str>, flags: &RunFlags) -> Result<u8, Failure> {
    let cfg = RunConfig::resolve(flags).map_err(config_error)?;
    let question = question_for(text, task).map_err(config_error)?;
    let engine = engine(&cfg, None).map_err(config_error)?;
    let (prediction, transcript) = engine.answer(&question).await;
    let path = write_transcript(&cfg.out.join("transcripts"), &transcript).map_err(|e| Failure { code: 1, error: e })?;
    let spent = cost(transcript.total_usage(), &cfg.pricing);
    match &transcript.outcome {
        Outcome::Answered => println!("Answer: {}", prediction.raw),
        Outcome::Failed(reason) => println!("Failed: {reason}"),
    }
    println!("Cost: ${spent}");
    println!("Transcript: {}", path.display());
    Ok(if transcript.outcome.is_answered() { 0 } else { 1 })
}

fn metadata(cfg: &RunConfig) -> RunMetadata {
    let backend = format!("{:?}", cfg.backend).to_lowercase();
    let fixtures = format!("{:?}", cfg.fixtures).to_lowercase();
    let timestamp = (!cfg.is_offline()).then(|| {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        format!("unix {secs}")
    });
    RunMetadata { backend: format!("{backend} llm, {fixtures} fixtures"), model: cfg.pricing.model_label.clone(), timestamp }
}

async fn bench(dir: &Path, flags: &RunFlags) -> Result<u8, Failure> {
    let cfg = RunConfig::resolve(flags).map_err(config_error)?;
    let benchmark = load_benchmark(dir).map_err(|e| config_error(e.into()))?;
    let mut vocabulary = SpeciesVocabulary::seeded();
    if let Some(path) = &cfg.species {
        vocabulary.extend_from_file(path).map_err(|e| config_error(e.into()))?;
    }
    let engine = engine(&cfg, None).map_err(config_error)?;
    let options = RunOptions { parallelism: cfg.parallelism, vocabulary, metadata: metadata(&cfg), ..RunOptions::default() };
    let run = run_benchmark(&benchmark, engine.as_ref(), &cfg.pricing, &options)
        .await
        .map_err(|e| Failure { code: 1, error: e.into() })?;

    let write = || -> Result<()> {
        std::fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
        for format in ReportFormat::ALL {
            let path = cfg.out.join(format.file_name());
            std::fs::write(&path, emit_report(&run.report, format)).with_context(|| format!("writing {}", path.display()))?;
        }
        for transcript in &run.transcripts {
            write_transcript(&cfg.out.join("transcripts"), transcript)?;
        }
        Ok(())
    };
    write().map_err(|e| Failure { code: 1, error: e })?;
    print!("{}", emit_report(&run.report, ReportFormat::Table));
    Ok(0)
}

async fn record(text: Option<&str>, dir: Option<&Path>, task: Option<&str>, flags: &RunFlags) -> Result<u8, Failure> {
    let mut flags = flags.clone();
    flags.backend = Some(BackendKind::Live);
    flags.fixtures = Some(FixtureKind::Record);
    let cfg = RunConfig::resolve(&flags).map_err(config_error)?;
    let cassettes = cfg
        .cassette_dir
        .as_ref()
        .context("record needs --cassette-dir")
        .and_then(|d| Ok(Arc::new(CassetteStore::create(d)?)))
        .map_err(config_error)?;
    let questions: Vec<Question> = match (text, dir) {
        (Some(t), _) => vec![question_for(t, task).map_err(config_error)?],
        (None, Some(d)) => load_benchmark(d)
            .map_err(|e| config_error(e.into()))?
            .items()
            .map(|i| i.question.clone())
            .collect(),
        (None, None) => return Err(config_error(anyhow::anyhow!("record needs --question or --benchmark"))),
    };
    let engine = engine(&cfg, Some(cassettes.clone())).map_err(config_error)?;
    let mut failed = 0;
    for question in &questions {
        let (_, transcript) = engine.answer(question).await;
        if let Outcome::Failed(reason) = &transcript.outcome {
            failed += 1;
            eprintln!("{}: failed: {reason}", question.id);
        }
        if let Err(e) = write_transcript(&cfg.out.join("transcripts"), &transcript) {
            eprintln!("{}: {e:#}", question.id);
        }
    }
    println!("recorded {} question(s), {} failed; {} cassette(s)", questions.len(), failed, cassettes.len());
    Ok(if failed == 0 { 0 } else { 1 })
}

fn import(manifest: &Path, fixture_dir: &Path) -> Result<u8, Failure> {
    let store = FixtureStore::open(fixture_dir, FixtureMode::Record, Arc::new(DenyingTransport::new()))
        .map_err(|e| config_error(e.into()))?;
    let records = import_manifest(manifest, &store).map_err(|e| config_error(e.into()))?;
    println!("imported {} fixture(s) into {}", records.len(), fixture_dir.display());
    Ok(0)
}
