use std::collections::BTreeMap;

use futures::stream::{self, StreamExt};
use genomagent_core::{Category, Outcome, Pricing, QaEngine, TaskKind, Transcript, Usd};
use genomagent_llm::cost;
use serde::Serialize;

use crate::benchmark::Benchmark;
use crate::classify::{classify_error, ErrorClass, DEFAULT_CONTEXT_BUDGET};
use crate::error::EvalError;
use crate::score::{macro_average, score, Score};
use crate::vocab::SpeciesVocabulary;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskResult {
    pub question_id: String,
    pub task: TaskKind,
    pub prediction: String,
    pub gold: String,
    pub score: Score,
    pub cost_usd: Usd,
    pub error_class: ErrorClass,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RunMetadata {
    pub backend: String,
    pub model: String,
    /// Omitted in replayed runs so their reports stay byte-identical.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskSummary {
    pub task: TaskKind,
    pub items: usize,
    pub score: Score,
    pub cost_usd: Usd,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategorySummary {
    pub category: Category,
    pub items: usize,
    /// Mean of the category's per-task means.
    pub score: Score,
    pub cost_usd: Usd,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub label: String,
    pub metadata: RunMetadata,
    pub tasks: Vec<TaskSummary>,
    pub categories: Vec<CategorySummary>,
    /// Mean over per-task means.
    pub macro_average: Score,
    /// Mean over per-category means, the headline number of the table.
    pub category_average: Score,
    pub total_cost_usd: Usd,
    pub results: Vec<TaskResult>,
}

impl ScoreReport {
    /// Aggregates per-item results. Fails with [`EvalError::EmptyInput`]
    /// when there are none.
    pub fn assemble(label: &str, metadata: RunMetadata, results: Vec<TaskResult>) -> Result<Self, EvalError> {
        let mut by_task: BTreeMap<TaskKind, Vec<&TaskResult>> = BTreeMap::new();
        for r in &results {
            by_task.entry(r.task).or_default().push(r);
        }
        let tasks: Vec<TaskSummary> = by_task
            .iter()
            .map(|(task, rs)| {
                let scores: Vec<Score> = rs.iter().map(|r| r.score.clone()).collect();
                Ok(TaskSummary {
                    task: *task,
                    items: rs.len(),
                    score: macro_average(&scores)?,
                    cost_usd: rs.iter().map(|r| r.cost_usd).sum(),
                })
            })
            .collect::<Result<_, EvalError>>()?;

        let mut categories = Vec::new();
        for category in Category::ALL {
            let members: Vec<&TaskSummary> = tasks.iter().filter(|t| t.task.category() == category).collect();
            if members.is_empty() {
                continue;
            }
            let means: Vec<Score> = members.iter().map(|t| t.score.clone()).collect();
            categories.push(CategorySummary {
                category,
                items: members.iter().map(|t| t.items).sum(),
                score: macro_average(&means)?,
                cost_usd: members.iter().map(|t| t.cost_usd).sum(),
            });
        }

        let task_means: Vec<Score> = tasks.iter().map(|t| t.score.clone()).collect();
        let category_means: Vec<Score> = categories.iter().map(|c| c.score.clone()).collect();
        Ok(Self {
            label: label.to_string(),
            metadata,
            macro_average: macro_average(&task_means)?,
            category_average: macro_average(&category_means)?,
            total_cost_usd: results.iter().map(|r| r.cost_usd).sum(),
            tasks,
            categories,
            results,
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Questions answered at once.
    pub parallelism: usize,
    pub context_budget: u64,
    pub vocabulary: SpeciesVocabulary,
    pub metadata: RunMetadata,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            parallelism: 1,
            context_budget: DEFAULT_CONTEXT_BUDGET,
            vocabulary: SpeciesVocabulary::seeded(),
            metadata: RunMetadata::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkRun {
    pub report: ScoreReport,
    /// One transcript per item, in report order.
    pub transcripts: Vec<Transcript>,
}

/// Answers every item, scores it and aggregates the results. Items are
/// reported in benchmark order whatever the parallelism.
pub async fn run_benchmark(
    benchmark: &Benchmark,
    engine: &dyn QaEngine,
    pricing: &Pricing,
    options: &RunOptions,
) -> Result<BenchmarkRun, EvalError> {
    let answers: Vec<_> = stream::iter(benchmark.items())
        .map(|item| async move { (item, engine.answer(&item.question).await) })
        .buffered(options.parallelism.max(1))
        .collect()
        .await;

    let mut results = Vec::with_capacity(answers.len());
    let mut transcripts = Vec::with_capacity(answers.len());
    for (item, (prediction, transcript)) in answers {
        let task = item.question.task;
        let s = score(task, &prediction, &item.gold, &options.vocabulary)?;
        let error_class = classify_error(&transcript, task, &s, &item.gold, options.context_budget);
        results.push(TaskResult {
            question_id: item.question.id.clone(),
            task,
            prediction: prediction.raw.clone(),
            gold: item.gold.display(),
            score: s,
            cost_usd: cost(transcript.total_usage(), pricing),
            error_class,
            outcome: transcript.outcome.clone(),
        });
        transcripts.push(transcript);
    }
    let report = ScoreReport::assemble(engine.label(), options.metadata.clone(), results)?;
    Ok(BenchmarkRun { report, transcripts })
}
