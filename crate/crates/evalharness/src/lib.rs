//! Benchmark loading, scoring, failure classification and report output.

pub mod benchmark;
pub mod classify;
mod error;
pub mod report;
pub mod run;
pub mod score;
pub mod vocab;

pub use benchmark::{load_benchmark, task_for_file_stem, Benchmark, BenchmarkItem, EXPECTED_ITEMS};
pub use classify::{classify_error, ErrorClass, DEFAULT_CONTEXT_BUDGET};
pub use error::EvalError;
pub use report::{emit_report, ReportFormat};
pub use run::{run_benchmark, BenchmarkRun, CategorySummary, RunMetadata, RunOptions, ScoreReport, TaskResult, TaskSummary};
pub use score::{interval_score, macro_average, recall, score, Score};
pub use vocab::SpeciesVocabulary;
