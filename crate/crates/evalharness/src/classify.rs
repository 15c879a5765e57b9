use genomagent_core::{EventDetail, GoldAnswer, TaskKind, TerminationReason, Transcript};
use serde::{Deserialize, Serialize};

use crate::score::Score;

/// Evidence bytes a model can take in before answers start to suffer.
pub const DEFAULT_CONTEXT_BUDGET: u64 = 128 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ErrorClass {
    /// The answer earned full credit.
    None,
    /// Every call succeeded but no source had the data.
    E1,
    /// The model never produced a usable call or program.
    E2,
    /// The answer was in the evidence, but the evidence was too large.
    E3,
    Unclassified,
}

impl ErrorClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorClass::None => "None",
            ErrorClass::E1 => "E1",
            ErrorClass::E2 => "E2",
            ErrorClass::E3 => "E3",
            ErrorClass::Unclassified => "Unclassified",
        }
    }
}

impl std::fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

fn format_failure(transcript: &Transcript) -> bool {
    transcript.events().iter().any(|e| {
        matches!(
            e.detail,
            EventDetail::Termination { reason: TerminationReason::NoApiCall }
                | EventDetail::ProgramInvalid { .. }
                | EventDetail::Unclassifiable { .. }
        )
    })
}

fn empty_coverage(transcript: &Transcript) -> bool {
    let calls: Vec<_> = transcript.api_calls().collect();
    !calls.is_empty()
        && calls.iter().all(|c| c.succeeded())
        && calls.iter().all(|c| c.result_count.unwrap_or(0) == 0)
        && calls.iter().any(|c| c.result_count == Some(0))
}

fn lost_in_context(transcript: &Transcript, task: TaskKind, gold: &GoldAnswer, context_budget: u64) -> bool {
    let appended: u64 = transcript.events().iter().map(|e| e.appended_bytes).sum();
    if appended <= context_budget {
        return false;
    }
    let forms = gold.normalized_forms(task);
    transcript
        .api_calls()
        .filter_map(|c| c.body.as_deref())
        .map(str::to_lowercase)
        .any(|body| forms.iter().any(|f| !f.is_empty() && body.contains(f.as_str())))
}

/// Assigns a failure class. Rules apply in order E2, E1, E3; a perfect
/// score is always [`ErrorClass::None`].
pub fn classify_error(
    transcript: &Transcript,
    task: TaskKind,
    score: &Score,
    gold: &GoldAnswer,
    context_budget: u64,
) -> ErrorClass {
    if score.is_one() {
        ErrorClass::None
    } else if format_failure(transcript) {
        ErrorClass::E2
    } else if empty_coverage(transcript) {
        ErrorClass::E1
    } else if lost_in_context(transcript, task, gold, context_budget) {
        ErrorClass::E3
    } else {
        ErrorClass::Unclassified
    }
}
