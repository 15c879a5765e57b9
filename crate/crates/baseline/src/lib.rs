//! A single-agent baseline: the model writes API URLs in square brackets,
//! generation halts at `→`, the host runs the call and appends the result,
//! and the loop repeats until the model writes its answer and a blank line.

mod agent;
mod extract;
mod prompt;

pub use agent::{run_single_agent, Baseline, BaselineSettings, LoopState};
pub use extract::{extract_api_call, parse_final_answer, truncate_context, TRUNCATION_MARKER};
pub use prompt::{PromptAssembly, PromptError, PromptStyle};

/// The stop sequence that marks an API call.
pub const CALL_STOP: &str = "→";
/// The stop sequence that marks the end of an answer.
pub const ANSWER_STOP: &str = "\n\n";
