use std::collections::HashMap;

use genomagent_core::{AgentId, Event, EventDetail, EventKind};
use genomagent_llm::CompletionRequest;

use crate::config::ConsensusPolicy;
use crate::error::OrchError;
use crate::pipeline::Evidence;
use crate::session::LlmSession;

/// Candidate counts, most votes first, ties in first-seen order.
pub fn tally(evidence: &[Evidence]) -> Vec<(String, usize)> {
    let mut counts: Vec<(String, usize)> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for e in evidence {
        match index.get(e.candidate_answer.as_str()) {
            Some(&i) => counts[i].1 += 1,
            None => {
                index.insert(&e.candidate_answer, counts.len());
                counts.push((e.candidate_answer.clone(), 1));
            }
        }
    }
    counts.sort_by(|a, b| b.1.cmp(&a.1));
    counts
}

/// Majority vote, falling back to the first (highest-priority) source.
/// Returns the index of the chosen evidence.
pub fn majority_then_priority(evidence: &[Evidence]) -> Result<usize, OrchError> {
    if evidence.is_empty() {
        return Err(OrchError::NoEvidence);
    }
    let counts = tally(evidence);
    let (top, votes) = &counts[0];
    if votes * 2 > evidence.len() {
        Ok(evidence.iter().position(|e| &e.candidate_answer == top).expect("tallied candidate exists"))
    } else {
        Ok(0)
    }
}

/// Picks the final raw answer and records the vote.
pub async fn decide(
    question: &str,
    evidence: &[Evidence],
    policy: ConsensusPolicy,
    session: &mut LlmSession,
) -> Result<String, OrchError> {
    if evidence.is_empty() {
        return Err(OrchError::NoEvidence);
    }
    let counts = tally(evidence);
    let chosen = match policy {
        ConsensusPolicy::MajorityThenPriority => evidence[majority_then_priority(evidence)?].raw.clone(),
        ConsensusPolicy::LlmSynthesis => {
            let listing: String =
                evidence.iter().map(|e| format!("- {}: {}\n", e.source, e.raw)).collect();
            let request = CompletionRequest::new(
                "Several databases answered the same question. Reply with the single best final answer only.",
                format!("Question: {question}\nCandidates:\n{listing}"),
            )
            .max_tokens(128);
            let reply = session.complete(AgentId::FinalDecision, "synthesize", &request, listing.len() as u64).await?;
            reply.text.trim().lines().next().unwrap_or("").trim().to_string()
        }
    };
    let policy_name = match policy {
        ConsensusPolicy::MajorityThenPriority => "majority_then_priority",
        ConsensusPolicy::LlmSynthesis => "llm_synthesis",
    };
    session.record(
        Event::new(AgentId::FinalDecision, EventKind::Decision)
            .digests(question.as_bytes(), chosen.as_bytes())
            .detail(EventDetail::Vote { policy: policy_name.into(), tally: counts, chosen: chosen.clone() }),
    );
    Ok(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::Confidence;
    use genomagent_core::SourceId;

    fn ev(source: SourceId, c: &str) -> Evidence {
        Evidence { source, raw: c.to_uppercase(), candidate_answer: c.into(), support: vec![], confidence: Confidence::Parsed }
    }

    #[test]
    fn strict_majority_wins() {
        let e = [ev(SourceId::Blast, "chr7"), ev(SourceId::NcbiEutils, "chr8"), ev(SourceId::Hgnc, "chr8")];
        assert_eq!(e[majority_then_priority(&e).unwrap()].candidate_answer, "chr8");
    }

    #[test]
    fn tie_goes_to_priority() {
        let e = [ev(SourceId::NcbiEutils, "chr8"), ev(SourceId::Hgnc, "chr7")];
        assert_eq!(majority_then_priority(&e).unwrap(), 0);
        let e = [ev(SourceId::NcbiEutils, "a"), ev(SourceId::Hgnc, "b"), ev(SourceId::Ucsc, "c"), ev(SourceId::Blast, "b")];
        // 2 of 4 is not a strict majority.
        assert_eq!(majority_then_priority(&e).unwrap(), 0);
    }

    #[test]
    fn empty_is_no_evidence() {
        assert!(matches!(majority_then_priority(&[]), Err(OrchError::NoEvidence)));
    }

    #[test]
    fn tally_orders_by_votes() {
        let e = [ev(SourceId::Blast, "x"), ev(SourceId::Hgnc, "y"), ev(SourceId::Ucsc, "y")];
        assert_eq!(tally(&e), vec![("y".to_string(), 2), ("x".to_string(), 1)]);
    }
}
