//! Question routing: cheap pattern rules first, one model call when the
//! rules do not recognize the question.

use std::sync::LazyLock;

use genomagent_core::{AgentId, Event, EventDetail, EventKind, TaskKind};
use genomagent_llm::CompletionRequest;
use regex::Regex;
use serde::Deserialize;

use crate::config::Entities;
use crate::error::OrchError;
use crate::session::LlmSession;

static DNA_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[ACGTN]{20,}|[acgtn]{20,}").unwrap());
static RSID_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\brs(\d+)\b").unwrap());
static ENSG_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(ENSG\d{11})\b").unwrap());
static ALIAS_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)official\s+gene\s+symbol\s+(?:of|for)\s+([A-Za-z0-9][A-Za-z0-9\-\.@/]*?)\s*\??\s*$").unwrap());
static LOCATION_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)which\s+chromosome\s+is\s+(?:the\s+)?(?:gene\s+)?([A-Za-z0-9][A-Za-z0-9\-\.@/]*)\s+(?:gene\s+)?located").unwrap()
});
static CODING_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\bis\s+([A-Za-z0-9][A-Za-z0-9\-\.@/]*)\s+a\s+protein[\s-]coding\s+gene").unwrap());
static DISEASE_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)what\s+are\s+(?:the\s+)?genes\s+(?:related|associated)\s+(?:to|with)\s+(.+?)\s*\??\s*$").unwrap());

fn entities(pairs: &[(&str, &str)]) -> Entities {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

/// The rule-based classifier alone.
pub fn detect_by_rules(text: &str) -> Option<(TaskKind, Entities)> {
    let lower = text.to_lowercase();
    if let Some(m) = DNA_RE.find(text) {
        let seq = m.as_str().to_uppercase();
        if lower.contains("organism") || lower.contains("species") {
            return Some((TaskKind::DnaToSpecies, entities(&[("sequence", &seq)])));
        }
        if lower.contains("human genome") || lower.contains("align") {
            return Some((TaskKind::DnaToHuman, entities(&[("sequence", &seq)])));
        }
        return None;
    }
    if let Some(c) = RSID_RE.captures(text) {
        let ents = entities(&[("rsid", &format!("rs{}", &c[1])), ("rsid_num", &c[1])]);
        if lower.contains("chromosome") || lower.contains("locate") {
            return Some((TaskKind::SnpLocation, ents));
        }
        if lower.contains("gene") || lower.contains("associated") {
            return Some((TaskKind::SnpAssociation, ents));
        }
        return None;
    }
    if let Some(c) = ENSG_RE.captures(text) {
        return Some((TaskKind::NameConversion, entities(&[("gene", &c[1])])));
    }
    if let Some(c) = ALIAS_RE.captures(text) {
        return Some((TaskKind::GeneAlias, entities(&[("gene", &c[1])])));
    }
    if let Some(c) = LOCATION_RE.captures(text) {
        return Some((TaskKind::GeneLocation, entities(&[("gene", &c[1])])));
    }
    if let Some(c) = CODING_RE.captures(text) {
        return Some((TaskKind::ProteinCodingGenes, entities(&[("gene", &c[1])])));
    }
    if let Some(c) = DISEASE_RE.captures(text) {
        return Some((TaskKind::DiseaseAssociation, entities(&[("disease", c[1].trim())])));
    }
    None
}

#[derive(Deserialize)]
struct LlmRoute {
    task: String,
    #[serde(default)]
    entities: Entities,
}

fn parse_llm_route(reply: &str) -> Result<(TaskKind, Entities), String> {
    let start = reply.find('{').ok_or("reply has no JSON object")?;
    let end = reply.rfind('}').ok_or("reply has no JSON object")?;
    let route: LlmRoute = serde_json::from_str(&reply[start..=end]).map_err(|e| e.to_string())?;
    let task: TaskKind = route.task.parse().map_err(|e: genomagent_core::task::UnknownTask| e.to_string())?;
    let mut ents = route.entities;
    if let Some(rsid) = ents.get("rsid").cloned() {
        let digits = rsid.trim_start_matches(|c: char| c.is_ascii_alphabetic());
        ents.entry("rsid_num".into()).or_insert_with(|| digits.to_string());
    }
    for key in task.entity_keys() {
        if ents.get(*key).map_or(true, |v| v.trim().is_empty()) {
            return Err(format!("missing entity {key:?} for {}", task.slug()));
        }
    }
    Ok((task, ents))
}

const ROUTER_SYSTEM: &str = "You route genomics questions. Reply with one JSON object \
{\"task\": <task>, \"entities\": {...}} and nothing else. Tasks and their entities: \
gene_alias, name_conversion, gene_location, protein_coding_genes -> gene; \
snp_association, snp_location -> rsid; disease_association -> disease; \
dna_to_human, dna_to_species -> sequence.";

pub async fn detect_task(text: &str, session: &mut LlmSession) -> Result<(TaskKind, Entities), OrchError> {
    if text.trim().is_empty() {
        return Err(OrchError::Unclassifiable("empty question".into()));
    }
    if let Some(hit) = detect_by_rules(text) {
        session.record(
            Event::new(AgentId::TaskDetection, EventKind::Decision)
                .digests(text.as_bytes(), hit.0.slug().as_bytes())
                .detail(EventDetail::None),
        );
        return Ok(hit);
    }
    let request = CompletionRequest::new(ROUTER_SYSTEM, format!("Question: {text}")).max_tokens(256);
    let reply = session.complete(AgentId::TaskDetection, "route", &request, 0).await?;
    match parse_llm_route(&reply.text) {
        Ok(hit) => Ok(hit),
        Err(reason) => {
            session.record(
                Event::new(AgentId::TaskDetection, EventKind::Decision)
                    .digests(text.as_bytes(), reply.text.as_bytes())
                    .detail(EventDetail::Unclassifiable { reason: reason.clone() }),
            );
            Err(OrchError::Unclassifiable(reason))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule(text: &str) -> (TaskKind, Entities) {
        detect_by_rules(text).unwrap_or_else(|| panic!("no rule for {text:?}"))
    }

    #[test]
    fn rule_examples() {
        let (t, e) = rule("Which chromosome is gene X located on?");
        assert_eq!((t, e["gene"].as_str()), (TaskKind::GeneLocation, "X"));
        let (t, e) = rule("Which gene is SNP rs123456 associated with?");
        assert_eq!((t, e["rsid"].as_str(), e["rsid_num"].as_str()), (TaskKind::SnpAssociation, "rs123456", "123456"));
        let seq = "ACGT".repeat(25);
        let (t, e) = rule(&format!("Align the DNA sequence {seq} to the human genome"));
        assert_eq!((t, e["sequence"].as_str()), (TaskKind::DnaToHuman, seq.as_str()));
    }

    #[test]
    fn benchmark_phrasings() {
        let cases = [
            ("What is the official gene symbol of LMP10?", TaskKind::GeneAlias, "gene", "LMP10"),
            ("What is the official gene symbol of ENSG00000215251?", TaskKind::NameConversion, "gene", "ENSG00000215251"),
            ("Which chromosome is FAM66D gene located on human genome?", TaskKind::GeneLocation, "gene", "FAM66D"),
            ("Which chromosome does SNP rs1430464868 locate on human genome?", TaskKind::SnpLocation, "rsid", "rs1430464868"),
            ("Is ATP5F1EP2 a protein-coding gene?", TaskKind::ProteinCodingGenes, "gene", "ATP5F1EP2"),
            ("What are genes related to Distal renal tubular acidosis?", TaskKind::DiseaseAssociation, "disease", "Distal renal tubular acidosis"),
            (
                "Which organism does the DNA sequence come from:AGGGGCAGCAAACACCGGGACACACCCATTCGTGCA",
                TaskKind::DnaToSpecies,
                "sequence",
                "AGGGGCAGCAAACACCGGGACACACCCATTCGTGCA",
            ),
        ];
        for (text, task, key, value) in cases {
            let (t, e) = rule(text);
            assert_eq!(t, task, "{text}");
            assert_eq!(e[key], value, "{text}");
        }
    }

    #[test]
    fn unrecognized_questions_fall_through() {
        assert!(detect_by_rules("Tell me something about genes").is_none());
        assert!(detect_by_rules(&format!("What is {}?", "ACGT".repeat(10))).is_none());
    }

    #[test]
    fn llm_route_parsing() {
        let (t, e) = parse_llm_route("```json\n{\"task\":\"snp_location\",\"entities\":{\"rsid\":\"rs42\"}}\n```").unwrap();
        assert_eq!((t, e["rsid_num"].as_str()), (TaskKind::SnpLocation, "42"));
        assert!(parse_llm_route("{\"task\":\"gene_expression\"}").is_err());
        assert!(parse_llm_route("{\"task\":\"gene_alias\",\"entities\":{}}").is_err());
        assert!(parse_llm_route("no idea").is_err());
    }
}
