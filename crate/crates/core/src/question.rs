use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::interval::{parse_interval, GenomicInterval, ParseFailure};
use crate::normalize::normalize_answer;
use crate::task::TaskKind;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub task: TaskKind,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GoldError {
    #[error("question text is empty")]
    EmptyQuestion,
    #[error("gold answer is empty")]
    Empty,
    #[error("gold interval: {0}")]
    Interval(#[from] ParseFailure),
}

impl Question {
    pub fn new(id: impl Into<String>, task: TaskKind, text: impl Into<String>) -> Result<Self, GoldError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(GoldError::EmptyQuestion);
        }
        Ok(Self { id: id.into(), task, text })
    }
}

/// The expected answer for one benchmark item. The variant is fixed by the
/// item's [`TaskKind`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value")]
pub enum GoldAnswer {
    ExactText(String),
    GeneSet(BTreeSet<String>),
    Interval(GenomicInterval),
    Species(String),
}

impl GoldAnswer {
    /// Parses a raw gold string into the variant the task dictates.
    pub fn parse(task: TaskKind, raw: &str) -> Result<Self, GoldError> {
        if raw.trim().is_empty() {
            return Err(GoldError::Empty);
        }
        Ok(match task {
            TaskKind::DiseaseAssociation => {
                let set = split_symbols(raw);
                if set.is_empty() {
                    return Err(GoldError::Empty);
                }
                GoldAnswer::GeneSet(set)
            }
            TaskKind::DnaToHuman => GoldAnswer::Interval(parse_interval(raw)?),
            TaskKind::DnaToSpecies => GoldAnswer::Species(raw.trim().to_string()),
            _ => GoldAnswer::ExactText(raw.trim().to_string()),
        })
    }

    pub fn matches_task(&self, task: TaskKind) -> bool {
        matches!(
            (self, task),
            (GoldAnswer::GeneSet(_), TaskKind::DiseaseAssociation)
                | (GoldAnswer::Interval(_), TaskKind::DnaToHuman)
                | (GoldAnswer::Species(_), TaskKind::DnaToSpecies)
                | (
                    GoldAnswer::ExactText(_),
                    TaskKind::GeneAlias
                        | TaskKind::NameConversion
                        | TaskKind::SnpAssociation
                        | TaskKind::GeneLocation
                        | TaskKind::SnpLocation
                        | TaskKind::ProteinCodingGenes
                )
        )
    }

    /// Normalized strings whose presence in an API payload means the
    /// answer was retrievable.
    pub fn normalized_forms(&self, task: TaskKind) -> Vec<String> {
        match self {
            GoldAnswer::ExactText(s) | GoldAnswer::Species(s) => vec![normalize_answer(s, task)],
            GoldAnswer::GeneSet(set) => set.iter().map(|s| normalize_answer(s, task)).collect(),
            GoldAnswer::Interval(iv) => vec![normalize_answer(&iv.to_string(), task)],
        }
    }

    pub fn display(&self) -> String {
        match self {
            GoldAnswer::ExactText(s) | GoldAnswer::Species(s) => s.clone(),
            GoldAnswer::GeneSet(set) => set.iter().cloned().collect::<Vec<_>>().join(", "),
            GoldAnswer::Interval(iv) => iv.to_string(),
        }
    }
}

/// Splits a gene list on commas, semicolons and whitespace runs.
pub fn split_symbols(raw: &str) -> BTreeSet<String> {
    raw.split(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// A system's answer to one question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub raw: String,
    pub normalized: String,
    pub transcript_ref: String,
}

impl Prediction {
    pub fn new(raw: impl Into<String>, task: TaskKind, transcript_ref: impl Into<String>) -> Self {
        let raw = raw.into();
        let normalized = normalize_answer(&raw, task);
        Self { raw, normalized, transcript_ref: transcript_ref.into() }
    }

    pub fn empty(task: TaskKind, transcript_ref: impl Into<String>) -> Self {
        Self::new("", task, transcript_ref)
    }
}
