use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use genomagent_core::{GoldAnswer, Question, TaskKind};
use serde::de::{self, Deserializer, MapAccess, SeqAccess, Visitor};
use serde::Deserialize;

use crate::error::EvalError;

/// Items per task in the full benchmark.
pub const EXPECTED_ITEMS: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchmarkItem {
    pub question: Question,
    pub gold: GoldAnswer,
}

#[derive(Debug, Clone, Default)]
pub struct Benchmark {
    pub tasks: BTreeMap<TaskKind, Vec<BenchmarkItem>>,
    /// Non-fatal findings such as unexpected item counts.
    pub warnings: Vec<String>,
}

impl Benchmark {
    pub fn len(&self) -> usize {
        self.tasks.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn items(&self) -> impl Iterator<Item = &BenchmarkItem> {
        self.tasks.values().flatten()
    }
}

/// Maps a data file stem to its task. Accepts the snake_case task names
/// and the original benchmark file names, including their misspellings.
pub fn task_for_file_stem(stem: &str) -> Option<TaskKind> {
    let key: String = stem
        .trim()
        .to_ascii_lowercase()
        .chars()
        .map(|c| if c == ' ' || c == '-' { '_' } else { c })
        .collect();
    Some(match key.as_str() {
        "gene_alias" => TaskKind::GeneAlias,
        "gene_name_conversion" | "name_conversion" => TaskKind::NameConversion,
        "snp_gene_function" | "snp_association" => TaskKind::SnpAssociation,
        "gene_location" => TaskKind::GeneLocation,
        "snp_location" => TaskKind::SnpLocation,
        "gene_disease_association" | "disease_association" => TaskKind::DiseaseAssociation,
        "protein_coding_genes" | "protein_coding_gene" => TaskKind::ProteinCodingGenes,
        "human_genome_dna_aligment" | "human_genome_dna_alignment" | "dna_to_human" => TaskKind::DnaToHuman,
        "multi_species_dna_aligment" | "multi_species_dna_alignment" | "dna_to_species" => TaskKind::DnaToSpecies,
        _ => return None,
    })
}

/// Question/answer pairs in file order, from either an object or an array
/// of `{"question", "answer"}` records. Array answers are joined with ", ".
struct Pairs(Vec<(String, String)>);

#[derive(Deserialize)]
#[serde(untagged)]
enum AnswerText {
    One(String),
    Many(Vec<String>),
}

impl AnswerText {
    fn into_text(self) -> String {
        match self {
            AnswerText::One(s) => s,
            AnswerText::Many(v) => v.join(", "),
        }
    }
}

#[derive(Deserialize)]
struct Record {
    question: String,
    answer: AnswerText,
}

impl<'de> Deserialize<'de> for Pairs {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct PairsVisitor;

        impl<'de> Visitor<'de> for PairsVisitor {
            type Value = Pairs;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an object of question to answer, or an array of {question, answer} records")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Pairs, A::Error> {
                let mut out = Vec::new();
                while let Some((q, a)) = map.next_entry::<String, AnswerText>()? {
                    out.push((q, a.into_text()));
                }
                Ok(Pairs(out))
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Pairs, A::Error> {
                let mut out = Vec::new();
                while let Some(r) = seq.next_element::<Record>()? {
                    out.push((r.question, r.answer.into_text()));
                }
                Ok(Pairs(out))
            }
        }

        deserializer.deserialize_any(PairsVisitor).map_err(de::Error::custom)
    }
}

fn load_task_file(path: &Path, task: TaskKind) -> Result<Vec<BenchmarkItem>, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|e| EvalError::io(path, e))?;
    let Pairs(pairs) = serde_json::from_str(&text)
        .map_err(|e| EvalError::Malformed { file: path.to_path_buf(), message: e.to_string() })?;
    if pairs.is_empty() {
        return Err(EvalError::EmptyTaskFile { file: path.to_path_buf() });
    }
    pairs
        .into_iter()
        .enumerate()
        .map(|(index, (question, answer))| {
            let failure = |message: String| EvalError::GoldParseFailure { file: path.to_path_buf(), index, message };
            let question = Question::new(format!("{}-{:03}", task.slug(), index + 1), task, question)
                .map_err(|e| failure(e.to_string()))?;
            let gold = GoldAnswer::parse(task, &answer).map_err(|e| failure(e.to_string()))?;
            Ok(BenchmarkItem { question, gold })
        })
        .collect()
}

/// Loads every recognized `*.json` task file in `dir`. Unrecognized files
/// are skipped with a warning, so a directory may hold a subset of tasks.
pub fn load_benchmark(dir: &Path) -> Result<Benchmark, EvalError> {
    let entries = std::fs::read_dir(dir).map_err(|e| EvalError::io(dir, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();

    let mut benchmark = Benchmark::default();
    let mut origin: BTreeMap<TaskKind, PathBuf> = BTreeMap::new();
    for path in files {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let Some(task) = task_for_file_stem(stem) else {
            let msg = format!("{}: not an in-scope task file, skipped", path.display());
            tracing::warn!("{msg}");
            benchmark.warnings.push(msg);
            continue;
        };
        if let Some(first) = origin.get(&task) {
            return Err(EvalError::DuplicateTask { task, first: first.clone(), second: path });
        }
        let items = load_task_file(&path, task)?;
        if items.len() != EXPECTED_ITEMS {
            let msg = format!("{}: {} items (expected {EXPECTED_ITEMS})", path.display(), items.len());
            tracing::warn!("{msg}");
            benchmark.warnings.push(msg);
        }
        origin.insert(task, path);
        benchmark.tasks.insert(task, items);
    }
    if benchmark.tasks.is_empty() {
        return Err(EvalError::MissingTaskFile(dir.to_path_buf()));
    }
    Ok(benchmark)
}
