//! Per-task workflow definitions: which sources to query, how to call
//! them, and how their responses are routed.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::LazyLock;

use genomagent_core::{SourceId, TaskKind};
use regex::Regex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::OrchError;
use crate::program::ExtractionProgram;

pub const DEFAULT_JSON_SIZE_THRESHOLD: usize = 16 * 1024;

static PLACEHOLDER_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\{([a-z_]+)\}").unwrap());
static FORMAT_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\{(\d+)\}").unwrap());

pub type Entities = BTreeMap<String, String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Json,
    Html,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsensusPolicy {
    #[default]
    MajorityThenPriority,
    LlmSynthesis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlatFormat {
    #[default]
    Json,
    Html,
}

/// A request template. String fields may contain `{entity}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Endpoint {
    EsearchEsummary { db: String, term: String },
    Esummary { db: String, id: String },
    Blast { program: String, database: String, sequence: String },
    HgncFetch { field: String, value: String },
    UcscBlat {
        sequence: String,
        #[serde(default = "default_assembly")]
        db: String,
        #[serde(default)]
        format: BlatFormat,
    },
}

fn default_assembly() -> String {
    "hg38".into()
}

impl Endpoint {
    pub fn source(&self) -> SourceId {
        match self {
            Endpoint::EsearchEsummary { .. } | Endpoint::Esummary { .. } => SourceId::NcbiEutils,
            Endpoint::Blast { .. } => SourceId::Blast,
            Endpoint::HgncFetch { .. } => SourceId::Hgnc,
            Endpoint::UcscBlat { .. } => SourceId::Ucsc,
        }
    }

    fn templates(&self) -> Vec<&str> {
        match self {
            Endpoint::EsearchEsummary { db, term } => vec![db, term],
            Endpoint::Esummary { db, id } => vec![db, id],
            Endpoint::Blast { program, database, sequence } => vec![program, database, sequence],
            Endpoint::HgncFetch { field, value } => vec![field, value],
            Endpoint::UcscBlat { sequence, db, .. } => vec![sequence, db],
        }
    }

    pub fn placeholders(&self) -> Vec<String> {
        self.templates()
            .into_iter()
            .flat_map(|t| PLACEHOLDER_RE.captures_iter(t).map(|c| c[1].to_string()).collect::<Vec<_>>())
            .collect()
    }

    /// Substitutes entity values into every template field.
    pub fn bind(&self, entities: &Entities) -> Result<Endpoint, OrchError> {
        let fill = |t: &String| -> Result<String, OrchError> {
            let mut missing = None;
            let out = PLACEHOLDER_RE.replace_all(t, |c: &regex::Captures<'_>| match entities.get(&c[1]) {
                Some(v) => v.clone(),
                None => {
                    missing = Some(c[1].to_string());
                    String::new()
                }
            });
            match missing {
                Some(name) => Err(OrchError::Config(format!("entity {name:?} not available"))),
                None => Ok(out.into_owned()),
            }
        };
        Ok(match self {
            Endpoint::EsearchEsummary { db, term } => Endpoint::EsearchEsummary { db: fill(db)?, term: fill(term)? },
            Endpoint::Esummary { db, id } => Endpoint::Esummary { db: fill(db)?, id: fill(id)? },
            Endpoint::Blast { program, database, sequence } => {
                Endpoint::Blast { program: fill(program)?, database: fill(database)?, sequence: fill(sequence)? }
            }
            Endpoint::HgncFetch { field, value } => Endpoint::HgncFetch { field: fill(field)?, value: fill(value)? },
            Endpoint::UcscBlat { sequence, db, format } => {
                Endpoint::UcscBlat { sequence: fill(sequence)?, db: fill(db)?, format: *format }
            }
        })
    }

    /// Stable text of the unbound template, used in cache keys.
    pub fn template_key(&self) -> String {
        serde_json::to_string(self).expect("endpoint serializes")
    }
}

/// Direct field lookup for JSON responses: each entry of `fields` is an
/// extraction program whose first result fills `{i}` in `format`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Binding {
    pub fields: Vec<String>,
    #[serde(default = "default_format")]
    pub format: String,
}

fn default_format() -> String {
    "{0}".into()
}

impl Binding {
    pub fn programs(&self, target: &str) -> Result<Vec<ExtractionProgram>, OrchError> {
        self.fields.iter().map(|f| ExtractionProgram::parse(f, target)).collect()
    }

    /// Fills the format string. A field that yields several values (a gene
    /// list, say) is joined with ", ".
    pub fn render(&self, values: &[Vec<String>]) -> String {
        FORMAT_RE
            .replace_all(&self.format, |c: &regex::Captures<'_>| {
                let i: usize = c[1].parse().unwrap_or(usize::MAX);
                values.get(i).map(|v| v.join(", ")).unwrap_or_default()
            })
            .into_owned()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub source: SourceId,
    pub route: Route,
    pub endpoint: Endpoint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binding: Option<Binding>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkflowConfig {
    #[serde(serialize_with = "task_to_slug", deserialize_with = "task_from_str")]
    pub task: TaskKind,
    /// What the extraction step should pull out; shown to the model.
    pub target_description: String,
    #[serde(default = "default_threshold")]
    pub json_size_threshold: usize,
    #[serde(default)]
    pub consensus_policy: ConsensusPolicy,
    pub sources: Vec<SourceSpec>,
}

fn default_threshold() -> usize {
    DEFAULT_JSON_SIZE_THRESHOLD
}

fn task_to_slug<S: Serializer>(task: &TaskKind, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(task.slug())
}

fn task_from_str<'de, D: Deserializer<'de>>(d: D) -> Result<TaskKind, D::Error> {
    let raw = String::deserialize(d)?;
    raw.parse().map_err(serde::de::Error::custom)
}

impl WorkflowConfig {
    pub fn from_toml(text: &str) -> Result<Self, OrchError> {
        let config: Self = toml::from_str(text).map_err(|e| OrchError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), OrchError> {
        let err = |m: String| Err(OrchError::Config(format!("{}: {m}", self.task.slug())));
        if self.sources.is_empty() {
            return err("no sources".into());
        }
        if self.json_size_threshold == 0 {
            return err("json_size_threshold must be positive".into());
        }
        let keys = self.task.entity_keys();
        for (i, spec) in self.sources.iter().enumerate() {
            if spec.endpoint.source() != spec.source {
                return err(format!("source {i} is {} but its endpoint belongs to {}", spec.source, spec.endpoint.source()));
            }
            for p in spec.endpoint.placeholders() {
                if !keys.contains(&p.as_str()) {
                    return err(format!("source {i} uses {{{p}}}, which this task never extracts"));
                }
            }
            if let Some(binding) = &spec.binding {
                if spec.route != Route::Json {
                    return err(format!("source {i}: bindings apply to the json route only"));
                }
                if binding.fields.is_empty() {
                    return err(format!("source {i}: binding has no fields"));
                }
                binding.programs(&self.target_description)?;
                for c in FORMAT_RE.captures_iter(&binding.format) {
                    let idx: usize = c[1].parse().unwrap_or(usize::MAX);
                    if idx >= binding.fields.len() {
                        return err(format!("source {i}: format refers to missing field {{{idx}}}"));
                    }
                }
            }
        }
        Ok(())
    }
}

macro_rules! builtin {
    ($($slug:literal),* $(,)?) => {
        &[$(($slug, include_str!(concat!("../../../config/workflows/", $slug, ".toml")))),*]
    };
}

const BUILTIN: &[(&str, &str)] = builtin!(
    "gene_alias",
    "name_conversion",
    "snp_association",
    "gene_location",
    "snp_location",
    "disease_association",
    "protein_coding_genes",
    "dna_to_human",
    "dna_to_species",
);

/// One workflow per task.
#[derive(Debug, Clone)]
pub struct WorkflowSet {
    by_task: HashMap<TaskKind, WorkflowConfig>,
}

impl WorkflowSet {
    pub fn builtin() -> Self {
        let mut by_task = HashMap::new();
        for (slug, text) in BUILTIN {
            let config = WorkflowConfig::from_toml(text).unwrap_or_else(|e| panic!("built-in workflow {slug}: {e}"));
            by_task.insert(config.task, config);
        }
        Self { by_task }
    }

    /// Reads `{dir}/{slug}.toml` for every task; tasks without a file keep
    /// the built-in workflow.
    pub fn load_dir(dir: &Path) -> Result<Self, OrchError> {
        if !dir.is_dir() {
            return Err(OrchError::Config(format!("workflow directory {} does not exist", dir.display())));
        }
        let mut set = Self::builtin();
        for task in TaskKind::ALL {
            let path = dir.join(format!("{}.toml", task.slug()));
            if !path.exists() {
                continue;
            }
            let text = std::fs::read_to_string(&path).map_err(|e| OrchError::Config(format!("{}: {e}", path.display())))?;
            let config = WorkflowConfig::from_toml(&text).map_err(|e| OrchError::Config(format!("{}: {e}", path.display())))?;
            if config.task != task {
                return Err(OrchError::Config(format!("{} declares task {}", path.display(), config.task.slug())));
            }
            set.by_task.insert(task, config);
        }
        Ok(set)
    }

    pub fn get(&self, task: TaskKind) -> &WorkflowConfig {
        &self.by_task[&task]
    }

    pub fn insert(&mut self, config: WorkflowConfig) {
        self.by_task.insert(config.task, config);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_cover_every_task() {
        let set = WorkflowSet::builtin();
        for task in TaskKind::ALL {
            assert_eq!(set.get(task).task, task);
            assert!(!set.get(task).sources.is_empty());
        }
    }

    #[test]
    fn rejects_unknown_placeholder_and_mismatched_source() {
        let bad_placeholder = r#"
            task = "gene_location"
            target_description = "x"
            [[sources]]
            source = "NCBI_EUTILS"
            route = "json"
            endpoint = { op = "esearch_esummary", db = "gene", term = "{rsid}" }
        "#;
        assert!(matches!(WorkflowConfig::from_toml(bad_placeholder), Err(OrchError::Config(_))));
        let bad_source = r#"
            task = "gene_location"
            target_description = "x"
            [[sources]]
            source = "HGNC"
            route = "json"
            endpoint = { op = "esearch_esummary", db = "gene", term = "{gene}" }
        "#;
        assert!(matches!(WorkflowConfig::from_toml(bad_source), Err(OrchError::Config(_))));
        let no_sources = "task = \"gene_location\"\ntarget_description = \"x\"\nsources = []\n";
        assert!(WorkflowConfig::from_toml(no_sources).is_err());
    }

    #[test]
    fn bind_fills_placeholders() {
        let e = Endpoint::EsearchEsummary { db: "gene".into(), term: "{gene}[sym] AND human[orgn]".into() };
        let mut ents = Entities::new();
        ents.insert("gene".into(), "FAM66D".into());
        assert_eq!(
            e.bind(&ents).unwrap(),
            Endpoint::EsearchEsummary { db: "gene".into(), term: "FAM66D[sym] AND human[orgn]".into() }
        );
        assert!(e.bind(&Entities::new()).is_err());
    }

    #[test]
    fn binding_render() {
        let b = Binding { fields: vec!["First".into(), "First".into()], format: "chr{0}:{1}".into() };
        assert_eq!(b.render(&[vec!["8".into()], vec!["1".into(), "2".into()]]), "chr8:1, 2");
    }
}
