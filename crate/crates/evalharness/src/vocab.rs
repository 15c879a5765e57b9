use std::collections::BTreeMap;
use std::path::Path;

use genomagent_core::{normalize_answer, TaskKind};

use crate::error::EvalError;

const SEED: [(&str, &str); 10] = [
    ("homo sapiens", "human"),
    ("mus musculus", "mouse"),
    ("rattus norvegicus", "rat"),
    ("danio rerio", "zebrafish"),
    ("drosophila melanogaster", "fruit fly"),
    ("caenorhabditis elegans", "worm"),
    ("pan troglodytes", "chimpanzee"),
    ("gallus gallus", "chicken"),
    ("bos taurus", "cattle"),
    ("sus scrofa", "pig"),
];

/// Latin binomial to common name. Several Latin names may share a common
/// name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpeciesVocabulary {
    names: BTreeMap<String, String>,
}

fn key(name: &str) -> String {
    normalize_answer(name, TaskKind::DnaToSpecies)
}

impl SpeciesVocabulary {
    pub fn seeded() -> Self {
        let mut v = Self { names: BTreeMap::new() };
        for (latin, common) in SEED {
            v.insert(latin, common);
        }
        v
    }

    pub fn insert(&mut self, latin: &str, common: &str) {
        self.names.insert(key(latin), key(common));
    }

    /// Adds the entries of a JSON object file `{"latin name": "common name"}`.
    pub fn extend_from_file(&mut self, path: &Path) -> Result<(), EvalError> {
        let text = std::fs::read_to_string(path).map_err(|e| EvalError::io(path, e))?;
        let entries: BTreeMap<String, String> = serde_json::from_str(&text)
            .map_err(|e| EvalError::Malformed { file: path.to_path_buf(), message: e.to_string() })?;
        for (latin, common) in &entries {
            self.insert(latin, common);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// The common name for `name` when it is a known Latin name, otherwise
    /// `name` itself in normalized form.
    pub fn common_name(&self, name: &str) -> String {
        let k = key(name);
        self.names.get(&k).cloned().unwrap_or(k)
    }
}

impl Default for SpeciesVocabulary {
    fn default() -> Self {
        Self::seeded()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_names_map() {
        let v = SpeciesVocabulary::seeded();
        assert_eq!(v.len(), 10);
        assert_eq!(v.common_name("Homo sapiens"), "human");
        assert_eq!(v.common_name("Danio_rerio"), "zebrafish");
        assert_eq!(v.common_name("human"), "human");
        assert_eq!(v.common_name("Xenopus laevis"), "xenopus laevis");
    }

    #[test]
    fn data_file_extends() {
        let mut v = SpeciesVocabulary::seeded();
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/species.json");
        v.extend_from_file(&path).unwrap();
        assert!(v.len() > 10);
        assert_eq!(v.common_name("Saccharomyces cerevisiae"), "yeast");
        assert_eq!(v.common_name("Homo sapiens"), "human");
    }
}
