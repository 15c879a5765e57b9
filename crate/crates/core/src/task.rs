use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The four question families the benchmark groups its tasks into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    Nomenclature,
    GenomicLocation,
    FunctionalAnalysis,
    SequenceAlignment,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Nomenclature,
        Category::GenomicLocation,
        Category::FunctionalAnalysis,
        Category::SequenceAlignment,
    ];

    pub fn tasks(self) -> impl Iterator<Item = TaskKind> {
        TaskKind::ALL.into_iter().filter(move |t| t.category() == self)
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Category::Nomenclature => "Nomenclature",
            Category::GenomicLocation => "Genomic Location",
            Category::FunctionalAnalysis => "Functional Analysis",
            Category::SequenceAlignment => "Sequence Alignment",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

/// One of the nine in-scope GeneTuring tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TaskKind {
    GeneAlias,
    NameConversion,
    SnpAssociation,
    GeneLocation,
    SnpLocation,
    DiseaseAssociation,
    ProteinCodingGenes,
    DnaToHuman,
    DnaToSpecies,
}

impl TaskKind {
    pub const ALL: [TaskKind; 9] = [
        TaskKind::GeneAlias,
        TaskKind::NameConversion,
        TaskKind::SnpAssociation,
        TaskKind::GeneLocation,
        TaskKind::SnpLocation,
        TaskKind::DiseaseAssociation,
        TaskKind::ProteinCodingGenes,
        TaskKind::DnaToHuman,
        TaskKind::DnaToSpecies,
    ];

    pub fn category(self) -> Category {
        use TaskKind::*;
        match self {
            GeneAlias | NameConversion => Category::Nomenclature,
            SnpAssociation | GeneLocation | SnpLocation => Category::GenomicLocation,
            DiseaseAssociation | ProteinCodingGenes => Category::FunctionalAnalysis,
            DnaToHuman | DnaToSpecies => Category::SequenceAlignment,
        }
    }

    /// Stable snake_case identifier, used for file names and config keys.
    pub fn slug(self) -> &'static str {
        use TaskKind::*;
        match self {
            GeneAlias => "gene_alias",
            NameConversion => "name_conversion",
            SnpAssociation => "snp_association",
            GeneLocation => "gene_location",
            SnpLocation => "snp_location",
            DiseaseAssociation => "disease_association",
            ProteinCodingGenes => "protein_coding_genes",
            DnaToHuman => "dna_to_human",
            DnaToSpecies => "dna_to_species",
        }
    }

    /// Short column header used in report tables.
    pub fn short_name(self) -> &'static str {
        use TaskKind::*;
        match self {
            GeneAlias => "Gene Alias",
            NameConversion => "Name Conv.",
            SnpAssociation => "SNP Assoc.",
            GeneLocation => "Gene Loc.",
            SnpLocation => "SNP Loc.",
            DiseaseAssociation => "Disease Assoc.",
            ProteinCodingGenes => "Protein Genes",
            DnaToHuman => "DNA to Human",
            DnaToSpecies => "DNA to Species",
        }
    }

    /// Entity names the task router extracts for this task; workflow
    /// templates may only reference these.
    pub fn entity_keys(self) -> &'static [&'static str] {
        use TaskKind::*;
        match self {
            GeneAlias | NameConversion | GeneLocation | ProteinCodingGenes => &["gene"],
            SnpAssociation | SnpLocation => &["rsid", "rsid_num"],
            DiseaseAssociation => &["disease"],
            DnaToHuman | DnaToSpecies => &["sequence"],
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown task kind: {0:?}")]
pub struct UnknownTask(pub String);

impl FromStr for TaskKind {
    type Err = UnknownTask;

    /// Accepts the variant name, the slug, or either with arbitrary case and
    /// space/hyphen separators.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .trim()
            .chars()
            .filter(|c| !matches!(c, '_' | '-' | ' '))
            .flat_map(char::to_lowercase)
            .collect();
        TaskKind::ALL
            .into_iter()
            .find(|t| {
                let name = format!("{t:?}").to_lowercase();
                let slug: String = t.slug().chars().filter(|c| *c != '_').collect();
                key == name || key == slug
            })
            .ok_or_else(|| UnknownTask(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn nine_tasks_in_four_categories() {
        assert_eq!(TaskKind::ALL.len(), 9);
        let cats: BTreeSet<_> = TaskKind::ALL.iter().map(|t| t.category()).collect();
        assert_eq!(cats.len(), 4);
        let sizes: Vec<usize> = Category::ALL.iter().map(|c| c.tasks().count()).collect();
        assert_eq!(sizes, vec![2, 3, 2, 2]);
    }

    #[test]
    fn parse_from_slug_and_name() {
        for t in TaskKind::ALL {
            assert_eq!(t.slug().parse::<TaskKind>().unwrap(), t);
            assert_eq!(format!("{t}").parse::<TaskKind>().unwrap(), t);
        }
        assert_eq!("dna-to-human".parse::<TaskKind>().unwrap(), TaskKind::DnaToHuman);
        assert!("gene_expression".parse::<TaskKind>().is_err());
    }
}
