//! Typed clients for the four biomedical sources the engine consults.
//!
//! All traffic goes through an [`HttpTransport`]. Wrapping the live
//! transport in a [`FixtureStore`] lets every client run against recorded
//! responses with no network at all.

pub mod blast;
mod error;
pub mod eutils;
pub mod fixtures;
pub mod hgnc;
pub mod manifest;
pub mod transport;
pub mod ucsc;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use blast::{AlignmentHit, BlastClient, BlastJob, BlastProgram, BlastReport, BlastStatus};
pub use error::DbError;
pub use eutils::{EutilsClient, EutilsDb};
pub use fixtures::{FixtureMode, FixtureRecord, FixtureStore};
pub use genomagent_core::{ApiRequest, ApiResponse, SourceId};
pub use hgnc::{HgncClient, HgncField, HgncRecord};
pub use manifest::{import_manifest, ManifestEntry};
pub use transport::{ApiExchange, DenyingTransport, HttpTransport, LiveTransport, StubTransport, TransportError};
pub use ucsc::{BlatHit, UcscClient};

/// Base URLs for each source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Endpoints {
    pub eutils: String,
    pub blast: String,
    pub hgnc: String,
    pub ucsc_blat: String,
}

impl Default for Endpoints {
    fn default() -> Self {
        Self {
            eutils: "https://eutils.ncbi.nlm.nih.gov/entrez/eutils/".into(),
            blast: "https://blast.ncbi.nlm.nih.gov/Blast.cgi".into(),
            hgnc: "https://rest.genenames.org/".into(),
            ucsc_blat: "https://genome.ucsc.edu/cgi-bin/hgBlat".into(),
        }
    }
}

/// The four clients, sharing one transport.
#[derive(Clone)]
pub struct DbClients {
    pub eutils: EutilsClient,
    pub blast: BlastClient,
    pub hgnc: HgncClient,
    pub ucsc: UcscClient,
}

impl DbClients {
    pub fn new(transport: Arc<dyn HttpTransport>, endpoints: &Endpoints) -> Self {
        Self {
            eutils: EutilsClient::new(transport.clone(), &endpoints.eutils),
            blast: BlastClient::new(transport.clone(), &endpoints.blast),
            hgnc: HgncClient::new(transport.clone(), &endpoints.hgnc),
            ucsc: UcscClient::new(transport, &endpoints.ucsc_blat),
        }
    }
}

/// `[ACGTN]+`, case-insensitive, at least `min_len` bases.
pub(crate) fn check_dna(sequence: &str, min_len: usize) -> Result<String, DbError> {
    let seq = sequence.trim();
    if seq.is_empty() || !seq.chars().all(|c| matches!(c.to_ascii_uppercase(), 'A' | 'C' | 'G' | 'T' | 'N')) {
        return Err(DbError::Precondition(format!("not a DNA sequence: {seq:?}")));
    }
    if seq.len() < min_len {
        return Err(DbError::Precondition(format!(
            "sequence has {} bases; at least {min_len} required",
            seq.len()
        )));
    }
    Ok(seq.to_ascii_uppercase())
}
