use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

/// Matches `chr<label>:<start><sep><end>` with any of the accepted range
/// separators. Numbers may carry thousands separators.
pub(crate) static INTERVAL_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\bchr([0-9a-z_]+)\s*:\s*([0-9][0-9,]*)\s*(?:-|\.\.|\u{2013}|\u{2014})\s*([0-9][0-9,]*)")
        .expect("interval regex")
});

/// A chromosome range in inclusive, 1-based coordinates.
///
/// The chromosome label is stored canonically: a lowercase `chr` prefix
/// followed by the upper-cased suffix (`chr8`, `chrX`, `chrUN_KI270742V1`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct GenomicInterval {
    chromosome: String,
    start: u64,
    end: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseFailure {
    #[error("no chromosome-prefixed range found in {0:?}")]
    NoRange(String),
    #[error("range start {start} exceeds end {end}")]
    Inverted { start: u64, end: u64 },
    #[error("coordinate out of range in {0:?}")]
    Overflow(String),
    #[error("empty chromosome label")]
    EmptyChromosome,
}

impl GenomicInterval {
    /// Builds an interval, canonicalizing the chromosome label. Accepts the
    /// label with or without the `chr` prefix.
    pub fn new(chromosome: &str, start: u64, end: u64) -> Result<Self, ParseFailure> {
        let chromosome = canonical_chromosome(chromosome)?;
        if start > end {
            return Err(ParseFailure::Inverted { start, end });
        }
        Ok(Self { chromosome, start, end })
    }

    pub fn chromosome(&self) -> &str {
        &self.chromosome
    }

    pub fn start(&self) -> u64 {
        self.start
    }

    pub fn end(&self) -> u64 {
        self.end
    }

    /// Number of bases covered (inclusive on both ends).
    pub fn len(&self) -> u64 {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn same_chromosome(&self, other: &Self) -> bool {
        self.chromosome == other.chromosome
    }

    /// Inclusive overlap length; zero when disjoint or on different chromosomes.
    pub fn overlap(&self, other: &Self) -> u64 {
        if !self.same_chromosome(other) {
            return 0;
        }
        let lo = self.start.max(other.start);
        let hi = self.end.min(other.end);
        if lo > hi {
            0
        } else {
            hi - lo + 1
        }
    }

    /// Inclusive length of the union, counted as the combined span when the
    /// two ranges overlap and as the sum of lengths when they are disjoint.
    pub fn union_len(&self, other: &Self) -> u64 {
        let overlap = self.overlap(other);
        if overlap == 0 {
            self.len() + other.len()
        } else {
            self.end.max(other.end) - self.start.min(other.start) + 1
        }
    }
}

fn canonical_chromosome(label: &str) -> Result<String, ParseFailure> {
    let label = label.trim();
    let suffix = if label.len() >= 3 && label[..3].eq_ignore_ascii_case("chr") {
        &label[3..]
    } else {
        label
    };
    if suffix.is_empty() {
        return Err(ParseFailure::EmptyChromosome);
    }
    Ok(format!("chr{}", suffix.to_uppercase()))
}

fn parse_coordinate(raw: &str) -> Result<u64, ParseFailure> {
    let digits: String = raw.chars().filter(|c| *c != ',').collect();
    digits.parse().map_err(|_| ParseFailure::Overflow(raw.to_string()))
}

/// Finds the first `chrN:start-end` range in `text`.
pub fn parse_interval(text: &str) -> Result<GenomicInterval, ParseFailure> {
    let caps = INTERVAL_RE
        .captures(text)
        .ok_or_else(|| ParseFailure::NoRange(text.to_string()))?;
    let start = parse_coordinate(&caps[2])?;
    let end = parse_coordinate(&caps[3])?;
    GenomicInterval::new(&caps[1], start, end)
}

impl fmt::Display for GenomicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}-{}", self.chromosome, self.start, self.end)
    }
}

impl FromStr for GenomicInterval {
    type Err = ParseFailure;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_interval(s)
    }
}

impl TryFrom<String> for GenomicInterval {
    type Error = ParseFailure;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        parse_interval(&value)
    }
}

impl From<GenomicInterval> for String {
    fn from(value: GenomicInterval) -> Self {
        value.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_worked_examples() {
        let a = parse_interval("chr8:708-882").unwrap();
        assert_eq!((a.chromosome(), a.start(), a.end()), ("chr8", 708, 882));
        let b = parse_interval("chr8:120-121").unwrap();
        assert_eq!((b.chromosome(), b.start(), b.end()), ("chr8", 120, 121));
    }

    #[test]
    fn accepts_dash_variants() {
        for text in ["chr8:708\u{2013}882", "chr8:708\u{2014}882", "chr8:708..882", "CHR8 : 708 - 882"] {
            assert_eq!(parse_interval(text).unwrap().to_string(), "chr8:708-882", "{text}");
        }
        assert_eq!(parse_interval("chrx:1,000-2,000").unwrap().to_string(), "chrX:1000-2000");
    }

    #[test]
    fn rejects_non_ranges() {
        assert!(matches!(parse_interval("not a location"), Err(ParseFailure::NoRange(_))));
        assert!(matches!(parse_interval("chrX:10-5"), Err(ParseFailure::Inverted { .. })));
        assert!(matches!(
            parse_interval("chr1:99999999999999999999999-1"),
            Err(ParseFailure::Overflow(_))
        ));
    }

    #[test]
    fn overlap_and_union_are_inclusive() {
        let gold = parse_interval("chr8:708-882").unwrap();
        let pred = parse_interval("chr8:700-800").unwrap();
        assert_eq!(pred.overlap(&gold), 93);
        assert_eq!(pred.union_len(&gold), 183);
        let far = parse_interval("chr8:120-121").unwrap();
        assert_eq!(far.overlap(&gold), 0);
        let other = parse_interval("chr7:708-882").unwrap();
        assert_eq!(other.overlap(&gold), 0);
    }

    proptest! {
        #[test]
        fn parse_inverts_display(
            chrom in prop_oneof![
                (1u32..=22).prop_map(|n| n.to_string()),
                Just("X".to_string()), Just("Y".to_string()), Just("M".to_string()),
            ],
            start in 0u64..1_000_000_000,
            len in 0u64..1_000_000,
        ) {
            let iv = GenomicInterval::new(&chrom, start, start + len).unwrap();
            prop_assert_eq!(parse_interval(&iv.to_string()).unwrap(), iv);
        }
    }
}
