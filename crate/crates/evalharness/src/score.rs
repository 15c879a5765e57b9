//! Exact scores and the per-task scoring rules.

use std::collections::BTreeSet;
use std::fmt;

use genomagent_core::question::split_symbols;
use genomagent_core::{normalize_answer, parse_interval, GenomicInterval, GoldAnswer, Prediction, TaskKind};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::EvalError;
use crate::vocab::SpeciesVocabulary;

/// A score in [0, 1], kept as an exact rational so means never drift.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Score(BigRational);

impl Score {
    pub fn zero() -> Self {
        Score(BigRational::zero())
    }

    pub fn one() -> Self {
        Score(BigRational::one())
    }

    pub fn half() -> Self {
        Score::ratio(1, 2)
    }

    /// `num / den`. Panics when `den` is zero or the ratio exceeds 1.
    pub fn ratio(num: u64, den: u64) -> Self {
        Score::new(BigRational::new(BigInt::from(num), BigInt::from(den))).expect("ratio within [0, 1]")
    }

    pub fn new(value: BigRational) -> Result<Self, EvalError> {
        if value.is_negative() || value > BigRational::one() {
            return Err(EvalError::OutOfRange(value.to_string()));
        }
        Ok(Score(value))
    }

    /// Parses decimal text such as `0.98`.
    pub fn parse_decimal(text: &str) -> Result<Self, EvalError> {
        let bad = || EvalError::Decimal(text.to_string());
        let t = text.trim();
        let (whole, frac) = t.split_once('.').unwrap_or((t, ""));
        if whole.is_empty() && frac.is_empty() {
            return Err(bad());
        }
        if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let digits: BigInt = format!("{whole}{frac}").parse().map_err(|_| bad())?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        Score::new(BigRational::new(digits, scale))
    }

    pub fn value(&self) -> &BigRational {
        &self.0
    }

    pub fn to_f64(&self) -> f64 {
        let num = self.0.numer().to_f64().unwrap_or(f64::NAN);
        let den = self.0.denom().to_f64().unwrap_or(f64::NAN);
        num / den
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    /// Fixed-point text with `places` decimals, rounding half away from zero.
    pub fn display(&self, places: u32) -> String {
        let unit = num_traits::pow(BigInt::from(10), places as usize);
        let scaled = &self.0 * BigRational::from_integer(unit.clone());
        let rounded = (scaled + BigRational::new(BigInt::one(), BigInt::from(2))).floor().to_integer();
        let whole = &rounded / &unit;
        let frac = &rounded % &unit;
        if places == 0 {
            whole.to_string()
        } else {
            format!("{whole}.{:0>width$}", frac.to_string(), width = places as usize)
        }
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display(2))
    }
}

impl Serialize for Score {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.to_f64())
    }
}

/// Arithmetic mean at full precision.
pub fn macro_average(values: &[Score]) -> Result<Score, EvalError> {
    if values.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let sum: BigRational = values.iter().map(|s| s.0.clone()).sum();
    Score::new(sum / BigRational::from_integer(BigInt::from(values.len())))
}

/// The part of a normalized answer after its last `answer:` label.
fn answer_field(normalized: &str) -> &str {
    match normalized.rfind("answer:") {
        Some(at) => normalized[at + "answer:".len()..].trim(),
        None => normalized,
    }
}

/// Partial credit for an alignment: 0 across chromosomes, 0.5 for the right
/// chromosome, plus half the Jaccard index of the two inclusive ranges.
pub fn interval_score(pred: &GenomicInterval, gold: &GenomicInterval) -> Score {
    if !pred.same_chromosome(gold) {
        return Score::zero();
    }
    let overlap = pred.overlap(gold);
    let union = pred.union_len(gold);
    let jaccard = BigRational::new(BigInt::from(overlap), BigInt::from(union));
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    Score(&half + &half * jaccard)
}

/// Fraction of the gold genes named in `predicted`, compared
/// case-insensitively.
pub fn recall(predicted: &str, gold: &BTreeSet<String>) -> Score {
    let task = TaskKind::DiseaseAssociation;
    let gold: BTreeSet<String> = gold.iter().map(|g| normalize_answer(g, task)).collect();
    let normalized = normalize_answer(predicted, task);
    let predicted: BTreeSet<String> =
        split_symbols(answer_field(&normalized)).into_iter().map(|s| normalize_answer(&s, task)).collect();
    let hits = gold.intersection(&predicted).count();
    Score::ratio(hits as u64, gold.len().max(1) as u64)
}

/// Scores a prediction against the gold answer for `task`.
pub fn score(
    task: TaskKind,
    prediction: &Prediction,
    gold: &GoldAnswer,
    vocabulary: &SpeciesVocabulary,
) -> Result<Score, EvalError> {
    if !gold.matches_task(task) {
        return Err(EvalError::VariantMismatch(task));
    }
    let normalized = normalize_answer(&prediction.raw, task);
    Ok(match gold {
        GoldAnswer::ExactText(text) => {
            let gold = normalize_answer(text, task);
            if normalized == gold || answer_field(&normalized) == gold {
                Score::one()
            } else {
                Score::zero()
            }
        }
        GoldAnswer::GeneSet(set) => recall(&prediction.raw, set),
        GoldAnswer::Species(name) => {
            let gold = vocabulary.common_name(name);
            let whole = vocabulary.common_name(&normalized);
            let field = vocabulary.common_name(answer_field(&normalized));
            if whole == gold || field == gold {
                Score::one()
            } else {
                Score::zero()
            }
        }
        GoldAnswer::Interval(gold) => match parse_interval(answer_field(&normalized)) {
            Ok(pred) => interval_score(&pred, gold),
            Err(_) => Score::zero(),
        },
    })
}
