use std::collections::BTreeSet;

use genomagent_core::{GoldAnswer, Prediction, TaskKind};
use genomagent_eval::{macro_average, score, Score, SpeciesVocabulary};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

fn golds() -> Vec<(TaskKind, GoldAnswer)> {
    vec![
        (TaskKind::GeneAlias, GoldAnswer::parse(TaskKind::GeneAlias, "PSMB10").unwrap()),
        (TaskKind::GeneLocation, GoldAnswer::parse(TaskKind::GeneLocation, "chr8").unwrap()),
        (TaskKind::DiseaseAssociation, GoldAnswer::parse(TaskKind::DiseaseAssociation, "SLC4A1, ATP6V0A4").unwrap()),
        (TaskKind::DnaToHuman, GoldAnswer::parse(TaskKind::DnaToHuman, "chr15:91950805-91950932").unwrap()),
        (TaskKind::DnaToSpecies, GoldAnswer::parse(TaskKind::DnaToSpecies, "zebrafish").unwrap()),
    ]
}

proptest! {
    #[test]
    fn every_score_is_a_probability(raw in "(Answer: )?[A-Za-z0-9:,\\- ]{0,40}") {
        let vocab = SpeciesVocabulary::seeded();
        for (task, gold) in golds() {
            let s = score(task, &Prediction::new(raw.as_str(), task, "t"), &gold, &vocab).unwrap();
            prop_assert!(s >= Score::zero() && s <= Score::one());
        }
    }

    #[test]
    fn exact_match_is_symmetric(a in "[A-Za-z0-9]{1,8}", b in "[A-Za-z0-9]{1,8}") {
        let vocab = SpeciesVocabulary::seeded();
        let task = TaskKind::GeneAlias;
        let ab = score(task, &Prediction::new(a.as_str(), task, "t"), &GoldAnswer::ExactText(b.clone()), &vocab).unwrap();
        let ba = score(task, &Prediction::new(b.as_str(), task, "t"), &GoldAnswer::ExactText(a.clone()), &vocab).unwrap();
        prop_assert_eq!(&ab, &ba);
        prop_assert_eq!(ab.is_one(), a.eq_ignore_ascii_case(&b));
    }

    #[test]
    fn macro_average_ignores_order(parts in prop::collection::vec((0u64..=50, 1u64..=50), 1..12), seed in any::<u64>()) {
        let scores: Vec<Score> = parts.iter().map(|&(n, d)| Score::ratio(n.min(d), d)).collect();
        let mut shuffled = scores.clone();
        let len = shuffled.len();
        shuffled.rotate_left((seed % len as u64) as usize);
        shuffled.reverse();
        let avg = macro_average(&scores).unwrap();
        prop_assert_eq!(&avg, &macro_average(&shuffled).unwrap());
        let sum: BigRational = parts
            .iter()
            .map(|&(n, d)| BigRational::new(BigInt::from(n.min(d)), BigInt::from(d)))
            .sum();
        prop_assert_eq!(avg.value(), &(sum / BigRational::from_integer(BigInt::from(len))));
    }

    #[test]
    fn recall_counts_each_gold_gene_once(repeat in 1usize..4) {
        let gold: BTreeSet<String> = ["SLC4A1", "ATP6V0A4"].iter().map(|s| s.to_string()).collect();
        let answer = vec!["slc4a1"; repeat].join(", ");
        let s = genomagent_eval::recall(&answer, &gold);
        prop_assert_eq!(s, Score::half());
    }
}
