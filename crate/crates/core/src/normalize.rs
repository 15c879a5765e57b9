use std::borrow::Cow;

use crate::interval::INTERVAL_RE;
use crate::task::TaskKind;

const TERMINAL_PUNCTUATION: &[char] = &['.', ',', ';', ':', '!', '?'];

fn fold_dashes(s: &str) -> Cow<'_, str> {
    if s.contains(['\u{2010}', '\u{2011}', '\u{2012}', '\u{2013}', '\u{2014}', '\u{2212}']) {
        Cow::Owned(
            s.chars()
                .map(|c| match c {
                    '\u{2010}' | '\u{2011}' | '\u{2012}' | '\u{2013}' | '\u{2014}' | '\u{2212}' => '-',
                    other => other,
                })
                .collect(),
        )
    } else {
        Cow::Borrowed(s)
    }
}

fn canonicalize_intervals(s: &str) -> String {
    INTERVAL_RE
        .replace_all(s, |caps: &regex::Captures<'_>| {
            let digits = |m: &str| m.chars().filter(|c| *c != ',').collect::<String>();
            let trim_zeros = |d: String| {
                let t = d.trim_start_matches('0');
                if t.is_empty() { "0".to_string() } else { t.to_string() }
            };
            format!(
                "chr{}:{}-{}",
                caps[1].to_lowercase(),
                trim_zeros(digits(&caps[2])),
                trim_zeros(digits(&caps[3]))
            )
        })
        .into_owned()
}

fn single_pass(raw: &str, task: TaskKind) -> String {
    let lowered = fold_dashes(raw).to_lowercase();
    let lowered = if task == TaskKind::DnaToSpecies {
        lowered.replace('_', " ")
    } else {
        lowered
    };
    let collapsed = lowered.split_whitespace().collect::<Vec<_>>().join(" ");
    let canonical = canonicalize_intervals(&collapsed);
    canonical
        .trim_end_matches(|c: char| TERMINAL_PUNCTUATION.contains(&c) || c.is_whitespace())
        .trim()
        .to_string()
}

/// Canonical comparison form of an answer string.
///
/// Lowercases, folds Unicode dashes to `-`, collapses whitespace, rewrites
/// any `chrN:start<sep>end` range to `chrN:start-end` and strips trailing
/// punctuation. The passes are repeated to a fixpoint so the function is
/// idempotent.
pub fn normalize_answer(raw: &str, task: TaskKind) -> String {
    let mut current = single_pass(raw, task);
    for _ in 0..8 {
        let next = single_pass(&current, task);
        if next == current {
            break;
        }
        current = next;
    }
    current
}
