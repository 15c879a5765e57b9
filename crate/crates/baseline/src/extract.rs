use std::sync::OnceLock;

use regex::Regex;
use url::Url;

pub const TRUNCATION_MARKER: &str = "…[truncated]";

fn bracket_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    PATTERN.get_or_init(|| Regex::new(r"\[([^\[\]]+)\]").expect("valid pattern"))
}

/// The URL in the last bracketed segment of `generated`, if that segment is
/// an absolute http(s) URL.
pub fn extract_api_call(generated: &str) -> Option<Url> {
    let inner = bracket_pattern().captures_iter(generated).last()?.get(1)?.as_str().trim();
    let url = Url::parse(inner).ok()?;
    let web = matches!(url.scheme(), "http" | "https") && url.host_str().is_some_and(|h| !h.is_empty());
    web.then_some(url)
}

/// The answer in a final generation: the text after the last `Answer:`
/// label, or the last nonempty line when there is no label.
pub fn parse_final_answer(text: &str) -> String {
    let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    let labelled = lines.iter().rev().find_map(|line| {
        let head = line.get(..7)?;
        head.eq_ignore_ascii_case("answer:").then(|| line[7..].trim())
    });
    labelled.or_else(|| lines.last().copied()).unwrap_or("").to_string()
}

/// Cuts `api_result` to at most `limit` bytes on a character boundary and
/// appends [`TRUNCATION_MARKER`]. With no limit, or when the input already
/// fits, the input is returned unchanged.
pub fn truncate_context(api_result: &str, limit: Option<usize>) -> String {
    match limit {
        Some(limit) if api_result.len() > limit => {
            let mut cut = limit;
            while !api_result.is_char_boundary(cut) {
                cut -= 1;
            }
            format!("{}{TRUNCATION_MARKER}", &api_result[..cut])
        }
        _ => api_result.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn extracts_trailing_url() {
        let text = "Question: x\n[https://eutils.ncbi.nlm.nih.gov/entrez/eutils/esearch.fcgi?db=gene&term=LMP10]";
        assert_eq!(
            extract_api_call(text).unwrap().as_str(),
            "https://eutils.ncbi.nlm.nih.gov/entrez/eutils/esearch.fcgi?db=gene&term=LMP10"
        );
    }

    #[test]
    fn takes_the_last_segment() {
        let text = "[https://a.example/one]→[result]\n[https://a.example/two]";
        assert_eq!(extract_api_call(text).unwrap().as_str(), "https://a.example/two");
    }

    #[test]
    fn rejects_non_urls() {
        assert_eq!(extract_api_call("the answer is chr8"), None);
        assert_eq!(extract_api_call("see [not a url] please"), None);
        assert_eq!(extract_api_call("[ftp://host/file]"), None);
        assert_eq!(extract_api_call("[/relative/path]"), None);
        assert_eq!(extract_api_call("[https://a.example/x] then [oops]"), None);
    }

    #[test]
    fn spaces_in_queries_are_encoded() {
        let url = extract_api_call("[https://a.example/s?term=renal tubular acidosis]").unwrap();
        assert_eq!(url.query(), Some("term=renal%20tubular%20acidosis"));
    }

    #[test]
    fn final_answer_forms() {
        assert_eq!(parse_final_answer("Answer: chr8"), "chr8");
        assert_eq!(parse_final_answer("some reasoning\nanswer:  PSMB10 "), "PSMB10");
        assert_eq!(parse_final_answer("just chr13\n"), "just chr13");
        assert_eq!(parse_final_answer(""), "");
    }

    #[test]
    fn truncation_examples() {
        assert_eq!(truncate_context("abcdef", Some(3)), "abc…[truncated]");
        assert_eq!(truncate_context("abc", None), "abc");
        assert_eq!(truncate_context("", Some(10)), "");
        assert_eq!(truncate_context("abc", Some(3)), "abc");
        assert_eq!(truncate_context("aé", Some(2)), "a…[truncated]");
    }

    proptest! {
        #[test]
        fn extraction_is_pure(text in ".{0,200}") {
            prop_assert_eq!(extract_api_call(&text), extract_api_call(&text));
        }

        #[test]
        fn truncation_keeps_a_prefix(text in ".{0,64}", limit in 0usize..80) {
            let out = truncate_context(&text, Some(limit));
            let kept = out.strip_suffix(TRUNCATION_MARKER).unwrap_or(&out);
            prop_assert!(text.starts_with(kept));
            prop_assert!(kept.len() <= limit);
        }
    }
}
