//! Extraction programs: a small, closed instruction language for pulling
//! fields out of HTML or JSON bodies.
//!
//! Text form is a comma-separated list of instructions, e.g.
//! `SelectCss("td.chr"), First, Text`. Strings are double-quoted with `\"`
//! and `\\` escapes; integers are plain decimal.

use std::fmt;
use std::sync::LazyLock;

use regex::{Regex, RegexBuilder};
use scraper::{ElementRef, Html, Selector};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::OrchError;

pub const MAX_INSTRUCTIONS: usize = 32;
const REGEX_SIZE_LIMIT: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Instruction {
    SelectCss(String),
    SelectPath(String),
    Nth(usize),
    Text,
    Attr(String),
    RegexCapture(String, usize),
    First,
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::SelectCss(s) => write!(f, "SelectCss({})", quote(s)),
            Instruction::SelectPath(s) => write!(f, "SelectPath({})", quote(s)),
            Instruction::Nth(n) => write!(f, "Nth({n})"),
            Instruction::Text => f.write_str("Text"),
            Instruction::Attr(s) => write!(f, "Attr({})", quote(s)),
            Instruction::RegexCapture(p, g) => write!(f, "RegexCapture({}, {g})", quote(p)),
            Instruction::First => f.write_str("First"),
        }
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExtractionProgram {
    pub instructions: Vec<Instruction>,
    pub target_description: String,
}

impl fmt::Display for ExtractionProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, ins) in self.instructions.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{ins}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Arg {
    Str(String),
    Int(usize),
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while self.chars.peek().is_some_and(|(_, c)| c.is_whitespace()) {
            self.chars.next();
        }
    }

    fn eat(&mut self, want: char) -> bool {
        self.skip_ws();
        if self.chars.peek().is_some_and(|(_, c)| *c == want) {
            self.chars.next();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Option<String> {
        self.skip_ws();
        let mut out = String::new();
        while let Some(&(_, c)) = self.chars.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                out.push(c);
                self.chars.next();
            } else {
                break;
            }
        }
        (!out.is_empty()).then_some(out)
    }

    fn arg(&mut self) -> Result<Arg, String> {
        self.skip_ws();
        match self.chars.peek().copied() {
            Some((_, '"')) => {
                self.chars.next();
                let mut out = String::new();
                loop {
                    match self.chars.next() {
                        Some((_, '\\')) => match self.chars.next() {
                            Some((_, c)) => out.push(c),
                            None => return Err("unterminated escape".into()),
                        },
                        Some((_, '"')) => return Ok(Arg::Str(out)),
                        Some((_, c)) => out.push(c),
                        None => return Err("unterminated string".into()),
                    }
                }
            }
            Some((_, c)) if c.is_ascii_digit() => {
                let mut digits = String::new();
                while let Some(&(_, d)) = self.chars.peek() {
                    if d.is_ascii_digit() {
                        digits.push(d);
                        self.chars.next();
                    } else {
                        break;
                    }
                }
                digits.parse().map(Arg::Int).map_err(|_| format!("integer {digits} out of range"))
            }
            Some((i, c)) => Err(format!("unexpected {c:?} at offset {i}")),
            None => Err("unexpected end of input".into()),
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.chars.peek().is_none()
    }
}

/// Drops a surrounding Markdown code fence, which models often add.
fn strip_fence(text: &str) -> &str {
    let t = text.trim();
    let Some(rest) = t.strip_prefix("```") else { return t };
    let rest = rest.split_once('\n').map(|(_, body)| body).unwrap_or("");
    rest.trim_end().strip_suffix("```").unwrap_or(rest).trim()
}

impl ExtractionProgram {
    /// Parses and validates program text.
    pub fn parse(text: &str, target_description: &str) -> Result<Self, OrchError> {
        let invalid = |m: String| OrchError::ProgramInvalid(m);
        let mut lx = Lexer { chars: strip_fence(text).char_indices().peekable() };
        let mut instructions = Vec::new();
        loop {
            let name = lx.ident().ok_or_else(|| invalid("expected an instruction name".into()))?;
            let mut args = Vec::new();
            if lx.eat('(') {
                if !lx.eat(')') {
                    loop {
                        args.push(lx.arg().map_err(invalid)?);
                        if lx.eat(')') {
                            break;
                        }
                        if !lx.eat(',') {
                            return Err(invalid(format!("expected ',' or ')' in arguments of {name}")));
                        }
                    }
                }
            }
            let ins = match (name.as_str(), args.as_slice()) {
                ("SelectCss", [Arg::Str(s)]) => Instruction::SelectCss(s.clone()),
                ("SelectPath", [Arg::Str(s)]) => Instruction::SelectPath(s.clone()),
                ("Nth", [Arg::Int(n)]) => Instruction::Nth(*n),
                ("Text", []) => Instruction::Text,
                ("Attr", [Arg::Str(s)]) => Instruction::Attr(s.clone()),
                ("RegexCapture", [Arg::Str(p), Arg::Int(g)]) => Instruction::RegexCapture(p.clone(), *g),
                ("First", []) => Instruction::First,
                _ => return Err(invalid(format!("unknown instruction or bad arguments: {name}"))),
            };
            instructions.push(ins);
            if lx.at_end() {
                break;
            }
            if !lx.eat(',') {
                return Err(invalid(format!("expected ',' after instruction {}", instructions.len())));
            }
        }
        let program = Self { instructions, target_description: target_description.to_string() };
        program.validate()?;
        Ok(program)
    }

    pub fn validate(&self) -> Result<(), OrchError> {
        let invalid = |m: String| OrchError::ProgramInvalid(m);
        if self.instructions.is_empty() {
            return Err(invalid("empty program".into()));
        }
        if self.instructions.len() > MAX_INSTRUCTIONS {
            return Err(invalid(format!("{} instructions; at most {MAX_INSTRUCTIONS} allowed", self.instructions.len())));
        }
        for ins in &self.instructions {
            match ins {
                Instruction::SelectCss(s) => {
                    Selector::parse(s).map_err(|e| invalid(format!("bad CSS selector {s:?}: {e}")))?;
                }
                Instruction::SelectPath(p) => {
                    parse_path(p).map_err(invalid)?;
                }
                Instruction::RegexCapture(p, g) => {
                    let re = compile(p).map_err(invalid)?;
                    if *g >= re.captures_len() {
                        return Err(invalid(format!("group {g} out of range for {p:?}")));
                    }
                }
                Instruction::Attr(a) if a.is_empty() => return Err(invalid("empty attribute name".into())),
                _ => {}
            }
        }
        Ok(())
    }
}

fn compile(pattern: &str) -> Result<Regex, String> {
    RegexBuilder::new(pattern)
        .size_limit(REGEX_SIZE_LIMIT)
        .build()
        .map_err(|e| format!("bad regex {pattern:?}: {e}"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Key(String),
    Index(usize),
    Wildcard,
}

static KEY_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[A-Za-z_][A-Za-z0-9_\-]*").unwrap());

/// `$`, then any of `.key`, `.*`, `['key']`, `[n]`, `[*]`.
fn parse_path(path: &str) -> Result<Vec<Segment>, String> {
    let mut rest = path.trim().strip_prefix('$').ok_or_else(|| format!("path {path:?} must start with $"))?;
    let mut segments = Vec::new();
    while !rest.is_empty() {
        if let Some(r) = rest.strip_prefix(".*") {
            segments.push(Segment::Wildcard);
            rest = r;
        } else if let Some(r) = rest.strip_prefix('.') {
            let m = KEY_RE.find(r).ok_or_else(|| format!("bad key in path {path:?}"))?;
            segments.push(Segment::Key(m.as_str().to_string()));
            rest = &r[m.end()..];
        } else if let Some(r) = rest.strip_prefix("[*]") {
            segments.push(Segment::Wildcard);
            rest = r;
        } else if let Some(r) = rest.strip_prefix("['") {
            let end = r.find("']").ok_or_else(|| format!("unterminated key in path {path:?}"))?;
            segments.push(Segment::Key(r[..end].to_string()));
            rest = &r[end + 2..];
        } else if let Some(r) = rest.strip_prefix('[') {
            let end = r.find(']').ok_or_else(|| format!("unterminated index in path {path:?}"))?;
            let n = r[..end].trim().parse().map_err(|_| format!("bad index in path {path:?}"))?;
            segments.push(Segment::Index(n));
            rest = &r[end + 1..];
        } else {
            return Err(format!("unexpected text {rest:?} in path {path:?}"));
        }
    }
    Ok(segments)
}

fn walk<'v>(roots: Vec<&'v Value>, segments: &[Segment]) -> Vec<&'v Value> {
    let mut current = roots;
    for seg in segments {
        let mut next = Vec::new();
        for v in current {
            match (seg, v) {
                (Segment::Key(k), Value::Object(map)) => next.extend(map.get(k)),
                (Segment::Index(i), Value::Array(items)) => next.extend(items.get(*i)),
                (Segment::Wildcard, Value::Array(items)) => next.extend(items.iter()),
                (Segment::Wildcard, Value::Object(map)) => next.extend(map.values()),
                _ => {}
            }
        }
        current = next;
    }
    current
}

enum Item<'a> {
    Element(ElementRef<'a>),
    Json(&'a Value),
    Text(String),
}

impl Item<'_> {
    fn into_text(self) -> Option<String> {
        match self {
            Item::Element(e) => Some(e.text().collect::<Vec<_>>().join(" ").split_whitespace().collect::<Vec<_>>().join(" ")),
            Item::Json(Value::Null) => None,
            Item::Json(Value::String(s)) => Some(s.clone()),
            Item::Json(other) => Some(other.to_string()),
            Item::Text(s) => Some(s),
        }
    }
}

/// Runs `program` over `body`. The body is treated as JSON when it parses
/// as JSON and as HTML otherwise. Pure: no I/O and no shared state.
pub fn execute_extractor(program: &ExtractionProgram, body: &str) -> Result<Vec<String>, OrchError> {
    program.validate()?;
    let json: Option<Value> = match body.trim_start().chars().next() {
        Some('{') | Some('[') => serde_json::from_str(body).ok(),
        _ => None,
    };
    let html = if json.is_none() { Some(Html::parse_document(body)) } else { None };
    let mut items: Vec<Item<'_>> = match (&json, &html) {
        (Some(v), _) => vec![Item::Json(v)],
        (None, Some(doc)) => vec![Item::Element(doc.root_element())],
        (None, None) => unreachable!("one of json or html is set"),
    };
    let fail = |step: usize, ins: &Instruction| {
        OrchError::ExtractionFailed(format!("step {} ({ins}) matched nothing", step + 1))
    };
    for (step, ins) in program.instructions.iter().enumerate() {
        items = match ins {
            Instruction::SelectCss(sel) => {
                let selector = Selector::parse(sel).map_err(|e| OrchError::ProgramInvalid(e.to_string()))?;
                let mut out = Vec::new();
                for item in items {
                    if let Item::Element(e) = item {
                        out.extend(e.select(&selector).map(Item::Element));
                    }
                }
                out
            }
            Instruction::SelectPath(path) => {
                let segments = parse_path(path).map_err(OrchError::ProgramInvalid)?;
                let roots: Vec<&Value> = items
                    .into_iter()
                    .filter_map(|i| if let Item::Json(v) = i { Some(v) } else { None })
                    .collect();
                walk(roots, &segments).into_iter().map(Item::Json).collect()
            }
            Instruction::Nth(n) => items.into_iter().nth(*n).into_iter().collect(),
            Instruction::First => items.into_iter().take(1).collect(),
            Instruction::Text => items.into_iter().filter_map(Item::into_text).map(Item::Text).collect(),
            Instruction::Attr(name) => items
                .into_iter()
                .filter_map(|i| match i {
                    Item::Element(e) => e.value().attr(name).map(|v| Item::Text(v.to_string())),
                    Item::Json(Value::Object(map)) => map.get(name).map(Item::Json),
                    _ => None,
                })
                .collect(),
            Instruction::RegexCapture(pattern, group) => {
                let re = compile(pattern).map_err(OrchError::ProgramInvalid)?;
                items
                    .into_iter()
                    .filter_map(Item::into_text)
                    .filter_map(|t| re.captures(&t).and_then(|c| c.get(*group)).map(|m| Item::Text(m.as_str().to_string())))
                    .collect()
            }
        };
        if items.is_empty() {
            return Err(fail(step, ins));
        }
    }
    let out: Vec<String> = items
        .into_iter()
        .filter_map(Item::into_text)
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if out.is_empty() {
        return Err(OrchError::ExtractionFailed("program produced only empty values".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn prog(text: &str) -> ExtractionProgram {
        ExtractionProgram::parse(text, "t").unwrap()
    }

    #[test]
    fn parses_three_instruction_program() {
        let p = prog(r#"SelectCss("td.chr"), First, Text"#);
        assert_eq!(
            p.instructions,
            vec![Instruction::SelectCss("td.chr".into()), Instruction::First, Instruction::Text]
        );
        assert_eq!(p.to_string(), r#"SelectCss("td.chr"), First, Text"#);
    }

    #[test]
    fn fenced_and_escaped_input() {
        let p = prog("```\nRegexCapture(\"a\\\\d+,\\\"x\\\"\", 0)\n```");
        assert_eq!(p.instructions, vec![Instruction::RegexCapture("a\\d+,\"x\"".into(), 0)]);
    }

    #[test]
    fn rejects_prose_and_bad_arguments() {
        for bad in [
            "Sure! Here is the program you asked for.",
            "SelectCss(td)",
            "Nth(\"1\")",
            "RegexCapture(\"(a)\", 2)",
            "SelectPath(\"result.chr\")",
            "SelectCss(\"[[\")",
            "Text Text",
            "",
            "Eval(\"rm -rf /\")",
        ] {
            assert!(matches!(ExtractionProgram::parse(bad, "t"), Err(OrchError::ProgramInvalid(_))), "{bad:?}");
        }
        let long = vec!["First"; MAX_INSTRUCTIONS + 1].join(", ");
        assert!(ExtractionProgram::parse(&long, "t").is_err());
        let max = vec!["First"; MAX_INSTRUCTIONS].join(", ");
        assert!(ExtractionProgram::parse(&max, "t").is_ok());
    }

    #[test]
    fn css_first_text() {
        let out = execute_extractor(&prog(r#"SelectCss("p"), First, Text"#), "<p>chr8</p><p>chr9</p>").unwrap();
        assert_eq!(out, vec!["chr8"]);
    }

    #[test]
    fn json_paths() {
        let body = r#"{"result":{"chr":"chrX","uids":["1","2"],"1":{"name":"A"},"2":{"name":"B"},"odd key":[{"n":1},{"n":2}]}}"#;
        assert_eq!(execute_extractor(&prog(r#"SelectPath("$.result.chr")"#), body).unwrap(), vec!["chrX"]);
        assert_eq!(execute_extractor(&prog(r#"SelectPath("$.result.*.name")"#), body).unwrap(), vec!["A", "B"]);
        assert_eq!(execute_extractor(&prog(r#"SelectPath("$.result['odd key'][*].n")"#), body).unwrap(), vec!["1", "2"]);
        assert_eq!(execute_extractor(&prog(r#"SelectPath("$.result.uids[1]")"#), body).unwrap(), vec!["2"]);
        assert_eq!(execute_extractor(&prog(r#"SelectPath("$.result.*.name"), Nth(1)"#), body).unwrap(), vec!["B"]);
    }

    #[test]
    fn attr_and_regex() {
        let body = r#"<pre><a href="../cgi-bin/hgTracks?position=chr8:7081648-7081782&db=hg38">browser</a></pre>"#;
        let p = prog(r#"SelectCss("pre a"), First, Attr("href"), RegexCapture("position=(chr[0-9A-Za-z_]+:[0-9]+-[0-9]+)", 1)"#);
        assert_eq!(execute_extractor(&p, body).unwrap(), vec!["chr8:7081648-7081782"]);
    }

    #[test]
    fn absent_targets_fail() {
        for (p, body) in [
            (r#"SelectCss("table.missing")"#, "<p>x</p>"),
            (r#"SelectCss("table.missing")"#, r#"{"a":1}"#),
            (r#"SelectPath("$.nope")"#, r#"{"a":1}"#),
            (r#"SelectCss("p"), Nth(5)"#, "<p>x</p>"),
            (r#"SelectCss("p"), RegexCapture("chr\\d+", 0)"#, "<p>x</p>"),
        ] {
            assert!(matches!(execute_extractor(&prog(p), body), Err(OrchError::ExtractionFailed(_))), "{p}");
        }
    }

    fn instruction() -> impl Strategy<Value = Instruction> {
        let text = "[a-z\"\\\\,() .]{0,8}";
        prop_oneof![
            "[a-z]{1,6}(\\.[a-z]{1,4})?".prop_map(Instruction::SelectCss),
            "\\$(\\.[a-z]{1,4}|\\[[0-9]\\]|\\[\\*\\]){0,3}".prop_map(Instruction::SelectPath),
            (0usize..100).prop_map(Instruction::Nth),
            Just(Instruction::Text),
            Just(Instruction::First),
            "[a-z]{1,5}".prop_map(Instruction::Attr),
            text.prop_map(|t| Instruction::RegexCapture(regex::escape(&t), 0)),
        ]
    }

    proptest! {
        #[test]
        fn display_parse_round_trip(instructions in proptest::collection::vec(instruction(), 1..=MAX_INSTRUCTIONS)) {
            let p = ExtractionProgram { instructions, target_description: "t".into() };
            prop_assert_eq!(ExtractionProgram::parse(&p.to_string(), "t").unwrap(), p);
        }
    }
}
