//! Compact outlines of large JSON documents, small enough to put in a
//! prompt in place of the document itself.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const MAX_DEPTH: usize = 5;
const EXAMPLE_CHARS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaEntry {
    pub path: String,
    pub kind: String,
    pub example: Option<String>,
    pub array_len: Option<usize>,
    /// Set when the value has children below the depth limit that are not listed.
    pub truncated: bool,
}

impl fmt::Display for SchemaEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.path)?;
        match self.array_len {
            Some(n) => write!(f, "array[{n}] of {}", self.kind)?,
            None => f.write_str(&self.kind)?,
        }
        if let Some(ex) = &self.example {
            write!(f, " e.g. {ex}")?;
        }
        if self.truncated {
            f.write_str(" (deeper levels omitted)")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SchemaSummary {
    pub entries: Vec<SchemaEntry>,
    /// Paths dropped to respect the size limit.
    pub omitted: usize,
}

impl SchemaSummary {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The prompt form; its length is what the size limit applies to.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&e.to_string());
            out.push('\n');
        }
        if self.omitted > 0 {
            out.push_str(&omitted_line(self.omitted));
        }
        out
    }
}

fn omitted_line(n: usize) -> String {
    format!("... {n} more paths\n")
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

fn example(v: &Value) -> Option<String> {
    let text = match v {
        Value::String(s) => s.clone(),
        Value::Number(_) | Value::Bool(_) => v.to_string(),
        _ => return None,
    };
    Some(if text.chars().count() > EXAMPLE_CHARS {
        let cut: String = text.chars().take(EXAMPLE_CHARS - 3).collect();
        format!("{cut}...")
    } else {
        text
    })
}

fn child_path(parent: &str, key: &str) -> String {
    let plain = key.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
    if plain {
        format!("{parent}.{key}")
    } else {
        format!("{parent}['{key}']")
    }
}

fn has_children(v: &Value) -> bool {
    match v {
        Value::Object(m) => !m.is_empty(),
        Value::Array(a) => a.first().is_some_and(|f| matches!(f, Value::Object(_) | Value::Array(_))),
        _ => false,
    }
}

fn visit(v: &Value, path: &str, depth: usize, out: &mut Vec<SchemaEntry>) {
    let Value::Object(map) = v else { return };
    let mut keys: Vec<&String> = map.keys().collect();
    keys.sort();
    for key in keys {
        let child = &map[key];
        let p = child_path(path, key);
        let at_limit = depth == MAX_DEPTH;
        match child {
            Value::Array(items) => {
                let first = items.first();
                out.push(SchemaEntry {
                    path: p.clone(),
                    kind: first.map(kind).unwrap_or("nothing").to_string(),
                    example: first.and_then(example),
                    array_len: Some(items.len()),
                    truncated: at_limit && has_children(child),
                });
                if !at_limit {
                    match first {
                        Some(f @ Value::Object(_)) => visit(f, &format!("{p}[0]"), depth + 1, out),
                        Some(Value::Array(_)) => {}
                        _ => {}
                    }
                }
            }
            _ => {
                out.push(SchemaEntry {
                    path: p.clone(),
                    kind: kind(child).to_string(),
                    example: example(child),
                    array_len: None,
                    truncated: at_limit && has_children(child),
                });
                if !at_limit {
                    visit(child, &p, depth + 1, out);
                }
            }
        }
    }
}

/// Lists every key path down to depth [`MAX_DEPTH`], depth first with keys
/// sorted, keeping the rendered summary within `max_bytes`.
pub fn summarize_schema(document: &Value, max_bytes: usize) -> SchemaSummary {
    let mut all = Vec::new();
    match document {
        Value::Array(items) => {
            all.push(SchemaEntry {
                path: "$".into(),
                kind: items.first().map(kind).unwrap_or("nothing").into(),
                example: items.first().and_then(example),
                array_len: Some(items.len()),
                truncated: false,
            });
            if let Some(f @ Value::Object(_)) = items.first() {
                visit(f, "$[0]", 1, &mut all);
            }
        }
        other => visit(other, "$", 1, &mut all),
    }
    let total = all.len();
    let mut summary = SchemaSummary::default();
    let mut used = 0usize;
    for entry in all {
        let line = entry.to_string().len() + 1;
        let remaining_after = total - summary.entries.len() - 1;
        let reserve = if remaining_after > 0 { omitted_line(remaining_after).len() } else { 0 };
        if used + line + reserve > max_bytes {
            break;
        }
        used += line;
        summary.entries.push(entry);
    }
    summary.omitted = total - summary.entries.len();
    if summary.render().len() > max_bytes {
        // Not even the omission marker fits.
        summary.entries.clear();
        summary.omitted = 0;
    }
    summary
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn minimal_document() {
        let s = summarize_schema(&json!({"a": [1, 2, 3]}), 4096);
        assert_eq!(
            s.entries,
            vec![SchemaEntry { path: "$.a".into(), kind: "number".into(), example: Some("1".into()), array_len: Some(3), truncated: false }]
        );
        assert_eq!(s.render(), "$.a: array[3] of number e.g. 1\n");
    }

    #[test]
    fn empty_document() {
        assert!(summarize_schema(&json!({}), 4096).is_empty());
    }

    #[test]
    fn depth_is_capped_with_marker() {
        let doc = json!({"l1": {"l2": {"l3": {"l4": {"l5": {"l6": {"l7": 1}}}}}}});
        let s = summarize_schema(&doc, 4096);
        let paths: Vec<&str> = s.entries.iter().map(|e| e.path.as_str()).collect();
        assert_eq!(paths, ["$.l1", "$.l1.l2", "$.l1.l2.l3", "$.l1.l2.l3.l4", "$.l1.l2.l3.l4.l5"]);
        assert!(s.entries.last().unwrap().truncated);
        assert!(s.render().contains("deeper levels omitted"));
    }

    #[test]
    fn sorted_depth_first_and_first_element_shape() {
        let doc = json!({"b": {"y": 1, "x": "s"}, "a": [{"k": true}, {"k": false, "extra": 1}], "odd key": null});
        let s = summarize_schema(&doc, 4096);
        let paths: Vec<&str> = s.entries.iter().map(|e| e.path.as_str()).collect();
        assert_eq!(paths, ["$.a", "$.a[0].k", "$.b", "$.b.x", "$.b.y", "$['odd key']"]);
        assert_eq!(s.entries[0].array_len, Some(2));
    }

    #[test]
    fn long_examples_are_clipped() {
        let s = summarize_schema(&json!({"seq": "A".repeat(500)}), 4096);
        assert_eq!(s.entries[0].example.as_ref().unwrap().chars().count(), 64);
    }

    #[test]
    fn size_limit_holds() {
        let mut obj = serde_json::Map::new();
        for i in 0..2000 {
            obj.insert(format!("field_{i:04}"), json!({"value": i, "label": "x".repeat(40)}));
        }
        let doc = Value::Object(obj);
        for limit in [0, 10, 100, 4096] {
            let s = summarize_schema(&doc, limit);
            assert!(s.render().len() <= limit, "limit {limit}: {}", s.render().len());
        }
        let s = summarize_schema(&doc, 4096);
        assert!(s.omitted > 0 && !s.entries.is_empty());
    }
}
