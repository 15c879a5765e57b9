//! Structure fingerprints: a hash of a document's shape with all text
//! content ignored, so two pages laid out the same way share one key.

use std::collections::BTreeSet;

use genomagent_core::sha256_hex;
use scraper::{ElementRef, Html};
use serde_json::Value;

fn element_label(e: &ElementRef<'_>) -> String {
    let mut classes: Vec<&str> = e.value().classes().collect();
    classes.sort_unstable();
    let mut label = e.value().name().to_string();
    for c in classes {
        label.push('.');
        label.push_str(c);
    }
    label
}

fn html_paths(e: ElementRef<'_>, prefix: &str, out: &mut BTreeSet<String>) {
    let path = if prefix.is_empty() { element_label(&e) } else { format!("{prefix}>{}", element_label(&e)) };
    for child in e.children().filter_map(ElementRef::wrap) {
        html_paths(child, &path, out);
    }
    out.insert(path);
}

fn json_paths(v: &Value, prefix: &str, out: &mut BTreeSet<String>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                // Numeric keys (esummary uid maps) are data, not structure.
                let key = if !k.is_empty() && k.bytes().all(|b| b.is_ascii_digit()) { "#" } else { k.as_str() };
                json_paths(child, &format!("{prefix}.{key}"), out);
            }
            out.insert(format!("{prefix}{{}}"));
        }
        Value::Array(items) => {
            for child in items {
                json_paths(child, &format!("{prefix}[]"), out);
            }
            out.insert(format!("{prefix}[]"));
        }
        Value::String(_) => {
            out.insert(format!("{prefix}:s"));
        }
        Value::Number(_) => {
            out.insert(format!("{prefix}:n"));
        }
        Value::Bool(_) => {
            out.insert(format!("{prefix}:b"));
        }
        Value::Null => {
            out.insert(format!("{prefix}:null"));
        }
    }
}

/// Sorted set of element paths (HTML) or key paths (JSON).
pub fn structure_paths(body: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    match serde_json::from_str::<Value>(body) {
        Ok(v) if matches!(v, Value::Object(_) | Value::Array(_)) => json_paths(&v, "$", &mut out),
        _ => html_paths(Html::parse_document(body).root_element(), "", &mut out),
    }
    out
}

pub fn fingerprint(body: &str) -> String {
    let joined = structure_paths(body).into_iter().collect::<Vec<_>>().join("\n");
    sha256_hex(joined.as_bytes())
}
