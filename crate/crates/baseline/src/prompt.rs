use std::path::Path;

use serde_json::Value;

const INSTRUCTIONS: &str = include_str!("../../../prompts/baseline/instructions.txt");
const APIDOCS: &str = include_str!("../../../prompts/baseline/apidocs.txt");
const EXAMPLES_FULL: &str = include_str!("../../../prompts/baseline/examples-full.txt");
const EXAMPLES_SLIM: &str = include_str!("../../../prompts/baseline/examples-slim.txt");

/// Example files hold one demonstration per block, blocks separated by a
/// line containing only this marker.
const EXAMPLE_SEPARATOR: &str = "%%";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PromptStyle {
    /// Four demonstrations.
    #[default]
    Full,
    /// Two demonstrations.
    Slim,
}

impl PromptStyle {
    pub fn example_count(self) -> usize {
        match self {
            PromptStyle::Full => 4,
            PromptStyle::Slim => 2,
        }
    }

    fn file_name(self) -> &'static str {
        match self {
            PromptStyle::Full => "examples-full.txt",
            PromptStyle::Slim => "examples-slim.txt",
        }
    }
}

impl std::str::FromStr for PromptStyle {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(PromptStyle::Full),
            "slim" => Ok(PromptStyle::Slim),
            other => Err(PromptError::UnknownStyle(other.to_string())),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("unknown prompt style {0:?} (expected full or slim)")]
    UnknownStyle(String),
    #[error("{style:?} prompts need {expected} examples, found {found}")]
    ExampleCount { style: PromptStyle, expected: usize, found: usize },
    #[error("a prompt needs 2 or 4 examples, found {0}")]
    UnsupportedExampleCount(usize),
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Instructions, API documentation and worked demonstrations. The question
/// is supplied at render time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptAssembly {
    pub task_instructions: String,
    pub api_documentation: String,
    pub examples: Vec<String>,
}

impl PromptAssembly {
    pub fn new(
        task_instructions: impl Into<String>,
        api_documentation: impl Into<String>,
        examples: Vec<String>,
    ) -> Result<Self, PromptError> {
        if !matches!(examples.len(), 2 | 4) {
            return Err(PromptError::UnsupportedExampleCount(examples.len()));
        }
        Ok(Self { task_instructions: task_instructions.into(), api_documentation: api_documentation.into(), examples })
    }

    /// The prompt files compiled into the binary.
    pub fn builtin(style: PromptStyle) -> Self {
        let examples = match style {
            PromptStyle::Full => EXAMPLES_FULL,
            PromptStyle::Slim => EXAMPLES_SLIM,
        };
        Self::from_texts(style, INSTRUCTIONS, APIDOCS, examples).expect("bundled prompt files are well formed")
    }

    /// Reads `instructions.txt`, `apidocs.txt` and the style's example file
    /// from `dir`.
    pub fn from_dir(dir: &Path, style: PromptStyle) -> Result<Self, PromptError> {
        let read = |name: &str| {
            let path = dir.join(name);
            std::fs::read_to_string(&path).map_err(|source| PromptError::Io { path: path.display().to_string(), source })
        };
        Self::from_texts(style, &read("instructions.txt")?, &read("apidocs.txt")?, &read(style.file_name())?)
    }

    fn from_texts(style: PromptStyle, instructions: &str, apidocs: &str, examples: &str) -> Result<Self, PromptError> {
        let examples = split_examples(examples);
        if examples.len() != style.example_count() {
            return Err(PromptError::ExampleCount { style, expected: style.example_count(), found: examples.len() });
        }
        Ok(Self {
            task_instructions: instructions.trim().to_string(),
            api_documentation: apidocs.trim().to_string(),
            examples,
        })
    }

    pub fn style(&self) -> PromptStyle {
        if self.examples.len() == 2 {
            PromptStyle::Slim
        } else {
            PromptStyle::Full
        }
    }

    /// The full prompt for `question`, ending where the model should
    /// continue.
    pub fn render(&self, question: &str) -> String {
        let mut out = String::new();
        out.push_str(&self.task_instructions);
        out.push_str("\n\n");
        out.push_str(&self.api_documentation);
        for example in &self.examples {
            out.push_str("\n\n");
            out.push_str(example);
        }
        out.push_str("\n\nQuestion: ");
        out.push_str(question.trim());
        out.push('\n');
        out
    }
}

fn split_examples(text: &str) -> Vec<String> {
    let mut blocks = vec![String::new()];
    for line in text.lines() {
        if line.trim() == EXAMPLE_SEPARATOR {
            blocks.push(String::new());
        } else {
            let block = blocks.last_mut().expect("nonempty");
            block.push_str(line);
            block.push('\n');
        }
    }
    blocks.into_iter().map(|b| b.trim().to_string()).filter(|b| !b.is_empty()).collect()
}

/// Number of records an E-utilities style payload reports, when it is one
/// of the shapes we know.
pub(crate) fn result_count(body: &str) -> Option<usize> {
    if let Ok(doc) = serde_json::from_str::<Value>(body) {
        if let Some(ids) = doc.pointer("/esearchresult/idlist").and_then(Value::as_array) {
            return Some(ids.len());
        }
        if let Some(uids) = doc.pointer("/result/uids").and_then(Value::as_array) {
            return Some(uids.len());
        }
        return None;
    }
    let start = body.find("<Count>")? + "<Count>".len();
    let end = body[start..].find("</Count>")? + start;
    body[start..end].trim().parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_styles_have_expected_examples() {
        assert_eq!(PromptAssembly::builtin(PromptStyle::Full).examples.len(), 4);
        assert_eq!(PromptAssembly::builtin(PromptStyle::Slim).examples.len(), 2);
        assert_eq!(PromptAssembly::builtin(PromptStyle::Slim).style(), PromptStyle::Slim);
    }

    #[test]
    fn render_is_deterministic_and_ends_with_question() {
        let a = PromptAssembly::builtin(PromptStyle::Full);
        let one = a.render("What is the official gene symbol of SNAT6?");
        assert_eq!(one, a.render("What is the official gene symbol of SNAT6?"));
        assert!(one.ends_with("\nQuestion: What is the official gene symbol of SNAT6?\n"));
        assert_eq!(one.matches("Question: ").count(), 5);
    }

    #[test]
    fn example_count_is_checked() {
        let err = PromptAssembly::new("i", "d", vec!["one".into()]).unwrap_err();
        assert!(matches!(err, PromptError::UnsupportedExampleCount(1)));
        assert!(PromptAssembly::new("i", "d", vec!["a".into(), "b".into()]).is_ok());
    }

    #[test]
    fn from_dir_rejects_wrong_example_count() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("instructions.txt"), "i").unwrap();
        std::fs::write(dir.path().join("apidocs.txt"), "d").unwrap();
        std::fs::write(dir.path().join("examples-slim.txt"), "a\n%%\nb\n%%\nc\n").unwrap();
        assert!(PromptAssembly::from_dir(dir.path(), PromptStyle::Slim).is_err());
        std::fs::write(dir.path().join("examples-slim.txt"), "a\n%%\nb\n").unwrap();
        assert_eq!(PromptAssembly::from_dir(dir.path(), PromptStyle::Slim).unwrap().examples, vec!["a", "b"]);
    }

    #[test]
    fn counts_known_payloads() {
        assert_eq!(result_count(r#"{"esearchresult":{"idlist":[]}}"#), Some(0));
        assert_eq!(result_count(r#"{"result":{"uids":["1","2"]}}"#), Some(2));
        assert_eq!(result_count("<eSearchResult><Count>3</Count></eSearchResult>"), Some(3));
        assert_eq!(result_count("RID = X"), None);
    }
}
