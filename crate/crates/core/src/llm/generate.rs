//! Pseudo-OOD node generation from OOD category names.

use super::cache::LlmSession;
use super::prompts::{build_generation_prompt, parse_generation_response};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedNode {
    pub category: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub body: String,
    #[serde(skip)]
    pub embedding: Option<Vec<f32>>,
}

impl GeneratedNode {
    pub fn new(category: &str, title: &str, body: &str) -> Self {
        GeneratedNode { category: category.to_owned(), title: title.to_owned(), body: body.to_owned(), embedding: None }
    }

    /// Title and body joined the way dataset node texts are.
    pub fn text(&self) -> String {
        format!("{}. {}", self.title, self.body)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerateOptions {
    pub per_class: usize,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions { per_class: 10, temperature: 1.0, max_tokens: 2048 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationOutcome {
    pub nodes: Vec<GeneratedNode>,
    /// Categories that came back short, with what was obtained.
    pub shortfalls: Vec<(String, usize)>,
}

fn ask_category(
    session: &LlmSession,
    category: &str,
    count: usize,
    object_kind: &str,
    options: &GenerateOptions,
) -> Result<Vec<GeneratedNode>> {
    let prompt = build_generation_prompt(category, count, object_kind)?;
    let label = |raw: &str| match parse_generation_response(raw, category) {
        Ok(nodes) => format!("generated:{}", nodes.len()),
        Err(_) => "unparseable".into(),
    };
    let raw = session.ask(&prompt, None, options.temperature, options.max_tokens, &label)?;
    match parse_generation_response(&raw, category) {
        Ok(nodes) => Ok(nodes),
        Err(Error::UnparseableGeneration) => Ok(Vec::new()),
        Err(e) => Err(e),
    }
}

/// One request per category, plus one follow-up for the missing count if
/// the first answer is short. Categories are handled in order.
///
/// A category ending with no nodes, or with fewer than half of
/// `per_class`, fails the run; anything in between is kept and reported
/// in [`GenerationOutcome::shortfalls`].
pub fn generate_pseudo_ood(
    ood_category_names: &[String],
    object_kind: &str,
    session: &LlmSession,
    options: &GenerateOptions,
) -> Result<GenerationOutcome> {
    if ood_category_names.is_empty() {
        return Err(Error::InvalidArgument("no OOD categories to generate for".into()));
    }
    if options.per_class == 0 {
        return Err(Error::InvalidArgument("per_class must be at least 1".into()));
    }
    let mut outcome = GenerationOutcome { nodes: Vec::new(), shortfalls: Vec::new() };
    for category in ood_category_names {
        let mut got = ask_category(session, category, options.per_class, object_kind, options)?;
        if got.len() < options.per_class {
            let missing = options.per_class - got.len();
            got.extend(ask_category(session, category, missing, object_kind, options)?);
        }
        got.truncate(options.per_class);
        if got.is_empty() || 2 * got.len() < options.per_class {
            return Err(Error::Llm(format!(
                "category '{category}' produced {} of {} nodes",
                got.len(),
                options.per_class
            )));
        }
        if got.len() < options.per_class {
            log::warn!("category '{category}': generated {} of {} nodes", got.len(), options.per_class);
            outcome.shortfalls.push((category.clone(), got.len()));
        }
        outcome.nodes.extend(got);
    }
    Ok(outcome)
}

pub fn write_generated(path: &Path, nodes: &[GeneratedNode]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut out = String::new();
    for node in nodes {
        out.push_str(&serde_json::to_string(node)?);
        out.push('\n');
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_generated(path: &Path) -> Result<Vec<GeneratedNode>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut nodes = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let node: GeneratedNode = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        if node.title.trim().is_empty() || node.body.trim().is_empty() {
            return Err(Error::Parse { path: path.to_path_buf(), line: i + 1, message: "empty title or abstract".into() });
        }
        nodes.push(node);
    }
    Ok(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{ChatClient, ChatRequest, MockChatClient, ResponseCache};
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    fn session(client: Box<dyn ChatClient>) -> LlmSession {
        LlmSession::new(client, ResponseCache::in_memory(), "m")
    }

    fn block(n: usize) -> String {
        (0..n).map(|i| format!("Title: T{i}\nAbstract: B{i}\n")).collect()
    }

    #[test]
    fn fixed_block_yields_exact_count() {
        let s = session(Box::new(MockChatClient::Fixed(block(10))));
        let out = generate_pseudo_ood(&["Pancreas".into()], "paper", &s, &GenerateOptions::default()).unwrap();
        assert_eq!(out.nodes.len(), 10);
        assert!(out.shortfalls.is_empty());
        let again = generate_pseudo_ood(&["Pancreas".into()], "paper", &s, &GenerateOptions::default()).unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn keyword_mock_covers_each_category() {
        let s = session(Box::new(MockChatClient::Keyword));
        let cats: Vec<String> = vec!["A".into(), "B".into(), "C".into()];
        let o = GenerateOptions { per_class: 2, ..Default::default() };
        let out = generate_pseudo_ood(&cats, "paper", &s, &o).unwrap();
        assert_eq!(out.nodes.len(), 6);
        assert_eq!(out.nodes[4].category, "C");
        assert_eq!(out.nodes[4].title, "Advances in C, part 1");
    }

    /// Returns `first` pairs on the first call and `second` afterwards.
    struct Staged(Arc<AtomicUsize>, usize, usize);

    impl ChatClient for Staged {
        fn complete(&self, _: &ChatRequest) -> crate::Result<String> {
            let n = if self.0.fetch_add(1, Ordering::SeqCst) == 0 { self.1 } else { self.2 };
            Ok(if n == 0 { "sorry".into() } else { block(n) })
        }
    }

    #[test]
    fn follow_up_and_shortfall_rules() {
        let run = |first, second| {
            let calls = Arc::new(AtomicUsize::new(0));
            let s = session(Box::new(Staged(calls.clone(), first, second)));
            (generate_pseudo_ood(&["X".into()], "paper", &s, &GenerateOptions::default()), calls.load(Ordering::SeqCst))
        };
        let (out, calls) = run(10, 0);
        assert_eq!((out.unwrap().nodes.len(), calls), (10, 1));
        let (out, calls) = run(4, 6);
        assert_eq!((out.unwrap().nodes.len(), calls), (10, 2));
        let (out, _) = run(3, 3);
        let out = out.unwrap();
        assert_eq!(out.nodes.len(), 6);
        assert_eq!(out.shortfalls, vec![("X".to_string(), 6)]);
        assert!(run(2, 2).0.is_err());
        assert!(run(0, 0).0.is_err());
    }

    #[test]
    fn jsonl_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("generated.jsonl");
        let nodes = vec![GeneratedNode::new("A", "t1", "b1"), GeneratedNode::new("B", "t2", "b2")];
        write_generated(&path, &nodes).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("{\"category\":\"A\",\"title\":\"t1\",\"abstract\":\"b1\"}\n"));
        assert_eq!(read_generated(&path).unwrap(), nodes);
        std::fs::write(&path, "{\"category\":\"A\",\"title\":\"\",\"abstract\":\"b\"}\n").unwrap();
        assert!(read_generated(&path).is_err());
    }
}
