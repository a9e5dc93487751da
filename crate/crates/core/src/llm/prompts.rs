//! Identification and generation prompts, and the parsers for their
//! responses.

use super::generate::GeneratedNode;
use crate::error::{Error, Result};

const IDENTIFICATION_TEMPLATE: &str = "As a research scientist, your task is to analyze and classify {object} based on their main topics, meanings, background, and methods.

Please first read the content of the {object} carefully. Then, identify the {object}'s key focus. Finally, match the content to one of the given categories:

[{categories}]

Given the current possible categories, determine if it belongs to one of them. If so, specify that category; otherwise, say \"none\".

{content}";

const IDENTIFICATION_MARKER: &str = "otherwise, say \"none\".\n\n";

const GENERATION_TEMPLATE: &str = "Please generate {count} {object}(s) belonging to the category '{category}', including title and abstract.

Output Format:
- Title: <Generated Title>
- Abstract: <Generated Abstract>";

pub fn build_identification_prompt(node_text: &str, id_categories: &[String], object_kind: &str) -> Result<String> {
    if node_text.trim().is_empty() {
        return Err(Error::InvalidArgument("node text is empty".into()));
    }
    if id_categories.is_empty() {
        return Err(Error::InvalidArgument("no ID categories given".into()));
    }
    Ok(IDENTIFICATION_TEMPLATE
        .replace("{object}", object_kind)
        .replace("{categories}", &id_categories.join(", "))
        .replace("{content}", node_text))
}

pub fn build_generation_prompt(category: &str, count: usize, object_kind: &str) -> Result<String> {
    if category.trim().is_empty() {
        return Err(Error::InvalidArgument("category name is empty".into()));
    }
    if count == 0 {
        return Err(Error::InvalidArgument("generation count must be at least 1".into()));
    }
    Ok(GENERATION_TEMPLATE
        .replace("{count}", &count.to_string())
        .replace("{object}", object_kind)
        .replace("{category}", category))
}

/// Lowercase, punctuation and quotes replaced by spaces, whitespace collapsed.
pub fn normalize_response(raw: &str) -> String {
    raw.chars()
        .map(|c| if c.is_alphanumeric() { c.to_lowercase().next().unwrap_or(c) } else { ' ' })
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Parsed outcome of one identification answer.
///
/// The answer counts as OOD when its normalized text contains the
/// standalone token `none`; otherwise it names an ID category only when
/// exactly one category name occurs in it.
pub fn parse_identification_response(raw: &str, id_categories: &[String]) -> super::ParsedAnnotation {
    use super::ParsedAnnotation;
    let normalized = normalize_response(raw);
    if normalized.split(' ').any(|t| t == "none") {
        return ParsedAnnotation::Ood;
    }
    let padded = format!(" {normalized} ");
    let mut hits = id_categories.iter().enumerate().filter(|(_, name)| {
        let name = normalize_response(name);
        !name.is_empty() && padded.contains(&format!(" {name} "))
    });
    match (hits.next(), hits.next()) {
        (Some((idx, _)), None) => ParsedAnnotation::Id(idx),
        _ => ParsedAnnotation::Unparseable,
    }
}

#[derive(PartialEq)]
enum Marker {
    Title,
    Abstract,
}

fn strip_marker(line: &str) -> Option<(Marker, &str)> {
    let trimmed = line
        .trim_start()
        .trim_start_matches(|c: char| c.is_ascii_digit() || matches!(c, '-' | '*' | '•' | '#' | '.' | ')' | ' ' | '\t'));
    let lower = trimmed.to_ascii_lowercase();
    for (marker, label) in [(Marker::Title, "title"), (Marker::Abstract, "abstract")] {
        if lower.starts_with(label) {
            let rest = trimmed[label.len()..].trim_start_matches('*').trim_start();
            if let Some(rest) = rest.strip_prefix(':') {
                return Some((marker, rest.trim_start_matches('*').trim()));
            }
        }
    }
    None
}

/// Scans for `Title:` / `Abstract:` markers (case-insensitive, tolerating
/// list bullets, numbering and bold markup). Every complete pair becomes
/// one node; an abstract may continue over several lines.
pub fn parse_generation_response(raw: &str, category: &str) -> Result<Vec<GeneratedNode>> {
    let mut nodes = Vec::new();
    let mut title: Option<String> = None;
    let mut body: Option<String> = None;

    let mut flush = |title: &mut Option<String>, body: &mut Option<String>| {
        if let (Some(t), Some(b)) = (title.take(), body.take()) {
            let b = b.trim().to_owned();
            if !t.is_empty() && !b.is_empty() {
                nodes.push(GeneratedNode::new(category, &t, &b));
            }
        }
    };

    for line in raw.lines() {
        match strip_marker(line) {
            Some((Marker::Title, text)) => {
                flush(&mut title, &mut body);
                body = None;
                title = Some(text.to_owned());
            }
            Some((Marker::Abstract, text)) => {
                if title.is_some() {
                    body = Some(text.to_owned());
                }
            }
            None => {
                if let Some(b) = body.as_mut() {
                    let extra = line.trim();
                    if !extra.is_empty() {
                        if !b.is_empty() {
                            b.push(' ');
                        }
                        b.push_str(extra);
                    }
                }
            }
        }
    }
    flush(&mut title, &mut body);

    if nodes.is_empty() {
        return Err(Error::UnparseableGeneration);
    }
    Ok(nodes)
}

/// Inverse of [`build_identification_prompt`], for the keyword mock.
pub(crate) fn read_identification_prompt(prompt: &str) -> Option<(Vec<String>, &str)> {
    let list = prompt.lines().find(|l| l.starts_with('[') && l.ends_with(']'))?;
    let categories = list[1..list.len() - 1].split(", ").map(str::to_owned).collect();
    let content = &prompt[prompt.find(IDENTIFICATION_MARKER)? + IDENTIFICATION_MARKER.len()..];
    Some((categories, content))
}

pub(crate) struct GenerationAsk {
    pub count: usize,
    pub object_kind: String,
    pub category: String,
}

/// Inverse of [`build_generation_prompt`], for the keyword mock.
pub(crate) fn read_generation_prompt(prompt: &str) -> Option<GenerationAsk> {
    let rest = prompt.strip_prefix("Please generate ")?;
    let (count, rest) = rest.split_once(' ')?;
    let (object_kind, rest) = rest.split_once("(s) belonging to the category '")?;
    let (category, _) = rest.split_once("', including title and abstract.")?;
    Some(GenerationAsk {
        count: count.parse().ok()?,
        object_kind: object_kind.to_owned(),
        category: category.to_owned(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::ParsedAnnotation;
    use super::*;
    use proptest::prelude::*;

    fn cats() -> Vec<String> {
        vec!["Diabetes Type 1".into(), "Diabetes Type 2".into()]
    }

    #[test]
    fn identification_prompt_contents() {
        let p = build_identification_prompt("Beta cell autoimmunity.", &cats(), "paper").unwrap();
        assert!(p.starts_with("As a research scientist, your task is to analyze and classify paper based on"));
        assert!(p.contains("identify the paper's key focus"));
        assert!(p.contains("\n[Diabetes Type 1, Diabetes Type 2]\n"));
        assert!(p.contains("otherwise, say \"none\"."));
        assert!(p.ends_with("\n\nBeta cell autoimmunity."));

        let reversed: Vec<String> = cats().into_iter().rev().collect();
        let q = build_identification_prompt("x", &reversed, "paper").unwrap();
        assert!(q.contains("[Diabetes Type 2, Diabetes Type 1]"));

        assert!(build_identification_prompt("  ", &cats(), "paper").is_err());
        assert!(build_identification_prompt("x", &[], "paper").is_err());
    }

    #[test]
    fn identification_prompt_reads_back() {
        let p = build_identification_prompt("multi\nline content", &cats(), "Wikipedia article").unwrap();
        let (c, content) = read_identification_prompt(&p).unwrap();
        assert_eq!(c, cats());
        assert_eq!(content, "multi\nline content");
    }

    #[test]
    fn parses_identification_answers() {
        assert_eq!(parse_identification_response("None.", &cats()), ParsedAnnotation::Ood);
        assert_eq!(parse_identification_response("\"none\"", &cats()), ParsedAnnotation::Ood);
        assert_eq!(
            parse_identification_response("This belongs to Diabetes Type 2", &cats()),
            ParsedAnnotation::Id(1)
        );
        assert_eq!(
            parse_identification_response("Diabetes Type 1 or Diabetes Type 2", &cats()),
            ParsedAnnotation::Unparseable
        );
        assert_eq!(parse_identification_response("I am not sure.", &cats()), ParsedAnnotation::Unparseable);
        // "nonetheless" is not the token "none"
        assert_eq!(
            parse_identification_response("Nonetheless, Diabetes Type 1.", &cats()),
            ParsedAnnotation::Id(0)
        );
    }

    #[test]
    fn generation_prompt() {
        let p = build_generation_prompt("Reinforcement Learning", 10, "paper").unwrap();
        assert!(p.starts_with(
            "Please generate 10 paper(s) belonging to the category 'Reinforcement Learning', including title and abstract."
        ));
        assert!(p.contains("Title: <Generated Title>"));
        assert!(p.contains("Abstract: <Generated Abstract>"));
        let p = build_generation_prompt("Theory", 37, "paper").unwrap();
        assert!(p.contains("generate 37 paper(s)"));
        assert!(build_generation_prompt("Theory", 0, "paper").is_err());
        assert!(build_generation_prompt("", 3, "paper").is_err());

        let ask = read_generation_prompt(&build_generation_prompt("Rule Learning", 4, "Wikipedia article").unwrap()).unwrap();
        assert_eq!((ask.count, ask.object_kind.as_str(), ask.category.as_str()), (4, "Wikipedia article", "Rule Learning"));
    }

    #[test]
    fn parses_generations() {
        let nodes = parse_generation_response("Title: A\nAbstract: B\nTitle: C\nAbstract: D", "X").unwrap();
        assert_eq!(nodes.len(), 2);
        assert_eq!((nodes[1].title.as_str(), nodes[1].body.as_str()), ("C", "D"));

        let nodes = parse_generation_response("1. Title: A\n   Abstract: B", "X").unwrap();
        assert_eq!(nodes.len(), 1);
        assert_eq!(nodes[0].text(), "A. B");

        let nodes = parse_generation_response(
            "Here you go:\n\n- **Title:** Deep Q\n- **Abstract:** We study\nvalue iteration.\n\n2) TITLE: Orphan",
            "RL",
        )
        .unwrap();
        assert_eq!(nodes.len(), 1);
        assert_eq!(nodes[0].body, "We study value iteration.");
        assert_eq!(nodes[0].category, "RL");

        assert!(matches!(parse_generation_response("Abstract: B", "X"), Err(Error::UnparseableGeneration)));
    }

    proptest! {
        #[test]
        fn parsing_is_case_and_punctuation_insensitive(
            flips in proptest::collection::vec(any::<bool>(), 16),
            punct in "[.,!?\"' ]{0,3}",
            which in 0usize..3,
        ) {
            let target = ["none", "Diabetes Type 1", "Diabetes Type 2"][which];
            let cased: String = target
                .chars()
                .zip(flips.iter().cycle())
                .map(|(c, &up)| if up { c.to_ascii_uppercase() } else { c.to_ascii_lowercase() })
                .collect();
            let raw = format!("{punct}{cased}{punct}");
            let expected = match which {
                0 => ParsedAnnotation::Ood,
                k => ParsedAnnotation::Id(k - 1),
            };
            let parsed = parse_identification_response(&raw, &cats());
            prop_assert_eq!(&parsed, &expected);
            prop_assert_eq!(parse_identification_response(&normalize_response(&raw), &cats()), parsed);
            prop_assert_eq!(normalize_response(&normalize_response(&raw)), normalize_response(&raw));
        }
    }
}
