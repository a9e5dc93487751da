//! Zero-shot identification of pseudo-OOD nodes among unlabeled nodes.

use super::cache::LlmSession;
use super::prompts::{build_identification_prompt, parse_identification_response};
use super::{Provenance, PseudoOodMode, PseudoOodSet};
use crate::error::{Error, Result};
use crate::graph::{ClassSplit, DataSplit, TextAttributedGraph};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParsedAnnotation {
    Id(usize),
    Ood,
    Unparseable,
}

impl ParsedAnnotation {
    pub fn label(&self) -> String {
        match self {
            ParsedAnnotation::Id(k) => format!("id:{k}"),
            ParsedAnnotation::Ood => "ood".into(),
            ParsedAnnotation::Unparseable => "unparseable".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmAnnotation {
    pub node_id: usize,
    pub raw_response: String,
    pub parsed: ParsedAnnotation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdentifyOptions {
    pub sample_size: usize,
    pub seed: u64,
    /// Upper bound on requests in flight.
    pub concurrency: usize,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for IdentifyOptions {
    fn default() -> Self {
        IdentifyOptions { sample_size: 200, seed: 0, concurrency: 4, temperature: 0.0, max_tokens: 512 }
    }
}

/// Asks the LLM about every node in `node_ids`. Results come back in
/// ascending node order regardless of which request finishes first.
pub fn annotate_nodes(
    graph: &TextAttributedGraph,
    node_ids: &[usize],
    id_category_names: &[String],
    object_kind: &str,
    session: &LlmSession,
    options: &IdentifyOptions,
) -> Result<Vec<LlmAnnotation>> {
    let mut nodes = node_ids.to_vec();
    nodes.sort_unstable();
    nodes.dedup();
    if let Some(&bad) = nodes.iter().find(|&&v| v >= graph.node_count()) {
        return Err(Error::InvalidArgument(format!("node {bad} is outside the graph")));
    }
    // Prompts are built up front so text errors surface before any call.
    let prompts = nodes
        .iter()
        .map(|&v| build_identification_prompt(&graph.texts()[v], id_category_names, object_kind))
        .collect::<Result<Vec<_>>>()?;

    let label = |raw: &str| parse_identification_response(raw, id_category_names).label();
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<String>>>> = Mutex::new((0..nodes.len()).map(|_| None).collect());
    let workers = options.concurrency.max(1).min(nodes.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= nodes.len() {
                    break;
                }
                let answer = session.ask(&prompts[i], Some(nodes[i]), options.temperature, options.max_tokens, &label);
                let failed = answer.is_err();
                results.lock().unwrap()[i] = Some(answer);
                if failed {
                    // stop handing out new work; in-flight requests finish
                    next.store(nodes.len(), Ordering::SeqCst);
                }
            });
        }
    });

    let mut annotations = Vec::with_capacity(nodes.len());
    for (slot, &node_id) in results.into_inner().unwrap().into_iter().zip(&nodes) {
        let Some(answer) = slot else { continue };
        let raw_response = answer?;
        let parsed = parse_identification_response(&raw_response, id_category_names);
        annotations.push(LlmAnnotation { node_id, raw_response, parsed });
    }
    if annotations.len() != nodes.len() {
        return Err(Error::Llm("annotation stopped early".into()));
    }
    Ok(annotations)
}

/// Names of the ID classes in class-split order.
pub(crate) fn id_category_names(category_names: &[String], classes: &ClassSplit) -> Result<Vec<String>> {
    classes
        .id_classes()
        .iter()
        .map(|&c| {
            category_names
                .get(c as usize)
                .cloned()
                .ok_or_else(|| Error::InvalidArgument(format!("no category name for class {c}")))
        })
        .collect()
}

/// Samples `sample_size` unlabeled nodes (none from any evaluation set),
/// annotates them, and keeps those the LLM calls OOD.
#[allow(clippy::too_many_arguments)]
pub fn identify_pseudo_ood(
    graph: &TextAttributedGraph,
    category_names: &[String],
    object_kind: &str,
    classes: &ClassSplit,
    split: &DataSplit,
    session: &LlmSession,
    options: &IdentifyOptions,
) -> Result<(PseudoOodSet, Vec<LlmAnnotation>)> {
    let mut pool = split.unlabeled_pool(graph.node_count());
    if pool.len() < options.sample_size {
        return Err(Error::InsufficientNodes {
            population: "unlabeled pool",
            needed: options.sample_size,
            available: pool.len(),
        });
    }
    let mut rng = crate::rng::stream(options.seed, "identify/sample");
    let (sample, _) = pool.partial_shuffle(&mut rng, options.sample_size);
    let sample = sample.to_vec();

    let names = id_category_names(category_names, classes)?;
    let annotations = annotate_nodes(graph, &sample, &names, object_kind, session, options)?;
    if !annotations.is_empty() && annotations.iter().all(|a| a.parsed == ParsedAnnotation::Unparseable) {
        return Err(Error::Llm("every annotation was unparseable".into()));
    }
    let node_ids = annotations.iter().filter(|a| a.parsed == ParsedAnnotation::Ood).map(|a| a.node_id).collect();
    let provenance = annotations
        .iter()
        .map(|a| Provenance::Annotation {
            node_id: a.node_id,
            response: a.raw_response.clone(),
            parsed: a.parsed.label(),
            included: a.parsed == ParsedAnnotation::Ood,
        })
        .collect();
    Ok((PseudoOodSet { mode: PseudoOodMode::Identified, node_ids, provenance }, annotations))
}

/// Binary accuracy of the LLM's OOD calls; unparseable answers count as ID.
pub fn annotation_accuracy(annotations: &[LlmAnnotation], labels: &[i64], classes: &ClassSplit) -> Result<f64> {
    if annotations.is_empty() {
        return Err(Error::Empty("annotation set"));
    }
    let mut correct = 0usize;
    for a in annotations {
        let label = *labels
            .get(a.node_id)
            .ok_or_else(|| Error::InvalidArgument(format!("no label for node {}", a.node_id)))?;
        if (a.parsed == ParsedAnnotation::Ood) == classes.is_ood(label) {
            correct += 1;
        }
    }
    Ok(correct as f64 / annotations.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{make_class_split, sample_data_split, SplitSizes};
    use crate::llm::{ChatClient, ChatRequest, MockChatClient, ResponseCache};
    use ndarray::Array2;
    use std::time::Duration;

    fn toy() -> (TextAttributedGraph, Vec<String>, ClassSplit, DataSplit) {
        let names: Vec<String> = vec!["alpha".into(), "beta".into(), "gamma".into()];
        let n = 300;
        let labels: Vec<i64> = (0..n).map(|i| (i % 3) as i64).collect();
        let texts = labels.iter().enumerate().map(|(i, &l)| format!("node {i} about {}", names[l as usize])).collect();
        let graph = TextAttributedGraph::new(texts, vec![], Array2::zeros((n, 2)), labels).unwrap();
        let classes = make_class_split(graph.labels(), &[0, 1]).unwrap();
        let sizes = SplitSizes { train_per_class: 5, val_per_class: 5, test_id: 40, test_ood: 20 };
        let split = sample_data_split(&graph, &classes, 3, sizes).unwrap();
        (graph, names, classes, split)
    }

    fn session(client: MockChatClient) -> LlmSession {
        LlmSession::new(Box::new(client), ResponseCache::in_memory(), MockChatClient::MODEL)
    }

    fn opts(sample_size: usize) -> IdentifyOptions {
        IdentifyOptions { sample_size, ..Default::default() }
    }

    #[test]
    fn always_none_keeps_everything() {
        let (g, names, c, s) = toy();
        let (set, ann) =
            identify_pseudo_ood(&g, &names, "paper", &c, &s, &session(MockChatClient::Fixed("none".into())), &opts(100))
                .unwrap();
        assert_eq!(set.len(), 100);
        assert_eq!(ann.len(), 100);
        assert!(set.node_ids.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn category_answers_give_empty_set() {
        let (g, names, c, s) = toy();
        let (set, _) =
            identify_pseudo_ood(&g, &names, "paper", &c, &s, &session(MockChatClient::Fixed("alpha".into())), &opts(50))
                .unwrap();
        assert!(set.is_empty());
    }

    #[test]
    fn never_touches_evaluation_nodes() {
        let (g, names, c, s) = toy();
        let held = s.all_nodes();
        let pool = s.unlabeled_pool(g.node_count());
        for seed in 0..5 {
            let o = IdentifyOptions { seed, ..opts(pool.len()) };
            let (set, ann) = identify_pseudo_ood(&g, &names, "paper", &c, &s, &session(MockChatClient::Keyword), &o).unwrap();
            assert!(ann.iter().all(|a| !held.contains(&a.node_id)));
            assert!(set.node_ids.iter().all(|v| pool.contains(v)));
            // keyword mock is a perfect identifier on these texts
            assert_eq!(annotation_accuracy(&ann, g.labels(), &c).unwrap(), 1.0);
        }
    }

    #[test]
    fn errors() {
        let (g, names, c, s) = toy();
        let pool = s.unlabeled_pool(g.node_count()).len();
        assert!(matches!(
            identify_pseudo_ood(&g, &names, "paper", &c, &s, &session(MockChatClient::Keyword), &opts(pool + 1)),
            Err(Error::InsufficientNodes { .. })
        ));
        assert!(matches!(
            identify_pseudo_ood(&g, &names, "paper", &c, &s, &session(MockChatClient::Fixed("hmm".into())), &opts(10)),
            Err(Error::Llm(_))
        ));
        assert!(annotation_accuracy(&[], g.labels(), &c).is_err());
    }

    /// Answers after a delay that shrinks with node id, so completion order
    /// is the reverse of submission order.
    struct Slow;

    impl ChatClient for Slow {
        fn complete(&self, request: &ChatRequest) -> crate::Result<String> {
            let text = request.prompt_text();
            let id: u64 = text.rsplit("node ").next().unwrap().split(' ').next().unwrap().parse().unwrap();
            std::thread::sleep(Duration::from_micros(3000u64.saturating_sub(id * 10)));
            Ok(if id.is_multiple_of(2) { "none".into() } else { "alpha".into() })
        }
    }

    #[test]
    fn concurrency_does_not_change_output() {
        let (g, names, c, s) = toy();
        let run = |concurrency| {
            let o = IdentifyOptions { concurrency, ..opts(40) };
            let sess = LlmSession::new(Box::new(Slow), ResponseCache::in_memory(), "slow");
            let out = identify_pseudo_ood(&g, &names, "paper", &c, &s, &sess, &o).unwrap();
            let order: Vec<_> = sess.cache().entries().iter().map(|e| e.node_id.unwrap()).collect();
            (out, order)
        };
        let ((a, ann_a), _) = run(1);
        let ((b, ann_b), _) = run(8);
        assert_eq!(a, b);
        assert_eq!(ann_a, ann_b);
    }

    #[test]
    fn accuracy_counts_unparseable_as_id() {
        let (g, _, c, _) = toy();
        let ann = vec![
            LlmAnnotation { node_id: 0, raw_response: "?".into(), parsed: ParsedAnnotation::Unparseable },
            LlmAnnotation { node_id: 2, raw_response: "?".into(), parsed: ParsedAnnotation::Unparseable },
            LlmAnnotation { node_id: 5, raw_response: "none".into(), parsed: ParsedAnnotation::Ood },
            LlmAnnotation { node_id: 1, raw_response: "none".into(), parsed: ParsedAnnotation::Ood },
        ];
        // node 0 (ID) right, node 2 (OOD) wrong, node 5 (OOD) right, node 1 (ID) wrong
        assert_eq!(annotation_accuracy(&ann, g.labels(), &c).unwrap(), 0.5);
    }
}
