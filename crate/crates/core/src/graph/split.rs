use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::TextAttributedGraph;
use crate::error::{Error, Result};
use crate::rng;

/// Partition of label values into ID classes and OOD classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSplit {
    id_classes: Vec<i64>,
    ood_classes: Vec<i64>,
    compact_index: BTreeMap<i64, usize>,
}

impl ClassSplit {
    pub fn id_classes(&self) -> &[i64] {
        &self.id_classes
    }

    pub fn ood_classes(&self) -> &[i64] {
        &self.ood_classes
    }

    /// Number of ID classes, K.
    pub fn num_id(&self) -> usize {
        self.id_classes.len()
    }

    pub fn num_ood(&self) -> usize {
        self.ood_classes.len()
    }

    /// Index of an ID label in `[0, K)`.
    pub fn compact(&self, label: i64) -> Option<usize> {
        self.compact_index.get(&label).copied()
    }

    pub fn is_id(&self, label: i64) -> bool {
        self.compact_index.contains_key(&label)
    }

    pub fn is_ood(&self, label: i64) -> bool {
        self.ood_classes.binary_search(&label).is_ok()
    }

    /// Compact ID targets per node; `None` for OOD or unlabeled nodes.
    pub fn targets(&self, labels: &[i64]) -> Vec<Option<usize>> {
        labels.iter().map(|&l| self.compact(l)).collect()
    }
}

/// Splits the observed label values into the given ID list and the rest.
pub fn make_class_split(labels: &[i64], id_class_list: &[i64]) -> Result<ClassSplit> {
    if id_class_list.len() < 2 {
        return Err(Error::ClassSplit(format!(
            "at least two ID classes are required, got {}",
            id_class_list.len()
        )));
    }
    let observed: BTreeSet<i64> = labels.iter().copied().filter(|&l| l >= 0).collect();
    let mut compact_index = BTreeMap::new();
    for (idx, &class) in id_class_list.iter().enumerate() {
        if !observed.contains(&class) {
            return Err(Error::ClassSplit(format!("unknown label value {class}")));
        }
        if compact_index.insert(class, idx).is_some() {
            return Err(Error::ClassSplit(format!("duplicate ID class {class}")));
        }
    }
    let ood_classes = observed
        .into_iter()
        .filter(|c| !compact_index.contains_key(c))
        .collect();
    Ok(ClassSplit {
        id_classes: id_class_list.to_vec(),
        ood_classes,
        compact_index,
    })
}

/// Fraction of all nodes whose label is an ID class.
pub fn compute_id_ratio(labels: &[i64], split: &ClassSplit) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let id = labels.iter().filter(|&&l| split.is_id(l)).count();
    id as f64 / labels.len() as f64
}

/// Set sizes for [`sample_data_split`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train_per_class: usize,
    pub val_per_class: usize,
    pub test_id: usize,
    pub test_ood: usize,
}

impl Default for SplitSizes {
    fn default() -> Self {
        Self {
            train_per_class: 20,
            val_per_class: 10,
            test_id: 500,
            test_ood: 500,
        }
    }
}

/// Labeled, validation and test node sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataSplit {
    pub seed: u64,
    pub train_id: Vec<usize>,
    pub val_id: Vec<usize>,
    pub val_ood: Vec<usize>,
    pub test_id: Vec<usize>,
    pub test_ood: Vec<usize>,
}

impl DataSplit {
    /// Every node that belongs to some split set.
    pub fn all_nodes(&self) -> BTreeSet<usize> {
        self.train_id
            .iter()
            .chain(&self.val_id)
            .chain(&self.val_ood)
            .chain(&self.test_id)
            .chain(&self.test_ood)
            .copied()
            .collect()
    }

    /// Nodes outside every split set, ascending.
    pub fn unlabeled_pool(&self, node_count: usize) -> Vec<usize> {
        let used = self.all_nodes();
        (0..node_count).filter(|v| !used.contains(v)).collect()
    }
}

/// Samples the five node sets without replacement.
///
/// Training nodes are drawn per ID class (`train_per_class` each); the
/// remaining sets are drawn from what is left of their population. Each
/// set uses its own random stream.
pub fn sample_data_split(
    graph: &TextAttributedGraph,
    classes: &ClassSplit,
    seed: u64,
    sizes: SplitSizes,
) -> Result<DataSplit> {
    let k = classes.num_id();
    let labels = graph.labels();
    let id_pool: Vec<usize> = (0..labels.len()).filter(|&v| classes.is_id(labels[v])).collect();
    let ood_pool: Vec<usize> = (0..labels.len()).filter(|&v| classes.is_ood(labels[v])).collect();

    let id_needed = (sizes.train_per_class + sizes.val_per_class) * k + sizes.test_id;
    if id_pool.len() < id_needed {
        return Err(Error::InsufficientNodes {
            population: "ID",
            needed: id_needed,
            available: id_pool.len(),
        });
    }
    let ood_needed = sizes.val_per_class * k + sizes.test_ood;
    if ood_pool.len() < ood_needed {
        return Err(Error::InsufficientNodes {
            population: "OOD",
            needed: ood_needed,
            available: ood_pool.len(),
        });
    }

    let mut train_rng = rng::stream(seed, "split/train_id");
    let mut train_id = Vec::with_capacity(sizes.train_per_class * k);
    for &class in classes.id_classes() {
        let mut members: Vec<usize> = id_pool.iter().copied().filter(|&v| labels[v] == class).collect();
        if members.len() < sizes.train_per_class {
            return Err(Error::InsufficientNodes {
                population: "ID (per class)",
                needed: sizes.train_per_class,
                available: members.len(),
            });
        }
        members.shuffle(&mut train_rng);
        train_id.extend_from_slice(&members[..sizes.train_per_class]);
    }

    let id_rest = without(&id_pool, &train_id);
    let val_id = draw(&id_rest, sizes.val_per_class * k, seed, "split/val_id");
    let id_rest = without(&id_rest, &val_id);
    let test_id = draw(&id_rest, sizes.test_id, seed, "split/test_id");

    let val_ood = draw(&ood_pool, sizes.val_per_class * k, seed, "split/val_ood");
    let ood_rest = without(&ood_pool, &val_ood);
    let test_ood = draw(&ood_rest, sizes.test_ood, seed, "split/test_ood");

    Ok(DataSplit {
        seed,
        train_id: sorted(train_id),
        val_id: sorted(val_id),
        val_ood: sorted(val_ood),
        test_id: sorted(test_id),
        test_ood: sorted(test_ood),
    })
}

fn draw(pool: &[usize], count: usize, seed: u64, stream: &str) -> Vec<usize> {
    let mut order = pool.to_vec();
    let mut rng = rng::stream(seed, stream);
    let (picked, _) = order.partial_shuffle(&mut rng, count);
    picked.to_vec()
}

fn without(pool: &[usize], taken: &[usize]) -> Vec<usize> {
    let taken: BTreeSet<usize> = taken.iter().copied().collect();
    pool.iter().copied().filter(|v| !taken.contains(v)).collect()
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn labelled_graph(labels: Vec<i64>) -> TextAttributedGraph {
        let n = labels.len();
        TextAttributedGraph::new(
            (0..n).map(|i| format!("n{i}")).collect(),
            [],
            Array2::zeros((n, 1)),
            labels,
        )
        .unwrap()
    }

    #[test]
    fn class_split_counts() {
        let labels: Vec<i64> = (0..70).map(|i| i % 7).collect();
        let split = make_class_split(&labels, &[2, 4, 5, 6]).unwrap();
        assert_eq!(split.num_id(), 4);
        assert_eq!(split.num_ood(), 3);
        assert_eq!(split.ood_classes(), &[0, 1, 3]);
        assert_eq!(split.compact(5), Some(2));
        assert_eq!(split.compact(0), None);

        let labels: Vec<i64> = (0..9).map(|i| i % 3).collect();
        let split = make_class_split(&labels, &[0, 1]).unwrap();
        assert_eq!((split.num_id(), split.num_ood()), (2, 1));
    }

    #[test]
    fn class_split_errors() {
        let labels = vec![0, 1, 2];
        assert!(matches!(make_class_split(&labels, &[0]), Err(Error::ClassSplit(_))));
        assert!(matches!(make_class_split(&labels, &[0, 9]), Err(Error::ClassSplit(_))));
        assert!(matches!(make_class_split(&labels, &[0, 0]), Err(Error::ClassSplit(_))));
    }

    #[test]
    fn id_ratio() {
        let labels = vec![0, 1, 0, 1];
        let split = make_class_split(&labels, &[0, 1]).unwrap();
        assert_eq!(compute_id_ratio(&labels, &split), 1.0);
        let labels = vec![0, 1, 2, 2, crate::graph::NO_LABEL];
        let split = make_class_split(&labels, &[0, 1]).unwrap();
        assert_eq!(compute_id_ratio(&labels, &split), 0.4);
    }

    fn pubmed_like() -> TextAttributedGraph {
        // 400 nodes each of classes 0 and 1 (ID), 600 of class 2 (OOD)
        let labels = (0..1400).map(|i| if i < 800 { (i % 2) as i64 } else { 2 }).collect();
        labelled_graph(labels)
    }

    #[test]
    fn split_sizes_and_disjointness() {
        let g = pubmed_like();
        let classes = make_class_split(g.labels(), &[0, 1]).unwrap();
        let s = sample_data_split(&g, &classes, 3, SplitSizes::default()).unwrap();
        assert_eq!(s.train_id.len(), 40);
        assert_eq!(s.val_id.len(), 20);
        assert_eq!(s.val_ood.len(), 20);
        assert_eq!(s.test_id.len(), 500);
        assert_eq!(s.test_ood.len(), 500);
        assert_eq!(s.all_nodes().len(), 40 + 20 + 20 + 1000);
        for &v in s.train_id.iter().chain(&s.val_id).chain(&s.test_id) {
            assert!(classes.is_id(g.labels()[v]));
        }
        for &v in s.val_ood.iter().chain(&s.test_ood) {
            assert!(classes.is_ood(g.labels()[v]));
        }
        for class in [0, 1] {
            assert_eq!(s.train_id.iter().filter(|&&v| g.labels()[v] == class).count(), 20);
        }
    }

    #[test]
    fn split_is_seeded() {
        let g = pubmed_like();
        let classes = make_class_split(g.labels(), &[0, 1]).unwrap();
        let a = sample_data_split(&g, &classes, 11, SplitSizes::default()).unwrap();
        let b = sample_data_split(&g, &classes, 11, SplitSizes::default()).unwrap();
        let c = sample_data_split(&g, &classes, 12, SplitSizes::default()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.train_id, c.train_id);
    }

    #[test]
    fn test_size_does_not_perturb_training_draw() {
        let g = pubmed_like();
        let classes = make_class_split(g.labels(), &[0, 1]).unwrap();
        let a = sample_data_split(&g, &classes, 5, SplitSizes::default()).unwrap();
        let small = SplitSizes {
            test_id: 100,
            test_ood: 100,
            ..SplitSizes::default()
        };
        let b = sample_data_split(&g, &classes, 5, small).unwrap();
        assert_eq!(a.train_id, b.train_id);
        assert_eq!(a.val_id, b.val_id);
        assert_eq!(a.val_ood, b.val_ood);
    }

    #[test]
    fn insufficient_nodes() {
        let labels = (0..60).map(|i| if i < 30 { (i % 2) as i64 } else { 2 }).collect();
        let g = labelled_graph(labels);
        let classes = make_class_split(g.labels(), &[0, 1]).unwrap();
        let err = sample_data_split(&g, &classes, 0, SplitSizes::default()).unwrap_err();
        assert!(matches!(err, Error::InsufficientNodes { population: "ID", .. }));
    }
}
