//! Random forest of Gini decision trees.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{argmax, check_classes, check_dimension, ClassifierError, LabeledDataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows trees until every leaf is pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features examined per split; `None` means `round(sqrt(d))`.
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: Some(12),
            min_samples_leaf: 1,
            features_per_split: None,
            bootstrap: true,
            seed: 42,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        if self.n_trees == 0 {
            return Err(ClassifierError::InvalidConfig(
                "n_trees must be at least 1".into(),
            ));
        }
        if self.min_samples_leaf == 0 {
            return Err(ClassifierError::InvalidConfig(
                "min_samples_leaf must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn resolved_features_per_split(&self, dimension: usize) -> usize {
        self.features_per_split
            .unwrap_or_else(|| (dimension as f64).sqrt().round() as usize)
            .clamp(1, dimension.max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    /// Class histogram indexed like the forest's class list.
    Leaf { counts: Vec<usize> },
    /// Samples with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    fn leaf_for(&self, x: &[f64]) -> &[usize] {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { counts } => return counts,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn leaves(&self) -> Vec<&[usize]> {
        match self {
            TreeNode::Leaf { counts } => vec![counts],
            TreeNode::Split { left, right, .. } => {
                let mut v = left.leaves();
                v.extend(right.leaves());
                v
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub root: TreeNode,
}

impl DecisionTree {
    /// Majority class index of the leaf reached by `x`.
    pub fn predict_index(&self, x: &[f64]) -> usize {
        let counts = self.root.leaf_for(x);
        let as_f64: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        argmax(&as_f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    classes: Vec<String>,
    dimension: usize,
    trees: Vec<DecisionTree>,
    config: ForestConfig,
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

struct TreeBuilder<'a> {
    features: &'a [Vec<f64>],
    labels: &'a [usize],
    n_classes: usize,
    config: &'a ForestConfig,
    features_per_split: usize,
    rng: ChaCha8Rng,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl TreeBuilder<'_> {
    fn histogram(&self, indices: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &i in indices {
            counts[self.labels[i]] += 1;
        }
        counts
    }

    fn build(&mut self, indices: &mut [usize], depth: usize) -> TreeNode {
        let counts = self.histogram(indices);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_reached = self.config.max_depth.is_some_and(|max| depth >= max);
        if pure || depth_reached || indices.len() < 2 * self.config.min_samples_leaf {
            return TreeNode::Leaf { counts };
        }
        let Some(split) = self.best_split(indices, &counts) else {
            return TreeNode::Leaf { counts };
        };
        let boundary = partition(indices, |i| {
            self.features[i][split.feature] <= split.threshold
        });
        let (left_idx, right_idx) = indices.split_at_mut(boundary);
        let left = self.build(left_idx, depth + 1);
        let right = self.build(right_idx, depth + 1);
        TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// Scans features in random order until `features_per_split` features
    /// that are not constant on this node have been examined.
    fn best_split(&mut self, indices: &[usize], parent_counts: &[usize]) -> Option<BestSplit> {
        let d = self.features[0].len();
        let mut order: Vec<usize> = (0..d).collect();
        order.shuffle(&mut self.rng);
        let n = indices.len();
        let min_leaf = self.config.min_samples_leaf;
        let mut best: Option<BestSplit> = None;
        let mut examined = 0;
        let mut column: Vec<(f64, usize)> = Vec::with_capacity(n);

        for feature in order {
            if examined >= self.features_per_split {
                break;
            }
            column.clear();
            column.extend(
                indices
                    .iter()
                    .map(|&i| (self.features[i][feature], self.labels[i])),
            );
            column.sort_by(|a, b| a.0.total_cmp(&b.0));
            if column[0].0 == column[n - 1].0 {
                continue;
            }
            examined += 1;

            let mut left = vec![0usize; self.n_classes];
            let mut right = parent_counts.to_vec();
            for pos in 0..n - 1 {
                let (value, class) = column[pos];
                left[class] += 1;
                right[class] -= 1;
                let next = column[pos + 1].0;
                let n_left = pos + 1;
                if value == next || n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let impurity = n_left as f64 * gini(&left, n_left)
                    + (n - n_left) as f64 * gini(&right, n - n_left);
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    let mut threshold = value + (next - value) / 2.0;
                    if threshold >= next {
                        threshold = value;
                    }
                    best = Some(BestSplit {
                        feature,
                        threshold,
                        impurity,
                    });
                }
            }
        }
        best
    }
}

/// Moves elements satisfying `pred` to the front; returns how many did.
fn partition(items: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let mut boundary = 0;
    for i in 0..items.len() {
        if pred(items[i]) {
            items.swap(i, boundary);
            boundary += 1;
        }
    }
    boundary
}

pub fn train_random_forest(
    dataset: &LabeledDataset,
    config: &ForestConfig,
) -> Result<ForestModel, ClassifierError> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(ClassifierError::EmptyDataset);
    }
    let classes = dataset.classes();
    let labels = dataset.label_indices(&classes);
    let d = dataset.dimension();
    let n = dataset.len();
    let features_per_split = config.resolved_features_per_split(d);

    let trees = (0..config.n_trees)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(t as u64));
            let mut indices: Vec<usize> = if config.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let mut builder = TreeBuilder {
                features: dataset.features(),
                labels: &labels,
                n_classes: classes.len(),
                config,
                features_per_split,
                rng,
            };
            DecisionTree {
                root: builder.build(&mut indices, 0),
            }
        })
        .collect();

    Ok(ForestModel {
        classes,
        dimension: d,
        trees,
        config: config.clone(),
    })
}

impl ForestModel {
    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    /// Majority class over the trees and the fraction of trees voting for it.
    pub fn predict_with_vote(&self, x: &[f64]) -> Result<(String, f64), ClassifierError> {
        check_dimension(self.dimension, x)?;
        let mut votes = vec![0.0; self.classes.len()];
        for tree in &self.trees {
            votes[tree.predict_index(x)] += 1.0;
        }
        let best = argmax(&votes);
        Ok((
            self.classes[best].clone(),
            votes[best] / self.trees.len() as f64,
        ))
    }

    pub fn predict(&self, x: &[f64]) -> Result<String, ClassifierError> {
        self.predict_with_vote(x).map(|(c, _)| c)
    }

    /// Checks that every leaf holds a nonempty histogram and that the tree
    /// count matches the configuration.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.trees.len() != self.config.n_trees {
            return Err(format!(
                "{} trees, expected {}",
                self.trees.len(),
                self.config.n_trees
            ));
        }
        for (t, tree) in self.trees.iter().enumerate() {
            for counts in tree.root.leaves() {
                if counts.len() != self.classes.len() || counts.iter().sum::<usize>() == 0 {
                    return Err(format!("tree {t} has an empty or malformed leaf"));
                }
            }
        }
        Ok(())
    }

    pub(super) fn to_doc(&self) -> ForestDoc {
        ForestDoc {
            classes: self.classes.clone(),
            dimension: self.dimension,
            config: self.config.clone(),
            trees: self
                .trees
                .iter()
                .map(|t| node_to_doc(&t.root, &self.classes))
                .collect(),
        }
    }

    pub(super) fn from_doc(doc: ForestDoc) -> Result<Self, ClassifierError> {
        check_classes(&doc.classes)?;
        let trees = doc
            .trees
            .into_iter()
            .map(|t| {
                node_from_doc(t, &doc.classes, doc.dimension).map(|root| DecisionTree { root })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let model = ForestModel {
            classes: doc.classes,
            dimension: doc.dimension,
            trees,
            config: doc.config,
        };
        model.check_invariants().map_err(ClassifierError::Format)?;
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(super) struct ForestDoc {
    classes: Vec<String>,
    dimension: usize,
    config: ForestConfig,
    trees: Vec<NodeDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NodeDoc {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<NodeDoc>,
        right: Box<NodeDoc>,
    },
    Leaf {
        leaf: BTreeMap<String, usize>,
    },
}

fn node_to_doc(node: &TreeNode, classes: &[String]) -> NodeDoc {
    match node {
        TreeNode::Leaf { counts } => NodeDoc::Leaf {
            leaf: classes
                .iter()
                .zip(counts)
                .filter(|(_, &c)| c > 0)
                .map(|(name, &c)| (name.clone(), c))
                .collect(),
        },
        TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        } => NodeDoc::Split {
            feature: *feature,
            threshold: *threshold,
            left: Box::new(node_to_doc(left, classes)),
            right: Box::new(node_to_doc(right, classes)),
        },
    }
}

fn node_from_doc(
    doc: NodeDoc,
    classes: &[String],
    dimension: usize,
) -> Result<TreeNode, ClassifierError> {
    match doc {
        NodeDoc::Leaf { leaf } => {
            let mut counts = vec![0; classes.len()];
            for (name, count) in leaf {
                let idx = classes.binary_search(&name).map_err(|_| {
                    ClassifierError::Format(format!("leaf names unknown class `{name}`"))
                })?;
                counts[idx] = count;
            }
            Ok(TreeNode::Leaf { counts })
        }
        NodeDoc::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            if feature >= dimension || !threshold.is_finite() {
                return Err(ClassifierError::Format(format!(
                    "invalid split on feature {feature}"
                )));
            }
            Ok(TreeNode::Split {
                feature,
                threshold,
                left: Box::new(node_from_doc(*left, classes, dimension)?),
                right: Box::new(node_from_doc(*right, classes, dimension)?),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn features_per_split_default() {
        let c = ForestConfig::default();
        assert_eq!(c.resolved_features_per_split(16), 4);
        assert_eq!(c.resolved_features_per_split(1024), 32);
        assert_eq!(c.resolved_features_per_split(1), 1);
        assert_eq!(c.resolved_features_per_split(2), 1);
        let wide = ForestConfig {
            features_per_split: Some(100),
            ..c
        };
        assert_eq!(wide.resolved_features_per_split(8), 8);
    }

    #[test]
    fn single_class() {
        let ds = LabeledDataset::from_rows(
            vec![vec![1.0], vec![2.0], vec![3.0]],
            labels(&["x", "x", "x"]),
        )
        .unwrap();
        let m = train_random_forest(
            &ds,
            &ForestConfig {
                n_trees: 7,
                ..Default::default()
            },
        )
        .unwrap();
        for x in [[-10.0], [2.5], [99.0]] {
            assert_eq!(m.predict(&x).unwrap(), "x");
        }
        m.check_invariants().unwrap();
        assert_eq!(m.trees().len(), 7);
    }

    #[test]
    fn single_tree_memorizes_consistent_data() {
        // XOR-like layout plus noise dimensions.
        let mut rows = Vec::new();
        let mut ys = Vec::new();
        for i in 0..40 {
            let a = (i % 2) as f64;
            let b = ((i / 2) % 2) as f64;
            rows.push(vec![a, b, (i as f64 * 0.37).sin(), (i as f64 * 1.3).cos()]);
            ys.push(
                if a == b {
                    "even"
                } else {
                    "odd"
                }
                .to_string(),
            );
        }
        let ds = LabeledDataset::from_rows(rows, ys).unwrap();
        let cfg = ForestConfig {
            n_trees: 1,
            max_depth: None,
            bootstrap: false,
            ..Default::default()
        };
        let m = train_random_forest(&ds, &cfg).unwrap();
        for (x, y) in ds.features().iter().zip(ds.labels()) {
            assert_eq!(&m.predict(x).unwrap(), y);
        }
    }

    #[test]
    fn vote_tie_goes_to_smallest_class() {
        let leaf = |a, b| TreeNode::Leaf { counts: vec![a, b] };
        let m = ForestModel {
            classes: labels(&["A", "B"]),
            dimension: 1,
            trees: vec![
                DecisionTree { root: leaf(1, 0) },
                DecisionTree { root: leaf(0, 1) },
                DecisionTree { root: leaf(3, 0) },
                DecisionTree { root: leaf(0, 2) },
            ],
            config: ForestConfig {
                n_trees: 4,
                ..Default::default()
            },
        };
        assert_eq!(m.predict_with_vote(&[0.0]).unwrap(), ("A".to_string(), 0.5));
        // Leaf tie inside one tree also resolves to A.
        let t = DecisionTree { root: leaf(2, 2) };
        assert_eq!(t.predict_index(&[0.0]), 0);
    }

    #[test]
    fn all_trees_agree() {
        let ds = LabeledDataset::from_rows(
            vec![vec![0.0], vec![0.1], vec![5.0], vec![5.1]],
            labels(&["lo", "lo", "hi", "hi"]),
        )
        .unwrap();
        let m = train_random_forest(
            &ds,
            &ForestConfig {
                n_trees: 9,
                bootstrap: false,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(
            m.predict_with_vote(&[-1.0]).unwrap(),
            ("lo".to_string(), 1.0)
        );
        assert_eq!(
            m.predict_with_vote(&[9.0]).unwrap(),
            ("hi".to_string(), 1.0)
        );
        assert!(matches!(
            m.predict(&[1.0, 2.0]),
            Err(ClassifierError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn depth_and_leaf_limits() {
        let rows: Vec<Vec<f64>> = (0..32).map(|i| vec![i as f64]).collect();
        let ys: Vec<String> = (0..32)
            .map(|i| if i % 2 == 0 { "a" } else { "b" }.to_string())
            .collect();
        let ds = LabeledDataset::from_rows(rows, ys).unwrap();
        let shallow = ForestConfig {
            n_trees: 1,
            max_depth: Some(2),
            bootstrap: false,
            ..Default::default()
        };
        let m = train_random_forest(&ds, &shallow).unwrap();
        assert!(m.trees()[0].root.depth() <= 2);
        let big_leaves = ForestConfig {
            n_trees: 1,
            max_depth: None,
            min_samples_leaf: 5,
            bootstrap: false,
            ..Default::default()
        };
        let m = train_random_forest(&ds, &big_leaves).unwrap();
        for counts in m.trees()[0].root.leaves() {
            assert!(counts.iter().sum::<usize>() >= 5);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![(i * 7 % 13) as f64, (i * 3 % 11) as f64, i as f64])
            .collect();
        let ys: Vec<String> = (0..50).map(|i| format!("c{}", i % 3)).collect();
        let ds = LabeledDataset::from_rows(rows, ys).unwrap();
        let cfg = ForestConfig {
            n_trees: 10,
            ..Default::default()
        };
        assert_eq!(
            train_random_forest(&ds, &cfg).unwrap(),
            train_random_forest(&ds, &cfg).unwrap()
        );
        let other = ForestConfig { seed: 7, ..cfg };
        assert_ne!(
            train_random_forest(&ds, &other).unwrap().trees(),
            train_random_forest(
                &ds,
                &ForestConfig {
                    n_trees: 10,
                    ..Default::default()
                }
            )
            .unwrap()
            .trees()
        );
    }

    #[test]
    fn config_validation() {
        let ds = LabeledDataset::from_rows(vec![vec![0.0]], labels(&["a"])).unwrap();
        assert!(train_random_forest(
            &ds,
            &ForestConfig {
                n_trees: 0,
                ..Default::default()
            }
        )
        .is_err());
        assert!(train_random_forest(
            &ds,
            &ForestConfig {
                min_samples_leaf: 0,
                ..Default::default()
            }
        )
        .is_err());
    }
}
