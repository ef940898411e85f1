//! Node classification and relation prediction datasets built from a graph,
//! the textualizer and an embedding provider.
//!
//! Text assembly (`*_texts`) is kept apart from embedding so callers can
//! inspect or pre-embed the exact strings a task will use.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::{ClassifierError, LabeledDataset, TrainedModel};
use crate::embedding::{embed_all_cached, EmbedError, EmbeddingCache, EmbeddingProvider};
use crate::graph::{GraphError, Node, PropertyGraph};
use crate::textualize::{
    normalize_text, property_to_text, textualize_node, textualize_relation_context,
    textualize_relation_context_excluding, TextTemplateConfig,
};

/// Candidate-pair spaces up to this size are enumerated exhaustively;
/// larger ones use rejection sampling.
pub const ENUMERATION_LIMIT: usize = 1_000_000;

/// Rejection sampling gives up after this many attempts per requested pair.
pub const ATTEMPTS_PER_PAIR: usize = 100;

pub const DEFAULT_NEGATIVE_LABEL: &str = "NO_RELATION";

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("no usable examples: {0}")]
    NoUsableExamples(String),
    #[error("could only find {found} of {requested} negative pairs")]
    InsufficientNegatives { requested: usize, found: usize },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("invalid task configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeTarget {
    /// Lexicographically first label of the node.
    PrimaryLabel,
    /// Text of the named property.
    Property(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NodeClassTaskConfig {
    pub target: NodeTarget,
    pub excluded_keys: BTreeSet<String>,
    pub min_class_size: usize,
}

impl Default for NodeClassTaskConfig {
    fn default() -> Self {
        NodeClassTaskConfig {
            target: NodeTarget::PrimaryLabel,
            excluded_keys: BTreeSet::new(),
            min_class_size: 2,
        }
    }
}

impl NodeClassTaskConfig {
    /// Template used for node texts: the configured one plus this task's
    /// exclusions. The target key is always excluded, and labels are
    /// dropped when the label itself is the target.
    pub fn text_config(&self, base: &TextTemplateConfig) -> TextTemplateConfig {
        let mut config = base.clone();
        config
            .excluded_keys
            .extend(self.excluded_keys.iter().cloned());
        match &self.target {
            NodeTarget::PrimaryLabel => config.include_labels = false,
            NodeTarget::Property(key) => {
                config.excluded_keys.insert(key.clone());
            }
        }
        config
    }

    fn label_of(&self, node: &Node) -> Option<String> {
        match &self.target {
            NodeTarget::PrimaryLabel => node.primary_label().map(str::to_string),
            NodeTarget::Property(key) => node
                .properties
                .get(key)
                .map(|v| normalize_text(&property_to_text(v)))
                .filter(|s| !s.is_empty()),
        }
    }
}

/// Which relation types count as positives.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "RelScopeRepr", into = "RelScopeRepr")]
pub enum RelScope {
    #[default]
    All,
    Types(BTreeSet<String>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RelScopeRepr {
    Keyword(String),
    Types(Vec<String>),
}

impl TryFrom<RelScopeRepr> for RelScope {
    type Error = String;
    fn try_from(repr: RelScopeRepr) -> Result<Self, String> {
        match repr {
            RelScopeRepr::Keyword(k) if k == "all" => Ok(RelScope::All),
            RelScopeRepr::Keyword(k) => Err(format!(
                "rel_scope must be \"all\" or a list of types, got \"{k}\""
            )),
            RelScopeRepr::Types(types) if types.is_empty() => Err("rel_scope list is empty".into()),
            RelScopeRepr::Types(types) => Ok(RelScope::Types(types.into_iter().collect())),
        }
    }
}

impl From<RelScope> for RelScopeRepr {
    fn from(scope: RelScope) -> Self {
        match scope {
            RelScope::All => RelScopeRepr::Keyword("all".into()),
            RelScope::Types(types) => RelScopeRepr::Types(types.into_iter().collect()),
        }
    }
}

impl RelScope {
    pub fn types<I, S>(types: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        RelScope::Types(types.into_iter().map(Into::into).collect())
    }

    pub fn contains(&self, rel_type: &str) -> bool {
        match self {
            RelScope::All => true,
            RelScope::Types(types) => types.contains(rel_type),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointConstraint {
    Any,
    /// Endpoint label sets must match those of some in-scope edge.
    #[default]
    LabelCompatible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelationTaskConfig {
    pub rel_scope: RelScope,
    pub negative_ratio: f64,
    pub negative_label: String,
    pub endpoint_constraint: EndpointConstraint,
    pub seed: u64,
}

impl Default for RelationTaskConfig {
    fn default() -> Self {
        RelationTaskConfig {
            rel_scope: RelScope::All,
            negative_ratio: 1.0,
            negative_label: DEFAULT_NEGATIVE_LABEL.into(),
            endpoint_constraint: EndpointConstraint::LabelCompatible,
            seed: 42,
        }
    }
}

impl RelationTaskConfig {
    pub fn validate(&self) -> Result<(), TaskError> {
        if !(self.negative_ratio.is_finite() && self.negative_ratio > 0.0) {
            return Err(TaskError::InvalidConfig(format!(
                "negative_ratio must be positive, got {}",
                self.negative_ratio
            )));
        }
        if self.negative_label.is_empty() {
            return Err(TaskError::InvalidConfig("negative_label is empty".into()));
        }
        Ok(())
    }
}

/// One example before embedding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskExample {
    pub id: String,
    pub label: String,
    pub text: String,
}

/// An embedded task dataset with the texts it was built from.
#[derive(Debug, Clone)]
pub struct AssembledDataset {
    pub dataset: LabeledDataset,
    /// Text of each example, aligned with the dataset rows.
    pub texts: Vec<String>,
    pub provider_calls: usize,
    pub cache_hits: usize,
    pub warnings: Vec<String>,
}

/// Pair id used for relation examples and predictions.
pub fn pair_id(src: &str, dst: &str) -> String {
    format!("{src}\u{2192}{dst}")
}

/// Node texts and labels for node classification, in node-id order.
/// Classes smaller than `min_class_size` are dropped; the second element
/// lists a warning per dropped class.
pub fn node_classification_texts(
    graph: &PropertyGraph,
    config: &NodeClassTaskConfig,
    base: &TextTemplateConfig,
) -> Result<(Vec<TaskExample>, Vec<String>), TaskError> {
    let text_config = config.text_config(base);
    let labeled: Vec<(&Node, String)> = graph
        .nodes()
        .filter_map(|node| config.label_of(node).map(|label| (node, label)))
        .collect();

    let mut sizes: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, label) in &labeled {
        *sizes.entry(label.as_str()).or_default() += 1;
    }
    let mut warnings = Vec::new();
    let kept: BTreeSet<String> = sizes
        .iter()
        .filter(|(class, &size)| {
            let keep = size >= config.min_class_size;
            if !keep {
                let msg = format!("dropping class `{class}` with {size} example(s)");
                log::warn!("{msg}");
                warnings.push(msg);
            }
            keep
        })
        .map(|(class, _)| class.to_string())
        .collect();
    if kept.is_empty() {
        return Err(TaskError::NoUsableExamples(format!(
            "no class has at least {} labeled nodes",
            config.min_class_size
        )));
    }

    let examples = labeled
        .into_iter()
        .filter(|(_, label)| kept.contains(label))
        .map(|(node, label)| TaskExample {
            id: node.id.clone(),
            label,
            text: textualize_node(node, &text_config),
        })
        .collect();
    Ok((examples, warnings))
}

pub fn build_node_classification_dataset(
    graph: &PropertyGraph,
    config: &NodeClassTaskConfig,
    base: &TextTemplateConfig,
    provider: &dyn EmbeddingProvider,
    cache: &EmbeddingCache,
) -> Result<AssembledDataset, TaskError> {
    let (examples, warnings) = node_classification_texts(graph, config, base)?;
    embed_examples(examples, warnings, provider, cache)
}

fn embed_examples(
    examples: Vec<TaskExample>,
    warnings: Vec<String>,
    provider: &dyn EmbeddingProvider,
    cache: &EmbeddingCache,
) -> Result<AssembledDataset, TaskError> {
    let texts: Vec<String> = examples.iter().map(|e| e.text.clone()).collect();
    let embedded = embed_all_cached(&texts, provider, cache)?;
    let mut labels = Vec::with_capacity(examples.len());
    let mut ids = Vec::with_capacity(examples.len());
    for example in examples {
        labels.push(example.label);
        ids.push(example.id);
    }
    let features = embedded
        .vectors
        .into_iter()
        .map(|v| v.into_values())
        .collect();
    Ok(AssembledDataset {
        dataset: LabeledDataset::new(features, labels, ids)?,
        texts,
        provider_calls: embedded.provider_calls,
        cache_hits: embedded.cache_hits,
        warnings,
    })
}

/// Sorted, deduplicated label set used to match endpoint signatures.
fn label_set(node: &Node) -> Vec<&str> {
    let set: BTreeSet<&str> = node.labels.iter().map(String::as_str).collect();
    set.into_iter().collect()
}

/// Ordered pairs `(u, v)`, `u != v`, with no in-scope edge `u -> v`.
///
/// Under [`EndpointConstraint::LabelCompatible`] the label sets of `u` and
/// `v` must equal those of the endpoints of some in-scope edge. Small
/// candidate spaces are enumerated and shuffled; larger ones are sampled by
/// rejection with at most `ATTEMPTS_PER_PAIR * count` draws.
pub fn sample_negative_pairs(
    graph: &PropertyGraph,
    rel_scope: &RelScope,
    count: usize,
    constraint: EndpointConstraint,
    seed: u64,
) -> Result<Vec<(String, String)>, TaskError> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let nodes: Vec<&Node> = graph.nodes().collect();

    // Groups of (sources, allowed destinations). Under `Any` a single group
    // covers every node.
    let groups: Vec<(Vec<&str>, Vec<&str>)> = match constraint {
        EndpointConstraint::Any => {
            let all: Vec<&str> = nodes.iter().map(|n| n.id.as_str()).collect();
            vec![(all.clone(), all)]
        }
        EndpointConstraint::LabelCompatible => {
            let mut by_labels: BTreeMap<Vec<&str>, Vec<&str>> = BTreeMap::new();
            for node in &nodes {
                by_labels
                    .entry(label_set(node))
                    .or_default()
                    .push(node.id.as_str());
            }
            let mut signatures: BTreeMap<Vec<&str>, BTreeSet<Vec<&str>>> = BTreeMap::new();
            for edge in graph.edges().filter(|e| rel_scope.contains(&e.rel_type)) {
                let src = label_set(graph.node(&edge.src).expect("edge endpoints exist"));
                let dst = label_set(graph.node(&edge.dst).expect("edge endpoints exist"));
                signatures.entry(src).or_default().insert(dst);
            }
            signatures
                .into_iter()
                .map(|(src_sig, dst_sigs)| {
                    let dsts = dst_sigs
                        .iter()
                        .flat_map(|sig| by_labels[sig].iter().copied())
                        .collect();
                    (by_labels[&src_sig].clone(), dsts)
                })
                .collect()
        }
    };

    let is_negative =
        |u: &str, v: &str| u != v && !graph.has_edge_between(u, v, |r| rel_scope.contains(r));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space: usize = groups
        .iter()
        .map(|(s, d)| s.len().saturating_mul(d.len()))
        .sum();

    if space <= ENUMERATION_LIMIT {
        let mut candidates: Vec<(&str, &str)> = groups
            .iter()
            .flat_map(|(srcs, dsts)| {
                srcs.iter()
                    .flat_map(move |&u| dsts.iter().map(move |&v| (u, v)))
            })
            .filter(|&(u, v)| is_negative(u, v))
            .collect();
        if candidates.len() < count {
            return Err(TaskError::InsufficientNegatives {
                requested: count,
                found: candidates.len(),
            });
        }
        candidates.shuffle(&mut rng);
        return Ok(candidates[..count]
            .iter()
            .map(|&(u, v)| (u.to_string(), v.to_string()))
            .collect());
    }

    // Groups are drawn in proportion to their share of the candidate space.
    let weights: Vec<(usize, usize)> = groups
        .iter()
        .enumerate()
        .map(|(i, (s, d))| (i, s.len() * d.len()))
        .filter(|&(_, w)| w > 0)
        .collect();
    let mut seen: HashSet<(&str, &str)> = HashSet::new();
    let mut pairs = Vec::with_capacity(count);
    for _ in 0..count.saturating_mul(ATTEMPTS_PER_PAIR) {
        if pairs.len() == count {
            break;
        }
        let &(g, _) = weights
            .choose_weighted(&mut rng, |&(_, w)| w as f64)
            .expect("candidate space is nonempty");
        let (srcs, dsts) = &groups[g];
        let u = *srcs.choose(&mut rng).expect("nonempty group");
        let v = *dsts.choose(&mut rng).expect("nonempty group");
        if is_negative(u, v) && seen.insert((u, v)) {
            pairs.push((u.to_string(), v.to_string()));
        }
    }
    if pairs.len() < count {
        return Err(TaskError::InsufficientNegatives {
            requested: count,
            found: pairs.len(),
        });
    }
    Ok(pairs)
}

/// Positive examples (in-scope edges in edge-id order, each with its own
/// edge hidden from the context) followed by sampled negatives.
pub fn relation_prediction_texts(
    graph: &PropertyGraph,
    config: &RelationTaskConfig,
    text_config: &TextTemplateConfig,
) -> Result<Vec<TaskExample>, TaskError> {
    config.validate()?;
    let positives: Vec<_> = graph
        .edges()
        .filter(|e| config.rel_scope.contains(&e.rel_type))
        .collect();
    if positives.is_empty() {
        return Err(TaskError::NoUsableExamples(
            "no edges of an in-scope relation type".into(),
        ));
    }
    if positives
        .iter()
        .any(|e| e.rel_type == config.negative_label)
    {
        return Err(TaskError::InvalidConfig(format!(
            "negative_label `{}` is also an in-scope relation type",
            config.negative_label
        )));
    }

    let mut examples = Vec::new();
    for edge in &positives {
        let text = textualize_relation_context_excluding(
            graph,
            &edge.src,
            Some(&edge.dst),
            text_config,
            &[&edge.id],
        )?;
        examples.push(TaskExample {
            id: pair_id(&edge.src, &edge.dst),
            label: edge.rel_type.clone(),
            text,
        });
    }

    let count = (config.negative_ratio * positives.len() as f64).round() as usize;
    let negatives = sample_negative_pairs(
        graph,
        &config.rel_scope,
        count,
        config.endpoint_constraint,
        config.seed,
    )?;
    for (src, dst) in negatives {
        examples.push(TaskExample {
            id: pair_id(&src, &dst),
            label: config.negative_label.clone(),
            text: textualize_relation_context(graph, &src, Some(&dst), text_config)?,
        });
    }
    Ok(examples)
}

pub fn build_relation_prediction_dataset(
    graph: &PropertyGraph,
    config: &RelationTaskConfig,
    text_config: &TextTemplateConfig,
    provider: &dyn EmbeddingProvider,
    cache: &EmbeddingCache,
) -> Result<AssembledDataset, TaskError> {
    let examples = relation_prediction_texts(graph, config, text_config)?;
    embed_examples(examples, Vec::new(), provider, cache)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationPrediction {
    pub src: String,
    pub dst: String,
    pub predicted: String,
    /// In `[0, 1]`; a probability for logistic models, otherwise the
    /// classifier's score min-max normalized over the batch.
    pub score: f64,
}

/// Texts for candidate pairs, without exclusions. Pairs that are already
/// connected are scored like any other.
pub fn candidate_pair_texts(
    graph: &PropertyGraph,
    pairs: &[(String, String)],
    text_config: &TextTemplateConfig,
) -> Result<Vec<String>, TaskError> {
    pairs
        .iter()
        .map(|(src, dst)| {
            for id in [src, dst] {
                if !graph.contains_node(id) {
                    return Err(TaskError::UnknownNode(id.clone()));
                }
            }
            Ok(textualize_relation_context(
                graph,
                src,
                Some(dst),
                text_config,
            )?)
        })
        .collect()
}

/// Classifies each candidate pair and returns the predictions sorted by
/// score (descending), ties by pair id.
pub fn predict_missing_relations(
    graph: &PropertyGraph,
    model: &TrainedModel,
    pairs: &[(String, String)],
    text_config: &TextTemplateConfig,
    provider: &dyn EmbeddingProvider,
    cache: &EmbeddingCache,
) -> Result<Vec<RelationPrediction>, TaskError> {
    let dimension = provider.descriptor().dimension;
    if model.dimension() != dimension {
        return Err(ClassifierError::DimensionMismatch {
            expected: model.dimension(),
            actual: dimension,
        }
        .into());
    }
    let texts = candidate_pair_texts(graph, pairs, text_config)?;
    let embedded = embed_all_cached(&texts, provider, cache)?;

    let mut scored = Vec::with_capacity(pairs.len());
    let mut all_probabilities = true;
    for vector in &embedded.vectors {
        let prediction = model.predict_scored(vector.values())?;
        all_probabilities &= prediction.is_probability;
        scored.push(prediction);
    }
    let raw: Vec<f64> = scored.iter().map(|p| p.score).collect();
    let scores = if all_probabilities {
        raw
    } else {
        min_max_normalize(&raw)
    };

    let mut predictions: Vec<RelationPrediction> = pairs
        .iter()
        .zip(scored)
        .zip(scores)
        .map(|(((src, dst), prediction), score)| RelationPrediction {
            src: src.clone(),
            dst: dst.clone(),
            predicted: prediction.class,
            score,
        })
        .collect();
    predictions.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| pair_id(&a.src, &a.dst).cmp(&pair_id(&b.src, &b.dst)))
    });
    Ok(predictions)
}

/// Rescales to `[0, 1]`; a batch of equal values maps to all ones.
fn min_max_normalize(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
        return vec![1.0; values.len()];
    }
    values.iter().map(|v| (v - lo) / (hi - lo)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    fn players_and_countries() -> PropertyGraph {
        let mut g = PropertyGraph::new();
        for id in ["p1", "p2"] {
            g.add_node(Node::new(id).with_label("Player")).unwrap();
        }
        for id in ["c1", "c2"] {
            g.add_node(Node::new(id).with_label("Country")).unwrap();
        }
        g.add_edge(Edge::new("e1", "p1", "c1", "REPRESENTS"))
            .unwrap();
        g.add_edge(Edge::new("e2", "p2", "c2", "REPRESENTS"))
            .unwrap();
        g
    }

    #[test]
    fn label_compatible_pairs_enumerated() {
        let g = players_and_countries();
        let pairs = sample_negative_pairs(
            &g,
            &RelScope::All,
            2,
            EndpointConstraint::LabelCompatible,
            1,
        )
        .unwrap();
        let got: BTreeSet<_> = pairs.into_iter().collect();
        let want: BTreeSet<_> = [("p1", "c2"), ("p2", "c1")]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        assert_eq!(got, want);
        assert!(matches!(
            sample_negative_pairs(
                &g,
                &RelScope::All,
                3,
                EndpointConstraint::LabelCompatible,
                1
            ),
            Err(TaskError::InsufficientNegatives {
                requested: 3,
                found: 2
            })
        ));
    }

    #[test]
    fn any_constraint_space() {
        let g = players_and_countries();
        // 4 * 3 ordered pairs minus the 2 edges.
        let pairs =
            sample_negative_pairs(&g, &RelScope::All, 10, EndpointConstraint::Any, 5).unwrap();
        assert_eq!(pairs.len(), 10);
        assert!(sample_negative_pairs(&g, &RelScope::All, 11, EndpointConstraint::Any, 5).is_err());
        assert!(
            sample_negative_pairs(&g, &RelScope::All, 0, EndpointConstraint::Any, 5)
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn complete_graph_has_no_negatives() {
        let mut g = PropertyGraph::new();
        for id in ["a", "b", "c"] {
            g.add_node(Node::new(id).with_label("N")).unwrap();
        }
        let mut n = 0;
        for u in ["a", "b", "c"] {
            for v in ["a", "b", "c"] {
                if u != v {
                    n += 1;
                    g.add_edge(Edge::new(format!("e{n}"), u, v, "R")).unwrap();
                }
            }
        }
        for constraint in [EndpointConstraint::Any, EndpointConstraint::LabelCompatible] {
            assert!(matches!(
                sample_negative_pairs(&g, &RelScope::All, 1, constraint, 0),
                Err(TaskError::InsufficientNegatives {
                    requested: 1,
                    found: 0
                })
            ));
        }
        // Out-of-scope edges do not block negatives.
        let pairs = sample_negative_pairs(
            &g,
            &RelScope::types(["OTHER"]),
            6,
            EndpointConstraint::Any,
            0,
        )
        .unwrap();
        assert_eq!(pairs.len(), 6);
    }

    #[test]
    fn sampling_is_seeded() {
        let g = players_and_countries();
        let a = sample_negative_pairs(&g, &RelScope::All, 6, EndpointConstraint::Any, 9).unwrap();
        let b = sample_negative_pairs(&g, &RelScope::All, 6, EndpointConstraint::Any, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn primary_label_target_hides_labels() {
        let mut g = PropertyGraph::new();
        g.add_node(
            Node::new("a")
                .with_label("Cat")
                .with_property("name", "Tom"),
        )
        .unwrap();
        g.add_node(
            Node::new("b")
                .with_label("Cat")
                .with_property("name", "Kit"),
        )
        .unwrap();
        g.add_node(Node::new("c").with_label("Dog")).unwrap();
        let (examples, warnings) = node_classification_texts(
            &g,
            &NodeClassTaskConfig::default(),
            &TextTemplateConfig::default(),
        )
        .unwrap();
        assert_eq!(examples.len(), 2);
        assert_eq!(warnings.len(), 1);
        assert_eq!(examples[0].text, "name: Tom.");
        assert!(examples.iter().all(|e| e.label == "Cat"));
    }

    #[test]
    fn property_target_excluded_from_text() {
        let mut g = PropertyGraph::new();
        for (i, role) in ["forward", "keeper", "forward", "keeper"]
            .iter()
            .enumerate()
        {
            g.add_node(
                Node::new(format!("p{i}"))
                    .with_label("Player")
                    .with_property("role", *role)
                    .with_property("desc", format!("plays as {role}")),
            )
            .unwrap();
        }
        g.add_node(Node::new("x").with_label("Player")).unwrap();
        let config = NodeClassTaskConfig {
            target: NodeTarget::Property("role".into()),
            ..Default::default()
        };
        let (examples, _) =
            node_classification_texts(&g, &config, &TextTemplateConfig::default()).unwrap();
        assert_eq!(examples.len(), 4);
        assert!(examples.iter().all(|e| !e.text.contains("role:")));
        assert_eq!(examples[1].text, "Labels: Player. desc: plays as keeper.");
    }

    #[test]
    fn empty_graph_has_no_examples() {
        let g = PropertyGraph::new();
        assert!(matches!(
            node_classification_texts(
                &g,
                &NodeClassTaskConfig::default(),
                &TextTemplateConfig::default()
            ),
            Err(TaskError::NoUsableExamples(_))
        ));
        assert!(matches!(
            relation_prediction_texts(
                &g,
                &RelationTaskConfig::default(),
                &TextTemplateConfig::default()
            ),
            Err(TaskError::NoUsableExamples(_))
        ));
    }

    #[test]
    fn relation_examples_layout() {
        let g = players_and_countries();
        let examples = relation_prediction_texts(
            &g,
            &RelationTaskConfig::default(),
            &TextTemplateConfig::default(),
        )
        .unwrap();
        let ids: Vec<_> = examples.iter().map(|e| e.id.as_str()).collect();
        assert_eq!(&ids[..2], ["p1\u{2192}c1", "p2\u{2192}c2"]);
        assert_eq!(
            examples[0].text,
            "Source: Labels: Player. Target: Labels: Country."
        );
        assert_eq!(examples[2].label, "NO_RELATION");
        assert_eq!(examples.len(), 4);
    }

    #[test]
    fn relation_config_checks() {
        let g = players_and_countries();
        let bad_label = RelationTaskConfig {
            negative_label: "REPRESENTS".into(),
            ..Default::default()
        };
        assert!(matches!(
            relation_prediction_texts(&g, &bad_label, &TextTemplateConfig::default()),
            Err(TaskError::InvalidConfig(_))
        ));
        for ratio in [0.0, -1.0, f64::NAN] {
            let c = RelationTaskConfig {
                negative_ratio: ratio,
                ..Default::default()
            };
            assert!(c.validate().is_err());
        }
    }

    #[test]
    fn rel_scope_serde() {
        let all: RelScope = serde_json::from_str("\"all\"").unwrap();
        assert_eq!(all, RelScope::All);
        let set: RelScope = serde_json::from_str("[\"B\", \"A\"]").unwrap();
        assert_eq!(set, RelScope::types(["A", "B"]));
        assert_eq!(serde_json::to_string(&set).unwrap(), "[\"A\",\"B\"]");
        assert!(serde_json::from_str::<RelScope>("\"some\"").is_err());
        assert!(serde_json::from_str::<RelScope>("[]").is_err());
        let target: NodeTarget = serde_json::from_str("{\"property\": \"role\"}").unwrap();
        assert_eq!(target, NodeTarget::Property("role".into()));
        let target: NodeTarget = serde_json::from_str("\"primary_label\"").unwrap();
        assert_eq!(target, NodeTarget::PrimaryLabel);
    }

    #[test]
    fn min_max() {
        assert_eq!(min_max_normalize(&[2.0, 4.0, 3.0]), vec![0.0, 1.0, 0.5]);
        assert_eq!(min_max_normalize(&[-1.0, -1.0]), vec![1.0, 1.0]);
        assert!(min_max_normalize(&[]).is_empty());
    }
}
