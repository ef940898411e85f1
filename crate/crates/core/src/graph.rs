//! In-memory labeled property graph.
//!
//! Nodes and edges are keyed by string ids and stored in ordered maps, so
//! iteration order never depends on insertion order. Edges are directed;
//! parallel edges and self-loops are allowed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("duplicate node id `{0}`")]
    DuplicateNodeId(String),
    #[error("duplicate edge id `{0}`")]
    DuplicateEdgeId(String),
    #[error("edge `{edge}` references unknown node `{node}`")]
    DanglingEndpoint { edge: String, node: String },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },
}

/// A single property value. Reals are always finite.
#[derive(Debug, Clone, PartialEq)]
pub enum PropertyValue {
    Text(String),
    Integer(i64),
    Real(f64),
    Boolean(bool),
    TextList(Vec<String>),
}

impl PropertyValue {
    pub fn as_text(&self) -> Option<&str> {
        match self {
            PropertyValue::Text(s) => Some(s),
            _ => None,
        }
    }

    fn validate(&self) -> Result<(), String> {
        match self {
            PropertyValue::Real(x) if !x.is_finite() => Err(format!("non-finite real value {x}")),
            _ => Ok(()),
        }
    }
}

impl From<&str> for PropertyValue {
    fn from(s: &str) -> Self {
        PropertyValue::Text(s.to_string())
    }
}

impl From<String> for PropertyValue {
    fn from(s: String) -> Self {
        PropertyValue::Text(s)
    }
}

impl From<i64> for PropertyValue {
    fn from(v: i64) -> Self {
        PropertyValue::Integer(v)
    }
}

impl From<f64> for PropertyValue {
    fn from(v: f64) -> Self {
        PropertyValue::Real(v)
    }
}

impl From<bool> for PropertyValue {
    fn from(v: bool) -> Self {
        PropertyValue::Boolean(v)
    }
}

pub type Properties = BTreeMap<String, PropertyValue>;

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub labels: Vec<String>,
    pub properties: Properties,
}

impl Node {
    pub fn new(id: impl Into<String>) -> Self {
        Node {
            id: id.into(),
            labels: Vec::new(),
            properties: Properties::new(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.labels.push(label.into());
        self
    }

    pub fn with_property(
        mut self,
        key: impl Into<String>,
        value: impl Into<PropertyValue>,
    ) -> Self {
        self.properties.insert(key.into(), value.into());
        self
    }

    /// Lexicographically-first label, used as the single class of a node.
    pub fn primary_label(&self) -> Option<&str> {
        self.labels.iter().map(String::as_str).min()
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let invalid = |reason: String| GraphError::Invalid {
            what: "node",
            reason,
        };
        if self.id.is_empty() {
            return Err(invalid("empty node id".into()));
        }
        let mut seen = BTreeSet::new();
        for label in &self.labels {
            if !seen.insert(label.as_str()) {
                return Err(invalid(format!(
                    "node `{}` has duplicate label `{label}`",
                    self.id
                )));
            }
        }
        validate_properties(&self.properties)
            .map_err(|r| invalid(format!("node `{}`: {r}", self.id)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: String,
    pub src: String,
    pub dst: String,
    pub rel_type: String,
    pub properties: Properties,
}

impl Edge {
    pub fn new(
        id: impl Into<String>,
        src: impl Into<String>,
        dst: impl Into<String>,
        rel_type: impl Into<String>,
    ) -> Self {
        Edge {
            id: id.into(),
            src: src.into(),
            dst: dst.into(),
            rel_type: rel_type.into(),
            properties: Properties::new(),
        }
    }

    pub fn with_property(
        mut self,
        key: impl Into<String>,
        value: impl Into<PropertyValue>,
    ) -> Self {
        self.properties.insert(key.into(), value.into());
        self
    }

    pub fn is_self_loop(&self) -> bool {
        self.src == self.dst
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let invalid = |reason: String| GraphError::Invalid {
            what: "edge",
            reason,
        };
        if self.id.is_empty() {
            return Err(invalid("empty edge id".into()));
        }
        if self.rel_type.is_empty() {
            return Err(invalid(format!(
                "edge `{}` has empty relation type",
                self.id
            )));
        }
        validate_properties(&self.properties)
            .map_err(|r| invalid(format!("edge `{}`: {r}", self.id)))
    }
}

fn validate_properties(props: &Properties) -> Result<(), String> {
    for (key, value) in props {
        if key.is_empty() {
            return Err("empty property key".into());
        }
        value
            .validate()
            .map_err(|r| format!("property `{key}`: {r}"))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Out,
    In,
    Both,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Out => "out",
            Direction::In => "in",
            Direction::Both => "both",
        })
    }
}

/// Outgoing and incoming edge ids of one node.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Adjacency {
    pub outgoing: BTreeSet<String>,
    pub incoming: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PropertyGraph {
    nodes: BTreeMap<String, Node>,
    edges: BTreeMap<String, Edge>,
    adjacency: BTreeMap<String, Adjacency>,
}

impl PropertyGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, node: Node) -> Result<(), GraphError> {
        node.validate()?;
        if self.nodes.contains_key(&node.id) {
            return Err(GraphError::DuplicateNodeId(node.id));
        }
        self.adjacency.insert(node.id.clone(), Adjacency::default());
        self.nodes.insert(node.id.clone(), node);
        Ok(())
    }

    pub fn add_edge(&mut self, edge: Edge) -> Result<(), GraphError> {
        edge.validate()?;
        for endpoint in [&edge.src, &edge.dst] {
            if !self.nodes.contains_key(endpoint) {
                return Err(GraphError::DanglingEndpoint {
                    edge: edge.id.clone(),
                    node: endpoint.clone(),
                });
            }
        }
        if self.edges.contains_key(&edge.id) {
            return Err(GraphError::DuplicateEdgeId(edge.id));
        }
        self.adjacency
            .get_mut(&edge.src)
            .expect("endpoint checked")
            .outgoing
            .insert(edge.id.clone());
        self.adjacency
            .get_mut(&edge.dst)
            .expect("endpoint checked")
            .incoming
            .insert(edge.id.clone());
        self.edges.insert(edge.id.clone(), edge);
        Ok(())
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn edge(&self, id: &str) -> Option<&Edge> {
        self.edges.get(id)
    }

    pub fn contains_node(&self, id: &str) -> bool {
        self.nodes.contains_key(id)
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    /// Edges in ascending id order.
    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn adjacency(&self, node_id: &str) -> Option<&Adjacency> {
        self.adjacency.get(node_id)
    }

    /// Recomputes the adjacency index from the edge map alone.
    pub fn rebuild_adjacency(&self) -> BTreeMap<String, Adjacency> {
        let mut adjacency: BTreeMap<String, Adjacency> = self
            .nodes
            .keys()
            .map(|id| (id.clone(), Adjacency::default()))
            .collect();
        for edge in self.edges.values() {
            if let Some(adj) = adjacency.get_mut(&edge.src) {
                adj.outgoing.insert(edge.id.clone());
            }
            if let Some(adj) = adjacency.get_mut(&edge.dst) {
                adj.incoming.insert(edge.id.clone());
            }
        }
        adjacency
    }

    /// Checks referential integrity and that the adjacency index matches a
    /// full rebuild.
    pub fn check_invariants(&self) -> Result<(), String> {
        for edge in self.edges.values() {
            if !self.nodes.contains_key(&edge.src) || !self.nodes.contains_key(&edge.dst) {
                return Err(format!("edge `{}` has a dangling endpoint", edge.id));
            }
        }
        if self.rebuild_adjacency() != self.adjacency {
            return Err("adjacency index out of sync with edge set".into());
        }
        Ok(())
    }

    /// Neighbors of `node_id`, each direction sorted by
    /// `(rel_type, neighbor id, edge id)`. `Both` lists outgoing then
    /// incoming entries; a self-loop appears once.
    pub fn neighbors(
        &self,
        node_id: &str,
        direction: Direction,
    ) -> Result<Vec<(&Edge, &Node)>, GraphError> {
        let adj = self
            .adjacency
            .get(node_id)
            .ok_or_else(|| GraphError::UnknownNode(node_id.to_string()))?;
        let mut result = Vec::new();
        if matches!(direction, Direction::Out | Direction::Both) {
            let mut out: Vec<(&Edge, &Node)> = adj
                .outgoing
                .iter()
                .map(|eid| {
                    let e = &self.edges[eid];
                    (e, &self.nodes[&e.dst])
                })
                .collect();
            sort_neighbors(&mut out);
            result.extend(out);
        }
        if matches!(direction, Direction::In | Direction::Both) {
            let skip_loops = direction == Direction::Both;
            let mut inc: Vec<(&Edge, &Node)> = adj
                .incoming
                .iter()
                .map(|eid| &self.edges[eid])
                .filter(|e| !(skip_loops && e.is_self_loop()))
                .map(|e| (e, &self.nodes[&e.src]))
                .collect();
            sort_neighbors(&mut inc);
            result.extend(inc);
        }
        Ok(result)
    }

    /// Whether any edge `src -> dst` exists whose type passes `rel_filter`.
    pub fn has_edge_between(
        &self,
        src: &str,
        dst: &str,
        rel_filter: impl Fn(&str) -> bool,
    ) -> bool {
        self.adjacency.get(src).is_some_and(|adj| {
            adj.outgoing.iter().any(|eid| {
                let e = &self.edges[eid];
                e.dst == dst && rel_filter(&e.rel_type)
            })
        })
    }
}

fn sort_neighbors(entries: &mut [(&Edge, &Node)]) {
    entries.sort_by(|(ea, na), (eb, nb)| {
        (ea.rel_type.as_str(), na.id.as_str(), ea.id.as_str()).cmp(&(
            eb.rel_type.as_str(),
            nb.id.as_str(),
            eb.id.as_str(),
        ))
    });
}
