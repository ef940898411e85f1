//! Deterministic serialization of nodes and relation contexts into text.
//!
//! Node template: `Labels: <l1, l2>. <key1>: <v1>. <key2>: <v2>.` with keys
//! in byte order. Relation template: `Source: <node text>` followed by one
//! `Connected via <REL> to <neighbor summary>.` clause per outgoing neighbor
//! (up to `neighbor_cap`) and optionally `Target: <node text>`; a context
//! with nothing to describe is the empty string. Every result is normalized
//! and truncated to the character budget.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::graph::{Direction, GraphError, Node, PropertyGraph, PropertyValue};

pub const MIN_CHAR_BUDGET: usize = 16;

const ELLIPSIS: &str = " \u{2026}";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextTemplateConfig {
    pub include_labels: bool,
    pub excluded_keys: BTreeSet<String>,
    pub neighbor_cap: usize,
    pub char_budget: usize,
    pub include_target: bool,
}

impl Default for TextTemplateConfig {
    fn default() -> Self {
        TextTemplateConfig {
            include_labels: true,
            excluded_keys: BTreeSet::new(),
            neighbor_cap: 10,
            char_budget: 8000,
            include_target: true,
        }
    }
}

impl TextTemplateConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.char_budget < MIN_CHAR_BUDGET {
            return Err(format!(
                "char_budget must be at least {MIN_CHAR_BUDGET}, got {}",
                self.char_budget
            ));
        }
        Ok(())
    }

    pub fn excluding(mut self, key: impl Into<String>) -> Self {
        self.excluded_keys.insert(key.into());
        self
    }
}

/// NFC-normalizes, drops control characters and collapses whitespace runs to
/// single spaces, trimming both ends.
pub fn normalize_text(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    // Controls go before composition so that removing one can never expose
    // a new composable pair.
    let visible = raw.chars().filter(|c| c.is_whitespace() || !c.is_control());
    for c in visible.nfc() {
        if c.is_whitespace() {
            pending_space = !out.is_empty();
        } else {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.push(c);
        }
    }
    out
}

pub fn property_to_text(value: &PropertyValue) -> String {
    match value {
        PropertyValue::Text(s) => s.clone(),
        PropertyValue::Integer(i) => i.to_string(),
        // Debug gives the shortest representation that round-trips.
        PropertyValue::Real(x) => format!("{x:?}"),
        PropertyValue::Boolean(b) => b.to_string(),
        PropertyValue::TextList(items) => items.join(", "),
    }
}

/// Cuts `text` to at most `char_budget` characters. Over-budget text is cut
/// at the last space at or before `char_budget - 2` characters (hard cut if
/// there is none) and gets a trailing `" …"`.
pub fn truncate(text: &str, char_budget: usize) -> String {
    let budget = char_budget.max(MIN_CHAR_BUDGET);
    if text.chars().count() <= budget {
        return text.to_string();
    }
    let keep = budget - 2;
    let byte_end = text
        .char_indices()
        .nth(keep)
        .map(|(i, _)| i)
        .unwrap_or(text.len());
    // A space at char position `keep` itself is "at or before" the limit.
    let window = &text[..byte_end];
    let cut = if text[byte_end..].starts_with(' ') {
        byte_end
    } else {
        match window.rfind(' ') {
            Some(pos) if pos > 0 => pos,
            _ => byte_end,
        }
    };
    let mut out = text[..cut].trim_end().to_string();
    out.push_str(ELLIPSIS);
    out
}

fn node_body(node: &Node, config: &TextTemplateConfig) -> String {
    let mut parts = Vec::new();
    if config.include_labels && !node.labels.is_empty() {
        parts.push(format!("Labels: {}.", node.labels.join(", ")));
    }
    for (key, value) in &node.properties {
        if config.excluded_keys.contains(key) {
            continue;
        }
        let rendered = normalize_text(&property_to_text(value));
        if rendered.is_empty() {
            continue;
        }
        parts.push(format!("{key}: {rendered}."));
    }
    parts.join(" ")
}

pub fn textualize_node(node: &Node, config: &TextTemplateConfig) -> String {
    truncate(
        &normalize_text(&node_body(node, config)),
        config.char_budget,
    )
}

/// Labels plus the value of the first non-empty text property (in key
/// order) of a neighbor.
fn neighbor_summary(node: &Node, config: &TextTemplateConfig) -> String {
    let mut parts = Vec::new();
    if config.include_labels && !node.labels.is_empty() {
        parts.push(node.labels.join(", "));
    }
    let representative = node
        .properties
        .iter()
        .filter(|(k, _)| !config.excluded_keys.contains(*k))
        .filter_map(|(_, v)| v.as_text())
        .map(normalize_text)
        .find(|s| !s.is_empty());
    parts.extend(representative);
    parts.join(" ")
}

/// Relation context for `src`, optionally followed by `dst`. Neighbor
/// clauses follow outgoing-neighbor order.
pub fn textualize_relation_context(
    graph: &PropertyGraph,
    src: &str,
    dst: Option<&str>,
    config: &TextTemplateConfig,
) -> Result<String, GraphError> {
    textualize_relation_context_excluding(graph, src, dst, config, &[])
}

/// As [`textualize_relation_context`], but the edges in `excluded_edges` are
/// left out of the neighbor listing before the cap is applied. Used to hide
/// the edge being predicted from its own context.
pub fn textualize_relation_context_excluding(
    graph: &PropertyGraph,
    src: &str,
    dst: Option<&str>,
    config: &TextTemplateConfig,
    excluded_edges: &[&str],
) -> Result<String, GraphError> {
    let src_node = graph
        .node(src)
        .ok_or_else(|| GraphError::UnknownNode(src.to_string()))?;
    let dst_node = match dst {
        Some(id) => Some(
            graph
                .node(id)
                .ok_or_else(|| GraphError::UnknownNode(id.to_string()))?,
        ),
        None => None,
    };

    let src_body = node_body(src_node, config);
    let clauses: Vec<String> = graph
        .neighbors(src, Direction::Out)?
        .into_iter()
        .filter(|(edge, _)| !excluded_edges.contains(&edge.id.as_str()))
        .take(config.neighbor_cap)
        .map(|(edge, neighbor)| {
            let summary = neighbor_summary(neighbor, config);
            if summary.is_empty() {
                format!("Connected via {}.", edge.rel_type)
            } else {
                format!("Connected via {} to {summary}.", edge.rel_type)
            }
        })
        .collect();
    let dst_body = match (dst_node, config.include_target) {
        (Some(target), true) => Some(node_body(target, config)),
        _ => None,
    };
    // Nothing to describe: the context is empty rather than bare headers.
    if src_body.is_empty() && clauses.is_empty() && dst_body.as_deref().is_none_or(str::is_empty) {
        return Ok(String::new());
    }

    let mut text = format!("Source: {src_body}");
    for clause in clauses {
        text.push(' ');
        text.push_str(&clause);
    }
    if let Some(body) = dst_body {
        text.push_str(&format!(" Target: {body}"));
    }
    Ok(truncate(&normalize_text(&text), config.char_budget))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    fn cfg() -> TextTemplateConfig {
        TextTemplateConfig::default()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_text("  a\t b\n"), "a b");
        assert_eq!(normalize_text(""), "");
        assert_eq!(normalize_text("cafe\u{301}"), "caf\u{e9}");
        assert_eq!(normalize_text("a\u{0}b\u{7}c"), "abc");
        assert_eq!(normalize_text("x \u{0} y"), "x y");
        assert_eq!(normalize_text("\r\n\t "), "");
    }

    #[test]
    fn property_rendering() {
        assert_eq!(property_to_text(&"USA".into()), "USA");
        assert_eq!(property_to_text(&true.into()), "true");
        assert_eq!(property_to_text(&false.into()), "false");
        assert_eq!(
            property_to_text(&PropertyValue::TextList(vec!["a".into(), "b".into()])),
            "a, b"
        );
        assert_eq!(property_to_text(&42i64.into()), "42");
        assert_eq!(property_to_text(&0.1f64.into()), "0.1");
        assert_eq!(property_to_text(&1.0f64.into()), "1.0");
        assert_eq!(property_to_text(&1e300f64.into()), "1e300");
    }

    #[test]
    fn truncate_rules() {
        assert_eq!(truncate("abc", 100), "abc");

        let long: String = (0..2000).map(|i| format!("w{i} ")).collect();
        let long = &long[..10000];
        let t = truncate(long, 8000);
        assert!(t.chars().count() <= 8000);
        assert!(t.ends_with('\u{2026}'));

        let nospace = "x".repeat(50);
        let t = truncate(&nospace, 20);
        assert_eq!(t, format!("{} \u{2026}", "x".repeat(18)));
        assert_eq!(t.chars().count(), 20);
    }

    #[test]
    fn truncate_space_boundary() {
        // Space exactly at char position budget - 2.
        let text = format!("{} tail-tail-tail", "a".repeat(18));
        let t = truncate(&text, 20);
        assert_eq!(t, format!("{} \u{2026}", "a".repeat(18)));
        let text = "aaaa bbbb cccc dddd eeee ffff";
        let t = truncate(text, 16);
        assert_eq!(t, "aaaa bbbb cccc \u{2026}");
        assert!(t.chars().count() <= 16);
    }

    #[test]
    fn truncate_counts_chars_not_bytes() {
        let text = "é".repeat(40);
        let t = truncate(&text, 16);
        assert_eq!(t.chars().count(), 16);
    }

    #[test]
    fn node_template() {
        let n = Node::new("p")
            .with_label("Player")
            .with_property("name", "Megan")
            .with_property("country", "USA");
        assert_eq!(
            textualize_node(&n, &cfg()),
            "Labels: Player. country: USA. name: Megan."
        );
        assert_eq!(textualize_node(&Node::new("e"), &cfg()), "");
        let n = Node::new("b")
            .with_label("X")
            .with_property("bio", "  hi\n there ");
        assert_eq!(textualize_node(&n, &cfg()), "Labels: X. bio: hi there.");
    }

    #[test]
    fn node_exclusions_and_empty_values() {
        let n = Node::new("p")
            .with_label("A")
            .with_label("B")
            .with_property("role", "keeper")
            .with_property("blank", "   ")
            .with_property("tags", PropertyValue::TextList(vec![]));
        let c = cfg().excluding("role");
        assert_eq!(textualize_node(&n, &c), "Labels: A, B.");
        let c = TextTemplateConfig {
            include_labels: false,
            ..cfg()
        };
        assert_eq!(textualize_node(&n, &c), "role: keeper.");
    }

    fn small_graph() -> PropertyGraph {
        let mut g = PropertyGraph::new();
        g.add_node(
            Node::new("n1")
                .with_label("Person")
                .with_property("name", "Al"),
        )
        .unwrap();
        g.add_node(Node::new("n2").with_property("name", "Bo"))
            .unwrap();
        g.add_node(
            Node::new("n3")
                .with_label("City")
                .with_property("name", "Oslo"),
        )
        .unwrap();
        g.add_edge(Edge::new("e1", "n1", "n2", "KNOWS")).unwrap();
        g
    }

    #[test]
    fn relation_context_template() {
        let g = small_graph();
        let t = textualize_relation_context(&g, "n3", None, &cfg()).unwrap();
        assert_eq!(t, "Source: Labels: City. name: Oslo.");
        let t = textualize_relation_context(&g, "n1", Some("n3"), &cfg()).unwrap();
        assert_eq!(
            t,
            "Source: Labels: Person. name: Al. Connected via KNOWS to Bo. Target: Labels: City. name: Oslo."
        );
        let no_target = TextTemplateConfig {
            include_target: false,
            ..cfg()
        };
        let t = textualize_relation_context(&g, "n1", Some("n3"), &no_target).unwrap();
        assert_eq!(
            t,
            "Source: Labels: Person. name: Al. Connected via KNOWS to Bo."
        );
        let t =
            textualize_relation_context_excluding(&g, "n1", Some("n2"), &cfg(), &["e1"]).unwrap();
        assert_eq!(t, "Source: Labels: Person. name: Al. Target: name: Bo.");
        assert!(matches!(
            textualize_relation_context(&g, "zz", None, &cfg()),
            Err(GraphError::UnknownNode(_))
        ));
        assert!(matches!(
            textualize_relation_context(&g, "n1", Some("zz"), &cfg()),
            Err(GraphError::UnknownNode(_))
        ));
    }

    #[test]
    fn neighbor_cap() {
        let mut g = PropertyGraph::new();
        g.add_node(Node::new("hub")).unwrap();
        for i in 0..15 {
            g.add_node(Node::new(format!("m{i:02}")).with_property("name", format!("M{i}")))
                .unwrap();
            g.add_edge(Edge::new(
                format!("e{i}"),
                "hub",
                format!("m{i:02}"),
                "LINK",
            ))
            .unwrap();
        }
        let t = textualize_relation_context(&g, "hub", None, &cfg()).unwrap();
        assert_eq!(t.matches("Connected via").count(), 10);
        assert!(t.contains("to M9."));
        assert!(!t.contains("to M10."));
    }

    #[test]
    fn neighbor_without_summary() {
        let mut g = PropertyGraph::new();
        g.add_node(Node::new("a")).unwrap();
        g.add_node(Node::new("b").with_property("n", 3i64)).unwrap();
        g.add_edge(Edge::new("e", "a", "b", "R")).unwrap();
        let t = textualize_relation_context(&g, "a", None, &cfg()).unwrap();
        assert_eq!(t, "Source: Connected via R.");
    }

    #[test]
    fn bare_pair_has_empty_context() {
        let mut g = PropertyGraph::new();
        g.add_node(Node::new("a")).unwrap();
        g.add_node(Node::new("b")).unwrap();
        assert_eq!(
            textualize_relation_context(&g, "a", Some("b"), &cfg()).unwrap(),
            ""
        );
        g.add_node(Node::new("c").with_label("City")).unwrap();
        assert_eq!(
            textualize_relation_context(&g, "a", Some("c"), &cfg()).unwrap(),
            "Source: Target: Labels: City."
        );
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        let bad = TextTemplateConfig {
            char_budget: 15,
            ..cfg()
        };
        assert!(bad.validate().is_err());
    }
}
