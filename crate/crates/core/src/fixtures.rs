//! Seeded synthetic graphs and datasets for tests, demos and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::classifiers::LabeledDataset;
use crate::graph::{Edge, Node, PropertyGraph, PropertyValue};

pub const COUNTRIES: [&str; 8] = [
    "Argentina",
    "Brazil",
    "Canada",
    "Denmark",
    "England",
    "France",
    "Germany",
    "Japan",
];

const POSITIONS: [&str; 4] = ["goalkeeper", "defender", "midfielder", "forward"];

const FILLER: [&str; 24] = [
    "quick", "steady", "tall", "young", "veteran", "calm", "bold", "sharp", "strong", "agile",
    "patient", "loud", "quiet", "fast", "clever", "humble", "brave", "keen", "solid", "swift",
    "gentle", "fierce", "bright", "loyal",
];

/// `n_classes` isotropic Gaussian blobs with unit variance, centers drawn
/// uniformly from `[-10, 10]^dimension`. Labels are `blob0`, `blob1`, ...
pub fn gaussian_blobs(
    n_classes: usize,
    per_class: usize,
    dimension: usize,
    seed: u64,
) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let centers: Vec<Vec<f64>> = (0..n_classes)
        .map(|_| {
            (0..dimension)
                .map(|_| rng.random_range(-10.0..10.0))
                .collect()
        })
        .collect();
    let mut features = Vec::with_capacity(n_classes * per_class);
    let mut labels = Vec::with_capacity(n_classes * per_class);
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..per_class {
            features.push(center.iter().map(|m| m + noise.sample(&mut rng)).collect());
            labels.push(format!("blob{c}"));
        }
    }
    LabeledDataset::from_rows(features, labels).expect("blobs are well formed")
}

fn filler(rng: &mut ChaCha8Rng, words: usize) -> String {
    (0..words)
        .map(|_| FILLER[rng.random_range(0..FILLER.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

/// `players_per_country` players for each of the eight countries. Each
/// player's `desc` mentions its country and it has one `REPRESENTS` edge to
/// that country's node.
pub fn players_and_countries(players_per_country: usize, seed: u64) -> PropertyGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = PropertyGraph::new();
    for (c, name) in COUNTRIES.iter().enumerate() {
        g.add_node(
            Node::new(format!("c{c}"))
                .with_label("Country")
                .with_property("name", *name),
        )
        .expect("unique country id");
    }
    let mut edge = 0;
    for (c, country) in COUNTRIES.iter().enumerate() {
        for k in 0..players_per_country {
            let id = format!("p{c}{k:02}");
            let position = POSITIONS[rng.random_range(0..POSITIONS.len())];
            let desc = format!("{} {position} who plays for {country}", filler(&mut rng, 2));
            g.add_node(
                Node::new(&id)
                    .with_label("Player")
                    .with_property("name", format!("Player {c}-{k}"))
                    .with_property("desc", desc)
                    .with_property("caps", rng.random_range(1..120i64)),
            )
            .expect("unique player id");
            g.add_edge(Edge::new(
                format!("r{edge:03}"),
                &id,
                format!("c{c}"),
                "REPRESENTS",
            ))
            .expect("endpoints exist");
            edge += 1;
        }
    }
    g
}

/// Two classes of `Person` nodes told apart by the `role` property
/// (`coach` or `referee`); each `desc` contains the role word among filler.
pub fn people_with_roles(per_class: usize, seed: u64) -> PropertyGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = PropertyGraph::new();
    for (r, role) in ["coach", "referee"].iter().enumerate() {
        for k in 0..per_class {
            let desc = format!("{} {role} {}", filler(&mut rng, 2), filler(&mut rng, 1));
            g.add_node(
                Node::new(format!("n{r}{k:03}"))
                    .with_label("Person")
                    .with_property("role", *role)
                    .with_property("desc", desc)
                    .with_property("age", rng.random_range(20..70i64)),
            )
            .expect("unique id");
        }
    }
    g
}

fn random_text(rng: &mut ChaCha8Rng) -> String {
    const PIECES: [&str; 10] = [
        "a",
        "Zoë",
        "x,y",
        "\"q\"",
        "line\nbreak",
        " pad ",
        "naïve",
        "漢字",
        "tab\t",
        ";",
    ];
    (0..rng.random_range(0..4))
        .map(|_| PIECES[rng.random_range(0..PIECES.len())])
        .collect()
}

fn random_value(rng: &mut ChaCha8Rng) -> PropertyValue {
    match rng.random_range(0..5) {
        0 => PropertyValue::Text(random_text(rng)),
        1 => PropertyValue::Integer(rng.random_range(-1_000_000..1_000_000)),
        2 => PropertyValue::Real(rng.random_range(-1e6..1e6)),
        3 => PropertyValue::Boolean(rng.random()),
        _ => PropertyValue::TextList(
            (0..rng.random_range(0..3))
                .map(|_| random_text(rng))
                .collect(),
        ),
    }
}

/// Random graph with up to `max_nodes` nodes and `max_edges` edges (self
/// loops and parallel edges included) carrying properties of every kind.
pub fn random_graph(max_nodes: usize, max_edges: usize, seed: u64) -> PropertyGraph {
    const LABELS: [&str; 4] = ["A", "B", "Person", "Ünï"];
    const KEYS: [&str; 5] = ["name", "age", "score", "flag", "tags"];
    const RELS: [&str; 3] = ["KNOWS", "LIKES", "REL_X"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = PropertyGraph::new();
    let n_nodes = rng.random_range(0..=max_nodes);
    for i in 0..n_nodes {
        let mut node = Node::new(format!("n{i}"));
        for label in LABELS {
            if rng.random_bool(0.3) {
                node = node.with_label(label);
            }
        }
        for key in KEYS {
            if rng.random_bool(0.4) {
                node = node.with_property(key, random_value(&mut rng));
            }
        }
        g.add_node(node).expect("unique id");
    }
    if n_nodes > 0 {
        for e in 0..rng.random_range(0..=max_edges) {
            let src = format!("n{}", rng.random_range(0..n_nodes));
            let dst = format!("n{}", rng.random_range(0..n_nodes));
            let mut edge = Edge::new(
                format!("e{e}"),
                src,
                dst,
                RELS[rng.random_range(0..RELS.len())],
            );
            if rng.random_bool(0.3) {
                edge = edge.with_property("weight", random_value(&mut rng));
            }
            g.add_edge(edge).expect("endpoints exist");
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        let blobs = gaussian_blobs(3, 100, 16, 42);
        assert_eq!(
            (blobs.len(), blobs.dimension(), blobs.classes().len()),
            (300, 16, 3)
        );

        let g = players_and_countries(5, 42);
        assert_eq!((g.node_count(), g.edge_count()), (48, 40));
        g.check_invariants().unwrap();

        let g = people_with_roles(50, 42);
        assert_eq!(g.node_count(), 100);
    }

    #[test]
    fn seeded() {
        assert_eq!(random_graph(20, 50, 7), random_graph(20, 50, 7));
        assert_eq!(players_and_countries(5, 1), players_and_countries(5, 1));
        assert_eq!(gaussian_blobs(2, 5, 3, 9), gaussian_blobs(2, 5, 3, 9));
    }
}
