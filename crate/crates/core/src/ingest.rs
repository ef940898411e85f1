//! Loading and exporting property graphs.
//!
//! Two interchange shapes are supported: JSON Lines with one node or edge
//! record per line, and a pair of CSV files (nodes and edges). Loading is
//! two-pass: every node record is inserted before any edge is resolved, so
//! record order inside a file does not matter.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Read, Write};

use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::graph::{Edge, GraphError, Node, Properties, PropertyGraph, PropertyValue};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: malformed record: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: edge `{edge}` references unknown node `{node}`")]
    DanglingEndpoint {
        line: usize,
        edge: String,
        node: String,
    },
    #[error("{file}: missing required column `{column}`")]
    MissingRequiredColumn {
        file: &'static str,
        column: &'static str,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl IngestError {
    pub fn line(&self) -> Option<usize> {
        match self {
            IngestError::MalformedRecord { line, .. }
            | IngestError::DuplicateId { line, .. }
            | IngestError::DanglingEndpoint { line, .. } => Some(*line),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IngestMode {
    #[default]
    Strict,
    Lenient,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub nodes_loaded: usize,
    pub edges_loaded: usize,
    pub records_skipped: usize,
    /// `(1-based line number, message)` for every skipped record.
    pub warnings: Vec<(usize, String)>,
}

impl IngestReport {
    pub fn summary(&self) -> String {
        format!(
            "nodes={} edges={} skipped={}",
            self.nodes_loaded, self.edges_loaded, self.records_skipped
        )
    }
}

/// Accumulates the graph under construction and applies the strict/lenient
/// policy to every record-level error.
struct Loader {
    mode: IngestMode,
    graph: PropertyGraph,
    report: IngestReport,
}

impl Loader {
    fn new(mode: IngestMode) -> Self {
        Loader {
            mode,
            graph: PropertyGraph::new(),
            report: IngestReport::default(),
        }
    }

    fn reject(&mut self, err: IngestError) -> Result<(), IngestError> {
        match self.mode {
            IngestMode::Strict => Err(err),
            IngestMode::Lenient => {
                let line = err.line().unwrap_or(0);
                log::warn!("skipping record: {err}");
                self.report.records_skipped += 1;
                self.report.warnings.push((line, err.to_string()));
                Ok(())
            }
        }
    }

    fn insert_node(&mut self, line: usize, node: Node) -> Result<(), IngestError> {
        match self.graph.add_node(node) {
            Ok(()) => {
                self.report.nodes_loaded += 1;
                Ok(())
            }
            Err(e) => self.reject(graph_error_at(line, e)),
        }
    }

    fn insert_edge(&mut self, line: usize, edge: Edge) -> Result<(), IngestError> {
        match self.graph.add_edge(edge) {
            Ok(()) => {
                self.report.edges_loaded += 1;
                Ok(())
            }
            Err(e) => self.reject(graph_error_at(line, e)),
        }
    }

    fn finish(self) -> (PropertyGraph, IngestReport) {
        debug_assert_eq!(self.report.nodes_loaded, self.graph.node_count());
        debug_assert_eq!(self.report.edges_loaded, self.graph.edge_count());
        (self.graph, self.report)
    }
}

fn graph_error_at(line: usize, err: GraphError) -> IngestError {
    match err {
        GraphError::DuplicateNodeId(id) | GraphError::DuplicateEdgeId(id) => {
            IngestError::DuplicateId { line, id }
        }
        GraphError::DanglingEndpoint { edge, node } => {
            IngestError::DanglingEndpoint { line, edge, node }
        }
        other => IngestError::MalformedRecord {
            line,
            message: other.to_string(),
        },
    }
}

fn malformed(line: usize, message: impl Into<String>) -> IngestError {
    IngestError::MalformedRecord {
        line,
        message: message.into(),
    }
}

fn parse_property_value(value: &Value) -> Result<PropertyValue, String> {
    match value {
        Value::String(s) => Ok(PropertyValue::Text(s.clone())),
        Value::Bool(b) => Ok(PropertyValue::Boolean(*b)),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(PropertyValue::Integer(i))
            } else if n.is_u64() {
                Err(format!("integer {n} out of 64-bit signed range"))
            } else {
                match n.as_f64() {
                    Some(x) if x.is_finite() => Ok(PropertyValue::Real(x)),
                    _ => Err(format!("non-finite number {n}")),
                }
            }
        }
        Value::Array(items) => items
            .iter()
            .map(|item| match item {
                Value::String(s) => Ok(s.clone()),
                other => Err(format!("list elements must be strings, found {other}")),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(PropertyValue::TextList),
        Value::Null => Err("null property values are not allowed".into()),
        Value::Object(_) => Err("nested objects are not allowed as property values".into()),
    }
}

fn property_value_to_json(value: &PropertyValue) -> Value {
    match value {
        PropertyValue::Text(s) => Value::String(s.clone()),
        PropertyValue::Integer(i) => Value::from(*i),
        PropertyValue::Real(x) => Value::from(*x),
        PropertyValue::Boolean(b) => Value::Bool(*b),
        PropertyValue::TextList(items) => {
            Value::Array(items.iter().cloned().map(Value::String).collect())
        }
    }
}

fn required_str<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a str, String> {
    match obj.get(key) {
        Some(Value::String(s)) => Ok(s),
        Some(_) => Err(format!("field `{key}` must be a string")),
        None => Err(format!("missing field `{key}`")),
    }
}

fn parse_properties(obj: &Map<String, Value>) -> Result<Properties, String> {
    match obj.get("properties") {
        None => Ok(Properties::new()),
        Some(Value::Object(props)) => props
            .iter()
            .map(|(k, v)| {
                parse_property_value(v)
                    .map(|pv| (k.clone(), pv))
                    .map_err(|e| format!("property `{k}`: {e}"))
            })
            .collect(),
        Some(_) => Err("field `properties` must be an object".into()),
    }
}

enum Record {
    Node(Node),
    Edge(Edge),
}

fn parse_record(text: &str) -> Result<Record, String> {
    let value: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let obj = value.as_object().ok_or("record must be a JSON object")?;
    let properties = parse_properties(obj)?;
    match required_str(obj, "type")? {
        "node" => {
            let labels = match obj.get("labels") {
                None => Vec::new(),
                Some(Value::Array(items)) => items
                    .iter()
                    .map(|l| {
                        l.as_str()
                            .map(str::to_string)
                            .ok_or("labels must be strings")
                    })
                    .collect::<Result<Vec<_>, _>>()?,
                Some(_) => return Err("field `labels` must be an array".into()),
            };
            Ok(Record::Node(Node {
                id: required_str(obj, "id")?.to_string(),
                labels,
                properties,
            }))
        }
        "edge" => Ok(Record::Edge(Edge {
            id: required_str(obj, "id")?.to_string(),
            src: required_str(obj, "src")?.to_string(),
            dst: required_str(obj, "dst")?.to_string(),
            rel_type: required_str(obj, "rel_type")?.to_string(),
            properties,
        })),
        other => Err(format!("unknown record type `{other}`")),
    }
}

/// Loads a graph from JSON Lines. Blank lines are ignored; line numbers in
/// errors and warnings are 1-based physical lines.
pub fn load_jsonl<R: Read>(
    reader: R,
    mode: IngestMode,
) -> Result<(PropertyGraph, IngestReport), IngestError> {
    let mut loader = Loader::new(mode);
    let mut edges = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let text = match line {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::InvalidData => {
                loader.reject(malformed(line_no, "invalid UTF-8"))?;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        if text.trim().is_empty() {
            continue;
        }
        match parse_record(&text) {
            Ok(Record::Node(node)) => loader.insert_node(line_no, node)?,
            Ok(Record::Edge(edge)) => edges.push((line_no, edge)),
            Err(message) => loader.reject(malformed(line_no, message))?,
        }
    }
    for (line_no, edge) in edges {
        loader.insert_edge(line_no, edge)?;
    }
    Ok(loader.finish())
}

#[derive(Serialize)]
struct NodeRecord<'a> {
    #[serde(rename = "type")]
    kind: &'static str,
    id: &'a str,
    labels: &'a [String],
    properties: Value,
}

#[derive(Serialize)]
struct EdgeRecord<'a> {
    #[serde(rename = "type")]
    kind: &'static str,
    id: &'a str,
    src: &'a str,
    dst: &'a str,
    rel_type: &'a str,
    properties: Value,
}

/// Writes nodes then edges, each in ascending id order. Returns the number
/// of records written.
pub fn export_jsonl<W: Write>(graph: &PropertyGraph, mut writer: W) -> std::io::Result<usize> {
    let mut count = 0;
    for node in graph.nodes() {
        let record = NodeRecord {
            kind: "node",
            id: &node.id,
            labels: &node.labels,
            properties: properties_to_json(&node.properties),
        };
        serde_json::to_writer(&mut writer, &record)?;
        writer.write_all(b"\n")?;
        count += 1;
    }
    for edge in graph.edges() {
        let record = EdgeRecord {
            kind: "edge",
            id: &edge.id,
            src: &edge.src,
            dst: &edge.dst,
            rel_type: &edge.rel_type,
            properties: properties_to_json(&edge.properties),
        };
        serde_json::to_writer(&mut writer, &record)?;
        writer.write_all(b"\n")?;
        count += 1;
    }
    writer.flush()?;
    Ok(count)
}

fn properties_to_json(props: &Properties) -> Value {
    Value::Object(
        props
            .iter()
            .map(|(k, v)| (k.clone(), property_value_to_json(v)))
            .collect(),
    )
}

/// Column layout of one CSV file: positions of the reserved columns and the
/// remaining property columns.
struct CsvLayout {
    reserved: Vec<usize>,
    properties: Vec<(usize, String)>,
}

fn csv_layout(
    file: &'static str,
    headers: &csv::StringRecord,
    required: &[&'static str],
) -> Result<CsvLayout, IngestError> {
    let mut seen = BTreeSet::new();
    for h in headers.iter() {
        if h.is_empty() {
            return Err(malformed(1, format!("{file}: empty column name in header")));
        }
        if !seen.insert(h) {
            return Err(malformed(1, format!("{file}: duplicate column `{h}`")));
        }
    }
    let mut reserved = Vec::with_capacity(required.len());
    for column in required {
        let pos = headers
            .iter()
            .position(|h| h == *column)
            .ok_or(IngestError::MissingRequiredColumn { file, column })?;
        reserved.push(pos);
    }
    let properties = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| !reserved.contains(i))
        .map(|(i, h)| (i, h.to_string()))
        .collect();
    Ok(CsvLayout {
        reserved,
        properties,
    })
}

fn csv_properties(record: &csv::StringRecord, layout: &CsvLayout) -> Properties {
    layout
        .properties
        .iter()
        .filter_map(|(i, name)| {
            let cell = record.get(*i).unwrap_or("");
            (!cell.is_empty()).then(|| (name.clone(), PropertyValue::Text(cell.to_string())))
        })
        .collect()
}

fn csv_line(record: &csv::StringRecord, fallback: usize) -> usize {
    record
        .position()
        .map(|p| p.line() as usize)
        .unwrap_or(fallback)
}

/// Reads every data row; a row that fails to parse is rejected (or skipped
/// in lenient mode) and reading continues with the next row.
fn read_csv_rows<R: Read>(
    loader: &mut Loader,
    file: &'static str,
    reader: &mut csv::Reader<R>,
) -> Result<Vec<csv::StringRecord>, IngestError> {
    let mut rows = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut record) {
            Ok(true) => rows.push(record.clone()),
            Ok(false) => break,
            Err(e) => {
                let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
                let fatal = !matches!(
                    e.kind(),
                    csv::ErrorKind::Utf8 { .. } | csv::ErrorKind::UnequalLengths { .. }
                );
                loader.reject(malformed(line, format!("{file}: {e}")))?;
                if fatal {
                    break;
                }
            }
        }
    }
    Ok(rows)
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader)
}

fn headers_of<R: Read>(
    file: &'static str,
    reader: &mut csv::Reader<R>,
) -> Result<csv::StringRecord, IngestError> {
    reader.headers().cloned().map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => IngestError::Io(io),
        other => malformed(1, format!("{file}: {other:?}")),
    })
}

/// Loads a graph from a nodes CSV (`id,labels,...`) and an edges CSV
/// (`id,src,dst,rel_type,...`). Labels are `;`-separated. Every other
/// column becomes a text property; empty cells produce no property. Line
/// numbers in messages refer to the file named in the message.
pub fn load_csv<N: Read, E: Read>(
    nodes: N,
    edges: E,
    mode: IngestMode,
) -> Result<(PropertyGraph, IngestReport), IngestError> {
    let mut loader = Loader::new(mode);

    let mut node_reader = csv_reader(nodes);
    let node_headers = headers_of("nodes", &mut node_reader)?;
    let node_layout = csv_layout("nodes", &node_headers, &["id", "labels"])?;
    let mut edge_reader = csv_reader(edges);
    let edge_headers = headers_of("edges", &mut edge_reader)?;
    let edge_layout = csv_layout("edges", &edge_headers, &["id", "src", "dst", "rel_type"])?;

    for row in read_csv_rows(&mut loader, "nodes", &mut node_reader)? {
        let line = csv_line(&row, 0);
        let cell = |i: usize| row.get(node_layout.reserved[i]).unwrap_or("");
        let labels = cell(1)
            .split(';')
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        let node = Node {
            id: cell(0).to_string(),
            labels,
            properties: csv_properties(&row, &node_layout),
        };
        loader.insert_node(line, node)?;
    }

    for row in read_csv_rows(&mut loader, "edges", &mut edge_reader)? {
        let line = csv_line(&row, 0);
        let cell = |i: usize| row.get(edge_layout.reserved[i]).unwrap_or("").to_string();
        let edge = Edge {
            id: cell(0),
            src: cell(1),
            dst: cell(2),
            rel_type: cell(3),
            properties: csv_properties(&row, &edge_layout),
        };
        loader.insert_edge(line, edge)?;
    }

    Ok(loader.finish())
}
