//! Run configuration: one JSON file, paths relative to the file's directory.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use lpg_core::classifiers::{ClassifierKind, ClassifierSpec, ForestConfig, TrainConfig, DEFAULT_K};
use lpg_core::embedding::{
    EmbeddingCache, EmbeddingProvider, HashEmbedder, RemoteConfig, RemoteEmbedder,
    DEFAULT_HASH_DIMENSION, DEFAULT_HASH_SEED,
};
use lpg_core::evaluation::DEFAULT_TEST_FRACTION;
use lpg_core::graph::PropertyGraph;
use lpg_core::ingest::{load_csv, load_jsonl, IngestMode, IngestReport};
use lpg_core::tasks::{NodeClassTaskConfig, RelationTaskConfig};
use lpg_core::textualize::TextTemplateConfig;
use serde::Deserialize;
use serde_json::{Map, Value};

use crate::error::{io_error, CliError};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSource {
    pub jsonl: Option<PathBuf>,
    pub nodes: Option<PathBuf>,
    pub edges: Option<PathBuf>,
}

impl GraphSource {
    pub fn validate(&self) -> Result<(), CliError> {
        match (&self.jsonl, &self.nodes, &self.edges) {
            (Some(_), None, None) | (None, Some(_), Some(_)) => Ok(()),
            _ => Err(CliError::Usage(
                "graph needs either `jsonl` or both `nodes` and `edges`".into(),
            )),
        }
    }

    fn resolve(&mut self, base: &Path) {
        for path in [&mut self.jsonl, &mut self.nodes, &mut self.edges]
            .into_iter()
            .flatten()
        {
            *path = base.join(&*path);
        }
    }

    pub fn load(&self, mode: IngestMode) -> Result<PropertyGraph, CliError> {
        self.load_with_report(mode).map(|(graph, _)| graph)
    }

    pub fn load_with_report(
        &self,
        mode: IngestMode,
    ) -> Result<(PropertyGraph, IngestReport), CliError> {
        let open = |p: &Path| {
            File::open(p)
                .map(BufReader::new)
                .map_err(|e| io_error(p, e))
        };
        let (graph, report) = match (&self.jsonl, &self.nodes, &self.edges) {
            (Some(jsonl), _, _) => load_jsonl(open(jsonl)?, mode)?,
            (None, Some(nodes), Some(edges)) => load_csv(open(nodes)?, open(edges)?, mode)?,
            _ => return Err(CliError::Usage("no graph input given".into())),
        };
        for (line, message) in &report.warnings {
            log::warn!("line {line}: {message}");
        }
        log::info!("loaded graph: {}", report.summary());
        Ok((graph, report))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProviderConfig {
    Hash {
        #[serde(default = "default_hash_dimension")]
        dimension: usize,
        #[serde(default = "default_hash_seed")]
        seed: u64,
    },
    Remote(RemoteConfig),
}

fn default_hash_dimension() -> usize {
    DEFAULT_HASH_DIMENSION
}

fn default_hash_seed() -> u64 {
    DEFAULT_HASH_SEED
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig::Hash {
            dimension: DEFAULT_HASH_DIMENSION,
            seed: DEFAULT_HASH_SEED,
        }
    }
}

impl ProviderConfig {
    /// The remote provider reads its key from the environment.
    pub fn build(&self) -> Result<Box<dyn EmbeddingProvider>, CliError> {
        match self {
            ProviderConfig::Hash { dimension, seed } => HashEmbedder::new(*dimension, *seed)
                .map(|p| Box::new(p) as Box<dyn EmbeddingProvider>)
                .map_err(|e| CliError::Usage(format!("provider: {e}"))),
            ProviderConfig::Remote(config) => RemoteEmbedder::new(config.clone())
                .map(|p| Box::new(p) as Box<dyn EmbeddingProvider>)
                .map_err(|e| CliError::Usage(format!("provider: {e}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub report_text: Option<PathBuf>,
    pub report_json: Option<PathBuf>,
    pub model_dir: Option<PathBuf>,
}

/// The configured task; exactly one per run.
#[derive(Debug, Clone, PartialEq)]
pub enum TaskConfig {
    NodeClassification(NodeClassTaskConfig),
    RelationPrediction(RelationTaskConfig),
}

impl TaskConfig {
    pub fn name(&self) -> &'static str {
        match self {
            TaskConfig::NodeClassification(_) => "node_classification",
            TaskConfig::RelationPrediction(_) => "relation_prediction",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    graph: GraphSource,
    #[serde(default)]
    provider: ProviderConfig,
    #[serde(default)]
    cache: Option<PathBuf>,
    #[serde(default)]
    textualizer: TextTemplateConfig,
    #[serde(default)]
    node_classification: Option<Value>,
    #[serde(default)]
    relation_prediction: Option<Value>,
    #[serde(default)]
    classifiers: Option<Vec<Value>>,
    #[serde(default = "default_test_fraction")]
    test_fraction: f64,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default)]
    output: OutputPaths,
}

fn default_test_fraction() -> f64 {
    DEFAULT_TEST_FRACTION
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub graph: GraphSource,
    pub provider: ProviderConfig,
    pub cache: Option<PathBuf>,
    pub textualizer: TextTemplateConfig,
    pub task: Option<TaskConfig>,
    pub classifiers: Vec<ClassifierSpec>,
    pub test_fraction: f64,
    pub seed: u64,
    pub output: OutputPaths,
}

fn has_seed(value: &Value) -> bool {
    value.get("seed").is_some()
}

/// Parses one `classifiers` entry: a name or `{"name": ..., <params>}`.
/// Sections without their own `seed` take `seed`; `forced_seed` (from the
/// command line) overrides every seed.
fn parse_classifier(
    entry: &Value,
    seed: u64,
    forced_seed: Option<u64>,
) -> Result<ClassifierSpec, CliError> {
    let (name, params) = match entry {
        Value::String(name) => (name.clone(), Map::new()),
        Value::Object(map) => {
            let mut params = map.clone();
            let name = match params.remove("name") {
                Some(Value::String(name)) => name,
                _ => {
                    return Err(CliError::Usage(format!(
                        "classifier entry {entry} needs a string `name`"
                    )))
                }
            };
            (name, params)
        }
        other => {
            return Err(CliError::Usage(format!(
                "classifier entries are names or objects, got {other}"
            )))
        }
    };
    let kind = ClassifierKind::from_config_name(&name).ok_or_else(|| {
        let known: Vec<&str> = ClassifierKind::ALL
            .iter()
            .map(|k| k.config_name())
            .collect();
        CliError::Usage(format!(
            "unknown classifier `{name}` (expected one of: {})",
            known.join(", ")
        ))
    })?;
    let explicit_seed = params.contains_key("seed");
    let bad = |e: serde_json::Error| CliError::Usage(format!("classifier `{name}`: {e}"));
    let params = Value::Object(params);
    let spec = match kind {
        ClassifierKind::RandomForest => {
            ClassifierSpec::RandomForest(ForestConfig::deserialize(&params).map_err(bad)?)
        }
        ClassifierKind::LogisticRegression => {
            ClassifierSpec::LogisticRegression(TrainConfig::deserialize(&params).map_err(bad)?)
        }
        ClassifierKind::Sgd => ClassifierSpec::Sgd(TrainConfig::deserialize(&params).map_err(bad)?),
        ClassifierKind::Svm => ClassifierSpec::Svm(TrainConfig::deserialize(&params).map_err(bad)?),
        ClassifierKind::Knn => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct KnnParams {
                #[serde(default = "default_k")]
                k: usize,
            }
            fn default_k() -> usize {
                DEFAULT_K
            }
            let p = KnnParams::deserialize(&params).map_err(bad)?;
            ClassifierSpec::Knn { k: p.k }
        }
    };
    Ok(match forced_seed {
        Some(s) => spec.with_seed(s),
        None if !explicit_seed => spec.with_seed(seed),
        None => spec,
    })
}

impl RunConfig {
    pub fn load(path: &Path, forced_seed: Option<u64>) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base, forced_seed)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str, base: &Path, forced_seed: Option<u64>) -> Result<Self, CliError> {
        let raw: RawConfig = serde_json::from_str(text)
            .map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
        raw.graph.validate()?;
        let seed = forced_seed.unwrap_or(raw.seed);

        let task = match (raw.node_classification, raw.relation_prediction) {
            (Some(_), Some(_)) => {
                return Err(CliError::Usage(
                    "configure exactly one of `node_classification` and `relation_prediction`"
                        .into(),
                ))
            }
            (Some(v), None) => Some(TaskConfig::NodeClassification(
                NodeClassTaskConfig::deserialize(&v)
                    .map_err(|e| CliError::Usage(format!("node_classification: {e}")))?,
            )),
            (None, Some(v)) => {
                let explicit_seed = has_seed(&v);
                let mut config = RelationTaskConfig::deserialize(&v)
                    .map_err(|e| CliError::Usage(format!("relation_prediction: {e}")))?;
                if forced_seed.is_some() || !explicit_seed {
                    config.seed = seed;
                }
                config
                    .validate()
                    .map_err(|e| CliError::Usage(e.to_string()))?;
                Some(TaskConfig::RelationPrediction(config))
            }
            (None, None) => None,
        };

        let classifiers = match raw.classifiers {
            Some(entries) => entries
                .iter()
                .map(|e| parse_classifier(e, seed, forced_seed))
                .collect::<Result<Vec<_>, _>>()?,
            None => ClassifierKind::ALL
                .iter()
                .map(|k| k.default_spec().with_seed(seed))
                .collect(),
        };
        if classifiers.is_empty() {
            return Err(CliError::Usage("`classifiers` is empty".into()));
        }
        if !(raw.test_fraction > 0.0 && raw.test_fraction < 1.0) {
            return Err(CliError::Usage(format!(
                "test_fraction must be strictly between 0 and 1, got {}",
                raw.test_fraction
            )));
        }
        raw.textualizer
            .validate()
            .map_err(|e| CliError::Usage(format!("textualizer: {e}")))?;

        let mut graph = raw.graph;
        graph.resolve(base);
        let mut output = raw.output;
        for path in [
            &mut output.report_text,
            &mut output.report_json,
            &mut output.model_dir,
        ]
        .into_iter()
        .flatten()
        {
            *path = base.join(&*path);
        }
        Ok(RunConfig {
            graph,
            provider: raw.provider,
            cache: raw.cache.map(|c| base.join(c)),
            textualizer: raw.textualizer,
            task,
            classifiers,
            test_fraction: raw.test_fraction,
            seed,
            output,
        })
    }

    pub fn require_task(&self) -> Result<&TaskConfig, CliError> {
        self.task.as_ref().ok_or_else(|| {
            CliError::Usage(
                "config has neither `node_classification` nor `relation_prediction`".into(),
            )
        })
    }

    /// Opens the configured cache file, or an in-memory cache if none is set.
    pub fn open_cache(&self, provider: &dyn EmbeddingProvider) -> Result<EmbeddingCache, CliError> {
        let descriptor = provider.descriptor().clone();
        match &self.cache {
            Some(path) => {
                let cache = EmbeddingCache::open(path, descriptor)?;
                for warning in cache.load_warnings() {
                    log::warn!("{warning}");
                }
                Ok(cache)
            }
            None => Ok(EmbeddingCache::in_memory(descriptor)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use lpg_core::tasks::{NodeTarget, RelScope};

    fn parse(text: &str) -> Result<RunConfig, CliError> {
        RunConfig::parse(text, Path::new("/cfg"), None)
    }

    #[test]
    fn minimal_config_defaults() {
        let c = parse(r#"{"graph": {"jsonl": "g.jsonl"}}"#).unwrap();
        assert_eq!(c.graph.jsonl.as_deref(), Some(Path::new("/cfg/g.jsonl")));
        assert_eq!(c.provider, ProviderConfig::default());
        assert_eq!(c.classifiers.len(), 5);
        assert_eq!(c.test_fraction, 0.2);
        assert_eq!(c.seed, 42);
        assert!(c.task.is_none());
        assert!(c.require_task().is_err());
    }

    #[test]
    fn full_config() {
        let c = parse(
            r#"{
                "graph": {"nodes": "n.csv", "edges": "/abs/e.csv"},
                "provider": {"kind": "remote", "base_url": "http://h:9", "dimension": 8},
                "cache": "cache/v.bin",
                "textualizer": {"neighbor_cap": 3},
                "relation_prediction": {"rel_scope": ["REPRESENTS"], "negative_ratio": 2.0},
                "classifiers": ["svm", {"name": "random_forest", "n_trees": 7}, {"name": "knn", "k": 3}],
                "test_fraction": 0.3,
                "seed": 7,
                "output": {"report_json": "out/r.json", "model_dir": "models"}
            }"#,
        )
        .unwrap();
        assert_eq!(c.graph.edges.as_deref(), Some(Path::new("/abs/e.csv")));
        assert_eq!(c.cache.as_deref(), Some(Path::new("/cfg/cache/v.bin")));
        let ProviderConfig::Remote(remote) = &c.provider else {
            panic!()
        };
        assert_eq!(remote.dimension, 8);
        assert_eq!(remote.max_batch, 64);
        let Some(TaskConfig::RelationPrediction(task)) = &c.task else {
            panic!()
        };
        assert_eq!(task.rel_scope, RelScope::types(["REPRESENTS"]));
        assert_eq!(task.seed, 7);
        assert_eq!(
            c.classifiers[1],
            ClassifierSpec::RandomForest(ForestConfig {
                n_trees: 7,
                seed: 7,
                ..ForestConfig::default()
            })
        );
        assert_eq!(c.classifiers[2], ClassifierSpec::Knn { k: 3 });
        assert_eq!(c.textualizer.neighbor_cap, 3);
        assert_eq!(
            c.output.model_dir.as_deref(),
            Some(Path::new("/cfg/models"))
        );
    }

    #[test]
    fn seeds_follow_precedence() {
        let text = r#"{"graph": {"jsonl": "g"}, "seed": 5,
            "relation_prediction": {"seed": 9},
            "classifiers": ["svm", {"name": "sgd", "seed": 11}]}"#;
        let c = parse(text).unwrap();
        let Some(TaskConfig::RelationPrediction(task)) = &c.task else {
            panic!()
        };
        assert_eq!(task.seed, 9);
        assert_eq!(
            c.classifiers[0],
            ClassifierSpec::Svm(TrainConfig {
                seed: 5,
                ..TrainConfig::default()
            })
        );
        assert_eq!(
            c.classifiers[1],
            ClassifierSpec::Sgd(TrainConfig {
                seed: 11,
                ..TrainConfig::default()
            })
        );

        let forced = RunConfig::parse(text, Path::new("."), Some(1)).unwrap();
        let Some(TaskConfig::RelationPrediction(task)) = &forced.task else {
            panic!()
        };
        assert_eq!((forced.seed, task.seed), (1, 1));
        assert_eq!(
            forced.classifiers[1],
            ClassifierSpec::Sgd(TrainConfig {
                seed: 1,
                ..TrainConfig::default()
            })
        );
    }

    #[test]
    fn node_task_section() {
        let c = parse(
            r#"{"graph": {"jsonl": "g"}, "node_classification": {"target": {"property": "role"}}}"#,
        )
        .unwrap();
        let Some(TaskConfig::NodeClassification(task)) = &c.task else {
            panic!()
        };
        assert_eq!(task.target, NodeTarget::Property("role".into()));
        assert_eq!(task.min_class_size, 2);
    }

    #[test]
    fn rejected_configs() {
        let cases = [
            r#"{"graph": {}}"#,
            r#"{"graph": {"jsonl": "g", "nodes": "n"}}"#,
            r#"{"graph": {"jsonl": "g"}, "classifiers": ["perceptron"]}"#,
            r#"{"graph": {"jsonl": "g"}, "classifiers": []}"#,
            r#"{"graph": {"jsonl": "g"}, "classifiers": [{"name": "svm", "epochz": 3}]}"#,
            r#"{"graph": {"jsonl": "g"}, "node_classification": {}, "relation_prediction": {}}"#,
            r#"{"graph": {"jsonl": "g"}, "relation_prediction": {"negative_ratio": 0}}"#,
            r#"{"graph": {"jsonl": "g"}, "test_fraction": 1.0}"#,
            r#"{"graph": {"jsonl": "g"}, "provider": {"kind": "magic"}}"#,
            r#"{"graph": {"jsonl": "g"}, "provider": {"kind": "remote", "api_key": "x"}}"#,
            r#"{"graph": {"jsonl": "g"}, "textualizer": {"char_budget": 3}}"#,
            r#"{"graph": {"jsonl": "g"}, "colour": 1}"#,
        ];
        for text in cases {
            let err = parse(text).unwrap_err();
            assert_eq!(err.exit_code(), 1, "{text}: {err}");
        }
        let err = parse(r#"{"graph": {"jsonl": "g"}, "classifiers": ["perceptron"]}"#).unwrap_err();
        assert!(err.to_string().contains("perceptron"));
    }
}
