use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use lpg_core::classifiers::TrainedModel;
use lpg_core::embedding::embed_all_cached;
use lpg_core::evaluation::{render_report, run_evaluation};
use lpg_core::graph::PropertyGraph;
use lpg_core::ingest::{export_jsonl, IngestMode};
use lpg_core::tasks::{
    build_node_classification_dataset, build_relation_prediction_dataset,
    node_classification_texts, predict_missing_relations, relation_prediction_texts,
    AssembledDataset, RelationTaskConfig,
};
use lpg_core::textualize::textualize_node;
use serde::Deserialize;

use crate::config::{GraphSource, RunConfig, TaskConfig};
use crate::error::{io_error, CliError};

fn create_file(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_error(path, e))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    let mut w = create_file(path)?;
    w.write_all(contents.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| io_error(path, e))
}

/// Loads a graph and optionally re-exports it as JSON Lines.
pub fn ingest(
    source: &GraphSource,
    mode: IngestMode,
    out: Option<&Path>,
) -> Result<String, CliError> {
    source.validate()?;
    let (graph, report) = source.load_with_report(mode)?;
    if let Some(path) = out {
        let mut w = create_file(path)?;
        export_jsonl(&graph, &mut w)
            .and_then(|_| w.flush())
            .map_err(|e| io_error(path, e))?;
    }
    Ok(report.summary())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EmbedTarget {
    Nodes,
    Relations,
}

/// Embeds node or relation texts into the configured cache.
pub fn embed(
    config: &RunConfig,
    mode: IngestMode,
    target: EmbedTarget,
) -> Result<String, CliError> {
    let graph = config.graph.load(mode)?;
    let texts: Vec<String> = match (target, &config.task) {
        (EmbedTarget::Nodes, Some(TaskConfig::NodeClassification(task))) => {
            let (examples, warnings) =
                node_classification_texts(&graph, task, &config.textualizer)?;
            warnings.iter().for_each(|w| log::warn!("{w}"));
            examples.into_iter().map(|e| e.text).collect()
        }
        (EmbedTarget::Nodes, _) => graph
            .nodes()
            .map(|n| textualize_node(n, &config.textualizer))
            .collect(),
        (EmbedTarget::Relations, task) => {
            let default = RelationTaskConfig {
                seed: config.seed,
                ..RelationTaskConfig::default()
            };
            let task = match task {
                Some(TaskConfig::RelationPrediction(t)) => t,
                _ => &default,
            };
            relation_prediction_texts(&graph, task, &config.textualizer)?
                .into_iter()
                .map(|e| e.text)
                .collect()
        }
    };
    let provider = config.provider.build()?;
    let cache = config.open_cache(provider.as_ref())?;
    let out = embed_all_cached(&texts, provider.as_ref(), &cache)?;
    Ok(format!(
        "computed={} cached={}",
        out.provider_calls, out.cache_hits
    ))
}

fn assemble(config: &RunConfig, graph: &PropertyGraph) -> Result<AssembledDataset, CliError> {
    let provider = config.provider.build()?;
    let cache = config.open_cache(provider.as_ref())?;
    let built = match config.require_task()? {
        TaskConfig::NodeClassification(task) => build_node_classification_dataset(
            graph,
            task,
            &config.textualizer,
            provider.as_ref(),
            &cache,
        )?,
        TaskConfig::RelationPrediction(task) => build_relation_prediction_dataset(
            graph,
            task,
            &config.textualizer,
            provider.as_ref(),
            &cache,
        )?,
    };
    for w in &built.warnings {
        log::warn!("{w}");
    }
    log::info!(
        "embedded {} texts: computed={} cached={}",
        built.texts.len(),
        built.provider_calls,
        built.cache_hits
    );
    Ok(built)
}

/// Runs the configured task end to end and returns the rendered table.
pub fn evaluate(config: &RunConfig, mode: IngestMode) -> Result<String, CliError> {
    let task = config.require_task()?;
    let graph = config.graph.load(mode)?;
    let built = assemble(config, &graph)?;
    let mut outcome = run_evaluation(
        &built.dataset,
        &config.classifiers,
        config.test_fraction,
        config.seed,
    )?;
    outcome.report.dataset.name = Some(task.name().to_string());
    let table = render_report(&outcome.report);

    if let Some(path) = &config.output.report_text {
        write_file(path, &table)?;
    }
    if let Some(path) = &config.output.report_json {
        write_file(path, &outcome.report.to_json())?;
    }
    if let Some(dir) = &config.output.model_dir {
        for (kind, model) in &outcome.models {
            let path = dir.join(format!("{}.json", kind.config_name()));
            write_file(&path, &model.to_json())?;
        }
    }
    Ok(table)
}

#[derive(Debug, Deserialize)]
struct PairRow {
    src: String,
    dst: String,
}

fn read_pairs(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    reader
        .deserialize::<PairRow>()
        .map(|row| {
            row.map(|r| (r.src, r.dst))
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
        })
        .collect()
}

/// Scores candidate pairs with a saved model and returns CSV text.
pub fn predict(
    config: &RunConfig,
    mode: IngestMode,
    model_path: &Path,
    pairs_path: &Path,
    out: Option<&PathBuf>,
) -> Result<String, CliError> {
    let model_text = fs::read_to_string(model_path).map_err(|e| io_error(model_path, e))?;
    let model = TrainedModel::from_json(&model_text)
        .map_err(|e| CliError::Data(format!("{}: {e}", model_path.display())))?;
    let pairs = read_pairs(pairs_path)?;
    let graph = config.graph.load(mode)?;
    let provider = config.provider.build()?;
    let cache = config.open_cache(provider.as_ref())?;
    let predictions = predict_missing_relations(
        &graph,
        &model,
        &pairs,
        &config.textualizer,
        provider.as_ref(),
        &cache,
    )?;

    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["src", "dst", "predicted", "score"])
        .map_err(|e| CliError::Data(e.to_string()))?;
    for p in &predictions {
        writer
            .write_record([&p.src, &p.dst, &p.predicted, &p.score.to_string()])
            .map_err(|e| CliError::Data(e.to_string()))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Data(e.to_string()))?;
    let text = String::from_utf8(bytes).expect("csv output is utf-8");
    match out {
        Some(path) => {
            write_file(path, &text)?;
            Ok(format!("predictions={}", predictions.len()))
        }
        None => Ok(text.trim_end().to_string()),
    }
}

pub fn print_line(text: &str) -> Result<(), CliError> {
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    writeln!(lock, "{}", text.trim_end()).map_err(|e| CliError::Data(format!("stdout: {e}")))
}
