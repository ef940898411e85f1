//! Stratified splitting, classification metrics and report rendering.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::{
    ClassifierError, ClassifierKind, ClassifierSpec, LabeledDataset, TrainedModel,
};

pub const DEFAULT_TEST_FRACTION: f64 = 0.2;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("class `{class}` has {size} example(s); at least 2 are needed to split")]
    ClassTooSmall { class: String, size: usize },
    #[error("test fraction must be strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("label vectors differ in length ({truth} vs {predicted})")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("no labels to score")]
    Empty,
    #[error("invalid classifier list: {0}")]
    InvalidClassifiers(String),
    #[error("{classifier}: {source}")]
    Classifier {
        classifier: &'static str,
        source: ClassifierError,
    },
}

/// Row indices of a train/test partition, each in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Per class, `round(size * test_fraction)` examples (at least 1, at most
/// `size - 1`) go to the test side, chosen by a seeded shuffle within the
/// class. Classes are visited in lexicographic order.
pub fn stratified_split_indices(
    labels: &[String],
    test_fraction: f64,
    seed: u64,
) -> Result<SplitIndices, EvalError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(EvalError::InvalidFraction(test_fraction));
    }
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, label) in labels.iter().enumerate() {
        by_class.entry(label.as_str()).or_default().push(i);
    }
    if let Some((class, members)) = by_class.iter().find(|(_, m)| m.len() < 2) {
        return Err(EvalError::ClassTooSmall {
            class: class.to_string(),
            size: members.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for members in by_class.values_mut() {
        let size = members.len();
        let n_test = ((size as f64 * test_fraction).round() as usize).clamp(1, size - 1);
        members.shuffle(&mut rng);
        test.extend_from_slice(&members[..n_test]);
        train.extend_from_slice(&members[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test })
}

pub fn stratified_split(
    dataset: &LabeledDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset), EvalError> {
    let split = stratified_split_indices(dataset.labels(), test_fraction, seed)?;
    let subset = |idx: &[usize]| {
        dataset.subset(idx).map_err(|source| EvalError::Classifier {
            classifier: "split",
            source,
        })
    };
    Ok((subset(&split.train)?, subset(&split.test)?))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// Union of observed true and predicted classes, sorted.
    pub classes: Vec<String>,
    /// `counts[i][j]`: examples of class `i` predicted as class `j`.
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn support(&self, class: usize) -> usize {
        self.counts[class].iter().sum()
    }
}

fn check_lengths<T>(y_true: &[T], y_pred: &[T]) -> Result<(), EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch {
            truth: y_true.len(),
            predicted: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(())
}

pub fn confusion_matrix<S: AsRef<str>>(
    y_true: &[S],
    y_pred: &[S],
) -> Result<ConfusionMatrix, EvalError> {
    check_lengths(y_true, y_pred)?;
    let classes: Vec<String> = y_true
        .iter()
        .chain(y_pred)
        .map(|s| s.as_ref().to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index = |s: &S| {
        classes
            .binary_search_by(|c| c.as_str().cmp(s.as_ref()))
            .expect("class collected above")
    };
    let mut counts = vec![vec![0; classes.len()]; classes.len()];
    for (t, p) in y_true.iter().zip(y_pred) {
        counts[index(t)][index(p)] += 1;
    }
    Ok(ConfusionMatrix { classes, counts })
}

/// Accuracy and support-weighted precision, recall and F1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    pub fn from_confusion(matrix: &ConfusionMatrix) -> Metrics {
        let k = matrix.classes.len();
        let n = matrix.total() as f64;
        let correct: usize = (0..k).map(|i| matrix.counts[i][i]).sum();
        let mut precision = 0.0;
        let mut f1 = 0.0;
        for c in 0..k {
            let tp = matrix.counts[c][c] as f64;
            let support = matrix.support(c) as f64;
            if support == 0.0 {
                continue;
            }
            let predicted: usize = (0..k).map(|i| matrix.counts[i][c]).sum();
            let p = if predicted == 0 {
                0.0
            } else {
                tp / predicted as f64
            };
            let r = tp / support;
            let f = if p + r == 0.0 {
                0.0
            } else {
                2.0 * p * r / (p + r)
            };
            precision += support / n * p;
            f1 += support / n * f;
        }
        let accuracy = correct as f64 / n;
        Metrics {
            accuracy,
            precision,
            // Σ (support_c / N) (TP_c / support_c) collapses to Σ TP_c / N.
            recall: accuracy,
            f1,
        }
    }
}

pub fn metrics<S: AsRef<str>>(y_true: &[S], y_pred: &[S]) -> Result<Metrics, EvalError> {
    Ok(Metrics::from_confusion(&confusion_matrix(y_true, y_pred)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetDescriptor {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub examples: usize,
    pub dimension: usize,
    pub class_counts: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitDescriptor {
    pub method: String,
    pub test_fraction: f64,
    pub train_size: usize,
    pub test_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierResult {
    pub classifier: String,
    pub config_name: String,
    #[serde(flatten)]
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub dataset: DatasetDescriptor,
    pub split: SplitDescriptor,
    pub seed: u64,
    /// One entry per classifier, in [`ClassifierKind::ALL`] order.
    pub results: Vec<ClassifierResult>,
}

impl EvaluationReport {
    pub fn result(&self, kind: ClassifierKind) -> Option<&ClassifierResult> {
        self.results
            .iter()
            .find(|r| r.config_name == kind.config_name())
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("reports always serialize");
        text.push('\n');
        text
    }
}

/// Report plus the models trained for it, aligned with `report.results`.
#[derive(Debug, Clone)]
pub struct EvaluationOutcome {
    pub report: EvaluationReport,
    pub models: Vec<(ClassifierKind, TrainedModel)>,
}

/// Trains every classifier on one shared stratified split and scores it on
/// the held-out part. Classifiers train concurrently; results are ordered
/// by classifier kind, not by completion.
pub fn run_evaluation(
    dataset: &LabeledDataset,
    specs: &[ClassifierSpec],
    test_fraction: f64,
    seed: u64,
) -> Result<EvaluationOutcome, EvalError> {
    if specs.is_empty() {
        return Err(EvalError::InvalidClassifiers(
            "no classifiers configured".into(),
        ));
    }
    let mut specs: Vec<&ClassifierSpec> = specs.iter().collect();
    specs.sort_by_key(|s| s.kind());
    if let Some(pair) = specs.windows(2).find(|w| w[0].kind() == w[1].kind()) {
        return Err(EvalError::InvalidClassifiers(format!(
            "`{}` listed more than once",
            pair[0].kind().config_name()
        )));
    }

    let (train, test) = stratified_split(dataset, test_fraction, seed)?;
    let outcomes: Vec<Result<(TrainedModel, Metrics), EvalError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = specs
            .iter()
            .map(|spec| {
                let (train, test) = (&train, &test);
                scope.spawn(move || train_and_score(spec, train, test))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("training thread panicked"))
            .collect()
    });

    let mut results = Vec::with_capacity(specs.len());
    let mut models = Vec::with_capacity(specs.len());
    for (spec, outcome) in specs.iter().zip(outcomes) {
        let (model, metrics) = outcome?;
        let kind = spec.kind();
        results.push(ClassifierResult {
            classifier: kind.display_name().to_string(),
            config_name: kind.config_name().to_string(),
            metrics,
        });
        models.push((kind, model));
    }

    let mut class_counts = BTreeMap::new();
    for label in dataset.labels() {
        *class_counts.entry(label.clone()).or_default() += 1;
    }
    let report = EvaluationReport {
        dataset: DatasetDescriptor {
            name: None,
            examples: dataset.len(),
            dimension: dataset.dimension(),
            class_counts,
        },
        split: SplitDescriptor {
            method: "stratified".into(),
            test_fraction,
            train_size: train.len(),
            test_size: test.len(),
        },
        seed,
        results,
    };
    Ok(EvaluationOutcome { report, models })
}

fn train_and_score(
    spec: &ClassifierSpec,
    train: &LabeledDataset,
    test: &LabeledDataset,
) -> Result<(TrainedModel, Metrics), EvalError> {
    let wrap = |source| EvalError::Classifier {
        classifier: spec.kind().display_name(),
        source,
    };
    let model = spec.train(train).map_err(wrap)?;
    let predicted = test
        .features()
        .iter()
        .map(|x| model.predict(x))
        .collect::<Result<Vec<_>, _>>()
        .map_err(wrap)?;
    let metrics = metrics(test.labels(), &predicted)?;
    Ok((model, metrics))
}

/// Formats `value` with three decimals, rounding half up on its shortest
/// decimal representation (so 0.9975 becomes 0.998).
pub fn format_half_up(value: f64) -> String {
    const DIGITS: usize = 3;
    if !value.is_finite() {
        return value.to_string();
    }
    let text = format!("{}", value.abs());
    let (int_part, frac_part) = text.split_once('.').unwrap_or((&text, ""));
    let mut frac: Vec<u8> = frac_part.bytes().collect();
    let round_up = frac.get(DIGITS).is_some_and(|&d| d >= b'5');
    frac.resize(DIGITS, b'0');
    // Scaled integer, e.g. "0" + "997" -> 997.
    let mut scaled: u128 = format!(
        "{int_part}{}",
        String::from_utf8(frac).expect("ascii digits")
    )
    .parse()
    .expect("decimal digits");
    if round_up {
        scaled += 1;
    }
    let sign = if value < 0.0 && scaled != 0 { "-" } else { "" };
    let unit = 10u128.pow(DIGITS as u32);
    format!(
        "{sign}{}.{:0width$}",
        scaled / unit,
        scaled % unit,
        width = DIGITS
    )
}

/// Pipe-delimited table, one row per classifier in report order.
pub fn render_report(report: &EvaluationReport) -> String {
    let mut out = String::from("| Classifier | Accuracy | Precision | Recall | F1 Score |\n");
    out.push_str("|---|---|---|---|---|\n");
    for r in &report.results {
        let m = &r.metrics;
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} |\n",
            r.classifier,
            format_half_up(m.accuracy),
            format_half_up(m.precision),
            format_half_up(m.recall),
            format_half_up(m.f1)
        ));
    }
    out
}
