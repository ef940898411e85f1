//! Lightweight classifiers over dense feature vectors.
//!
//! Four model families: multinomial logistic regression and one-vs-rest
//! linear hinge models (both trained with SGD), cosine k-nearest neighbors,
//! and a Gini random forest. Class names are always indexed in
//! lexicographic order, and every tie is broken toward the smallest class.

mod forest;
mod knn;
mod linear;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use forest::{train_random_forest, DecisionTree, ForestConfig, ForestModel, TreeNode};
pub use knn::{knn_predict, KnnModel, DEFAULT_K};
pub use linear::{
    logistic_objective, train_linear_sgd, train_linear_sgd_traced, LinearModel, LossKind,
    TrainConfig,
};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifierError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("need at least {required} classes, found {found}")]
    TooFewClasses { required: usize, found: usize },
    #[error("k = {k} is outside 1..={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid model document: {0}")]
    Format(String),
}

/// Feature rows with aligned class labels and example ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    features: Vec<Vec<f64>>,
    labels: Vec<String>,
    example_ids: Vec<String>,
}

impl LabeledDataset {
    pub fn new(
        features: Vec<Vec<f64>>,
        labels: Vec<String>,
        example_ids: Vec<String>,
    ) -> Result<Self, ClassifierError> {
        if features.is_empty() {
            return Err(ClassifierError::EmptyDataset);
        }
        if features.len() != labels.len() || features.len() != example_ids.len() {
            return Err(ClassifierError::InvalidDataset(format!(
                "{} feature rows, {} labels, {} example ids",
                features.len(),
                labels.len(),
                example_ids.len()
            )));
        }
        let dimension = features[0].len();
        if dimension == 0 {
            return Err(ClassifierError::InvalidDataset(
                "zero-dimensional features".into(),
            ));
        }
        for row in &features {
            if row.len() != dimension {
                return Err(ClassifierError::DimensionMismatch {
                    expected: dimension,
                    actual: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(ClassifierError::InvalidDataset(
                    "non-finite feature value".into(),
                ));
            }
        }
        Ok(LabeledDataset {
            features,
            labels,
            example_ids,
        })
    }

    /// Dataset with generated ids `0, 1, 2, ...`.
    pub fn from_rows(
        features: Vec<Vec<f64>>,
        labels: Vec<String>,
    ) -> Result<Self, ClassifierError> {
        let ids = (0..features.len()).map(|i| i.to_string()).collect();
        Self::new(features, labels, ids)
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.features[0].len()
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn example_ids(&self) -> &[String] {
        &self.example_ids
    }

    /// Distinct labels in lexicographic order.
    pub fn classes(&self) -> Vec<String> {
        self.labels
            .iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Label of every example as an index into [`classes`](Self::classes).
    pub(crate) fn label_indices(&self, classes: &[String]) -> Vec<usize> {
        self.labels
            .iter()
            .map(|l| {
                classes
                    .binary_search(l)
                    .expect("label present in class list")
            })
            .collect()
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self, ClassifierError> {
        Self::new(
            indices.iter().map(|&i| self.features[i].clone()).collect(),
            indices.iter().map(|&i| self.labels[i].clone()).collect(),
            indices
                .iter()
                .map(|&i| self.example_ids[i].clone())
                .collect(),
        )
    }
}

pub(crate) fn check_dimension(expected: usize, x: &[f64]) -> Result<(), ClassifierError> {
    if x.len() != expected {
        return Err(ClassifierError::DimensionMismatch {
            expected,
            actual: x.len(),
        });
    }
    Ok(())
}

/// Index of the largest value; ties go to the lowest index.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// The five classifier rows of an evaluation report, in display order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    RandomForest,
    LogisticRegression,
    Sgd,
    Svm,
    Knn,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 5] = [
        ClassifierKind::RandomForest,
        ClassifierKind::LogisticRegression,
        ClassifierKind::Sgd,
        ClassifierKind::Svm,
        ClassifierKind::Knn,
    ];

    pub fn display_name(self) -> &'static str {
        match self {
            ClassifierKind::RandomForest => "Random Forest",
            ClassifierKind::LogisticRegression => "Logistic Regression",
            ClassifierKind::Sgd => "SGDClassifier",
            ClassifierKind::Svm => "Support Vector Machine",
            ClassifierKind::Knn => "k-Nearest Neighbors",
        }
    }

    pub fn config_name(self) -> &'static str {
        match self {
            ClassifierKind::RandomForest => "random_forest",
            ClassifierKind::LogisticRegression => "logistic_regression",
            ClassifierKind::Sgd => "sgd",
            ClassifierKind::Svm => "svm",
            ClassifierKind::Knn => "knn",
        }
    }

    pub fn from_config_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.config_name() == name)
    }

    pub fn default_spec(self) -> ClassifierSpec {
        match self {
            ClassifierKind::RandomForest => ClassifierSpec::RandomForest(ForestConfig::default()),
            ClassifierKind::LogisticRegression => {
                ClassifierSpec::LogisticRegression(TrainConfig::default())
            }
            ClassifierKind::Sgd => ClassifierSpec::Sgd(TrainConfig::default()),
            ClassifierKind::Svm => ClassifierSpec::Svm(TrainConfig::default()),
            ClassifierKind::Knn => ClassifierSpec::Knn { k: DEFAULT_K },
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

/// A classifier together with its hyperparameters.
///
/// `Sgd` and `Svm` are both linear one-vs-rest hinge models trained by SGD;
/// they differ only in the hyperparameters each is configured with.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierSpec {
    RandomForest(ForestConfig),
    LogisticRegression(TrainConfig),
    Sgd(TrainConfig),
    Svm(TrainConfig),
    Knn { k: usize },
}

impl ClassifierSpec {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            ClassifierSpec::RandomForest(_) => ClassifierKind::RandomForest,
            ClassifierSpec::LogisticRegression(_) => ClassifierKind::LogisticRegression,
            ClassifierSpec::Sgd(_) => ClassifierKind::Sgd,
            ClassifierSpec::Svm(_) => ClassifierKind::Svm,
            ClassifierSpec::Knn { .. } => ClassifierKind::Knn,
        }
    }

    /// Overrides the seed of seeded classifiers.
    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            ClassifierSpec::RandomForest(c) => {
                ClassifierSpec::RandomForest(ForestConfig { seed, ..c })
            }
            ClassifierSpec::LogisticRegression(c) => {
                ClassifierSpec::LogisticRegression(TrainConfig { seed, ..c })
            }
            ClassifierSpec::Sgd(c) => ClassifierSpec::Sgd(TrainConfig { seed, ..c }),
            ClassifierSpec::Svm(c) => ClassifierSpec::Svm(TrainConfig { seed, ..c }),
            knn @ ClassifierSpec::Knn { .. } => knn,
        }
    }

    pub fn train(&self, dataset: &LabeledDataset) -> Result<TrainedModel, ClassifierError> {
        Ok(match self {
            ClassifierSpec::RandomForest(c) => {
                TrainedModel::Forest(train_random_forest(dataset, c)?)
            }
            ClassifierSpec::LogisticRegression(c) => {
                TrainedModel::Linear(train_linear_sgd(dataset, c, LossKind::Logistic)?)
            }
            ClassifierSpec::Sgd(c) | ClassifierSpec::Svm(c) => {
                TrainedModel::Linear(train_linear_sgd(dataset, c, LossKind::Hinge)?)
            }
            ClassifierSpec::Knn { k } => TrainedModel::Knn(KnnModel::fit(dataset.clone(), *k)?),
        })
    }
}

/// A prediction together with its confidence score.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPrediction {
    pub class: String,
    /// Class probability for logistic models; otherwise an unnormalized
    /// margin (hinge score or vote fraction).
    pub score: f64,
    pub is_probability: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Linear(LinearModel),
    Forest(ForestModel),
    Knn(KnnModel),
}

impl TrainedModel {
    pub fn classes(&self) -> &[String] {
        match self {
            TrainedModel::Linear(m) => m.classes(),
            TrainedModel::Forest(m) => m.classes(),
            TrainedModel::Knn(m) => m.classes(),
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            TrainedModel::Linear(m) => m.dimension(),
            TrainedModel::Forest(m) => m.dimension(),
            TrainedModel::Knn(m) => m.dimension(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<String, ClassifierError> {
        match self {
            TrainedModel::Linear(m) => m.predict(x),
            TrainedModel::Forest(m) => m.predict(x),
            TrainedModel::Knn(m) => m.predict(x),
        }
    }

    pub fn predict_scored(&self, x: &[f64]) -> Result<ScoredPrediction, ClassifierError> {
        match self {
            TrainedModel::Linear(m) => m.predict_scored(x),
            TrainedModel::Forest(m) => {
                let (class, fraction) = m.predict_with_vote(x)?;
                Ok(ScoredPrediction {
                    class,
                    score: fraction,
                    is_probability: false,
                })
            }
            TrainedModel::Knn(m) => {
                let (class, fraction) = m.predict_with_vote(x)?;
                Ok(ScoredPrediction {
                    class,
                    score: fraction,
                    is_probability: false,
                })
            }
        }
    }

    pub fn to_json(&self) -> String {
        let doc = ModelDocument {
            format: MODEL_FORMAT_VERSION,
            body: match self {
                TrainedModel::Linear(m) => ModelBody::Linear(m.to_doc()),
                TrainedModel::Forest(m) => ModelBody::Forest(m.to_doc()),
                TrainedModel::Knn(m) => ModelBody::Knn(m.to_doc()),
            },
        };
        serde_json::to_string_pretty(&doc).expect("model documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, ClassifierError> {
        let doc: ModelDocument =
            serde_json::from_str(text).map_err(|e| ClassifierError::Format(e.to_string()))?;
        if doc.format != MODEL_FORMAT_VERSION {
            return Err(ClassifierError::Format(format!(
                "unsupported format version {} (expected {MODEL_FORMAT_VERSION})",
                doc.format
            )));
        }
        match doc.body {
            ModelBody::Linear(d) => LinearModel::from_doc(d).map(TrainedModel::Linear),
            ModelBody::Forest(d) => ForestModel::from_doc(d).map(TrainedModel::Forest),
            ModelBody::Knn(d) => KnnModel::from_doc(d).map(TrainedModel::Knn),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format: u32,
    #[serde(flatten)]
    body: ModelBody,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum ModelBody {
    Linear(linear::LinearDoc),
    Forest(forest::ForestDoc),
    Knn(knn::KnnDoc),
}

pub(crate) fn check_classes(classes: &[String]) -> Result<(), ClassifierError> {
    if classes.is_empty() {
        return Err(ClassifierError::Format("empty class list".into()));
    }
    if classes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ClassifierError::Format(
            "classes must be sorted and distinct".into(),
        ));
    }
    Ok(())
}
