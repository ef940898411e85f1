//! Cosine k-nearest neighbors.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{check_classes, check_dimension, ClassifierError, LabeledDataset};
use crate::embedding::l2_norm;

pub const DEFAULT_K: usize = 5;

/// Majority vote over the `k` training examples with the smallest cosine
/// distance (`1 - cosine similarity`). Distance ties are broken by example
/// id; vote ties by smaller summed distance, then by class name.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    train: LabeledDataset,
    norms: Vec<f64>,
    classes: Vec<String>,
    k: usize,
}

impl KnnModel {
    pub fn fit(train: LabeledDataset, k: usize) -> Result<Self, ClassifierError> {
        if k == 0 || k > train.len() {
            return Err(ClassifierError::KOutOfRange { k, n: train.len() });
        }
        let norms = train.features().iter().map(|r| l2_norm(r)).collect();
        let classes = train.classes();
        Ok(KnnModel {
            train,
            norms,
            classes,
            k,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn dimension(&self) -> usize {
        self.train.dimension()
    }

    pub fn training_data(&self) -> &LabeledDataset {
        &self.train
    }

    fn distance(&self, i: usize, query: &[f64], query_norm: f64) -> f64 {
        let denom = self.norms[i] * query_norm;
        if denom == 0.0 {
            return 1.0;
        }
        let dot: f64 = self.train.features()[i]
            .iter()
            .zip(query)
            .map(|(a, b)| a * b)
            .sum();
        1.0 - (dot / denom).clamp(-1.0, 1.0)
    }

    /// Predicted class and the fraction of the `k` votes it received.
    pub fn predict_with_vote(&self, query: &[f64]) -> Result<(String, f64), ClassifierError> {
        check_dimension(self.dimension(), query)?;
        let query_norm = l2_norm(query);
        let ids = self.train.example_ids();
        let mut ranked: Vec<(f64, usize)> = (0..self.train.len())
            .map(|i| (self.distance(i, query, query_norm), i))
            .collect();
        let by_distance_then_id = |a: &(f64, usize), b: &(f64, usize)| {
            a.0.total_cmp(&b.0).then_with(|| ids[a.1].cmp(&ids[b.1]))
        };
        if self.k < ranked.len() {
            ranked.select_nth_unstable_by(self.k - 1, by_distance_then_id);
            ranked.truncate(self.k);
        }
        ranked.sort_by(by_distance_then_id);

        // class -> (votes, summed distance)
        let mut tally: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
        for (dist, i) in &ranked {
            let entry = tally
                .entry(self.train.labels()[*i].as_str())
                .or_insert((0, 0.0));
            entry.0 += 1;
            entry.1 += dist;
        }
        let (class, (votes, _)) = tally
            .into_iter()
            .reduce(|best, cand| {
                let better =
                    cand.1 .0 > best.1 .0 || (cand.1 .0 == best.1 .0 && cand.1 .1 < best.1 .1);
                if better {
                    cand
                } else {
                    best
                }
            })
            .expect("k >= 1");
        Ok((class.to_string(), votes as f64 / self.k as f64))
    }

    pub fn predict(&self, query: &[f64]) -> Result<String, ClassifierError> {
        self.predict_with_vote(query).map(|(c, _)| c)
    }

    pub(super) fn to_doc(&self) -> KnnDoc {
        KnnDoc {
            classes: self.classes.clone(),
            dimension: self.dimension(),
            k: self.k,
            metric: "cosine".into(),
            dataset: self.train.clone(),
        }
    }

    pub(super) fn from_doc(doc: KnnDoc) -> Result<Self, ClassifierError> {
        check_classes(&doc.classes)?;
        if doc.metric != "cosine" {
            return Err(ClassifierError::Format(format!(
                "unsupported metric `{}`",
                doc.metric
            )));
        }
        let train = LabeledDataset::new(
            doc.dataset.features().to_vec(),
            doc.dataset.labels().to_vec(),
            doc.dataset.example_ids().to_vec(),
        )?;
        if train.dimension() != doc.dimension || train.classes() != doc.classes {
            return Err(ClassifierError::Format(
                "k-NN header does not match its dataset".into(),
            ));
        }
        Self::fit(train, doc.k)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(super) struct KnnDoc {
    classes: Vec<String>,
    dimension: usize,
    k: usize,
    metric: String,
    dataset: LabeledDataset,
}

pub fn knn_predict(
    train: &LabeledDataset,
    query: &[f64],
    k: usize,
) -> Result<String, ClassifierError> {
    KnnModel::fit(train.clone(), k)?.predict(query)
}
