//! Linear models trained by stochastic gradient descent.
//!
//! Logistic: multinomial softmax cross-entropy. Hinge: one binary
//! one-vs-rest hinge model per class, predicted by maximum margin. Both use
//! an L2 penalty on the non-bias weights and the step size
//! `eta_t = eta0 / (1 + lambda * t)`, with `t` counting updates.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    argmax, check_classes, check_dimension, ClassifierError, LabeledDataset, ScoredPrediction,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Logistic,
    Hinge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub eta0: f64,
    pub lambda: f64,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            eta0: 0.1,
            lambda: 1e-4,
            seed: 42,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        if self.epochs == 0 {
            return Err(ClassifierError::InvalidConfig(
                "epochs must be at least 1".into(),
            ));
        }
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return Err(ClassifierError::InvalidConfig(
                "eta0 must be positive".into(),
            ));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(ClassifierError::InvalidConfig(
                "lambda must be non-negative".into(),
            ));
        }
        Ok(())
    }

    fn learning_rate(&self, step: u64) -> f64 {
        self.eta0 / (1.0 + self.lambda * step as f64)
    }
}

/// Per-class weight vectors of length `dimension + 1`; the last component
/// is the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    classes: Vec<String>,
    weights: Vec<Vec<f64>>,
    loss: LossKind,
}

fn dot_with_bias(w: &[f64], x: &[f64]) -> f64 {
    let d = x.len();
    w[..d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[d]
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

impl LinearModel {
    /// Builds a model from explicit weights (sorted classes, one weight
    /// vector of equal length per class).
    pub fn from_weights(
        classes: Vec<String>,
        weights: Vec<Vec<f64>>,
        loss: LossKind,
    ) -> Result<Self, ClassifierError> {
        check_classes(&classes)?;
        if weights.len() != classes.len() {
            return Err(ClassifierError::Format(format!(
                "{} weight vectors for {} classes",
                weights.len(),
                classes.len()
            )));
        }
        let width = weights[0].len();
        if width < 2 || weights.iter().any(|w| w.len() != width) {
            return Err(ClassifierError::Format(
                "weight vectors must share a length of at least 2".into(),
            ));
        }
        if weights.iter().flatten().any(|v| !v.is_finite()) {
            return Err(ClassifierError::Format("non-finite weight".into()));
        }
        Ok(LinearModel {
            classes,
            weights,
            loss,
        })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn loss(&self) -> LossKind {
        self.loss
    }

    pub fn dimension(&self) -> usize {
        self.weights[0].len() - 1
    }

    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>, ClassifierError> {
        check_dimension(self.dimension(), x)?;
        Ok(self.weights.iter().map(|w| dot_with_bias(w, x)).collect())
    }

    pub fn predict(&self, x: &[f64]) -> Result<String, ClassifierError> {
        Ok(self.classes[argmax(&self.scores(x)?)].clone())
    }

    /// Softmax class probabilities; `None` for hinge models.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Option<Vec<f64>>, ClassifierError> {
        let scores = self.scores(x)?;
        Ok((self.loss == LossKind::Logistic).then(|| softmax(&scores)))
    }

    pub fn predict_scored(&self, x: &[f64]) -> Result<ScoredPrediction, ClassifierError> {
        let scores = self.scores(x)?;
        let best = argmax(&scores);
        let (score, is_probability) = match self.loss {
            LossKind::Logistic => (softmax(&scores)[best], true),
            LossKind::Hinge => (scores[best], false),
        };
        Ok(ScoredPrediction {
            class: self.classes[best].clone(),
            score,
            is_probability,
        })
    }

    pub(super) fn to_doc(&self) -> LinearDoc {
        LinearDoc {
            classes: self.classes.clone(),
            dimension: self.dimension(),
            loss: self.loss,
            weights: self.weights.clone(),
        }
    }

    pub(super) fn from_doc(doc: LinearDoc) -> Result<Self, ClassifierError> {
        let model = Self::from_weights(doc.classes, doc.weights, doc.loss)?;
        if model.dimension() != doc.dimension {
            return Err(ClassifierError::Format(format!(
                "declared dimension {} but weights imply {}",
                doc.dimension,
                model.dimension()
            )));
        }
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(super) struct LinearDoc {
    classes: Vec<String>,
    dimension: usize,
    loss: LossKind,
    weights: Vec<Vec<f64>>,
}

/// Mean softmax cross-entropy over `(features, labels)` plus
/// `lambda / 2 * ||W||^2` over the non-bias weights, and its gradient with
/// respect to `weights` (same layout as the weights).
pub fn logistic_objective(
    weights: &[Vec<f64>],
    features: &[Vec<f64>],
    labels: &[usize],
    lambda: f64,
) -> (f64, Vec<Vec<f64>>) {
    let n = features.len() as f64;
    let d = features[0].len();
    let mut loss = 0.0;
    let mut grad: Vec<Vec<f64>> = weights.iter().map(|w| vec![0.0; w.len()]).collect();
    for (x, &y) in features.iter().zip(labels) {
        let scores: Vec<f64> = weights.iter().map(|w| dot_with_bias(w, x)).collect();
        let p = softmax(&scores);
        loss -= p[y].ln();
        for (k, g) in grad.iter_mut().enumerate() {
            let coeff = (p[k] - if k == y { 1.0 } else { 0.0 }) / n;
            for j in 0..d {
                g[j] += coeff * x[j];
            }
            g[d] += coeff;
        }
    }
    loss /= n;
    for (w, g) in weights.iter().zip(grad.iter_mut()) {
        for j in 0..d {
            loss += 0.5 * lambda * w[j] * w[j];
            g[j] += lambda * w[j];
        }
    }
    (loss, grad)
}

fn hinge_objective(
    weights: &[Vec<f64>],
    features: &[Vec<f64>],
    labels: &[usize],
    lambda: f64,
) -> f64 {
    let d = features[0].len();
    let mut loss = 0.0;
    for (x, &y) in features.iter().zip(labels) {
        for (k, w) in weights.iter().enumerate() {
            let sign = if k == y { 1.0 } else { -1.0 };
            loss += (1.0 - sign * dot_with_bias(w, x)).max(0.0);
        }
    }
    loss /= features.len() as f64;
    loss + weights
        .iter()
        .map(|w| 0.5 * lambda * w[..d].iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
}

pub fn train_linear_sgd(
    dataset: &LabeledDataset,
    config: &TrainConfig,
    loss: LossKind,
) -> Result<LinearModel, ClassifierError> {
    train_linear_sgd_traced(dataset, config, loss).map(|(model, _)| model)
}

/// Trains like [`train_linear_sgd`] and also returns the full training
/// objective (mean loss plus L2 penalty) measured after every epoch.
pub fn train_linear_sgd_traced(
    dataset: &LabeledDataset,
    config: &TrainConfig,
    loss: LossKind,
) -> Result<(LinearModel, Vec<f64>), ClassifierError> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(ClassifierError::EmptyDataset);
    }
    let classes = dataset.classes();
    if loss == LossKind::Hinge && classes.len() < 2 {
        return Err(ClassifierError::TooFewClasses {
            required: 2,
            found: classes.len(),
        });
    }
    let labels = dataset.label_indices(&classes);
    let features = dataset.features();
    let d = dataset.dimension();
    let k = classes.len();

    let mut weights = vec![vec![0.0; d + 1]; k];
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut step: u64 = 0;
    let mut trace = Vec::with_capacity(config.epochs);
    let mut scores = vec![0.0; k];

    for _ in 0..config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        for &i in &order {
            let x = &features[i];
            let y = labels[i];
            let eta = config.learning_rate(step);
            step += 1;
            for (s, w) in scores.iter_mut().zip(&weights) {
                *s = dot_with_bias(w, x);
            }
            let coeffs: Vec<f64> = match loss {
                LossKind::Logistic => {
                    let p = softmax(&scores);
                    (0..k)
                        .map(|c| p[c] - if c == y { 1.0 } else { 0.0 })
                        .collect()
                }
                LossKind::Hinge => (0..k)
                    .map(|c| {
                        let sign = if c == y { 1.0 } else { -1.0 };
                        if sign * scores[c] < 1.0 {
                            -sign
                        } else {
                            0.0
                        }
                    })
                    .collect(),
            };
            for (w, coeff) in weights.iter_mut().zip(coeffs) {
                let shrink = 1.0 - eta * config.lambda;
                for j in 0..d {
                    w[j] = w[j] * shrink - eta * coeff * x[j];
                }
                w[d] -= eta * coeff;
            }
        }
        trace.push(match loss {
            LossKind::Logistic => logistic_objective(&weights, features, &labels, config.lambda).0,
            LossKind::Hinge => hinge_objective(&weights, features, &labels, config.lambda),
        });
    }

    if weights.iter().flatten().any(|v| !v.is_finite()) {
        return Err(ClassifierError::InvalidConfig(
            "training diverged to non-finite weights; lower eta0".into(),
        ));
    }
    Ok((
        LinearModel {
            classes,
            weights,
            loss,
        },
        trace,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable_1d() -> LabeledDataset {
        LabeledDataset::from_rows(
            vec![vec![-2.0], vec![-1.0], vec![1.0], vec![2.0]],
            ["N", "N", "P", "P"].iter().map(|s| s.to_string()).collect(),
        )
        .unwrap()
    }

    /// Oracle: some threshold on the single feature separates the classes.
    fn exhaustive_threshold_separates(ds: &LabeledDataset) -> bool {
        let mut xs: Vec<f64> = ds.features().iter().map(|r| r[0]).collect();
        xs.sort_by(f64::total_cmp);
        let candidates: Vec<f64> = xs.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
        candidates.iter().any(|&t| {
            ds.features()
                .iter()
                .zip(ds.labels())
                .all(|(r, l)| (r[0] > t) == (l == "P"))
        })
    }

    fn accuracy(model: &LinearModel, ds: &LabeledDataset) -> f64 {
        let hits = ds
            .features()
            .iter()
            .zip(ds.labels())
            .filter(|(x, l)| &model.predict(x).unwrap() == *l)
            .count();
        hits as f64 / ds.len() as f64
    }

    #[test]
    fn separable_1d_both_losses() {
        let ds = separable_1d();
        assert!(exhaustive_threshold_separates(&ds));
        for loss in [LossKind::Logistic, LossKind::Hinge] {
            let model = train_linear_sgd(&ds, &TrainConfig::default(), loss).unwrap();
            assert_eq!(accuracy(&model, &ds), 1.0, "{loss:?}");
            assert_eq!(model.predict(&[-3.0]).unwrap(), "N");
            // Class index 1 is "P": its weight minus N's weight must be positive.
            let w = model.weights();
            assert!(w[1][0] - w[0][0] > 0.0);
        }
    }

    #[test]
    fn single_class_logistic_is_constant() {
        let ds = LabeledDataset::from_rows(
            vec![vec![1.0, 2.0], vec![-3.0, 0.5]],
            vec!["only".into(), "only".into()],
        )
        .unwrap();
        let model = train_linear_sgd(&ds, &TrainConfig::default(), LossKind::Logistic).unwrap();
        for x in [[0.0, 0.0], [100.0, -100.0]] {
            assert_eq!(model.predict(&x).unwrap(), "only");
            assert_eq!(model.predict_proba(&x).unwrap().unwrap(), vec![1.0]);
        }
        assert!(matches!(
            train_linear_sgd(&ds, &TrainConfig::default(), LossKind::Hinge),
            Err(ClassifierError::TooFewClasses { .. })
        ));
    }

    #[test]
    fn deterministic_weights() {
        let ds = separable_1d();
        let a = train_linear_sgd(&ds, &TrainConfig::default(), LossKind::Logistic).unwrap();
        let b = train_linear_sgd(&ds, &TrainConfig::default(), LossKind::Logistic).unwrap();
        let bits = |m: &LinearModel| {
            m.weights()
                .iter()
                .flatten()
                .map(|v| v.to_bits())
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn zero_weights_tie_break() {
        let m = LinearModel::from_weights(
            vec!["A".into(), "B".into()],
            vec![vec![0.0; 3]; 2],
            LossKind::Hinge,
        )
        .unwrap();
        assert_eq!(m.predict(&[5.0, -1.0]).unwrap(), "A");
    }

    #[test]
    fn probabilities_sum_to_one() {
        let m = LinearModel::from_weights(
            vec!["A".into(), "B".into(), "C".into()],
            vec![
                vec![1.0, -2.0, 0.5],
                vec![0.3, 0.3, 0.0],
                vec![-1.0, 4.0, 2.0],
            ],
            LossKind::Logistic,
        )
        .unwrap();
        let p = m.predict_proba(&[0.7, -0.2]).unwrap().unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        let extreme = m.predict_proba(&[1e4, -1e4]).unwrap().unwrap();
        assert!(extreme.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn dimension_and_config_errors() {
        let ds = separable_1d();
        let model = train_linear_sgd(&ds, &TrainConfig::default(), LossKind::Hinge).unwrap();
        assert!(matches!(
            model.predict(&[1.0, 2.0]),
            Err(ClassifierError::DimensionMismatch {
                expected: 1,
                actual: 2
            })
        ));
        for bad in [
            TrainConfig {
                epochs: 0,
                ..Default::default()
            },
            TrainConfig {
                eta0: 0.0,
                ..Default::default()
            },
            TrainConfig {
                lambda: -1.0,
                ..Default::default()
            },
        ] {
            assert!(train_linear_sgd(&ds, &bad, LossKind::Logistic).is_err());
        }
    }

    #[test]
    fn from_weights_validation() {
        assert!(LinearModel::from_weights(
            vec!["B".into(), "A".into()],
            vec![vec![0.0; 2]; 2],
            LossKind::Hinge
        )
        .is_err());
        assert!(LinearModel::from_weights(
            vec!["A".into()],
            vec![vec![0.0; 2]; 2],
            LossKind::Hinge
        )
        .is_err());
        assert!(LinearModel::from_weights(
            vec!["A".into()],
            vec![vec![f64::NAN, 0.0]],
            LossKind::Hinge
        )
        .is_err());
    }
}
