use lpg_core::classifiers::{
    logistic_objective, train_linear_sgd_traced, train_random_forest, ClassifierKind,
    ClassifierSpec, ForestConfig, LabeledDataset, LossKind, TrainConfig, TrainedModel,
};
use lpg_core::evaluation::{metrics, stratified_split};
use lpg_core::fixtures::gaussian_blobs;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_instance(seed: u64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = (0..3)
        .map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let features = (0..5)
        .map(|_| (0..4).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let labels = (0..5).map(|_| rng.random_range(0..3)).collect();
    (weights, features, labels)
}

#[test]
fn logistic_gradient_matches_finite_differences() {
    const STEP: f64 = 1e-5;
    for seed in 0..5 {
        let (weights, features, labels) = random_instance(seed);
        let lambda = 0.1;
        let (_, grad) = logistic_objective(&weights, &features, &labels, lambda);
        for k in 0..weights.len() {
            for j in 0..weights[k].len() {
                let mut plus = weights.clone();
                plus[k][j] += STEP;
                let mut minus = weights.clone();
                minus[k][j] -= STEP;
                let numeric = (logistic_objective(&plus, &features, &labels, lambda).0
                    - logistic_objective(&minus, &features, &labels, lambda).0)
                    / (2.0 * STEP);
                let rel =
                    (numeric - grad[k][j]).abs() / numeric.abs().max(grad[k][j].abs()).max(1e-8);
                assert!(
                    rel <= 1e-4,
                    "seed {seed} w[{k}][{j}]: analytic {} numeric {numeric}",
                    grad[k][j]
                );
            }
        }
    }
}

#[test]
fn objective_descends_on_separable_data() {
    let blobs = gaussian_blobs(3, 40, 4, 11);
    for loss in [LossKind::Logistic, LossKind::Hinge] {
        let (_, trace) = train_linear_sgd_traced(&blobs, &TrainConfig::default(), loss).unwrap();
        assert_eq!(trace.len(), TrainConfig::default().epochs);
        let first = trace[0];
        let last = *trace.last().unwrap();
        assert!(last < first, "{loss:?}: {first} -> {last}");
        // Late epochs do not blow back up.
        let tail_max = trace[trace.len() - 10..]
            .iter()
            .cloned()
            .fold(f64::MIN, f64::max);
        assert!(
            tail_max <= first,
            "{loss:?}: tail {tail_max} above first epoch {first}"
        );
    }
}

#[test]
fn every_classifier_separates_blobs() {
    let blobs = gaussian_blobs(3, 100, 16, 42);
    let (train, test) = stratified_split(&blobs, 0.2, 42).unwrap();
    assert_eq!(test.len(), 60);
    let specs = [
        ClassifierSpec::RandomForest(ForestConfig {
            n_trees: 50,
            ..ForestConfig::default()
        }),
        ClassifierKind::LogisticRegression.default_spec(),
        ClassifierKind::Sgd.default_spec(),
        ClassifierKind::Svm.default_spec(),
        ClassifierSpec::Knn { k: 5 },
    ];
    for spec in &specs {
        let model = spec.train(&train).unwrap();
        let predicted: Vec<String> = test
            .features()
            .iter()
            .map(|x| model.predict(x).unwrap())
            .collect();
        let m = metrics(test.labels(), &predicted).unwrap();
        assert!(m.accuracy >= 0.95, "{:?}: {}", spec.kind(), m.accuracy);
    }
}

#[test]
fn forest_classifies_its_training_points() {
    let blobs = gaussian_blobs(3, 100, 16, 42);
    let forest = train_random_forest(
        &blobs,
        &ForestConfig {
            n_trees: 50,
            ..ForestConfig::default()
        },
    )
    .unwrap();
    forest.check_invariants().unwrap();
    let correct = blobs
        .features()
        .iter()
        .zip(blobs.labels())
        .filter(|(x, y)| &forest.predict(x).unwrap() == *y)
        .count();
    assert!(correct as f64 / blobs.len() as f64 >= 0.95);
}

#[test]
fn xor_needs_the_forest() {
    // Four clusters in XOR layout: no linear separator, trees handle it.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..200 {
        let a: f64 = rng.random_range(-1.0..1.0);
        let b: f64 = rng.random_range(-1.0..1.0);
        rows.push(vec![a, b]);
        labels.push(
            if (a > 0.0) == (b > 0.0) {
                "same"
            } else {
                "diff"
            }
            .to_string(),
        );
    }
    let ds = LabeledDataset::from_rows(rows, labels).unwrap();
    let (train, test) = stratified_split(&ds, 0.2, 1).unwrap();
    let forest = ClassifierSpec::RandomForest(ForestConfig {
        n_trees: 30,
        features_per_split: Some(2),
        ..ForestConfig::default()
    })
    .train(&train)
    .unwrap();
    let predicted: Vec<String> = test
        .features()
        .iter()
        .map(|x| forest.predict(x).unwrap())
        .collect();
    assert!(metrics(test.labels(), &predicted).unwrap().accuracy >= 0.9);
}

#[test]
fn persisted_models_predict_identically() {
    let blobs = gaussian_blobs(3, 30, 5, 8);
    for kind in ClassifierKind::ALL {
        let model = kind.default_spec().train(&blobs).unwrap();
        let back = TrainedModel::from_json(&model.to_json()).unwrap();
        for x in blobs.features() {
            assert_eq!(
                model.predict_scored(x).unwrap(),
                back.predict_scored(x).unwrap()
            );
        }
    }
}
