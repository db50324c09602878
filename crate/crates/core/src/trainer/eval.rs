use serde::{Deserialize, Serialize};

use super::classifier::ClassifierModel;
use crate::error::{Error, Result};
use crate::model::Dataset;

/// Per-class accuracy on primary labels and their unweighted mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub per_class: Vec<f64>,
    pub macro_accuracy: f64,
}

/// Scores any predictor `features -> class` on `test`. Every class in the
/// catalog must appear at least once as a primary label.
pub fn evaluate_with(test: &Dataset, predict: impl Fn(&[f64]) -> usize) -> Result<Evaluation> {
    let n = test.num_classes();
    let mut correct = vec![0usize; n];
    let mut total = vec![0usize; n];
    for s in test.samples() {
        let x = s.features.as_deref().ok_or_else(|| Error::InvalidSample {
            id: s.id.clone(),
            message: "evaluation needs features".into(),
        })?;
        let truth = s.primary_class().index();
        total[truth] += 1;
        if predict(x) == truth {
            correct[truth] += 1;
        }
    }
    if let Some(c) = total.iter().position(|&t| t == 0) {
        return Err(Error::InvalidDataset(format!(
            "class `{}` absent from test set",
            test.classes()[c]
        )));
    }
    let per_class: Vec<f64> = correct
        .iter()
        .zip(&total)
        .map(|(&c, &t)| c as f64 / t as f64)
        .collect();
    let macro_accuracy = per_class.iter().sum::<f64>() / n as f64;
    Ok(Evaluation {
        per_class,
        macro_accuracy,
    })
}

pub fn evaluate(model: &ClassifierModel, test: &Dataset) -> Result<Evaluation> {
    if test.feature_dim() != Some(model.inputs()) || test.num_classes() != model.classes() {
        return Err(Error::InvalidParam(format!(
            "model {:?} does not fit test set ({:?} features, {} classes)",
            model.dims(),
            test.feature_dim(),
            test.num_classes()
        )));
    }
    evaluate_with(test, |x| model.predict(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};
    use crate::trainer::synthetic::{generate_test_set, SyntheticSpec};

    fn separated() -> SyntheticSpec {
        SyntheticSpec {
            n_classes: 3,
            per_class_counts: vec![10; 3],
            cluster_means: vec![vec![0.0, 0.0], vec![20.0, 0.0], vec![0.0, 20.0]],
            cluster_spread: vec![1.0; 3],
            label_noise: 0.0,
            multi_label_rate: 0.0,
            seed: 9,
        }
    }

    /// Nearest-mean rule written as a linear model: logit_c = m_c . x - |m_c|^2 / 2.
    fn nearest_mean_model(means: &[Vec<f64>]) -> ClassifierModel {
        let dim = means[0].len();
        let mut params: Vec<f64> = means.iter().flatten().copied().collect();
        params.extend(
            means
                .iter()
                .map(|m| -0.5 * m.iter().map(|v| v * v).sum::<f64>()),
        );
        ClassifierModel::from_params(vec![dim, means.len()], params).unwrap()
    }

    #[test]
    fn oracle_model_is_perfect() {
        let spec = separated();
        let test = generate_test_set(&spec, 100).unwrap();
        let eval = evaluate(&nearest_mean_model(&spec.cluster_means), &test).unwrap();
        assert_eq!(eval.per_class, vec![1.0; 3]);
        assert_eq!(eval.macro_accuracy, 1.0);
    }

    #[test]
    fn constant_model_on_two_classes() {
        let spec = SyntheticSpec {
            n_classes: 2,
            per_class_counts: vec![5, 5],
            cluster_means: vec![vec![0.0], vec![3.0]],
            cluster_spread: vec![1.0, 1.0],
            ..separated()
        };
        let test = generate_test_set(&spec, 37).unwrap();
        let constant = ClassifierModel::from_params(vec![1, 2], vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        let eval = evaluate(&constant, &test).unwrap();
        assert_eq!(eval.per_class, vec![1.0, 0.0]);
        assert_eq!(eval.macro_accuracy, 0.5);
    }

    #[test]
    fn random_models_average_chance() {
        let spec = SyntheticSpec {
            n_classes: 4,
            per_class_counts: vec![1; 4],
            cluster_means: vec![
                vec![0.0, 0.0],
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 1.0],
            ],
            ..separated()
        }
        .balanced(1);
        let spec = SyntheticSpec {
            cluster_spread: vec![1.0; 4],
            ..spec
        };
        let test = generate_test_set(&spec, 50).unwrap();
        let mut rng = stream_rng(5, Stream::ModelInit);
        let n = 400;
        let mean: f64 = (0..n)
            .map(|_| {
                let m = ClassifierModel::new(2, None, 4, &mut rng).unwrap();
                evaluate(&m, &test).unwrap().macro_accuracy
            })
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.25).abs() < 0.03, "{mean}");
    }

    #[test]
    fn missing_class_is_an_error() {
        let spec = separated();
        let test = generate_test_set(&spec, 3).unwrap();
        let two_only = crate::model::Dataset::new(
            test.samples()
                .iter()
                .filter(|s| s.primary_class().index() < 2)
                .cloned()
                .collect(),
            test.classes().to_vec(),
            test.feature_dim(),
        )
        .unwrap();
        let model = nearest_mean_model(&spec.cluster_means);
        assert!(evaluate(&model, &two_only).is_err());
    }
}
