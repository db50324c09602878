//! Toy supervised learner used to compare sampling strategies.

pub mod classifier;
pub mod eval;
pub mod log;
pub mod synthetic;

use serde::{Deserialize, Serialize};

pub use classifier::{sgd_step, ClassifierModel};
pub use eval::{evaluate, evaluate_with, Evaluation};
pub use log::{EvalRecord, IterationRecord, RunSnapshot, TrainingLog};
pub use synthetic::{generate_synthetic, generate_test_set, SyntheticSpec};

use crate::error::{Error, Result};
use crate::model::{Dataset, Sample};
use crate::rng::{stream_rng, Stream};
use crate::sampler::{CurriculumParams, CurriculumSampler};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub iterations: u64,
    pub batch_size: usize,
    /// Evaluate after every `eval_every` batches (and after the last one).
    pub eval_every: u64,
    /// Width of the tanh hidden layer; `None` trains softmax regression.
    pub hidden: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            iterations: 4_000,
            batch_size: 4,
            eval_every: 250,
            hidden: None,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "learning rate must be >= 0, got {}",
                self.learning_rate
            )));
        }
        if self.iterations == 0 || self.batch_size == 0 || self.eval_every == 0 {
            return Err(Error::InvalidParam(
                "iterations, batch size and eval interval must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Runs the sample -> step -> record -> evaluate loop.
///
/// The sampler, the model initialization and nothing else draw randomness,
/// each from its own stream of `config.seed`, so a run is a pure function of
/// its inputs.
pub fn train(
    dataset: &Dataset,
    test: &Dataset,
    params: &CurriculumParams,
    config: &TrainConfig,
    source: log::DataSource,
) -> Result<TrainingLog> {
    config.validate()?;
    let dim = dataset
        .feature_dim()
        .ok_or_else(|| Error::InvalidDataset("training set has no features".into()))?;
    if dataset.samples().iter().any(|s| s.features.is_none()) {
        return Err(Error::InvalidDataset(
            "every training sample needs features".into(),
        ));
    }
    if test.classes() != dataset.classes() {
        return Err(Error::InvalidDataset(
            "test set class catalog differs from the training set".into(),
        ));
    }
    let mut sampler = CurriculumSampler::new(dataset, *params, config.batch_size)?;
    let mut sampler_rng = stream_rng(config.seed, Stream::Sampler);
    let mut init_rng = stream_rng(config.seed, Stream::ModelInit);
    let mut model = ClassifierModel::new(dim, config.hidden, dataset.num_classes(), &mut init_rng)?;

    let mut iterations = Vec::with_capacity(config.iterations as usize);
    let mut evaluations = Vec::new();
    for t in 0..config.iterations {
        let batch_idx = sampler.next_batch(&mut sampler_rng)?;
        let batch: Vec<&Sample> = batch_idx.iter().map(|&i| dataset.sample(i)).collect();
        let loss = sgd_step(&mut model, &batch, config.learning_rate).map_err(|e| match e {
            Error::Diverged { loss, .. } => Error::Diverged {
                iteration: Some(t),
                loss,
            },
            other => other,
        })?;
        let mean_difficulty = batch
            .iter()
            .map(|s| s.difficulty.expect("sampler checked scaling"))
            .sum::<f64>()
            / batch.len() as f64;
        iterations.push(IterationRecord {
            iteration: t,
            sample_ids: batch.iter().map(|s| s.id.clone()).collect(),
            difficulties: batch.iter().filter_map(|s| s.difficulty).collect(),
            mean_difficulty,
            loss,
        });
        if (t + 1) % config.eval_every == 0 || t + 1 == config.iterations {
            let eval = evaluate(&model, test)?;
            evaluations.push(EvalRecord {
                iteration: t,
                per_class: eval.per_class,
                macro_accuracy: eval.macro_accuracy,
            });
        }
    }
    Ok(TrainingLog {
        config: RunSnapshot {
            params: *params,
            train: config.clone(),
            source,
            classes: dataset.classes().to_vec(),
        },
        iterations,
        evaluations,
    })
}

/// Generates the train and test sets of `spec` and trains on them.
pub fn train_synthetic(
    spec: &SyntheticSpec,
    test_per_class: usize,
    params: &CurriculumParams,
    config: &TrainConfig,
) -> Result<TrainingLog> {
    let train_set = generate_synthetic(spec)?;
    let test_set = generate_test_set(spec, test_per_class)?;
    train(
        &train_set,
        &test_set,
        params,
        config,
        log::DataSource::Synthetic {
            spec: spec.clone(),
            test_per_class,
        },
    )
}
