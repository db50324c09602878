//! A small dense classifier: softmax regression, optionally with one tanh
//! hidden layer, trained by plain mini-batch SGD on cross-entropy.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Sample;

/// Parameters are stored flat: for each layer the `out x in` weight matrix
/// (row-major) followed by the `out` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    dims: Vec<usize>,
    params: Vec<f64>,
}

impl ClassifierModel {
    /// `hidden = None` gives a linear softmax classifier.
    pub fn new<R: Rng + ?Sized>(
        inputs: usize,
        hidden: Option<usize>,
        classes: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if inputs == 0 || classes < 2 || hidden == Some(0) {
            return Err(Error::InvalidParam(format!(
                "bad classifier shape: {inputs} inputs, {hidden:?} hidden, {classes} classes"
            )));
        }
        let mut dims = vec![inputs];
        dims.extend(hidden);
        dims.push(classes);
        let mut params = Vec::new();
        for w in dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| rng.random_range(-limit..limit)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Ok(Self { dims, params })
    }

    /// Builds a model from explicit parameters laid out as described on the type.
    pub fn from_params(dims: Vec<usize>, params: Vec<f64>) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::InvalidParam(format!("bad layer dims {dims:?}")));
        }
        let expected: usize = dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        if params.len() != expected {
            return Err(Error::InvalidParam(format!(
                "expected {expected} parameters for dims {dims:?}, got {}",
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParam("parameters must be finite".into()));
        }
        Ok(Self { dims, params })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn inputs(&self) -> usize {
        self.dims[0]
    }

    pub fn classes(&self) -> usize {
        self.dims[self.dims.len() - 1]
    }

    fn layers(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let mut offset = 0;
        self.dims.windows(2).map(move |w| {
            let start = offset;
            offset += w[0] * w[1] + w[1];
            (start, w[0], w[1])
        })
    }

    /// Activations of every layer; the last entry holds the logits.
    fn forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let n_layers = self.dims.len() - 1;
        let mut acts = vec![x.to_vec()];
        for (l, (start, fan_in, fan_out)) in self.layers().enumerate() {
            let w = &self.params[start..start + fan_in * fan_out];
            let b = &self.params[start + fan_in * fan_out..start + fan_in * fan_out + fan_out];
            let input = &acts[l];
            let mut z: Vec<f64> = (0..fan_out)
                .map(|o| {
                    let row = &w[o * fan_in..(o + 1) * fan_in];
                    b[o] + row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>()
                })
                .collect();
            if l + 1 < n_layers {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(z);
        }
        acts
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.forward(x).pop().expect("at least one layer")
    }

    /// Index of the largest logit; ties go to the lowest class.
    pub fn predict(&self, x: &[f64]) -> usize {
        let logits = self.logits(x);
        let mut best = 0;
        for (i, &v) in logits.iter().enumerate() {
            if v > logits[best] {
                best = i;
            }
        }
        best
    }

    /// Mean cross-entropy over `(features, label)` pairs and its gradient.
    pub fn loss_and_gradient(&self, batch: &[(&[f64], usize)]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let layers: Vec<_> = self.layers().collect();
        let scale = 1.0 / batch.len() as f64;
        for &(x, label) in batch {
            let acts = self.forward(x);
            let logits = &acts[acts.len() - 1];
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
            let sum: f64 = exps.iter().sum();
            loss += sum.ln() + max - logits[label];

            // dL/dz at the output: softmax - onehot.
            let mut delta: Vec<f64> = exps.iter().map(|e| e / sum).collect();
            delta[label] -= 1.0;
            for (l, &(start, fan_in, fan_out)) in layers.iter().enumerate().rev() {
                let input = &acts[l];
                let (w_grad, rest) = grad[start..].split_at_mut(fan_in * fan_out);
                for o in 0..fan_out {
                    let d = delta[o] * scale;
                    rest[o] += d;
                    w_grad[o * fan_in..(o + 1) * fan_in]
                        .iter_mut()
                        .zip(input)
                        .for_each(|(g, a)| *g += d * a);
                }
                if l > 0 {
                    let w = &self.params[start..start + fan_in * fan_out];
                    delta = (0..fan_in)
                        .map(|i| {
                            let back: f64 =
                                (0..fan_out).map(|o| w[o * fan_in + i] * delta[o]).sum();
                            // acts[l] = tanh(z), so dtanh = 1 - a^2.
                            back * (1.0 - input[i] * input[i])
                        })
                        .collect();
                }
            }
        }
        (loss * scale, grad)
    }

    /// Mean cross-entropy only.
    pub fn loss(&self, batch: &[(&[f64], usize)]) -> f64 {
        batch
            .iter()
            .map(|&(x, label)| {
                let logits = self.logits(x);
                let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = logits.iter().map(|z| (z - max).exp()).sum();
                sum.ln() + max - logits[label]
            })
            .sum::<f64>()
            / batch.len() as f64
    }

    /// The raw parameter vector, for finite-difference checks.
    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }
}

pub(crate) fn labelled<'a>(batch: &[&'a Sample]) -> Result<Vec<(&'a [f64], usize)>> {
    batch
        .iter()
        .map(|s| {
            s.features
                .as_deref()
                .map(|f| (f, s.primary_class().index()))
                .ok_or_else(|| Error::InvalidSample {
                    id: s.id.clone(),
                    message: "training needs features".into(),
                })
        })
        .collect()
}

/// One SGD step on the mean cross-entropy of the batch's primary labels.
/// Returns the loss before the step.
pub fn sgd_step(model: &mut ClassifierModel, batch: &[&Sample], learning_rate: f64) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::InvalidParam("empty batch".into()));
    }
    let pairs = labelled(batch)?;
    if let Some(&(x, label)) = pairs
        .iter()
        .find(|(x, l)| x.len() != model.inputs() || *l >= model.classes())
    {
        return Err(Error::InvalidParam(format!(
            "sample of dimension {} with label {label} does not fit model {:?}",
            x.len(),
            model.dims
        )));
    }
    let (loss, grad) = model.loss_and_gradient(&pairs);
    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Diverged {
            iteration: None,
            loss,
        });
    }
    model
        .params
        .iter_mut()
        .zip(&grad)
        .for_each(|(p, g)| *p -= learning_rate * g);
    if model.params.iter().any(|p| !p.is_finite()) {
        return Err(Error::Diverged {
            iteration: None,
            loss,
        });
    }
    Ok(loss)
}
