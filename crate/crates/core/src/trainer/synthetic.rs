//! Gaussian-cluster datasets with controllable class imbalance.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::difficulty::{attach_scaled_difficulty, proxy_difficulty, ClusterTruth};
use crate::error::{Error, Result};
use crate::model::{default_class_names, Dataset, ObjectAnnotation, Sample};
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_classes: usize,
    pub per_class_counts: Vec<usize>,
    pub cluster_means: Vec<Vec<f64>>,
    /// Isotropic standard deviation of each class.
    pub cluster_spread: Vec<f64>,
    /// Probability that a sample's primary label is replaced by another class.
    pub label_noise: f64,
    /// Probability that a sample carries a second object of a different
    /// class. The extra class is drawn in proportion to the class counts, so
    /// frequent classes co-occur with everything.
    pub multi_label_rate: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn feature_dim(&self) -> usize {
        self.cluster_means.first().map_or(0, Vec::len)
    }

    pub fn truth(&self) -> ClusterTruth {
        ClusterTruth {
            means: self.cluster_means.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParam(m));
        if self.n_classes < 2 {
            return bad(format!("need at least 2 classes, got {}", self.n_classes));
        }
        if self.per_class_counts.len() != self.n_classes
            || self.cluster_means.len() != self.n_classes
            || self.cluster_spread.len() != self.n_classes
        {
            return bad("per-class vectors must all have n_classes entries".into());
        }
        if self.per_class_counts.contains(&0) {
            return bad("every class needs at least one sample".into());
        }
        let dim = self.feature_dim();
        if dim == 0 || self.cluster_means.iter().any(|m| m.len() != dim) {
            return bad("cluster means must share one nonzero dimension".into());
        }
        if self.cluster_means.iter().flatten().any(|x| !x.is_finite()) {
            return bad("cluster means must be finite".into());
        }
        if self
            .cluster_spread
            .iter()
            .any(|&s| !(s > 0.0 && s.is_finite()))
        {
            return bad("cluster spreads must be positive".into());
        }
        if !(0.0..1.0).contains(&self.label_noise) {
            return bad(format!(
                "label_noise must lie in [0, 1), got {}",
                self.label_noise
            ));
        }
        if !(0.0..=1.0).contains(&self.multi_label_rate) {
            return bad(format!(
                "multi_label_rate must lie in [0, 1], got {}",
                self.multi_label_rate
            ));
        }
        Ok(())
    }

    /// Same clusters with `per_class` samples of every class.
    pub fn balanced(&self, per_class: usize) -> Self {
        Self {
            per_class_counts: vec![per_class; self.n_classes],
            ..self.clone()
        }
    }

    /// The seeded imbalanced benchmark: five classes with a 20:1 skew where
    /// the rarer classes are also the more spread out, hence harder.
    ///
    /// Means sit on the vertices of a regular simplex scaled to `separation`
    /// in a 4-dimensional space, so every pair of classes is equally far apart.
    pub fn imbalanced_benchmark(seed: u64) -> Self {
        let n_classes = 5;
        let dim = 4;
        let separation = 3.0;
        Self {
            n_classes,
            per_class_counts: vec![2000, 800, 400, 200, 100],
            cluster_means: simplex_means(n_classes, dim, separation),
            cluster_spread: vec![0.7, 0.8, 0.9, 1.0, 1.1],
            label_noise: 0.02,
            multi_label_rate: 0.4,
            seed,
        }
    }
}

/// `n` equidistant points in `dim >= n - 1` dimensions, pairwise distance `edge`.
pub fn simplex_means(n: usize, dim: usize, edge: f64) -> Vec<Vec<f64>> {
    assert!(dim + 1 >= n);
    // Standard basis vectors of R^n are pairwise sqrt(2) apart; centre them and
    // express them in an orthonormal basis of their (n - 1)-dim span.
    let centred: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| f64::from(u8::from(i == j)) - 1.0 / n as f64)
                .collect()
        })
        .collect();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in &centred {
        let mut u = v.clone();
        for b in &basis {
            let dot: f64 = u.iter().zip(b).map(|(x, y)| x * y).sum();
            u.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
        }
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            basis.push(u.into_iter().map(|x| x / norm).collect());
        }
    }
    let scale = edge / std::f64::consts::SQRT_2;
    centred
        .iter()
        .map(|v| {
            let mut coords: Vec<f64> = basis
                .iter()
                .map(|b| scale * v.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
                .collect();
            coords.resize(dim, 0.0);
            coords
        })
        .collect()
}

fn other_class<R: Rng>(rng: &mut R, n_classes: usize, not: usize) -> usize {
    let c = rng.random_range(0..n_classes - 1);
    if c >= not {
        c + 1
    } else {
        c
    }
}

/// A class other than `not`, drawn with probability proportional to `counts`.
fn co_occurring_class<R: Rng>(rng: &mut R, counts: &[usize], not: usize) -> usize {
    let total: usize = counts
        .iter()
        .enumerate()
        .filter(|&(c, _)| c != not)
        .map(|(_, &n)| n)
        .sum();
    let mut pick = rng.random_range(0..total);
    for (c, &n) in counts.iter().enumerate() {
        if c == not {
            continue;
        }
        if pick < n {
            return c;
        }
        pick -= n;
    }
    unreachable!("pick < total")
}

fn generate(spec: &SyntheticSpec, stream: Stream, id_prefix: &str) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = stream_rng(spec.seed, stream);
    let truth = spec.truth();
    let mut samples = Vec::with_capacity(spec.per_class_counts.iter().sum());
    for (class, &count) in spec.per_class_counts.iter().enumerate() {
        let mean = &spec.cluster_means[class];
        let spread = spec.cluster_spread[class];
        for _ in 0..count {
            let features: Vec<f64> = mean
                .iter()
                .map(|m| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    m + spread * z
                })
                .collect();
            let label = if rng.random::<f64>() < spec.label_noise {
                other_class(&mut rng, spec.n_classes, class)
            } else {
                class
            };
            let mut objects = vec![ObjectAnnotation::new(label)];
            if rng.random::<f64>() < spec.multi_label_rate {
                objects.push(ObjectAnnotation::new(co_occurring_class(
                    &mut rng,
                    &spec.per_class_counts,
                    label,
                )));
            }
            let mut sample = Sample {
                id: format!("{id_prefix}{:06}", samples.len()),
                features: Some(features),
                objects,
                raw_difficulty: 0.0,
                difficulty: None,
            };
            sample.raw_difficulty = proxy_difficulty(&sample, &truth)?;
            samples.push(sample);
        }
    }
    let ds = Dataset::new(
        samples,
        default_class_names(spec.n_classes),
        Some(spec.feature_dim()),
    )?;
    attach_scaled_difficulty(&ds)
}

/// Draws the training set described by `spec`, with proxy difficulties
/// attached and scaled.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    generate(spec, Stream::TrainData, "s")
}

/// Draws a held-out set with `per_class` samples of each class from an
/// independent random stream of the same seed.
pub fn generate_test_set(spec: &SyntheticSpec, per_class: usize) -> Result<Dataset> {
    generate(&spec.balanced(per_class), Stream::TestData, "t")
}
