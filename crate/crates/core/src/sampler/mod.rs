//! Curriculum sampling with a class-diversity term.
//!
//! Every sample `x` gets a weight at iteration `t`:
//!
//! ```text
//! curriculum:          (1 - d(x) e^(-gamma t))^k
//! diverse curriculum:  (1 - alpha d(x) e^(-gamma t) - (1 - alpha) v(x) e^(-gamma t))^k
//! ```
//!
//! where `d(x)` is the scaled difficulty and `v(x)` is the mean visit score
//! of the sample's object classes. Class visit scores are the per-class
//! visited-object counts minus their mean, min-max scaled onto `[-1, 1]`.
//! Weights are normalized to probabilities and a batch is drawn i.i.d.
//! from them; weights are recomputed before every batch.

pub mod export;

use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::difficulty::scale_min_max;
use crate::error::{Error, Result};
use crate::model::{ClassId, Dataset, Sample};

/// Below this total weight the sampler falls back to uniform probabilities.
pub const UNDERFLOW_SUM: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Uniform sampling, the usual baseline.
    Random,
    /// Easy-to-hard.
    Curriculum,
    /// Hard-to-easy: curriculum weights with the difficulty negated.
    InverseCurriculum,
    /// Easy-to-hard with preference for under-visited classes.
    DiverseCurriculum,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Random,
        Strategy::Curriculum,
        Strategy::InverseCurriculum,
        Strategy::DiverseCurriculum,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Curriculum => "curriculum",
            Strategy::InverseCurriculum => "inverse_curriculum",
            Strategy::DiverseCurriculum => "diverse_curriculum",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Strategy::Random),
            "curriculum" => Ok(Strategy::Curriculum),
            "inverse" | "inverse_curriculum" => Ok(Strategy::InverseCurriculum),
            "diverse" | "diverse_curriculum" => Ok(Strategy::DiverseCurriculum),
            other => Err(Error::InvalidParam(format!("unknown strategy `{other}`"))),
        }
    }
}

/// Hyperparameters of the weight functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurriculumParams {
    /// Balance between difficulty (1) and diversity (0).
    pub alpha: f64,
    /// Per-iteration decay rate of both terms.
    pub gamma: f64,
    /// Exponent emphasizing the preferred samples.
    pub k: f64,
    pub strategy: Strategy,
}

impl Default for CurriculumParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            gamma: 6e-5,
            k: 5.0,
            strategy: Strategy::DiverseCurriculum,
        }
    }
}

impl CurriculumParams {
    pub fn with_strategy(self, strategy: Strategy) -> Self {
        Self { strategy, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParam(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "k must be >= 0, got {}",
                self.k
            )));
        }
        Ok(())
    }

    fn decay(&self, t: u64) -> f64 {
        (-self.gamma * t as f64).exp()
    }
}

/// Raises a weight base to `k`. Rounding can push the base a hair outside
/// `[0, 2]`; a negative base would make a fractional power NaN.
fn power(base: f64, k: f64) -> f64 {
    base.clamp(0.0, 2.0).powf(k)
}

/// Curriculum weight of one sample with scaled difficulty `diff` at iteration `t`.
pub fn curriculum_weight(diff: f64, t: u64, params: &CurriculumParams) -> f64 {
    curriculum_weight_decayed(diff, params.decay(t), params.k)
}

/// Weight mixing difficulty and class diversity. With `alpha = 1` this is
/// bit-identical to [`curriculum_weight`].
pub fn combined_weight(diff: f64, img_visited: f64, t: u64, params: &CurriculumParams) -> f64 {
    combined_weight_decayed(diff, img_visited, params.decay(t), params.alpha, params.k)
}

fn curriculum_weight_decayed(diff: f64, e: f64, k: f64) -> f64 {
    power(1.0 - diff * e, k)
}

fn combined_weight_decayed(diff: f64, img_visited: f64, e: f64, alpha: f64, k: f64) -> f64 {
    power(
        1.0 - alpha * (diff * e) - (1.0 - alpha) * (img_visited * e),
        k,
    )
}

/// Per-class visited-object counters and the iteration counter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisitState {
    counts: Vec<u64>,
    iteration: u64,
}

impl VisitState {
    pub fn new(num_classes: usize) -> Self {
        Self {
            counts: vec![0; num_classes],
            iteration: 0,
        }
    }

    /// Restores a state from saved counters.
    pub fn from_parts(counts: Vec<u64>, iteration: u64) -> Self {
        Self { counts, iteration }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Number of batches recorded so far.
    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    /// Adds every object of every sample in the batch and advances the
    /// iteration by one. Repeated draws of a sample count every time.
    pub fn update_visits<'a>(&mut self, batch: impl IntoIterator<Item = &'a Sample>) {
        for c in batch.into_iter().flat_map(|s| s.class_ids()) {
            self.counts[c.index()] += 1;
        }
        self.iteration += 1;
    }

    /// Per-class visit scores in `[-1, 1]`: counts minus their mean, then
    /// min-max scaled. Equal counts (including the cold start) give zeros.
    pub fn visited_scores(&self) -> Vec<f64> {
        if self.counts.is_empty() {
            return Vec::new();
        }
        let mean = self.counts.iter().map(|&c| c as f64).sum::<f64>() / self.counts.len() as f64;
        let centered: Vec<f64> = self.counts.iter().map(|&c| c as f64 - mean).collect();
        scale_min_max(&centered).expect("nonempty finite input")
    }
}

/// Mean class score over the objects of one sample.
pub fn img_visited(sample: &Sample, class_scores: &[f64]) -> f64 {
    mean_class_score(sample.class_ids(), sample.objects.len(), class_scores)
}

fn mean_class_score(classes: impl Iterator<Item = ClassId>, n: usize, scores: &[f64]) -> f64 {
    classes.map(|c| scores[c.index()]).sum::<f64>() / n as f64
}

/// A normalized probability vector over the samples of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingProbabilities {
    probs: Vec<f64>,
}

impl SamplingProbabilities {
    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }
}

/// Normalizes weights by their sum; an all-(near-)zero vector becomes uniform.
pub fn weights_to_probabilities(weights: &[f64]) -> Result<SamplingProbabilities> {
    if weights.is_empty() {
        return Err(Error::InvalidParam("no weights to normalize".into()));
    }
    if let Some((i, w)) = weights
        .iter()
        .enumerate()
        .find(|(_, w)| !(**w >= 0.0 && w.is_finite()))
    {
        return Err(Error::InvalidParam(format!(
            "weight {i} is {w}; weights must be finite and nonnegative"
        )));
    }
    let sum: f64 = weights.iter().sum();
    let probs = if sum < UNDERFLOW_SUM {
        vec![1.0 / weights.len() as f64; weights.len()]
    } else {
        weights.iter().map(|w| w / sum).collect()
    };
    Ok(SamplingProbabilities { probs })
}

/// Draws `batch_size` indices i.i.d. (with replacement) from `probs`.
pub fn sample_batch<R: Rng + ?Sized>(
    probs: &SamplingProbabilities,
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if batch_size < 1 {
        return Err(Error::InvalidParam("batch size must be >= 1".into()));
    }
    let dist = WeightedIndex::new(&probs.probs)
        .map_err(|e| Error::InvalidParam(format!("cannot sample from probabilities: {e}")))?;
    Ok((0..batch_size).map(|_| dist.sample(rng)).collect())
}

/// Precomputed per-sample inputs to the weight functions.
#[derive(Debug, Clone)]
pub struct WeightInputs {
    difficulties: Vec<f64>,
    /// Flattened object classes; `offsets[i]..offsets[i + 1]` belongs to sample `i`.
    classes: Vec<ClassId>,
    offsets: Vec<usize>,
    num_classes: usize,
}

impl WeightInputs {
    pub fn new(dataset: &Dataset) -> Result<Self> {
        let mut difficulties = Vec::with_capacity(dataset.len());
        let mut classes = Vec::new();
        let mut offsets = Vec::with_capacity(dataset.len() + 1);
        offsets.push(0);
        for s in dataset.samples() {
            let d = s.difficulty.ok_or_else(|| Error::InvalidSample {
                id: s.id.clone(),
                message: "difficulty not scaled".into(),
            })?;
            difficulties.push(d);
            classes.extend(s.class_ids());
            offsets.push(classes.len());
        }
        Ok(Self {
            difficulties,
            classes,
            offsets,
            num_classes: dataset.num_classes(),
        })
    }

    pub fn len(&self) -> usize {
        self.difficulties.len()
    }

    pub fn is_empty(&self) -> bool {
        self.difficulties.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn difficulty(&self, index: usize) -> f64 {
        self.difficulties[index]
    }

    fn objects(&self, index: usize) -> &[ClassId] {
        &self.classes[self.offsets[index]..self.offsets[index + 1]]
    }

    /// Unnormalized weights of every sample for the given state.
    pub fn weights(&self, state: &VisitState, params: &CurriculumParams) -> Vec<f64> {
        let e = params.decay(state.iteration());
        let k = params.k;
        match params.strategy {
            Strategy::Random => vec![1.0; self.len()],
            Strategy::Curriculum => self
                .difficulties
                .iter()
                .map(|&d| curriculum_weight_decayed(d, e, k))
                .collect(),
            Strategy::InverseCurriculum => self
                .difficulties
                .iter()
                .map(|&d| curriculum_weight_decayed(-d, e, k))
                .collect(),
            Strategy::DiverseCurriculum => {
                let scores = state.visited_scores();
                (0..self.len())
                    .map(|i| {
                        let objs = self.objects(i);
                        let v = mean_class_score(objs.iter().copied(), objs.len(), &scores);
                        combined_weight_decayed(self.difficulties[i], v, e, params.alpha, k)
                    })
                    .collect()
            }
        }
    }

    pub fn probabilities(
        &self,
        state: &VisitState,
        params: &CurriculumParams,
    ) -> Result<SamplingProbabilities> {
        weights_to_probabilities(&self.weights(state, params))
    }
}

/// Sampling probabilities of every sample in `dataset` for `state`.
pub fn sampling_probabilities(
    dataset: &Dataset,
    state: &VisitState,
    params: &CurriculumParams,
) -> Result<SamplingProbabilities> {
    params.validate()?;
    WeightInputs::new(dataset)?.probabilities(state, params)
}

/// One-shot form of [`CurriculumSampler::next_batch`]: computes weights for the
/// current state, draws a batch and records its visits.
pub fn next_batch<R: Rng + ?Sized>(
    dataset: &Dataset,
    state: &mut VisitState,
    params: &CurriculumParams,
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let probs = sampling_probabilities(dataset, state, params)?;
    let batch = sample_batch(&probs, batch_size, rng)?;
    state.update_visits(batch.iter().map(|&i| dataset.sample(i)));
    Ok(batch)
}

/// A sampler bound to one dataset. Owns the visit state of a single run.
#[derive(Debug, Clone)]
pub struct CurriculumSampler<'a> {
    dataset: &'a Dataset,
    inputs: WeightInputs,
    params: CurriculumParams,
    batch_size: usize,
    state: VisitState,
}

impl<'a> CurriculumSampler<'a> {
    pub fn new(dataset: &'a Dataset, params: CurriculumParams, batch_size: usize) -> Result<Self> {
        params.validate()?;
        if batch_size < 1 {
            return Err(Error::InvalidParam("batch size must be >= 1".into()));
        }
        Ok(Self {
            dataset,
            inputs: WeightInputs::new(dataset)?,
            params,
            batch_size,
            state: VisitState::new(dataset.num_classes()),
        })
    }

    pub fn params(&self) -> &CurriculumParams {
        &self.params
    }

    pub fn state(&self) -> &VisitState {
        &self.state
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.dataset
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn probabilities(&self) -> Result<SamplingProbabilities> {
        self.inputs.probabilities(&self.state, &self.params)
    }

    pub fn next_batch<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Vec<usize>> {
        let probs = self.probabilities()?;
        let batch = sample_batch(&probs, self.batch_size, rng)?;
        let ds = self.dataset;
        self.state
            .update_visits(batch.iter().map(|&i| ds.sample(i)));
        Ok(batch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::difficulty::attach_scaled_difficulty;
    use crate::rng::{stream_rng, Stream};

    fn params(strategy: Strategy) -> CurriculumParams {
        CurriculumParams::default().with_strategy(strategy)
    }

    #[test]
    fn curriculum_weight_examples() {
        let p = params(Strategy::Curriculum);
        assert_eq!(curriculum_weight(0.0, 1234, &p), 1.0);
        assert_eq!(curriculum_weight(1.0, 0, &p), 0.0);
        assert_eq!(curriculum_weight(-1.0, 0, &p), 32.0);
        assert!((curriculum_weight(0.5, 0, &p) - 0.03125).abs() < 1e-15);
        // e^(-gamma t) = 1/2 at t = ln 2 / gamma = 11552.45
        let half = CurriculumParams {
            gamma: std::f64::consts::LN_2 / 11552.0,
            ..p
        };
        assert!((curriculum_weight(1.0, 11552, &half) - 0.03125).abs() < 1e-12);
    }

    #[test]
    fn combined_weight_examples() {
        let p = params(Strategy::DiverseCurriculum);
        let w = combined_weight(0.4, -0.2, 0, &p);
        assert!((w - 0.59049).abs() < 1e-12, "{w}");
        let one = CurriculumParams { alpha: 1.0, ..p };
        for &(d, v, t) in &[(0.3, 0.9, 17u64), (-1.0, -1.0, 0), (0.77, -0.4, 90_000)] {
            assert_eq!(
                combined_weight(d, v, t, &one).to_bits(),
                curriculum_weight(d, t, &one).to_bits()
            );
        }
        let late = t_for_decay(&p, 1e-10);
        assert!((combined_weight(1.0, 1.0, late, &p) - 1.0).abs() < 5e-9);
        assert!((combined_weight(-1.0, -1.0, late, &p) - 1.0).abs() < 5e-9);
    }

    fn t_for_decay(p: &CurriculumParams, e: f64) -> u64 {
        (-(e.ln()) / p.gamma).ceil() as u64
    }

    #[test]
    fn fractional_k_never_nan() {
        let p = CurriculumParams {
            alpha: 0.3,
            k: 2.5,
            ..params(Strategy::DiverseCurriculum)
        };
        let w = combined_weight(1.0, 1.0, 0, &p);
        assert!(w.is_finite() && w >= 0.0);
    }

    #[test]
    fn visited_score_examples() {
        let s = VisitState::from_parts(vec![10, 2, 0], 3).visited_scores();
        let want = [1.0, -0.6, -1.0];
        assert!(
            s.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-12),
            "{s:?}"
        );
        assert_eq!(
            VisitState::from_parts(vec![4, 4, 4], 1).visited_scores(),
            vec![0.0; 3]
        );
        assert_eq!(VisitState::new(3).visited_scores(), vec![0.0; 3]);
        assert_eq!(
            VisitState::from_parts(vec![1, 0], 1).visited_scores(),
            vec![1.0, -1.0]
        );
    }

    #[test]
    fn img_visited_examples() {
        let scores = [1.0, -1.0, -0.6];
        assert_eq!(img_visited(&Sample::new("a", &[0, 1], 0.0), &scores), 0.0);
        assert_eq!(img_visited(&Sample::new("b", &[2], 0.0), &scores), -0.6);
        let v = img_visited(&Sample::new("c", &[0, 2, 1], 0.0), &scores);
        assert!((v + 0.2).abs() < 1e-12);
    }

    #[test]
    fn probability_examples() {
        let p = weights_to_probabilities(&[1.0, 1.0, 2.0]).unwrap();
        assert_eq!(p.as_slice(), [0.25, 0.25, 0.5]);
        let p = weights_to_probabilities(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(p.as_slice(), [1.0 / 3.0; 3]);
        let p = weights_to_probabilities(&[0.59049, 0.03125]).unwrap();
        assert!((p.as_slice()[0] - 0.59049 / 0.62174).abs() < 1e-12);
        assert!((p.as_slice()[0] - 0.9497).abs() < 1e-4);
        assert!(weights_to_probabilities(&[1.0, -0.1]).is_err());
        assert!(weights_to_probabilities(&[f64::NAN]).is_err());
    }

    #[test]
    fn batch_sampling_contract() {
        let mut rng = stream_rng(7, Stream::Sampler);
        let point = weights_to_probabilities(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(sample_batch(&point, 4, &mut rng).unwrap(), vec![0; 4]);
        assert!(sample_batch(&point, 0, &mut rng).is_err());

        let probs = weights_to_probabilities(&[0.7, 0.2, 0.1]).unwrap();
        let a = sample_batch(&probs, 32, &mut stream_rng(3, Stream::Sampler)).unwrap();
        let b = sample_batch(&probs, 32, &mut stream_rng(3, Stream::Sampler)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn update_visits_counts_objects() {
        let mut state = VisitState::new(3);
        let batch = [Sample::new("a", &[0], 0.0), Sample::new("b", &[0, 1], 0.0)];
        state.update_visits(&batch);
        assert_eq!(state.counts(), [2, 1, 0]);
        assert_eq!(state.iteration(), 1);
        state.update_visits(&[Sample::new("c", &[2, 2, 2], 0.0)]);
        assert_eq!(state.counts(), [2, 1, 3]);

        let mut split = VisitState::new(3);
        split.update_visits(&batch[..1]);
        split.update_visits(&batch[1..]);
        let mut joint = VisitState::new(3);
        joint.update_visits(&batch);
        assert_eq!(split.counts(), joint.counts());
        assert_eq!((split.iteration(), joint.iteration()), (2, 1));
    }

    fn two_sample_dataset() -> Dataset {
        attach_scaled_difficulty(
            &Dataset::with_inferred_classes(vec![
                Sample::new("easy", &[0], 1.0),
                Sample::new("hard", &[1], 3.0),
            ])
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn next_batch_strategies() {
        let ds = two_sample_dataset();
        let state = VisitState::new(2);
        let random = sampling_probabilities(&ds, &state, &params(Strategy::Random)).unwrap();
        assert_eq!(random.as_slice(), [0.5, 0.5]);
        let cl = sampling_probabilities(&ds, &state, &params(Strategy::Curriculum)).unwrap();
        assert_eq!(cl.as_slice(), [1.0, 0.0]);
        let inv =
            sampling_probabilities(&ds, &state, &params(Strategy::InverseCurriculum)).unwrap();
        assert_eq!(inv.as_slice(), [0.0, 1.0]);

        let mut state = VisitState::new(2);
        let mut rng = stream_rng(1, Stream::Sampler);
        let batch =
            next_batch(&ds, &mut state, &params(Strategy::Curriculum), 4, &mut rng).unwrap();
        assert_eq!(batch, vec![0; 4]);
        assert_eq!(state.counts(), [4, 0]);
        assert_eq!(state.iteration(), 1);
    }

    #[test]
    fn diverse_cold_start_ignores_visits() {
        let ds = two_sample_dataset();
        let p = params(Strategy::DiverseCurriculum);
        let state = VisitState::new(2);
        let got = sampling_probabilities(&ds, &state, &p).unwrap();
        let w: Vec<f64> = ds
            .samples()
            .iter()
            .map(|s| combined_weight(s.difficulty.unwrap(), 0.0, 0, &p))
            .collect();
        assert_eq!(got, weights_to_probabilities(&w).unwrap());
    }

    #[test]
    fn unscaled_dataset_rejected() {
        let ds = Dataset::with_inferred_classes(vec![Sample::new("a", &[0], 1.0)]).unwrap();
        assert!(CurriculumSampler::new(&ds, CurriculumParams::default(), 4).is_err());
    }

    #[test]
    fn params_validation() {
        let ok = CurriculumParams::default();
        assert!(ok.validate().is_ok());
        assert!(CurriculumParams { alpha: 1.5, ..ok }.validate().is_err());
        assert!(CurriculumParams { gamma: 0.0, ..ok }.validate().is_err());
        assert!(CurriculumParams { k: -1.0, ..ok }.validate().is_err());
        assert_eq!(
            "inverse".parse::<Strategy>().unwrap(),
            Strategy::InverseCurriculum
        );
        assert_eq!(
            "diverse_curriculum".parse::<Strategy>().unwrap(),
            Strategy::DiverseCurriculum
        );
        assert!("greedy".parse::<Strategy>().is_err());
    }
}
