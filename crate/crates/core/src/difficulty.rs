//! Difficulty scaling, easy-to-hard splits, and a geometric proxy score for
//! synthetic data.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, Sample};

/// Min-max scales `values` onto `[-1, 1]`.
///
/// A constant input maps to all zeros, the neutral difficulty.
pub fn scale_min_max(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::InvalidParam("cannot scale an empty list".into()));
    }
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if !min.is_finite() || !max.is_finite() {
        return Err(Error::InvalidParam("cannot scale non-finite values".into()));
    }
    let range = max - min;
    if range == 0.0 {
        return Ok(vec![0.0; values.len()]);
    }
    Ok(values
        .iter()
        .map(|&v| 2.0 * (v - min) / range - 1.0)
        .collect())
}

/// Returns a copy of `dataset` whose samples carry scaled difficulties.
pub fn attach_scaled_difficulty(dataset: &Dataset) -> Result<Dataset> {
    let raw: Vec<f64> = dataset.samples().iter().map(|s| s.raw_difficulty).collect();
    let scaled = scale_min_max(&raw)?;
    let mut it = scaled.into_iter();
    dataset.map_samples(|s| Sample {
        difficulty: it.next(),
        ..s.clone()
    })
}

/// Sample ids partitioned into contiguous difficulty bins, easiest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultySplit {
    pub bins: Vec<Vec<String>>,
}

impl DifficultySplit {
    pub fn easy(&self) -> &[String] {
        &self.bins[0]
    }

    /// Everything between the easiest and the hardest bin.
    pub fn medium(&self) -> Vec<&String> {
        let n = self.bins.len();
        self.bins[1..n - 1].iter().flatten().collect()
    }

    pub fn hard(&self) -> &[String] {
        &self.bins[self.bins.len() - 1]
    }
}

/// Sorts samples by scaled difficulty (ties by id) and cuts them into
/// `n_bins` contiguous bins whose sizes differ by at most one.
pub fn difficulty_split(dataset: &Dataset, n_bins: usize) -> Result<DifficultySplit> {
    if n_bins < 2 {
        return Err(Error::InvalidParam(format!(
            "n_bins must be >= 2, got {n_bins}"
        )));
    }
    if n_bins > dataset.len() {
        return Err(Error::InvalidParam(format!(
            "n_bins = {n_bins} exceeds dataset size {}",
            dataset.len()
        )));
    }
    let mut order: Vec<(f64, &str)> = dataset
        .samples()
        .iter()
        .map(|s| {
            s.difficulty
                .map(|d| (d, s.id.as_str()))
                .ok_or_else(|| Error::InvalidSample {
                    id: s.id.clone(),
                    message: "difficulty not scaled".into(),
                })
        })
        .collect::<Result<_>>()?;
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));

    let base = order.len() / n_bins;
    let extra = order.len() % n_bins;
    let mut bins = Vec::with_capacity(n_bins);
    let mut rest = order.as_slice();
    for b in 0..n_bins {
        let size = base + usize::from(b < extra);
        let (head, tail) = rest.split_at(size);
        bins.push(head.iter().map(|(_, id)| id.to_string()).collect());
        rest = tail;
    }
    Ok(DifficultySplit { bins })
}

/// Generator-side knowledge of a synthetic dataset: one mean per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterTruth {
    pub means: Vec<Vec<f64>>,
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Raw proxy difficulty from the ratio `r` of the distance to the mean of the
/// sample's own (primary) class over the distance to the nearest competing
/// mean, mapped through `r / (1 + r)`.
///
/// Zero at the own mean, one half on the bisector between two means, and
/// approaching one deep inside another class. The map is strictly increasing,
/// so the ranking is that of the plain ratio while the tail stays bounded.
pub fn proxy_difficulty(sample: &Sample, truth: &ClusterTruth) -> Result<f64> {
    let features = sample
        .features
        .as_ref()
        .ok_or_else(|| Error::InvalidSample {
            id: sample.id.clone(),
            message: "proxy difficulty needs features".into(),
        })?;
    if truth.means.len() < 2 {
        return Err(Error::InvalidParam(
            "proxy difficulty needs at least two clusters".into(),
        ));
    }
    let own = sample.primary_class().index();
    let own_mean = truth.means.get(own).ok_or_else(|| Error::InvalidSample {
        id: sample.id.clone(),
        message: format!("no cluster mean for class {own}"),
    })?;
    if own_mean.len() != features.len() {
        return Err(Error::InvalidParam(format!(
            "cluster dimension {} does not match feature dimension {}",
            own_mean.len(),
            features.len()
        )));
    }
    let d_own = euclidean(features, own_mean);
    let d_other = truth
        .means
        .iter()
        .enumerate()
        .filter(|&(c, _)| c != own)
        .map(|(_, m)| euclidean(features, m))
        .fold(f64::INFINITY, f64::min);
    let ratio = d_own / d_other.max(1e-12);
    Ok(ratio / (1.0 + ratio))
}

/// Reads an `id,raw_difficulty` CSV of externally estimated scores.
pub fn load_difficulty_sidecar(path: &Path) -> Result<HashMap<String, f64>> {
    #[derive(Deserialize)]
    struct Row {
        id: String,
        raw_difficulty: f64,
    }
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = HashMap::new();
    for row in reader.deserialize() {
        let row: Row = row?;
        out.insert(row.id, row.raw_difficulty);
    }
    Ok(out)
}

/// Replaces raw difficulties by the given overrides and clears any scaled
/// values, so the result has to be rescaled.
pub fn apply_difficulty_overrides(
    dataset: &Dataset,
    overrides: &HashMap<String, f64>,
) -> Result<Dataset> {
    let known: std::collections::HashSet<&str> =
        dataset.samples().iter().map(|s| s.id.as_str()).collect();
    if let Some(id) = overrides.keys().find(|id| !known.contains(id.as_str())) {
        return Err(Error::InvalidSample {
            id: id.clone(),
            message: "difficulty override for unknown sample".into(),
        });
    }
    dataset.map_samples(|s| Sample {
        raw_difficulty: overrides.get(&s.id).copied().unwrap_or(s.raw_difficulty),
        difficulty: None,
        ..s.clone()
    })
}
