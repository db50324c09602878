//! Per-class object counts and difficulty summaries of a dataset.

use serde::{Deserialize, Serialize};

use crate::difficulty::attach_scaled_difficulty;
use crate::error::Result;
use crate::model::{class_histogram, Dataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub class: String,
    /// Annotated objects of this class.
    pub objects: usize,
    /// Samples containing at least one object of this class.
    pub samples: usize,
    /// Mean / median scaled difficulty over those samples; empty classes get NaN.
    pub mean_difficulty: f64,
    pub median_difficulty: f64,
}

fn median(sorted: &[f64]) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => sorted[n / 2],
        n => 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]),
    }
}

/// One row per catalog class. Unscaled datasets are scaled first.
pub fn class_summaries(dataset: &Dataset) -> Result<Vec<ClassSummary>> {
    let scaled;
    let ds = if dataset.is_scaled() {
        dataset
    } else {
        scaled = attach_scaled_difficulty(dataset)?;
        &scaled
    };
    let counts = class_histogram(ds);
    let mut per_class: Vec<Vec<f64>> = vec![Vec::new(); ds.num_classes()];
    for s in ds.samples() {
        let d = s.difficulty.expect("scaled above");
        let mut classes: Vec<usize> = s.class_ids().map(|c| c.index()).collect();
        classes.sort_unstable();
        classes.dedup();
        for c in classes {
            per_class[c].push(d);
        }
    }
    Ok(ds
        .classes()
        .iter()
        .zip(counts)
        .zip(per_class)
        .map(|((class, objects), mut diffs)| {
            diffs.sort_by(f64::total_cmp);
            let mean = if diffs.is_empty() {
                f64::NAN
            } else {
                diffs.iter().sum::<f64>() / diffs.len() as f64
            };
            ClassSummary {
                class: class.clone(),
                objects,
                samples: diffs.len(),
                mean_difficulty: mean,
                median_difficulty: median(&diffs),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Sample;

    #[test]
    fn balanced_counts_and_medians() {
        let ds = Dataset::with_inferred_classes(vec![
            Sample::new("a", &[0], 1.0),
            Sample::new("b", &[1, 1], 2.0),
            Sample::new("c", &[0], 3.0),
            Sample::new("d", &[1], 5.0),
        ])
        .unwrap();
        let rows = class_summaries(&ds).unwrap();
        assert_eq!(rows[0].objects, 2);
        assert_eq!(rows[1].objects, 3);
        assert_eq!(rows[1].samples, 2);
        // scaled: a=-1, b=-0.5, c=0, d=1
        assert_eq!(rows[0].mean_difficulty, -0.5);
        assert_eq!(rows[0].median_difficulty, -0.5);
        assert_eq!(rows[1].mean_difficulty, 0.25);
    }
}
