//! Aggregates training runs by strategy.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::export::write_rows;
use crate::sampler::Strategy;
use crate::trainer::TrainingLog;

/// Fraction of the final macro accuracy used for the convergence-speed column.
pub const CONVERGENCE_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct StrategySummary {
    pub strategy: Strategy,
    pub seeds: Vec<u64>,
    pub final_macro: Vec<f64>,
    pub mean_final: f64,
    /// Sample standard deviation; zero for a single run.
    pub std_final: f64,
    pub median_final: f64,
    /// Median number of steps to reach 90% of each run's final accuracy.
    pub median_steps_to_90: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub strategy: Strategy,
    pub iteration: u64,
    pub runs: usize,
    pub mean_macro: f64,
    pub std_macro: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// Evaluation iterations shared by every run.
    pub grid: Vec<u64>,
    /// Sorted by mean final accuracy, best first.
    pub summaries: Vec<StrategySummary>,
    pub curves: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub strategy: Strategy,
    pub runs: usize,
    pub seeds: String,
    pub mean_macro: f64,
    pub std_macro: f64,
    pub median_macro: f64,
    pub median_steps_to_90: f64,
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn sample_std(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Groups `logs` by strategy. All runs must share one evaluation grid.
pub fn compare(logs: &[TrainingLog]) -> Result<Comparison> {
    let first = logs
        .first()
        .ok_or_else(|| Error::InvalidParam("nothing to compare".into()))?;
    let grid: Vec<u64> = first.evaluations.iter().map(|e| e.iteration).collect();
    if grid.is_empty() {
        return Err(Error::Incompatible(format!(
            "run {} has no evaluations",
            first.run_dir_name()
        )));
    }
    for log in logs {
        let g: Vec<u64> = log.evaluations.iter().map(|e| e.iteration).collect();
        if g != grid {
            return Err(Error::Incompatible(format!(
                "run {} is evaluated at different iterations than {}",
                log.run_dir_name(),
                first.run_dir_name()
            )));
        }
    }

    let mut summaries = Vec::new();
    let mut curves = Vec::new();
    for strategy in Strategy::ALL {
        let group: Vec<&TrainingLog> = logs.iter().filter(|l| l.strategy() == strategy).collect();
        if group.is_empty() {
            continue;
        }
        let finals: Vec<f64> = group.iter().map(|l| l.final_macro_accuracy()).collect();
        let steps: Vec<f64> = group
            .iter()
            .map(|l| {
                l.steps_to_fraction_of_final(CONVERGENCE_FRACTION)
                    .expect("the final evaluation always qualifies") as f64
            })
            .collect();
        summaries.push(StrategySummary {
            strategy,
            seeds: group.iter().map(|l| l.seed()).collect(),
            mean_final: mean(&finals),
            std_final: sample_std(&finals),
            median_final: median(&finals),
            median_steps_to_90: median(&steps),
            final_macro: finals,
        });
        for (k, &iteration) in grid.iter().enumerate() {
            let at: Vec<f64> = group
                .iter()
                .map(|l| l.evaluations[k].macro_accuracy)
                .collect();
            curves.push(CurvePoint {
                strategy,
                iteration,
                runs: at.len(),
                mean_macro: mean(&at),
                std_macro: sample_std(&at),
            });
        }
    }
    summaries.sort_by(|a, b| b.mean_final.total_cmp(&a.mean_final));
    Ok(Comparison {
        grid,
        summaries,
        curves,
    })
}

/// Loads run directories and compares them.
pub fn compare_dirs(dirs: &[PathBuf]) -> Result<Comparison> {
    let logs = dirs
        .iter()
        .map(|d| TrainingLog::load(d))
        .collect::<Result<Vec<_>>>()?;
    compare(&logs)
}

impl Comparison {
    pub fn summary_rows(&self) -> Vec<SummaryRow> {
        self.summaries
            .iter()
            .map(|s| SummaryRow {
                strategy: s.strategy,
                runs: s.final_macro.len(),
                seeds: s
                    .seeds
                    .iter()
                    .map(u64::to_string)
                    .collect::<Vec<_>>()
                    .join(";"),
                mean_macro: s.mean_final,
                std_macro: s.std_final,
                median_macro: s.median_final,
                median_steps_to_90: s.median_steps_to_90,
            })
            .collect()
    }

    /// Fixed-width table of the summaries.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<20} {:>4}  {:>17}  {:>8}  {:>9}",
            "strategy", "runs", "final macro acc", "median", "steps@90%"
        );
        for s in &self.summaries {
            let _ = writeln!(
                out,
                "{:<20} {:>4}  {:>8.4} ± {:<6.4}  {:>8.4}  {:>9}",
                s.strategy.as_str(),
                s.final_macro.len(),
                s.mean_final,
                s.std_final,
                s.median_final,
                s.median_steps_to_90
            );
        }
        out
    }

    /// Writes `<stem>.csv`, `<stem>.txt` and `curves.csv` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        let create = |name: &str| {
            let p = dir.join(name);
            fs::File::create(&p)
                .map(std::io::BufWriter::new)
                .map_err(|e| Error::io(format!("creating {}", p.display()), e))
        };
        write_rows(create(&format!("{stem}.csv"))?, &self.summary_rows())?;
        write_rows(create("curves.csv")?, &self.curves)?;
        let p = dir.join(format!("{stem}.txt"));
        fs::write(&p, self.table()).map_err(|e| Error::io(format!("writing {}", p.display()), e))
    }
}
