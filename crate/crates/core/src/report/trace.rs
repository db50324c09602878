//! Sampling-only traces summarized over fixed windows of iterations.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Dataset;
use crate::rng::{stream_rng, Stream};
use crate::sampler::export::{write_rows, TraceRow, VisitRow};
use crate::sampler::{CurriculumParams, CurriculumSampler, Strategy};

/// Number of uniform difficulty bins over `[-1, 1]`.
pub const DIFFICULTY_BINS: usize = 20;

/// Left edge of difficulty bin `i`; `edge(DIFFICULTY_BINS)` is 1.
pub fn bin_edge(i: usize) -> f64 {
    -1.0 + 2.0 * i as f64 / DIFFICULTY_BINS as f64
}

/// Bins are left-closed `[edge(i), edge(i + 1))`; the last one also holds 1.
pub fn difficulty_bin(d: f64) -> usize {
    let above = (1..DIFFICULTY_BINS)
        .take_while(|&i| bin_edge(i) <= d)
        .count();
    above.min(DIFFICULTY_BINS - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    pub params: CurriculumParams,
    pub batch_size: usize,
    pub iterations: u64,
    pub window: u64,
    pub seed: u64,
}

impl TraceConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.window == 0 || self.iterations == 0 || self.batch_size == 0 {
            return Err(Error::InvalidParam(
                "window, iterations and batch size must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowSummary {
    pub index: usize,
    /// First iteration of the window.
    pub start: u64,
    /// One past the last iteration.
    pub end: u64,
    /// Sampled objects per class.
    pub class_counts: Vec<u64>,
    /// Sampled examples per difficulty bin.
    pub difficulty_hist: Vec<u64>,
    pub mean_difficulty: f64,
}

impl WindowSummary {
    /// Largest over smallest per-class count; infinite if a class was never drawn.
    pub fn class_ratio(&self) -> f64 {
        let max = self.class_counts.iter().copied().max().unwrap_or(0);
        let min = self.class_counts.iter().copied().min().unwrap_or(0);
        if min == 0 {
            f64::INFINITY
        } else {
            max as f64 / min as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceReport {
    pub strategy: Strategy,
    pub classes: Vec<String>,
    pub rows: Vec<TraceRow>,
    pub windows: Vec<WindowSummary>,
    /// Visit state at the end of every window.
    pub snapshots: Vec<VisitRow>,
}

/// Runs the sampler alone for `cfg.iterations` batches. Uses the same random
/// stream as a training run with the same seed, so the draws match.
pub fn run_trace(dataset: &Dataset, cfg: &TraceConfig) -> Result<TraceReport> {
    cfg.validate()?;
    let mut sampler = CurriculumSampler::new(dataset, cfg.params, cfg.batch_size)?;
    let mut rng = stream_rng(cfg.seed, Stream::Sampler);
    let n_classes = dataset.num_classes();
    let mut rows = Vec::with_capacity(cfg.iterations as usize * cfg.batch_size);
    let mut windows = Vec::new();
    let mut snapshots = Vec::new();
    let mut current: Option<(WindowSummary, f64, u64)> = None;

    for t in 0..cfg.iterations {
        let batch = sampler.next_batch(&mut rng)?;
        let (win, sum, n) = current.get_or_insert_with(|| {
            (
                WindowSummary {
                    index: windows.len(),
                    start: t,
                    end: t,
                    class_counts: vec![0; n_classes],
                    difficulty_hist: vec![0; DIFFICULTY_BINS],
                    mean_difficulty: 0.0,
                },
                0.0,
                0,
            )
        });
        for &i in &batch {
            let s = dataset.sample(i);
            let d = s.difficulty.expect("sampler checked scaling");
            for c in s.class_ids() {
                win.class_counts[c.index()] += 1;
            }
            win.difficulty_hist[difficulty_bin(d)] += 1;
            *sum += d;
            *n += 1;
            rows.push(TraceRow {
                iteration: t,
                sample_id: s.id.clone(),
                difficulty: d,
                strategy: cfg.params.strategy,
            });
        }
        win.end = t + 1;
        if (t + 1) % cfg.window == 0 || t + 1 == cfg.iterations {
            let (mut win, sum, n) = current.take().expect("window open");
            win.mean_difficulty = sum / n as f64;
            windows.push(win);
            snapshots.extend(VisitRow::snapshot(sampler.state(), dataset.classes()));
        }
    }
    Ok(TraceReport {
        strategy: cfg.params.strategy,
        classes: dataset.classes().to_vec(),
        rows,
        windows,
        snapshots,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWindowRow {
    pub window: usize,
    pub start: u64,
    pub end: u64,
    pub class: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyWindowRow {
    pub window: usize,
    pub start: u64,
    pub end: u64,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSummaryRow {
    pub window: usize,
    pub start: u64,
    pub end: u64,
    pub mean_difficulty: f64,
    pub class_ratio: f64,
}

impl TraceReport {
    pub fn class_window_rows(&self) -> Vec<ClassWindowRow> {
        self.windows
            .iter()
            .flat_map(|w| {
                self.classes
                    .iter()
                    .zip(&w.class_counts)
                    .map(move |(class, &count)| ClassWindowRow {
                        window: w.index,
                        start: w.start,
                        end: w.end,
                        class: class.clone(),
                        count,
                    })
            })
            .collect()
    }

    pub fn difficulty_window_rows(&self) -> Vec<DifficultyWindowRow> {
        self.windows
            .iter()
            .flat_map(|w| {
                w.difficulty_hist
                    .iter()
                    .enumerate()
                    .map(move |(b, &count)| DifficultyWindowRow {
                        window: w.index,
                        start: w.start,
                        end: w.end,
                        bin_lo: bin_edge(b),
                        bin_hi: bin_edge(b + 1),
                        count,
                    })
            })
            .collect()
    }

    pub fn summary_rows(&self) -> Vec<WindowSummaryRow> {
        self.windows
            .iter()
            .map(|w| WindowSummaryRow {
                window: w.index,
                start: w.start,
                end: w.end,
                mean_difficulty: w.mean_difficulty,
                class_ratio: w.class_ratio(),
            })
            .collect()
    }

    /// Writes `trace.csv`, `visits.csv`, `class_windows.csv`,
    /// `difficulty_windows.csv` and `windows.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        let file = |name: &str| {
            let p = dir.join(name);
            fs::File::create(&p)
                .map(std::io::BufWriter::new)
                .map_err(|e| Error::io(format!("creating {}", p.display()), e))
        };
        write_rows(file("trace.csv")?, &self.rows)?;
        write_rows(file("visits.csv")?, &self.snapshots)?;
        write_rows(file("class_windows.csv")?, &self.class_window_rows())?;
        write_rows(
            file("difficulty_windows.csv")?,
            &self.difficulty_window_rows(),
        )?;
        write_rows(file("windows.csv")?, &self.summary_rows())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::synthetic::{generate_synthetic, SyntheticSpec};

    #[test]
    fn bins_are_left_closed() {
        assert_eq!(difficulty_bin(-1.0), 0);
        assert_eq!(difficulty_bin(bin_edge(1)), 1);
        assert_eq!(difficulty_bin(-0.95), 0);
        assert_eq!(difficulty_bin(0.0), 10);
        assert_eq!(difficulty_bin(0.99), 19);
        assert_eq!(difficulty_bin(1.0), 19);
        assert_eq!(bin_edge(DIFFICULTY_BINS), 1.0);
    }

    #[test]
    fn window_totals_match_draws() {
        let ds = generate_synthetic(&SyntheticSpec::imbalanced_benchmark(3)).unwrap();
        let cfg = TraceConfig {
            params: CurriculumParams {
                gamma: 6e-4,
                ..CurriculumParams::default()
            },
            batch_size: 4,
            iterations: 250,
            window: 100,
            seed: 3,
        };
        let report = run_trace(&ds, &cfg).unwrap();
        assert_eq!(report.windows.len(), 3);
        assert_eq!(report.rows.len(), 1000);
        let last = &report.windows[2];
        assert_eq!((last.start, last.end), (200, 250));
        for w in &report.windows {
            let draws = (w.end - w.start) * 4;
            assert_eq!(w.difficulty_hist.iter().sum::<u64>(), draws);
            let objects: u64 = report
                .rows
                .iter()
                .filter(|r| (w.start..w.end).contains(&r.iteration))
                .map(|r| {
                    let s = ds.samples().iter().find(|s| s.id == r.sample_id).unwrap();
                    s.objects.len() as u64
                })
                .sum();
            assert_eq!(w.class_counts.iter().sum::<u64>(), objects);
        }
        assert_eq!(report.snapshots.len(), 3 * ds.num_classes());
    }

    #[test]
    fn ratio_is_infinite_for_unvisited_class() {
        let w = WindowSummary {
            index: 0,
            start: 0,
            end: 1,
            class_counts: vec![3, 0],
            difficulty_hist: vec![],
            mean_difficulty: 0.0,
        };
        assert!(w.class_ratio().is_infinite());
    }
}
