//! Training logs and their on-disk layout.
//!
//! A run directory `<strategy>-seed<seed>/` holds:
//!
//! * `run.json` with the configuration snapshot,
//! * `trace.csv` (`iteration,sample_id,difficulty,strategy`),
//! * `evaluations.csv` (`iteration,macro,<one column per class>`),
//! * `losses.csv` (`iteration,mean_difficulty,loss`).

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::synthetic::SyntheticSpec;
use super::TrainConfig;
use crate::error::{Error, Result};
use crate::sampler::export::{read_rows, write_rows, TraceRow};
use crate::sampler::{CurriculumParams, Strategy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    Synthetic {
        spec: SyntheticSpec,
        test_per_class: usize,
    },
    Files {
        train: PathBuf,
        test: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSnapshot {
    pub params: CurriculumParams,
    pub train: TrainConfig,
    pub source: DataSource,
    pub classes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// Iteration index `t` at which the batch was drawn.
    pub iteration: u64,
    pub sample_ids: Vec<String>,
    pub difficulties: Vec<f64>,
    pub mean_difficulty: f64,
    /// Loss before the update.
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    /// Last iteration included before this evaluation.
    pub iteration: u64,
    pub per_class: Vec<f64>,
    pub macro_accuracy: f64,
}

impl EvalRecord {
    /// Number of SGD steps taken when the evaluation ran.
    pub fn steps(&self) -> u64 {
        self.iteration + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingLog {
    pub config: RunSnapshot,
    pub iterations: Vec<IterationRecord>,
    pub evaluations: Vec<EvalRecord>,
}

#[derive(Serialize, Deserialize)]
struct LossRow {
    iteration: u64,
    mean_difficulty: f64,
    loss: f64,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(format!("creating {}", path.display()), e))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))
}

impl TrainingLog {
    pub fn strategy(&self) -> Strategy {
        self.config.params.strategy
    }

    pub fn seed(&self) -> u64 {
        self.config.train.seed
    }

    pub fn run_dir_name(&self) -> String {
        run_dir_name(self.strategy(), self.seed())
    }

    pub fn final_macro_accuracy(&self) -> f64 {
        self.evaluations.last().map_or(0.0, |e| e.macro_accuracy)
    }

    /// Steps until macro accuracy first reaches `fraction` of its final value.
    pub fn steps_to_fraction_of_final(&self, fraction: f64) -> Option<u64> {
        let target = fraction * self.final_macro_accuracy();
        self.evaluations
            .iter()
            .find(|e| e.macro_accuracy >= target)
            .map(EvalRecord::steps)
    }

    pub fn trace_rows(&self) -> Vec<TraceRow> {
        let strategy = self.strategy();
        self.iterations
            .iter()
            .flat_map(|r| {
                r.sample_ids
                    .iter()
                    .zip(&r.difficulties)
                    .map(move |(id, &d)| TraceRow {
                        iteration: r.iteration,
                        sample_id: id.clone(),
                        difficulty: d,
                        strategy,
                    })
            })
            .collect()
    }

    /// Writes the run into `parent/<strategy>-seed<seed>/` and returns that path.
    pub fn save(&self, parent: &Path) -> Result<PathBuf> {
        let dir = parent.join(self.run_dir_name());
        fs::create_dir_all(&dir)
            .map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        serde_json::to_writer_pretty(create(&dir.join("run.json"))?, &self.config)?;
        write_rows(create(&dir.join("trace.csv"))?, &self.trace_rows())?;
        let losses: Vec<LossRow> = self
            .iterations
            .iter()
            .map(|r| LossRow {
                iteration: r.iteration,
                mean_difficulty: r.mean_difficulty,
                loss: r.loss,
            })
            .collect();
        write_rows(create(&dir.join("losses.csv"))?, &losses)?;

        let mut w = csv::Writer::from_writer(create(&dir.join("evaluations.csv"))?);
        let mut header = vec!["iteration".to_string(), "macro".to_string()];
        header.extend(self.config.classes.iter().cloned());
        w.write_record(&header)?;
        for e in &self.evaluations {
            let mut row = vec![e.iteration.to_string(), e.macro_accuracy.to_string()];
            row.extend(e.per_class.iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(dir)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let config: RunSnapshot = serde_json::from_reader(open(&dir.join("run.json"))?)?;
        let trace: Vec<TraceRow> = read_rows(open(&dir.join("trace.csv"))?)?;
        let losses: Vec<LossRow> = read_rows(open(&dir.join("losses.csv"))?)?;
        let evaluations = read_evaluations(&dir.join("evaluations.csv"), &config.classes)?;

        let mut iterations: Vec<IterationRecord> = losses
            .into_iter()
            .map(|l| IterationRecord {
                iteration: l.iteration,
                sample_ids: Vec::new(),
                difficulties: Vec::new(),
                mean_difficulty: l.mean_difficulty,
                loss: l.loss,
            })
            .collect();
        let mut cursor = 0;
        for row in trace {
            while cursor < iterations.len() && iterations[cursor].iteration < row.iteration {
                cursor += 1;
            }
            let rec = iterations
                .get_mut(cursor)
                .filter(|r| r.iteration == row.iteration)
                .ok_or_else(|| {
                    Error::InvalidDataset(format!(
                        "{}: trace iteration {} has no loss record",
                        dir.display(),
                        row.iteration
                    ))
                })?;
            rec.sample_ids.push(row.sample_id);
            rec.difficulties.push(row.difficulty);
        }
        Ok(Self {
            config,
            iterations,
            evaluations,
        })
    }
}

pub fn run_dir_name(strategy: Strategy, seed: u64) -> String {
    format!("{strategy}-seed{seed}")
}

fn read_evaluations(path: &Path, classes: &[String]) -> Result<Vec<EvalRecord>> {
    let mut r = csv::Reader::from_reader(open(path)?);
    let header = r.headers()?.clone();
    let expected: Vec<&str> = ["iteration", "macro"]
        .into_iter()
        .chain(classes.iter().map(String::as_str))
        .collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(Error::InvalidDataset(format!(
            "{}: unexpected header {:?}",
            path.display(),
            header
        )));
    }
    let bad = |line: u64, what: &str| Error::Parse {
        path: path.to_path_buf(),
        line: line as usize,
        message: format!("bad {what}"),
    };
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let iteration = rec[0].parse().map_err(|_| bad(line, "iteration"))?;
        let macro_accuracy = rec[1].parse().map_err(|_| bad(line, "macro accuracy"))?;
        let per_class = rec
            .iter()
            .skip(2)
            .map(|v| v.parse().map_err(|_| bad(line, "class accuracy")))
            .collect::<Result<_>>()?;
        out.push(EvalRecord {
            iteration,
            per_class,
            macro_accuracy,
        });
    }
    Ok(out)
}
