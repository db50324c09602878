//! `curriculum`: ingest datasets, trace samplers, train and compare runs.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use curriculum_core::Strategy;

/// A configuration or argument error (exit code 1).
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

#[derive(Parser)]
#[command(
    name = "curriculum",
    version,
    about = "Diversity-aware curriculum sampling toolkit"
)]
struct Cli {
    /// Config file of `key = value` lines; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a dataset (or generate the benchmark), scale difficulties, write JSONL.
    Ingest(IngestArgs),
    /// Per-class object counts and difficulty summaries.
    Hist(HistArgs),
    /// Run the sampler alone and summarize what it draws per window.
    Trace(TraceArgs),
    /// Train the toy classifier, one run per strategy and seed.
    Train(TrainArgs),
    /// Compare saved training runs.
    Compare(CompareArgs),
}

#[derive(Args, Clone)]
pub struct DataArgs {
    /// Dataset in JSONL format.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Use the built-in imbalanced synthetic benchmark instead of a file.
    #[arg(long)]
    pub benchmark: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Clone)]
pub struct SamplerArgs {
    /// random, curriculum, inverse, diverse, a comma list of these, or all.
    #[arg(long)]
    pub strategy: Option<StrategyList>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
}

#[derive(Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// CSV of `id,raw_difficulty` overriding the scores in the dataset.
    #[arg(long)]
    pub difficulty_csv: Option<PathBuf>,
    /// Held-out samples per class written next to the benchmark.
    #[arg(long)]
    pub test_per_class: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct HistArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write SVG charts.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    #[arg(long)]
    pub iterations: Option<u64>,
    /// Window length in iterations; defaults to a quarter of the budget.
    #[arg(long)]
    pub window: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: bool,
}

#[derive(Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Held-out JSONL dataset; required with --data.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Held-out samples per class for the benchmark.
    #[arg(long)]
    pub test_per_class: Option<usize>,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    /// Seeds as `a,b,c` or an inclusive range `a..b`; overrides --seed.
    #[arg(long)]
    pub seeds: Option<SeedList>,
    #[arg(long)]
    pub iterations: Option<u64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub eval_every: Option<u64>,
    /// Width of a tanh hidden layer; omit for softmax regression.
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: bool,
}

#[derive(Args)]
pub struct CompareArgs {
    /// Run directories written by `train`.
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyList(pub Vec<Strategy>);

impl FromStr for StrategyList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim() == "all" {
            return Ok(Self(Strategy::ALL.to_vec()));
        }
        let mut out = Vec::new();
        for part in s.split(',') {
            let st: Strategy = part.trim().parse().map_err(|e| format!("{e}"))?;
            if !out.contains(&st) {
                out.push(st);
            }
        }
        Ok(Self(out))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedList(pub Vec<u64>);

impl FromStr for SeedList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |v: &str| {
            v.trim()
                .parse::<u64>()
                .map_err(|_| format!("bad seed {v:?}"))
        };
        if let Some((a, b)) = s.split_once("..") {
            let (a, b) = (num(a)?, num(b)?);
            if a > b {
                return Err(format!("empty seed range {s}"));
            }
            return Ok(Self((a..=b).collect()));
        }
        let seeds = s.split(',').map(num).collect::<Result<Vec<_>, _>>()?;
        Ok(Self(seeds))
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let validation = err.chain().any(|e| {
        e.downcast_ref::<Usage>().is_some()
            || e.downcast_ref::<curriculum_core::Error>()
                .is_some_and(curriculum_core::Error::is_validation)
    });
    if validation {
        1
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match commands::run(cli.config.as_deref(), cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!("1..5".parse::<SeedList>().unwrap().0, vec![1, 2, 3, 4, 5]);
        assert_eq!("3, 1,2".parse::<SeedList>().unwrap().0, vec![3, 1, 2]);
        assert!("5..1".parse::<SeedList>().is_err());
        assert!("x".parse::<SeedList>().is_err());
    }

    #[test]
    fn strategy_lists() {
        assert_eq!(
            "all".parse::<StrategyList>().unwrap().0,
            Strategy::ALL.to_vec()
        );
        assert_eq!(
            "diverse,inverse,diverse".parse::<StrategyList>().unwrap().0,
            vec![Strategy::DiverseCurriculum, Strategy::InverseCurriculum]
        );
        assert!("greedy".parse::<StrategyList>().is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
