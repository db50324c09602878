use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use curriculum_core::difficulty::{
    apply_difficulty_overrides, attach_scaled_difficulty, load_difficulty_sidecar,
};
use curriculum_core::report::svg::{bar_chart, line_chart, Series};
use curriculum_core::report::{self, TraceConfig};
use curriculum_core::sampler::export::write_rows;
use curriculum_core::trainer::log::DataSource;
use curriculum_core::trainer::{self, generate_synthetic, generate_test_set, SyntheticSpec};
use curriculum_core::{load_dataset, CurriculumParams, Dataset, Strategy};
use serde::Serialize;

use crate::config::ConfigFile;
use crate::{
    Command, CompareArgs, DataArgs, HistArgs, IngestArgs, SamplerArgs, SeedList, StrategyList,
    TraceArgs, TrainArgs, Usage,
};

/// CLI runs default to a 4,000-iteration budget, so the decay rate is scaled
/// up from the library default to reach late-stage sampling within it.
const DEFAULT_GAMMA: f64 = 6e-4;
const DEFAULT_ITERATIONS: u64 = 4_000;
const DEFAULT_TEST_PER_CLASS: usize = 200;
const DEFAULT_SEED: u64 = 1;

pub fn run(config: Option<&Path>, command: Command) -> Result<()> {
    let cfg = match config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    match command {
        Command::Ingest(a) => ingest(&cfg, a),
        Command::Hist(a) => hist(&cfg, a),
        Command::Trace(a) => trace(&cfg, a),
        Command::Train(a) => train(&cfg, a),
        Command::Compare(a) => compare(&cfg, a),
    }
}

enum Source {
    File(PathBuf),
    Benchmark,
}

struct Data {
    source: Source,
    seed: u64,
}

fn resolve_data(cfg: &ConfigFile, a: DataArgs) -> Result<Data> {
    let data = cfg.pick(a.data, "data")?;
    let benchmark = cfg.flag(a.benchmark, "benchmark")?;
    let seed = cfg.pick(a.seed, "seed")?.unwrap_or(DEFAULT_SEED);
    let source = match (data, benchmark) {
        (Some(_), true) => return Err(Usage("--data and --benchmark are exclusive".into()).into()),
        (Some(p), false) => Source::File(p),
        (None, true) => Source::Benchmark,
        (None, false) => {
            return Err(Usage("no dataset given: pass --data PATH or --benchmark".into()).into())
        }
    };
    Ok(Data { source, seed })
}

fn out_dir(cfg: &ConfigFile, flag: Option<PathBuf>) -> Result<PathBuf> {
    let out = cfg
        .pick(flag, "out")?
        .ok_or_else(|| Usage("no output directory: pass --out DIR".into()))?;
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    Ok(out)
}

fn load_scaled(path: &Path) -> Result<Dataset> {
    let ds = load_dataset(path)?;
    Ok(if ds.is_scaled() {
        ds
    } else {
        attach_scaled_difficulty(&ds)?
    })
}

fn dataset_for(data: &Data, seed: u64) -> Result<Dataset> {
    match &data.source {
        Source::File(p) => load_scaled(p),
        Source::Benchmark => Ok(generate_synthetic(&SyntheticSpec::imbalanced_benchmark(
            seed,
        ))?),
    }
}

fn resolve_sampler(
    cfg: &ConfigFile,
    a: SamplerArgs,
) -> Result<(Vec<Strategy>, CurriculumParams, usize)> {
    let base = CurriculumParams::default();
    let strategies = cfg
        .pick(a.strategy, "strategy")?
        .unwrap_or(StrategyList(vec![base.strategy]))
        .0;
    let params = CurriculumParams {
        alpha: cfg.pick(a.alpha, "alpha")?.unwrap_or(base.alpha),
        gamma: cfg.pick(a.gamma, "gamma")?.unwrap_or(DEFAULT_GAMMA),
        k: cfg.pick(a.k, "k")?.unwrap_or(base.k),
        strategy: base.strategy,
    };
    params.validate()?;
    let batch = cfg.pick(a.batch_size, "batch-size")?.unwrap_or(4);
    Ok((strategies, params, batch))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_rows(std::io::BufWriter::new(f), rows)?;
    Ok(())
}

fn ingest(cfg: &ConfigFile, a: IngestArgs) -> Result<()> {
    let data = resolve_data(cfg, a.data)?;
    let sidecar = cfg.pick(a.difficulty_csv, "difficulty-csv")?;
    let out = out_dir(cfg, a.out)?;
    match &data.source {
        Source::File(p) => {
            let mut ds = load_dataset(p)?;
            if let Some(side) = &sidecar {
                ds = apply_difficulty_overrides(&ds, &load_difficulty_sidecar(side)?)?;
            }
            let ds = attach_scaled_difficulty(&ds)?;
            ds.save_jsonl(&out.join("dataset.jsonl"))?;
            println!(
                "{} samples, {} classes -> {}",
                ds.len(),
                ds.num_classes(),
                out.display()
            );
        }
        Source::Benchmark => {
            if sidecar.is_some() {
                return Err(Usage("--difficulty-csv needs --data".into()).into());
            }
            let per_class = cfg
                .pick(a.test_per_class, "test-per-class")?
                .unwrap_or(DEFAULT_TEST_PER_CLASS);
            let spec = SyntheticSpec::imbalanced_benchmark(data.seed);
            let train = generate_synthetic(&spec)?;
            let test = generate_test_set(&spec, per_class)?;
            train.save_jsonl(&out.join("train.jsonl"))?;
            test.save_jsonl(&out.join("test.jsonl"))?;
            println!(
                "benchmark seed {}: {} train / {} test samples -> {}",
                data.seed,
                train.len(),
                test.len(),
                out.display()
            );
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct CountRow<'a> {
    class: &'a str,
    count: usize,
}

fn hist(cfg: &ConfigFile, a: HistArgs) -> Result<()> {
    let data = resolve_data(cfg, a.data)?;
    let out = out_dir(cfg, a.out)?;
    let svg = cfg.flag(a.svg, "svg")?;
    let ds = dataset_for(&data, data.seed)?;
    let rows = report::class_summaries(&ds)?;
    let counts: Vec<CountRow> = rows
        .iter()
        .map(|r| CountRow {
            class: &r.class,
            count: r.objects,
        })
        .collect();
    write_csv(&out.join("class_histogram.csv"), &counts)?;
    write_csv(&out.join("class_difficulty.csv"), &rows)?;
    if svg {
        let labels: Vec<String> = rows.iter().map(|r| r.class.clone()).collect();
        let n: Vec<f64> = rows.iter().map(|r| r.objects as f64).collect();
        let d: Vec<f64> = rows.iter().map(|r| r.mean_difficulty).collect();
        write_text(
            &out.join("class_histogram.svg"),
            &bar_chart("Objects per class", "objects", &labels, &n),
        )?;
        write_text(
            &out.join("class_difficulty.svg"),
            &bar_chart("Mean difficulty per class", "difficulty", &labels, &d),
        )?;
    }
    for r in &rows {
        println!(
            "{:<16} {:>7} objects  mean {:>7.4}  median {:>7.4}",
            r.class, r.objects, r.mean_difficulty, r.median_difficulty
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct TraceSummaryRow {
    strategy: Strategy,
    seed: u64,
    window: usize,
    start: u64,
    end: u64,
    mean_difficulty: f64,
    class_ratio: f64,
}

fn trace(cfg: &ConfigFile, a: TraceArgs) -> Result<()> {
    let data = resolve_data(cfg, a.data)?;
    let (strategies, params, batch_size) = resolve_sampler(cfg, a.sampler)?;
    let iterations = cfg
        .pick(a.iterations, "iterations")?
        .unwrap_or(DEFAULT_ITERATIONS);
    let window = cfg
        .pick(a.window, "window")?
        .unwrap_or((iterations / 4).max(1));
    let out = out_dir(cfg, a.out)?;
    let svg = cfg.flag(a.svg, "svg")?;
    let ds = dataset_for(&data, data.seed)?;

    let mut summary = Vec::new();
    let mut mean_series = Vec::new();
    for strategy in strategies {
        let tc = TraceConfig {
            params: params.with_strategy(strategy),
            batch_size,
            iterations,
            window,
            seed: data.seed,
        };
        let rep = report::run_trace(&ds, &tc)?;
        let dir = out.join(trainer::log::run_dir_name(strategy, data.seed));
        rep.write(&dir)?;
        for w in &rep.windows {
            summary.push(TraceSummaryRow {
                strategy,
                seed: data.seed,
                window: w.index,
                start: w.start,
                end: w.end,
                mean_difficulty: w.mean_difficulty,
                class_ratio: w.class_ratio(),
            });
        }
        if svg {
            let per_class: Vec<Series> = rep
                .classes
                .iter()
                .enumerate()
                .map(|(c, name)| Series {
                    name: name.clone(),
                    points: rep
                        .windows
                        .iter()
                        .map(|w| (w.index as f64, w.class_counts[c] as f64))
                        .collect(),
                })
                .collect();
            write_text(
                &dir.join("class_windows.svg"),
                &line_chart(
                    &format!("Sampled objects per class ({strategy})"),
                    "window",
                    "objects",
                    &per_class,
                ),
            )?;
        }
        mean_series.push(Series {
            name: strategy.to_string(),
            points: rep
                .windows
                .iter()
                .map(|w| (w.index as f64, w.mean_difficulty))
                .collect(),
        });
        let first = &rep.windows[0];
        println!(
            "{:<20} first-window class ratio {:>8.3}  mean difficulty by window {}",
            strategy.as_str(),
            first.class_ratio(),
            rep.windows
                .iter()
                .map(|w| format!("{:.4}", w.mean_difficulty))
                .collect::<Vec<_>>()
                .join(" ")
        );
    }
    write_csv(&out.join("trace_summary.csv"), &summary)?;
    if svg {
        write_text(
            &out.join("mean_difficulty.svg"),
            &line_chart(
                "Mean sampled difficulty",
                "window",
                "difficulty",
                &mean_series,
            ),
        )?;
    }
    Ok(())
}

fn curves_svg(c: &report::Comparison) -> String {
    let series: Vec<Series> = c
        .summaries
        .iter()
        .map(|s| Series {
            name: s.strategy.to_string(),
            points: c
                .curves
                .iter()
                .filter(|p| p.strategy == s.strategy)
                .map(|p| ((p.iteration + 1) as f64, p.mean_macro))
                .collect(),
        })
        .collect();
    line_chart(
        "Macro accuracy during training",
        "iteration",
        "macro accuracy",
        &series,
    )
}

fn train(cfg: &ConfigFile, a: TrainArgs) -> Result<()> {
    let data = resolve_data(cfg, a.data)?;
    let (strategies, params, batch_size) = resolve_sampler(cfg, a.sampler)?;
    let seeds = cfg
        .pick(a.seeds, "seeds")?
        .unwrap_or(SeedList(vec![data.seed]))
        .0;
    let defaults = trainer::TrainConfig::default();
    let base = trainer::TrainConfig {
        learning_rate: cfg.pick(a.lr, "lr")?.unwrap_or(defaults.learning_rate),
        iterations: cfg
            .pick(a.iterations, "iterations")?
            .unwrap_or(DEFAULT_ITERATIONS),
        batch_size,
        eval_every: cfg
            .pick(a.eval_every, "eval-every")?
            .unwrap_or(defaults.eval_every),
        hidden: cfg.pick(a.hidden, "hidden")?,
        seed: DEFAULT_SEED,
    };
    base.validate()?;
    let test_path = cfg.pick(a.test, "test")?;
    let per_class = cfg
        .pick(a.test_per_class, "test-per-class")?
        .unwrap_or(DEFAULT_TEST_PER_CLASS);
    let files = match &data.source {
        Source::File(train) => {
            let test = test_path
                .ok_or_else(|| Usage("--data needs a held-out set: pass --test PATH".into()))?;
            Some((
                load_scaled(train)?,
                load_scaled(&test)?,
                train.clone(),
                test,
            ))
        }
        Source::Benchmark => None,
    };
    let out = out_dir(cfg, a.out)?;
    let svg = cfg.flag(a.svg, "svg")?;

    let mut logs = Vec::new();
    for &seed in &seeds {
        let config = trainer::TrainConfig {
            seed,
            ..base.clone()
        };
        let bench = match &files {
            Some(_) => None,
            None => {
                let spec = SyntheticSpec::imbalanced_benchmark(seed);
                Some((
                    generate_synthetic(&spec)?,
                    generate_test_set(&spec, per_class)?,
                    spec,
                ))
            }
        };
        for &strategy in &strategies {
            let p = params.with_strategy(strategy);
            let log = match (&files, &bench) {
                (Some((tr, te, trp, tep)), _) => trainer::train(
                    tr,
                    te,
                    &p,
                    &config,
                    DataSource::Files {
                        train: trp.clone(),
                        test: tep.clone(),
                    },
                )?,
                (None, Some((tr, te, spec))) => trainer::train(
                    tr,
                    te,
                    &p,
                    &config,
                    DataSource::Synthetic {
                        spec: spec.clone(),
                        test_per_class: per_class,
                    },
                )?,
                (None, None) => unreachable!("one data source is always set"),
            };
            let dir = log.save(&out)?;
            println!(
                "{:<20} seed {:<4} final macro accuracy {:.4} -> {}",
                strategy.as_str(),
                seed,
                log.final_macro_accuracy(),
                dir.display()
            );
            logs.push(log);
        }
    }
    let agg = report::compare(&logs)?;
    agg.write(&out, "aggregate")?;
    if svg {
        write_text(&out.join("curves.svg"), &curves_svg(&agg))?;
    }
    print!("{}", agg.table());
    Ok(())
}

fn compare(cfg: &ConfigFile, a: CompareArgs) -> Result<()> {
    let out = out_dir(cfg, a.out)?;
    let svg = cfg.flag(a.svg, "svg")?;
    let c = report::compare_dirs(&a.runs)?;
    c.write(&out, "comparison")?;
    if svg {
        write_text(&out.join("curves.svg"), &curves_svg(&c))?;
    }
    print!("{}", c.table());
    Ok(())
}
