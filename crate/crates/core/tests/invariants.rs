//! Property checks on the sampler, the proxy score and trace windows.

use curriculum_core::difficulty::{attach_scaled_difficulty, proxy_difficulty, ClusterTruth};
use curriculum_core::report::trace::{difficulty_bin, DIFFICULTY_BINS};
use curriculum_core::report::{run_trace, TraceConfig};
use curriculum_core::sampler::{img_visited, sampling_probabilities};
use curriculum_core::trainer::{generate_synthetic, SyntheticSpec};
use curriculum_core::{class_histogram, CurriculumParams, Dataset, Sample, Strategy, VisitState};
use proptest::prelude::*;
use proptest::strategy::Strategy as _;

fn arb_strategy() -> impl proptest::strategy::Strategy<Value = Strategy> {
    prop::sample::select(Strategy::ALL.to_vec())
}

fn arb_setup(
) -> impl proptest::strategy::Strategy<Value = (Dataset, Vec<u64>, u64, CurriculumParams)> {
    (1usize..5).prop_flat_map(|c| {
        (
            prop::collection::vec((prop::collection::vec(0..c, 1..4), -10.0f64..10.0), 1..12),
            prop::collection::vec(0u64..100, c),
            0u64..50_000,
            (0.0f64..=1.0, 1e-6f64..1e-2, 0.1f64..10.0, arb_strategy()),
        )
            .prop_map(move |(rows, counts, t, (alpha, gamma, k, strategy))| {
                let samples = rows
                    .iter()
                    .enumerate()
                    .map(|(i, (objs, raw))| Sample::new(format!("x{i}"), objs, *raw))
                    .collect();
                let names = (0..c).map(|i| format!("c{i}")).collect();
                let ds =
                    attach_scaled_difficulty(&Dataset::new(samples, names, None).unwrap()).unwrap();
                (
                    ds,
                    counts,
                    t,
                    CurriculumParams {
                        alpha,
                        gamma,
                        k,
                        strategy,
                    },
                )
            })
    })
}

proptest! {
    #[test]
    fn probabilities_form_a_distribution((ds, counts, t, params) in arb_setup()) {
        let state = VisitState::from_parts(counts, t);
        let p = sampling_probabilities(&ds, &state, &params).unwrap();
        prop_assert_eq!(p.len(), ds.len());
        prop_assert!(p.as_slice().iter().all(|&x| x.is_finite() && x >= 0.0));
        prop_assert!((p.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn visit_scores_are_bounded((ds, counts, t, _p) in arb_setup()) {
        let state = VisitState::from_parts(counts, t);
        let scores = state.visited_scores();
        prop_assert!(scores.iter().all(|s| (-1.0..=1.0).contains(s)));
        for s in ds.samples() {
            prop_assert!((-1.0..=1.0).contains(&img_visited(s, &scores)));
        }
    }

    #[test]
    fn update_counts_every_object((ds, counts, t, _p) in arb_setup(), picks in prop::collection::vec(0usize..100, 0..10)) {
        let mut state = VisitState::from_parts(counts.clone(), t);
        let batch: Vec<&Sample> = picks.iter().map(|&i| ds.sample(i % ds.len())).collect();
        state.update_visits(batch.iter().copied());
        let mut want = counts;
        for s in &batch {
            for c in s.class_ids() {
                want[c.index()] += 1;
            }
        }
        prop_assert_eq!(state.counts(), want.as_slice());
        prop_assert_eq!(state.iteration(), t + 1);
    }

    #[test]
    fn bins_partition_the_range(d in -1.0f64..=1.0) {
        let b = difficulty_bin(d);
        prop_assert!(b < DIFFICULTY_BINS);
        let lo = -1.0 + 2.0 * b as f64 / DIFFICULTY_BINS as f64;
        prop_assert!(lo <= d);
    }
}

fn ranks(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0; v.len()];
    for (rank, i) in idx.into_iter().enumerate() {
        r[i] = rank;
    }
    r
}

#[test]
fn proxy_ranks_match_distance_ratio() {
    let spec = SyntheticSpec::imbalanced_benchmark(6);
    let ds = generate_synthetic(&spec).unwrap();
    let dist = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let oracle: Vec<f64> = ds
        .samples()
        .iter()
        .map(|s| {
            let x = s.features.as_ref().unwrap();
            let own = s.primary_class().index();
            let nearest = (0..spec.n_classes)
                .filter(|&c| c != own)
                .map(|c| dist(x, &spec.cluster_means[c]))
                .fold(f64::INFINITY, f64::min);
            dist(x, &spec.cluster_means[own]) / nearest
        })
        .collect();
    let proxy: Vec<f64> = ds.samples().iter().map(|s| s.difficulty.unwrap()).collect();
    // Identical ranks, i.e. Spearman correlation 1.
    assert_eq!(ranks(&proxy), ranks(&oracle));
    let truth = ClusterTruth {
        means: spec.cluster_means.clone(),
    };
    let raw = proxy_difficulty(ds.sample(0), &truth).unwrap();
    assert!((raw - oracle[0] / (1.0 + oracle[0])).abs() < 1e-12);
}

fn trace_cfg(strategy: Strategy, seed: u64) -> TraceConfig {
    TraceConfig {
        params: CurriculumParams {
            gamma: 6e-4,
            ..CurriculumParams::default().with_strategy(strategy)
        },
        batch_size: 4,
        iterations: 4_000,
        window: 1_000,
        seed,
    }
}

#[test]
fn window_histograms_sum_to_draws() {
    let ds = generate_synthetic(&SyntheticSpec::imbalanced_benchmark(2)).unwrap();
    for strategy in Strategy::ALL {
        let rep = run_trace(&ds, &trace_cfg(strategy, 2)).unwrap();
        for w in &rep.windows {
            let rows: Vec<_> = rep
                .rows
                .iter()
                .filter(|r| (w.start..w.end).contains(&r.iteration))
                .collect();
            let objects: usize = rows
                .iter()
                .map(|r| {
                    ds.samples()
                        .iter()
                        .find(|s| s.id == r.sample_id)
                        .unwrap()
                        .objects
                        .len()
                })
                .sum();
            assert_eq!(rows.len() as u64, (w.end - w.start) * 4);
            assert_eq!(w.difficulty_hist.iter().sum::<u64>(), rows.len() as u64);
            assert_eq!(w.class_counts.iter().sum::<u64>(), objects as u64);
            let mean = rows.iter().map(|r| r.difficulty).sum::<f64>() / rows.len() as f64;
            assert!((mean - w.mean_difficulty).abs() < 1e-12);
        }
    }
}

#[test]
fn random_windows_follow_class_frequencies() {
    for seed in 1..=5 {
        let ds = generate_synthetic(&SyntheticSpec::imbalanced_benchmark(seed)).unwrap();
        let freq = class_histogram(&ds);
        let total: usize = freq.iter().sum();
        let rep = run_trace(&ds, &trace_cfg(Strategy::Random, seed)).unwrap();
        for w in &rep.windows {
            let drawn: u64 = w.class_counts.iter().sum();
            let tv = 0.5
                * w.class_counts
                    .iter()
                    .zip(&freq)
                    .map(|(&n, &f)| (n as f64 / drawn as f64 - f as f64 / total as f64).abs())
                    .sum::<f64>();
            assert!(tv <= 0.02, "seed {seed} window {}: tv {tv}", w.index);
        }
    }
}

#[test]
fn trace_uses_the_training_sampler_stream() {
    use curriculum_core::trainer::{train_synthetic, TrainConfig};
    let spec = SyntheticSpec::imbalanced_benchmark(4);
    let cfg = trace_cfg(Strategy::Curriculum, 4);
    let ds = generate_synthetic(&spec).unwrap();
    let rep = run_trace(
        &ds,
        &TraceConfig {
            iterations: 200,
            ..cfg.clone()
        },
    )
    .unwrap();
    let config = TrainConfig {
        iterations: 200,
        seed: 4,
        ..TrainConfig::default()
    };
    let log = train_synthetic(&spec, 10, &cfg.params, &config).unwrap();
    assert_eq!(rep.rows, log.trace_rows());
}
