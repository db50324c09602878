//! Outcomes on the synthetic benchmark beyond the acceptance criteria.

use curriculum_core::report::{class_summaries, compare};
use curriculum_core::trainer::{generate_synthetic, train_synthetic, SyntheticSpec, TrainConfig};
use curriculum_core::{class_histogram, CurriculumParams, Strategy};

#[test]
fn counts_follow_the_spec_without_noise() {
    let spec = SyntheticSpec {
        label_noise: 0.0,
        multi_label_rate: 0.0,
        ..SyntheticSpec::imbalanced_benchmark(1)
    };
    let ds = generate_synthetic(&spec).unwrap();
    assert_eq!(class_histogram(&ds), spec.per_class_counts);
    let rows = class_summaries(&ds).unwrap();
    let counts: Vec<usize> = rows.iter().map(|r| r.objects).collect();
    assert_eq!(counts, spec.per_class_counts);
}

#[test]
fn class_difficulty_follows_spread() {
    for seed in 1..=3 {
        let rows = class_summaries(
            &generate_synthetic(&SyntheticSpec::imbalanced_benchmark(seed)).unwrap(),
        )
        .unwrap();
        let means: Vec<f64> = rows.iter().map(|r| r.mean_difficulty).collect();
        assert!(
            means.windows(2).all(|w| w[0] < w[1]),
            "seed {seed}: {means:?}"
        );
    }
}

#[test]
fn balanced_two_class_counts_are_equal() {
    let spec = SyntheticSpec {
        n_classes: 2,
        per_class_counts: vec![50, 50],
        cluster_means: vec![vec![0.0], vec![4.0]],
        cluster_spread: vec![1.0, 1.0],
        label_noise: 0.0,
        multi_label_rate: 0.0,
        seed: 3,
    };
    let rows = class_summaries(&generate_synthetic(&spec).unwrap()).unwrap();
    assert_eq!(rows[0].objects, rows[1].objects);
}

#[test]
fn comparison_table_and_curves() {
    let mut logs = Vec::new();
    for seed in 1..=5 {
        let spec = SyntheticSpec::imbalanced_benchmark(seed);
        let config = TrainConfig {
            seed,
            ..TrainConfig::default()
        };
        for strategy in Strategy::ALL {
            let params = CurriculumParams {
                gamma: 6e-4,
                ..CurriculumParams::default().with_strategy(strategy)
            };
            logs.push(train_synthetic(&spec, 200, &params, &config).unwrap());
        }
    }
    let c = compare(&logs).unwrap();
    let order: Vec<Strategy> = c.summaries.iter().map(|s| s.strategy).collect();
    assert_eq!(
        order.first(),
        Some(&Strategy::DiverseCurriculum),
        "{order:?}"
    );
    assert_eq!(
        order.last(),
        Some(&Strategy::InverseCurriculum),
        "{order:?}"
    );

    let curve = |s: Strategy| -> Vec<f64> {
        c.curves
            .iter()
            .filter(|p| p.strategy == s)
            .map(|p| p.mean_macro)
            .collect()
    };
    let (diverse, random) = (curve(Strategy::DiverseCurriculum), curve(Strategy::Random));
    let later = diverse.len() / 2;
    for k in later..diverse.len() {
        assert!(
            diverse[k] > random[k],
            "checkpoint {k}: {} vs {}",
            diverse[k],
            random[k]
        );
    }
}
