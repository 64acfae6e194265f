//! End-to-end behaviour on synthetic corpora with planted common examples.

use varmap_core::corpus::{assign_single_labels, LabelSet, Split};
use varmap_core::dynamics::{rank_by_score, Scorer};
use varmap_core::evaluation::{average_precision, pr_series};
use varmap_core::preprocess::{normalize_dataset, NormalizationConfig};
use varmap_core::synthetic::{planted_commons, PlantedConfig};
use varmap_core::trainer::{per_group_f1, train_one_vs_rest, train_with_dynamics, TrainConfig};
use varmap_core::{Dataset, Instance};

fn config(seed: u64) -> TrainConfig {
    TrainConfig {
        seed,
        hash_dim: 1 << 16,
        ..Default::default()
    }
}

fn planted(instances: usize, common_fraction: f64, seed: u64) -> Dataset {
    let mut ds = planted_commons(&PlantedConfig {
        instances,
        common_fraction,
        ..Default::default()
    });
    normalize_dataset(&mut ds, &NormalizationConfig::default());
    assign_single_labels(&ds, seed)
}

#[test]
fn separable_classes_are_fit() {
    let ds = planted(400, 0.0, 1);
    let (model, log) = train_with_dynamics(&ds, &config(42)).unwrap();
    let last = log.epochs();
    let correct = (0..log.num_instances())
        .filter(|&i| log.argmax(i, last) == log.gold_index(i))
        .count();
    assert!(correct as f64 / log.num_instances() as f64 >= 0.99);

    // A text made only of variety-A markers (prefix "zq") is confidently A.
    let mut markers: Vec<&str> = ds
        .instances
        .iter()
        .filter(|i| i.train_label.as_ref() == Some(&ds.labels.variety_a))
        .flat_map(|i| i.text().split(' ').filter(|w| w.starts_with("zq")))
        .collect();
    markers.sort();
    markers.dedup();
    let marker_text = markers[..4].join(" ");
    let p = model.predict_proba(&marker_text)[0];
    assert!(p > 0.9, "{marker_text} {p}");
}

#[test]
fn training_is_deterministic() {
    let ds = planted(150, 0.4, 3);
    let (m1, l1) = train_with_dynamics(&ds, &config(5)).unwrap();
    let (m2, l2) = train_with_dynamics(&ds, &config(5)).unwrap();
    assert_eq!(m1, m2);
    assert_eq!(l1, l2);
    let (_, l3) = train_with_dynamics(&ds, &config(6)).unwrap();
    assert_ne!(l1, l3);
}

#[test]
fn logged_probabilities_are_normalized() {
    let ds = planted(120, 0.4, 2);
    let (_, log) = train_with_dynamics(&ds, &config(42)).unwrap();
    assert_eq!(log.num_records(), 120 * 10);
    for i in 0..log.num_instances() {
        for e in 1..=log.epochs() {
            let sum: f64 = log.probs(i, e).iter().sum();
            assert!((sum - 1.0).abs() < 1e-6);
        }
    }
}

#[test]
fn permuting_the_dataset_keeps_the_log_schema() {
    let ds = planted(100, 0.4, 4);
    let mut reversed = ds.clone();
    reversed.instances.reverse();
    let (_, a) = train_with_dynamics(&ds, &config(42)).unwrap();
    let (_, b) = train_with_dynamics(&reversed, &config(42)).unwrap();
    assert_eq!(a.num_records(), b.num_records());
    assert_eq!(a.labels(), b.labels());
    let mut ids_a = a.ids().to_vec();
    let mut ids_b = b.ids().to_vec();
    ids_a.sort();
    ids_b.sort();
    assert_eq!(ids_a, ids_b);
}

#[test]
fn dynamics_scope_selects_instances() {
    let mut ds = planted(60, 0.4, 4);
    for inst in ds.instances.iter_mut().take(10) {
        inst.split = Split::Test;
    }
    let (_, train_only) = train_with_dynamics(&ds, &config(1)).unwrap();
    assert_eq!(train_only.num_instances(), 50);
    let full = TrainConfig {
        scope: varmap_core::trainer::DynamicsScope::FullDataset,
        ..config(1)
    };
    let (_, all) = train_with_dynamics(&ds, &full).unwrap();
    assert_eq!(all.num_instances(), 60);
}

#[test]
fn mean_confidence_beats_random_and_recall_flattens() {
    let ds = planted(600, 0.4, 42);
    let (_, log) = train_with_dynamics(&ds, &config(42)).unwrap();
    let truth = ds.common_flags();
    let aps = |scorer: Scorer| {
        let ranked = rank_by_score(&scorer.score(&log, 42).unwrap()).unwrap();
        average_precision(&ranked, &truth).unwrap()
    };
    let mean = aps(Scorer::DmMeanPred);
    let std = aps(Scorer::DmStdPred);
    let random = aps(Scorer::Random);
    let gold = aps(Scorer::DmGoldConfidence);
    eprintln!("mean {mean:.2} std {std:.2} gold {gold:.2} random {random:.2}");
    assert!(mean > random);

    // Recall gains per step shrink as N grows: the first half of the series
    // gains more recall than the second half.
    let ranked = rank_by_score(&Scorer::DmMeanPred.score(&log, 0).unwrap()).unwrap();
    let series = pr_series(&ranked, &truth, 10, 10).unwrap();
    let mid = series.len() / 2;
    let first = series[mid].recall - series[0].recall;
    let second = series.last().unwrap().recall - series[mid].recall;
    assert!(first > second, "first {first} second {second}");
}

#[test]
fn common_examples_lag_in_early_f1() {
    let mut wins = 0;
    for seed in [42, 151, 2021, 15, 98] {
        let ds = planted(400, 0.4, seed);
        let (_, log) = train_with_dynamics(&ds, &config(seed)).unwrap();
        let f1 = per_group_f1(&log, &ds);
        if f1[0].f1_non_common.unwrap() > f1[0].f1_common.unwrap() {
            wins += 1;
        }
    }
    assert!(wins >= 3, "non-common ahead at epoch 1 in only {wins} of 5 seeds");
}

#[test]
fn one_vs_rest_recovers_commons() {
    let ds = planted(300, 0.4, 8);
    let report = train_one_vs_rest(&ds, &config(8)).unwrap();
    let single = &report.rows[0];
    let multi = &report.rows[1];
    assert!(multi.f1 > single.f1, "{report:?}");
}

#[test]
fn one_vs_rest_without_commons_matches_single_label() {
    let ds = planted(300, 0.0, 8);
    let report = train_one_vs_rest(&ds, &config(8)).unwrap();
    assert!((report.rows[0].f1 - report.rows[1].f1).abs() <= 2.0, "{report:?}");
}

#[test]
fn one_instance_per_class() {
    let inst = |id: &str, label: &str| Instance {
        id: id.into(),
        raw_text: format!("texto {id}"),
        normalized_text: None,
        train_label: Some(label.into()),
        is_common: false,
        annotations: vec![],
        split: Split::Train,
    };
    let ds = Dataset::new(LabelSet::cuban(), vec![inst("a", "ES-CU"), inst("b", "not-ES-CU")]).unwrap();
    assert_eq!(train_one_vs_rest(&ds, &config(1)).unwrap().rows.len(), 2);
}
