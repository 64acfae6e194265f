//! Library results checked against naive reference implementations.

use std::collections::HashMap;

use varmap_core::corpus::{
    aggregate_annotations, Aggregation, AnnotationRecord, DiscardReason, LabelSet, VarietyLabel,
};
use varmap_core::dynamics::{rank_by_score, EpochProbabilityLog, RankedList, ScoreRecord, Scorer};
use varmap_core::evaluation::{average_precision, precision_recall_at};
use varmap_core::rng::SplitMix64;
use varmap_core::trainer::{gradient, objective, random_model};

fn labels() -> Vec<VarietyLabel> {
    vec!["ES-CU".into(), "not-ES-CU".into()]
}

fn random_log(rng: &mut SplitMix64, instances: usize, epochs: usize) -> EpochProbabilityLog {
    let ids = (0..instances).map(|i| format!("i{i}")).collect();
    let gold = (0..instances).map(|_| rng.next_below(2) as usize).collect();
    let mut log = EpochProbabilityLog::zeroed(labels(), ids, gold, epochs);
    for i in 0..instances {
        for e in 1..=epochs {
            let p = rng.next_f64();
            log.set_probs(i, e, &[p, 1.0 - p]);
        }
    }
    log
}

fn naive_scores(log: &EpochProbabilityLog, i: usize) -> (f64, f64, f64) {
    let maxes: Vec<f64> = (1..=log.epochs())
        .map(|e| log.probs(i, e).iter().cloned().fold(f64::MIN, f64::max))
        .collect();
    let e = maxes.len() as f64;
    let mean = maxes.iter().sum::<f64>() / e;
    let var = maxes.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / e;
    let gold = (1..=log.epochs()).map(|ep| log.probs(i, ep)[log.gold_index(i)]).sum::<f64>() / e;
    (-mean, var.sqrt(), -gold)
}

#[test]
fn scorers_match_reference_on_random_logs() {
    let mut rng = SplitMix64::new(99);
    for _ in 0..200 {
        let n = 1 + rng.next_below(30) as usize;
        let epochs = 1 + rng.next_below(12) as usize;
        let log = random_log(&mut rng, n, epochs);
        let mean = Scorer::DmMeanPred.score(&log, 0).unwrap();
        let std = Scorer::DmStdPred.score(&log, 0).unwrap();
        let gold = Scorer::DmGoldConfidence.score(&log, 0).unwrap();
        for i in 0..n {
            let (m, s, g) = naive_scores(&log, i);
            assert!((mean[i].score - m).abs() <= 1e-12);
            assert!((std[i].score - s).abs() <= 1e-12);
            assert!((gold[i].score - g).abs() <= 1e-12);
            assert_eq!(mean[i].instance_id, log.ids()[i]);
        }
    }
}

#[test]
fn hand_computed_scores() {
    let mut log = EpochProbabilityLog::zeroed(labels(), vec!["x".into()], vec![0], 3);
    log.set_probs(0, 1, &[0.9, 0.1]);
    log.set_probs(0, 2, &[0.3, 0.7]);
    log.set_probs(0, 3, &[0.6, 0.4]);
    let mean = Scorer::DmMeanPred.score(&log, 0).unwrap()[0].score;
    let std = Scorer::DmStdPred.score(&log, 0).unwrap()[0].score;
    let gold = Scorer::DmGoldConfidence.score(&log, 0).unwrap()[0].score;
    assert!((mean + 0.7333333333333333).abs() < 1e-12);
    // maxes 0.9, 0.7, 0.6 → population std sqrt(0.0155556)
    assert!((std - 0.12472191289246473).abs() < 1e-12);
    assert!((gold + 0.6).abs() < 1e-12);
}

#[test]
fn random_scorer_is_seeded_and_uniform() {
    let mut rng = SplitMix64::new(3);
    let log = random_log(&mut rng, 20_000, 1);
    let a = Scorer::Random.score(&log, 7).unwrap();
    let b = Scorer::Random.score(&log, 7).unwrap();
    let c = Scorer::Random.score(&log, 8).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    let mean = a.iter().map(|r| r.score).sum::<f64>() / a.len() as f64;
    assert!((mean - 0.5).abs() < 0.02, "{mean}");
    assert!(a.iter().all(|r| (0.0..1.0).contains(&r.score)));
}

fn brute_ap(flags: &[bool]) -> f64 {
    // Mean over commons of precision at that common's rank.
    let total = flags.iter().filter(|f| **f).count();
    let mut sum = 0.0;
    for (k, f) in flags.iter().enumerate() {
        if *f {
            let hits = flags[..=k].iter().filter(|f| **f).count();
            sum += hits as f64 / (k + 1) as f64;
        }
    }
    100.0 * sum / total as f64
}

fn ranked_from_flags(rng: &mut SplitMix64, n: usize) -> (RankedList, HashMap<String, bool>, Vec<bool>) {
    let mut flags: Vec<bool> = (0..n).map(|_| rng.next_f64() < 0.4).collect();
    flags[rng.next_below(n as u64) as usize] = true;
    let scores: Vec<ScoreRecord> = (0..n)
        .map(|i| ScoreRecord {
            instance_id: format!("d{i:04}"),
            scorer: Scorer::Random,
            score: -(i as f64),
        })
        .collect();
    let truth = flags.iter().enumerate().map(|(i, f)| (format!("d{i:04}"), *f)).collect();
    (rank_by_score(&scores).unwrap(), truth, flags)
}

#[test]
fn metrics_match_brute_force() {
    let mut rng = SplitMix64::new(5);
    for _ in 0..300 {
        let n = 1 + rng.next_below(200) as usize;
        let (ranked, truth, flags) = ranked_from_flags(&mut rng, n);
        let ap = average_precision(&ranked, &truth).unwrap();
        assert!((ap - brute_ap(&flags)).abs() < 1e-9);
        let total = flags.iter().filter(|f| **f).count() as f64;
        for cut in 1..=n {
            let hits = flags[..cut].iter().filter(|f| **f).count() as f64;
            let (p, r) = precision_recall_at(&ranked, &truth, cut).unwrap();
            assert!((p - 100.0 * hits / cut as f64).abs() < 1e-9);
            assert!((r - 100.0 * hits / total).abs() < 1e-9);
        }
    }
}

#[test]
fn hand_computed_ap() {
    let mut rng = SplitMix64::new(0);
    let (ranked, _, _) = ranked_from_flags(&mut rng, 4);
    let truth: HashMap<String, bool> = [("d0000", true), ("d0001", false), ("d0002", true), ("d0003", false)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    // (1/1 + 2/3) / 2
    assert!((average_precision(&ranked, &truth).unwrap() - 83.33333333333333).abs() < 1e-9);
    assert_eq!(precision_recall_at(&ranked, &truth, 2).unwrap(), (50.0, 50.0));
}

fn vote(role: usize, id: usize) -> AnnotationRecord {
    AnnotationRecord {
        annotator_id: format!("a{id}"),
        cuban_variety: role == 0,
        not_cuban_variety: role == 1,
        specific_variety: None,
        not_able_to_identify: role == 2,
        irrelevant: false,
    }
}

#[test]
fn aggregation_exhaustive_over_three_annotators() {
    let set = LabelSet::cuban();
    let codes = [set.variety_a.clone(), set.variety_b.clone(), set.common.clone()];
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                let records = [vote(a, 1), vote(b, 2), vote(c, 3)];
                let expected = if a == b || a == c {
                    Aggregation::Label(codes[a].clone())
                } else if b == c {
                    Aggregation::Label(codes[b].clone())
                } else {
                    Aggregation::Discard(DiscardReason::Disagreement)
                };
                assert_eq!(aggregate_annotations(&records).unwrap(), expected, "{a}{b}{c}");
                for who in 0..3 {
                    let mut marked = records.clone();
                    marked[who].irrelevant = true;
                    assert_eq!(
                        aggregate_annotations(&marked).unwrap(),
                        Aggregation::Discard(DiscardReason::Irrelevant)
                    );
                }
            }
        }
    }
}

#[test]
fn gradient_matches_central_differences() {
    let texts = ["hola asere qué bolá", "che boludo", "vamos a la playa", "ok", "qué tal tío"];
    for seed in 0..100u64 {
        let labels = 2 + (seed % 3) as usize;
        let model = random_model(labels, 32, seed);
        let examples: Vec<_> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| (model.features().vectorize(t), i % labels))
            .collect();
        let l2 = 0.01;
        let (dw, db) = gradient(&model, &examples, l2);
        let h = 1e-5;
        let mut num = Vec::new();
        let mut ana = Vec::new();
        for j in 0..dw.len() {
            let mut plus = model.clone();
            plus.weights_mut()[j] += h;
            let mut minus = model.clone();
            minus.weights_mut()[j] -= h;
            num.push((objective(&plus, &examples, l2) - objective(&minus, &examples, l2)) / (2.0 * h));
            ana.push(dw[j]);
        }
        for k in 0..db.len() {
            let mut plus = model.clone();
            plus.bias_mut()[k] += h;
            let mut minus = model.clone();
            minus.bias_mut()[k] -= h;
            num.push((objective(&plus, &examples, l2) - objective(&minus, &examples, l2)) / (2.0 * h));
            ana.push(db[k]);
        }
        let diff: f64 = num.iter().zip(&ana).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale: f64 = num.iter().map(|a| a * a).sum::<f64>().sqrt() + ana.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(diff / scale <= 1e-5, "seed {seed}: {}", diff / scale);
    }
}
