mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use medcorpus_core::rating::{
    aggregate_ratings, correlate_metrics, metric_ranking, ranks_to_scores, PointScores, RankingMode,
    RankingRecord,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

const LANGS: [&str; 6] = ["en", "zh", "ja", "fr", "ru", "es"];

#[test]
fn scheme() {
    println!("{}", check_rating_scheme(500, 41).unwrap());
    let r = RankingRecord::new("c", "h", RankingMode::Human, &["F", "E", "D", "C", "B", "A"]);
    let s = ranks_to_scores(&r, 6).unwrap();
    assert_eq!(s.iter().map(|(m, v)| format!("{m}{v}")).collect::<Vec<_>>(), ["A1", "B2", "C3", "D4", "E5", "F6"]);
}

#[test]
fn fifty_cases_six_languages_match_recomputation() {
    let mut r = rng(42);
    let mut records = Vec::new();
    let mut langs = BTreeMap::new();
    for lang in LANGS {
        for c in 0..50 {
            let case = format!("{lang}-{c}");
            langs.insert(case.clone(), lang.to_string());
            for a in 0..2 {
                records.push(random_ranking(&mut r, &case, &format!("ann{a}"), &MODELS6));
            }
        }
    }
    let m = aggregate_ratings(&records, &langs).unwrap();

    // spreadsheet style: one row per (record, model), then group sums
    let mut rows: Vec<(&str, &str, f64)> = Vec::new();
    for rec in &records {
        for (pos, model) in rec.ordering.iter().enumerate() {
            rows.push((langs[&rec.case_id].as_str(), model.as_str(), (6 - pos) as f64));
        }
    }
    for lang in LANGS {
        for model in MODELS6 {
            let vals: Vec<f64> = rows.iter().filter(|r| r.0 == lang && r.1 == model).map(|r| r.2).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            assert!((m.mean(model, lang).unwrap() - mean).abs() < 1e-12);
        }
    }
    for model in MODELS6 {
        let vals: Vec<f64> = rows.iter().filter(|r| r.1 == model).map(|r| r.2).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        assert!((m.overall_mean(model).unwrap() - mean).abs() < 1e-12);
    }
    assert!(m.case_counts().values().all(|&n| n == 50));

    let mut shuffled = records.clone();
    shuffled.shuffle(&mut r);
    assert_eq!(aggregate_ratings(&shuffled, &langs).unwrap(), m);
}

#[test]
fn correlation_matches_pair_counting() {
    let models = ["x", "y", "z"];
    let mut r = rng(43);
    let records: Vec<RankingRecord> = (0..10).map(|c| random_ranking(&mut r, &format!("c{c}"), "h", &models)).collect();
    let human = aggregate_ratings(&records, &BTreeMap::new()).unwrap();
    let mut metric = PointScores::new();
    for c in 0..10 {
        for m in models {
            metric.insert((format!("c{c}"), m.to_string()), r.random_range(0..5) as f64 / 4.0);
        }
    }
    let machine: BTreeMap<String, PointScores> = [("bleu".to_string(), metric.clone())].into();
    let rows = correlate_metrics(&machine, &human).unwrap();
    let hm = human.case_means();
    let a: Vec<f64> = hm.keys().map(|k| metric[k]).collect();
    let b: Vec<f64> = hm.values().copied().collect();
    let want = naive_tau(&a, &b).unwrap();
    assert!((rows[0].tau.unwrap() - want).abs() < 1e-12);
    assert_eq!(rows[0].n_points, 30);
}

#[test]
fn metric_ranking_matches_sort() {
    let models: BTreeSet<String> = MODELS6.iter().map(|s| s.to_string()).collect();
    let mut r = rng(44);
    for _ in 0..100 {
        let scores: BTreeMap<String, f64> = MODELS6.iter().map(|m| (m.to_string(), r.random::<f64>())).collect();
        let rec = metric_ranking("c", "bleu", &scores, &models).unwrap();
        let mut oracle: Vec<(&String, &f64)> = scores.iter().collect();
        oracle.sort_by(|a, b| b.1.partial_cmp(a.1).unwrap());
        assert_eq!(rec.ordering, oracle.iter().map(|(m, _)| (*m).clone()).collect::<Vec<_>>());
        assert!(rec.ties.is_empty());
    }
}

proptest! {
    #[test]
    fn metric_ranking_argsort_invariant(vals in proptest::collection::vec(0u8..5, 6), scale in 0.1f64..10.0, shift in -5.0f64..5.0) {
        let models: BTreeSet<String> = MODELS6.iter().map(|s| s.to_string()).collect();
        let base: BTreeMap<String, f64> = MODELS6.iter().zip(&vals).map(|(m, v)| (m.to_string(), f64::from(*v))).collect();
        let moved: BTreeMap<String, f64> = base.iter().map(|(m, v)| (m.clone(), (v * scale + shift).exp())).collect();
        let a = metric_ranking("c", "m", &base, &models).unwrap();
        let b = metric_ranking("c", "m", &moved, &models).unwrap();
        prop_assert_eq!(&a.ordering, &b.ordering);
        prop_assert_eq!(a.ties, b.ties);
    }

    #[test]
    fn aggregate_ignores_record_order(seed in 0u64..500) {
        let mut r = rng(seed);
        let recs: Vec<RankingRecord> = (0..12).map(|i| random_ranking(&mut r, &format!("c{}", i % 4), &format!("a{}", i / 4), &MODELS6)).collect();
        let mut rev = recs.clone();
        rev.reverse();
        let langs: BTreeMap<String, String> = (0..4).map(|c| (format!("c{c}"), LANGS[c % 2].to_string())).collect();
        prop_assert_eq!(aggregate_ratings(&recs, &langs).unwrap(), aggregate_ratings(&rev, &langs).unwrap());
    }
}
