//! Seeded fixtures for the criterion benches.

use std::path::{Path, PathBuf};

use medcorpus_core::{load_lexicon, Lexicon};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FILLER_EN: &[&str] = &[
    "the", "of", "and", "market", "weather", "report", "city", "people", "river", "school", "music", "game",
];
const FILLER_ZH: &[&str] = &["今天", "天气", "城市", "学校", "音乐", "比赛", "市场", "人们"];

pub fn lexicon_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../lexicons")
}

pub fn shipped_lexicon(lang: &str) -> Lexicon {
    load_lexicon(lexicon_dir().join(format!("{lang}.txt")), lang).expect("shipped lexicon")
}

/// Roughly `words` units of text where about `medical_rate` of them are
/// lexicon terms. Chinese text is not space separated.
pub fn synthetic_doc(lex: &Lexicon, words: usize, medical_rate: f64, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<&String> = lex.terms().iter().collect();
    let (filler, sep) = if matches!(lex.lang(), "zh" | "ja") { (FILLER_ZH, "") } else { (FILLER_EN, " ") };
    let mut parts = Vec::with_capacity(words);
    for _ in 0..words {
        if rng.random_bool(medical_rate) {
            parts.push(terms.choose(&mut rng).expect("non-empty lexicon").as_str());
        } else {
            parts.push(filler.choose(&mut rng).expect("filler"));
        }
    }
    parts.join(sep)
}

/// JSON-lines corpus mixing medical and general documents.
pub fn synthetic_corpus(lang: &str, docs: usize, words: usize, seed: u64) -> String {
    let lex = shipped_lexicon(lang);
    let mut out = String::new();
    for i in 0..docs {
        let rate = if i % 2 == 0 { 0.15 } else { 0.01 };
        let text = synthetic_doc(&lex, words, rate, seed.wrapping_add(i as u64));
        let rec = serde_json::json!({ "id": format!("{lang}-{i}"), "lang": lang, "text": text, "source": "filtered_web" });
        out.push_str(&rec.to_string());
        out.push('\n');
    }
    out
}

/// Random token sequence over a vocabulary of `vocab` words.
pub fn tokens(n: usize, vocab: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| format!("t{}", rng.random_range(0..vocab))).collect()
}

/// `n` random unit vectors of dimension `dim`.
pub fn unit_vectors(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect()
}

pub fn random_scores(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..50u32))).collect();
    let b = a.iter().map(|x| x + f64::from(rng.random_range(0..20u32))).collect();
    (a, b)
}
