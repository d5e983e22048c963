//! Brute-force reference implementations and random generators shared by
//! the integration tests and the acceptance suite. Each check returns a
//! one-line summary on success and a description of the first violation on
//! failure.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use medcorpus_core::chunk::chunk_document;
use medcorpus_core::config::FilterConfig;
use medcorpus_core::filter::{KeywordMatcher, MatchConfig, SegmentationMode};
use medcorpus_core::lexicon::Lexicon;
use medcorpus_core::metrics::{bleu, bleu_n, rouge_l, rouge_n, TokenizedPair};
use medcorpus_core::ocr::{reading_order, TextBox};
use medcorpus_core::prompts::{build_prompt, PromptKind};
use medcorpus_core::qa::{split_dataset, QAItem, SplitSpec};
use medcorpus_core::rating::{aggregate_ratings, kendall_tau, ranks_to_scores, RankingMode, RankingRecord};
use medcorpus_core::text::{is_punctuation, normalize};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<String, String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- filter

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveVerdict {
    pub mkc: usize,
    pub dens: f64,
    pub keep: bool,
}

fn naive_tokens(normalized: &str) -> Vec<String> {
    normalized
        .split_whitespace()
        .map(|w| w.trim_matches(is_punctuation).to_string())
        .filter(|w| !w.is_empty())
        .collect()
}

/// Scan every position against every term.
pub fn naive_classify(text: &str, terms: &[String], cfg: &MatchConfig) -> NaiveVerdict {
    let norm = normalize(text);
    let text_len = norm.chars().count();
    let mut distinct = BTreeSet::new();
    let mut covered = 0usize;
    match cfg.mode {
        SegmentationMode::SpaceDelimited => {
            let toks = naive_tokens(&norm);
            let term_toks: Vec<Vec<String>> = terms.iter().map(|t| naive_tokens(t)).collect();
            for (t, tt) in terms.iter().zip(&term_toks) {
                if tt.is_empty() || tt.len() > toks.len() {
                    continue;
                }
                if (0..=toks.len() - tt.len()).any(|i| toks[i..i + tt.len()] == tt[..]) {
                    distinct.insert(t.clone());
                }
            }
            let mut i = 0;
            while i < toks.len() {
                let best = term_toks
                    .iter()
                    .zip(terms)
                    .filter(|(tt, _)| !tt.is_empty() && i + tt.len() <= toks.len() && toks[i..i + tt.len()] == tt[..])
                    .max_by_key(|(tt, _)| tt.len());
                match best {
                    Some((tt, t)) => {
                        covered += t.chars().count();
                        i += tt.len();
                    }
                    None => i += 1,
                }
            }
        }
        SegmentationMode::Contiguous => {
            let chars: Vec<char> = norm.chars().collect();
            let term_chars: Vec<Vec<char>> = terms.iter().map(|t| t.chars().collect()).collect();
            let mut i = 0;
            while i < chars.len() {
                let best = term_chars
                    .iter()
                    .zip(terms)
                    .filter(|(tc, _)| i + tc.len() <= chars.len() && chars[i..i + tc.len()] == tc[..])
                    .max_by_key(|(tc, _)| tc.len());
                match best {
                    Some((tc, t)) => {
                        distinct.insert(t.clone());
                        covered += tc.len();
                        i += tc.len();
                    }
                    None => i += 1,
                }
            }
        }
    }
    let mkc = distinct.len();
    let dens = if text_len == 0 { 0.0 } else { covered as f64 / text_len as f64 };
    NaiveVerdict {
        mkc,
        dens,
        keep: mkc > cfg.t_c as usize && dens > cfg.t_d,
    }
}

const SPACE_TERMS: &[&str] = &[
    "flu", "flu shot", "shot", "blood", "blood pressure", "high blood pressure", "pressure", "insulin",
    "diabète", "fièvre", "инсулин", "x-ray", "heart", "heart failure", "failure",
];
const SPACE_NOISE: &[&str] = &[
    "the", "a", "of", "patient", "dose", "and", "very", "FLU", "Flu,", "(insulin)", "BLOOD", "pressure.",
    "Diabe\u{0300}te", "ИНСУЛИН!", "X-Ray", "«heart»", "shot?", "--", "high", "…",
];
const CJK_TERMS: &[&str] = &["糖尿", "糖尿病", "尿病", "病", "高血压", "血压", "患者", "治疗", "aa", "Ａ"];
const CJK_NOISE: &[&str] = &["的", "是", "糖", "尿", "高", "血", "压", "病", "患", "者", "治", "疗", "a", "A", "。", " ", "ａ"];

fn random_lexicon(r: &mut ChaCha8Rng, lang: &str, pool: &[&str]) -> Lexicon {
    let mut picked: Vec<&str> = pool.iter().copied().filter(|_| r.random_bool(0.7)).collect();
    if picked.is_empty() {
        picked.push(pool[0]);
    }
    Lexicon::from_lines(lang, picked).expect("non-empty")
}

fn random_doc(r: &mut ChaCha8Rng, terms: &[&str], noise: &[&str], sep: &str) -> String {
    let n = r.random_range(0..40);
    let mut parts = Vec::with_capacity(n);
    for _ in 0..n {
        let pool = if r.random_bool(0.4) { terms } else { noise };
        parts.push(*pool.choose(r).expect("non-empty pool"));
    }
    parts.join(sep)
}

/// `docs` random documents per mode, each against a random lexicon and
/// random thresholds, compared field by field with the naive scanner.
pub fn check_filter_oracle(docs: usize, seed: u64) -> Check {
    let start = Instant::now();
    let mut r = rng(seed);
    let modes = [
        ("en", SegmentationMode::SpaceDelimited, SPACE_TERMS, SPACE_NOISE, " "),
        ("zh", SegmentationMode::Contiguous, CJK_TERMS, CJK_NOISE, ""),
    ];
    let mut kept = 0;
    for (lang, mode, terms, noise, sep) in modes {
        for i in 0..docs {
            let lex = random_lexicon(&mut r, lang, terms);
            let cfg = MatchConfig::new(lang, mode, r.random_range(0..8), r.random_range(0.0..0.6)).expect("valid config");
            let doc = random_doc(&mut r, terms, noise, sep);
            let matcher = KeywordMatcher::new(&lex, mode).map_err(|e| e.to_string())?;
            let fast = matcher.classify(&doc, &cfg).map_err(|e| e.to_string())?;
            let lex_terms: Vec<String> = lex.terms().iter().cloned().collect();
            let slow = naive_classify(&doc, &lex_terms, &cfg);
            if (fast.mkc, fast.dens, fast.keep) != (slow.mkc, slow.dens, slow.keep) {
                return Err(format!(
                    "{mode} doc {i} {doc:?}: fast ({}, {}, {}) vs naive ({}, {}, {})",
                    fast.mkc, fast.dens, fast.keep, slow.mkc, slow.dens, slow.keep
                ));
            }
            kept += usize::from(fast.keep);
        }
    }
    let elapsed = start.elapsed();
    if elapsed.as_secs() >= 60 {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("{} docs across 2 modes agree, {kept} kept, {elapsed:.2?}", 2 * docs))
}

// ------------------------------------------------------------ thresholds

pub fn check_threshold_table() -> Check {
    let shipped = FilterConfig::shipped();
    let expected = [
        ("en", SegmentationMode::SpaceDelimited, 5, 0.04),
        ("es", SegmentationMode::SpaceDelimited, 4, 0.04),
        ("fr", SegmentationMode::SpaceDelimited, 4, 0.04),
        ("ru", SegmentationMode::SpaceDelimited, 4, 0.02),
        ("zh", SegmentationMode::Contiguous, 5, 0.05),
        ("ja", SegmentationMode::Contiguous, 5, 0.05),
    ];
    if shipped.langs().count() != expected.len() {
        return Err(format!("{} languages shipped", shipped.langs().count()));
    }
    for (lang, mode, t_c, t_d) in expected {
        let c = shipped.get(lang).ok_or(format!("{lang} missing"))?;
        if (c.mode, c.t_c, c.t_d) != (mode, t_c, t_d) {
            return Err(format!("{lang}: {:?}", c));
        }
    }
    let again = FilterConfig::from_json(&shipped.to_json()).map_err(|e| e.to_string())?;
    if again != shipped {
        return Err("JSON round trip changed the table".into());
    }

    // Boundaries: one word per distinct term, padded so density is exact.
    let terms: Vec<String> = (0..6).map(|i| format!("term{i}")).collect();
    let lex = Lexicon::from_lines("en", terms.iter().map(String::as_str)).map_err(|e| e.to_string())?;
    let matcher = KeywordMatcher::new(&lex, SegmentationMode::SpaceDelimited).map_err(|e| e.to_string())?;
    let en = shipped.get("en").expect("en");
    // 5 distinct terms is mkc = t_c: reject even with full density
    let at_tc = terms[..5].join(" ");
    let v = matcher.classify(&at_tc, en).map_err(|e| e.to_string())?;
    if v.mkc != 5 || v.keep {
        return Err(format!("mkc = t_c kept: {v:?}"));
    }
    let above = terms.join(" ");
    if !matcher.classify(&above, en).map_err(|e| e.to_string())?.keep {
        return Err("mkc > t_c with full density rejected".into());
    }
    // 6 terms × 5 chars = 30 keyword chars; total 750 gives dens = 0.04 exactly
    let mut text = above.clone();
    let pad = 750 - text.chars().count() - 1;
    text.push(' ');
    text.push_str(&"x".repeat(pad));
    let v = matcher.classify(&text, en).map_err(|e| e.to_string())?;
    if v.text_len != 750 || v.dens != 0.04 || v.keep {
        return Err(format!("dens = t_d kept: dens {} len {}", v.dens, v.text_len));
    }
    text.pop();
    let v = matcher.classify(&text, en).map_err(|e| e.to_string())?;
    if !(v.dens > 0.04) || !v.keep {
        return Err(format!("dens just above t_d rejected: {}", v.dens));
    }
    Ok("6 languages match, JSON round trip exact, mkc = t_c and dens = t_d both reject".into())
}

// ----------------------------------------------------------------- chunks

pub fn check_chunks(docs: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    let mut lengths = Vec::with_capacity(docs);
    lengths.extend([1, 2047, 2048, 2049, 3584, 3585, 10_000]);
    while lengths.len() < docs {
        lengths.push(r.random_range(1..=10_000));
    }
    let mut chunks_total = 0;
    for &n in &lengths {
        let tokens: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        let chunks = chunk_document("d", &tokens, 2048, 512).map_err(|e| e.to_string())?;
        chunks_total += chunks.len();
        let mut covered = vec![false; n];
        for (k, c) in chunks.iter().enumerate() {
            if c.index != k || c.tokens.is_empty() || c.tokens.len() > 2048 {
                return Err(format!("n={n} chunk {k}: len {}", c.tokens.len()));
            }
            if k > 0 && c.start_offset - chunks[k - 1].start_offset != 1536 {
                return Err(format!("n={n} chunk {k}: step {}", c.start_offset - chunks[k - 1].start_offset));
            }
            for (j, t) in c.tokens.iter().enumerate() {
                if *t != tokens[c.start_offset + j] {
                    return Err(format!("n={n} chunk {k}: token {j} misplaced"));
                }
                covered[c.start_offset + j] = true;
            }
        }
        let last = chunks.last().ok_or(format!("n={n}: no chunks"))?;
        if last.start_offset + last.tokens.len() != n {
            return Err(format!("n={n}: final chunk ends at {}", last.start_offset + last.tokens.len()));
        }
        if chunks.len() > 1 && chunks[chunks.len() - 2].start_offset + 2048 >= n {
            return Err(format!("n={n}: redundant final chunk"));
        }
        if covered.iter().any(|c| !c) {
            return Err(format!("n={n}: uncovered tokens"));
        }
    }
    Ok(format!("{} documents, {chunks_total} chunks, 0 violations", lengths.len()))
}

// ---------------------------------------------------------------- metrics

fn windows(t: &[String], n: usize) -> Vec<&[String]> {
    if t.len() < n {
        Vec::new()
    } else {
        (0..=t.len() - n).map(|i| &t[i..i + n]).collect()
    }
}

/// Enumerate every distinct candidate n-gram and count both sides.
pub fn naive_overlap(c: &[String], r: &[String], n: usize) -> (usize, usize, usize) {
    let cw = windows(c, n);
    let rw = windows(r, n);
    let mut distinct: Vec<&[String]> = Vec::new();
    for g in &cw {
        if !distinct.contains(g) {
            distinct.push(g);
        }
    }
    let overlap = distinct
        .iter()
        .map(|g| {
            let in_c = cw.iter().filter(|x| *x == g).count();
            let in_r = rw.iter().filter(|x| *x == g).count();
            in_c.min(in_r)
        })
        .sum();
    (overlap, cw.len(), rw.len())
}

pub fn naive_bleu_n(c: &[String], r: &[String], n: usize) -> f64 {
    let (o, ct, _) = naive_overlap(c, r, n);
    if ct == 0 || o == 0 {
        return 0.0;
    }
    let bp = if c.len() >= r.len() {
        1.0
    } else {
        (1.0 - r.len() as f64 / c.len() as f64).exp()
    };
    bp * o as f64 / ct as f64
}

pub fn naive_bleu(c: &[String], r: &[String]) -> f64 {
    let mut logs = 0.0;
    for n in 1..=4 {
        let (o, ct, _) = naive_overlap(c, r, n);
        if ct == 0 || o == 0 {
            return 0.0;
        }
        logs += 0.25 * (o as f64 / ct as f64).ln();
    }
    let bp = if c.len() >= r.len() {
        1.0
    } else {
        (1.0 - r.len() as f64 / c.len() as f64).exp()
    };
    bp * logs.exp()
}

pub fn naive_rouge_n(c: &[String], r: &[String], n: usize) -> (f64, f64, f64) {
    let (o, ct, rt) = naive_overlap(c, r, n);
    if o == 0 {
        return (0.0, 0.0, 0.0);
    }
    let p = o as f64 / ct as f64;
    let rc = o as f64 / rt as f64;
    (p, rc, 2.0 * p * rc / (p + rc))
}

/// Longest common subsequence by trying every subset of `a`, largest first.
pub fn naive_lcs(a: &[String], b: &[String]) -> usize {
    assert!(a.len() <= 16);
    let is_subseq = |mask: u32| {
        let mut j = 0;
        for (i, x) in a.iter().enumerate() {
            if mask & (1 << i) != 0 {
                while j < b.len() && b[j] != *x {
                    j += 1;
                }
                if j == b.len() {
                    return false;
                }
                j += 1;
            }
        }
        true
    };
    (0u32..1 << a.len())
        .filter(|&m| is_subseq(m))
        .map(|m| m.count_ones() as usize)
        .max()
        .unwrap_or(0)
}

pub fn naive_rouge_l(c: &[String], r: &[String]) -> (f64, f64, f64) {
    let l = naive_lcs(c, r);
    if l == 0 {
        return (0.0, 0.0, 0.0);
    }
    let p = l as f64 / c.len() as f64;
    let rc = l as f64 / r.len() as f64;
    (p, rc, 2.0 * p * rc / (p + rc))
}

pub fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

pub fn pair(c: &str, r: &str) -> TokenizedPair {
    TokenizedPair {
        candidate: toks(c),
        reference: toks(r),
        lang: "en".into(),
    }
}

/// Fixed cases with hand-derived expectations: (candidate, reference,
/// metric, expected).
pub fn fixed_metric_cases() -> Vec<(&'static str, &'static str, &'static str, f64)> {
    let e = std::f64::consts::E;
    vec![
        ("the cat sat on the mat", "the cat sat on the mat", "bleu", 1.0),
        ("the cat sat on the mat", "the cat sat on the mat", "bleu4", 1.0),
        ("the the the", "the cat", "bleu1", 1.0 / 3.0),
        ("a b", "c d", "bleu1", 0.0),
        ("", "c d", "bleu1", 0.0),
        ("a b c", "a b c", "bleu", 0.0),
        ("the cat sat on the mat", "the cat is on the mat", "bleu1", 5.0 / 6.0),
        ("the cat sat on the mat", "the cat is on the mat", "bleu2", 3.0 / 5.0),
        ("the cat sat on the mat", "the cat is on the mat", "bleu3", 1.0 / 4.0),
        ("the cat sat on the mat", "the cat is on the mat", "bleu", 0.0),
        ("a b c d e f", "a b c d e f g h", "bleu", (1.0f64 - 8.0 / 6.0).exp()),
        ("a b", "a b c d", "bleu1", 1.0 / e),
        ("a b", "b c", "rouge1", 0.5),
        ("a b c", "a b c", "rouge2", 1.0),
        ("a b", "c d", "rouge1", 0.0),
        ("a x b", "a b y", "rougeL", 2.0 / 3.0),
        ("a b", "a b", "rougeL", 1.0),
        ("a b c d", "a b", "rouge1", 2.0 * 0.5 * 1.0 / 1.5),
        ("a a b", "a b b", "rouge2", 0.5),
        ("x y z", "z y x", "rougeL", 1.0 / 3.0),
        ("a b c d", "d c b a", "rouge2", 0.0),
        ("w1 w2 w3 w4 w5", "w1 w2 w3 w4", "bleu", 0.2f64.powf(0.25)),
    ]
}

pub fn metric_value(p: &TokenizedPair, metric: &str) -> f64 {
    match metric {
        "bleu" => bleu(p),
        "bleu1" => bleu_n(p, 1).unwrap(),
        "bleu2" => bleu_n(p, 2).unwrap(),
        "bleu3" => bleu_n(p, 3).unwrap(),
        "bleu4" => bleu_n(p, 4).unwrap(),
        "rouge1" => rouge_n(p, 1).unwrap().f1,
        "rouge2" => rouge_n(p, 2).unwrap().f1,
        "rougeL" => rouge_l(p).f1,
        other => panic!("unknown metric {other}"),
    }
}

pub fn random_tokens(r: &mut ChaCha8Rng, max_len: usize, vocab: usize) -> Vec<String> {
    let n = r.random_range(0..=max_len);
    (0..n).map(|_| format!("t{}", r.random_range(0..vocab))).collect()
}

pub fn check_metric_oracles(random_cases: usize, seed: u64) -> Check {
    const TOL: f64 = 1e-12;
    let fixed = fixed_metric_cases();
    for (c, r, m, want) in &fixed {
        let got = metric_value(&pair(c, r), m);
        if (got - want).abs() > TOL {
            return Err(format!("{m}({c:?}, {r:?}) = {got}, expected {want}"));
        }
    }
    let mut r = rng(seed);
    for i in 0..random_cases {
        let c = random_tokens(&mut r, 12, 5);
        let rf = random_tokens(&mut r, 12, 5);
        let p = TokenizedPair {
            candidate: c.clone(),
            reference: rf.clone(),
            lang: "en".into(),
        };
        for n in 1..=4 {
            let (fast, slow) = (bleu_n(&p, n).unwrap(), naive_bleu_n(&c, &rf, n));
            if (fast - slow).abs() > TOL {
                return Err(format!("case {i}: bleu{n} {fast} vs {slow}"));
            }
        }
        if (bleu(&p) - naive_bleu(&c, &rf)).abs() > TOL {
            return Err(format!("case {i}: bleu {} vs {}", bleu(&p), naive_bleu(&c, &rf)));
        }
        for n in 1..=2 {
            let f = rouge_n(&p, n).unwrap();
            let s = naive_rouge_n(&c, &rf, n);
            if (f.precision - s.0).abs() > TOL || (f.recall - s.1).abs() > TOL || (f.f1 - s.2).abs() > TOL {
                return Err(format!("case {i}: rouge{n} {f:?} vs {s:?}"));
            }
        }
        let l = rouge_l(&p);
        let s = naive_rouge_l(&c, &rf);
        if (l.f1 - s.2).abs() > TOL || (l.precision - s.0).abs() > TOL {
            return Err(format!("case {i}: rougeL {l:?} vs {s:?}"));
        }
        if l.f1 > rouge_n(&p, 1).unwrap().f1 + TOL {
            return Err(format!("case {i}: rougeL above rouge1"));
        }
        if !c.is_empty() {
            let id = TokenizedPair {
                candidate: c.clone(),
                reference: c.clone(),
                lang: "en".into(),
            };
            if rouge_l(&id).f1 != 1.0 || rouge_n(&id, 1).unwrap().f1 != 1.0 || bleu_n(&id, 1).unwrap() != 1.0 {
                return Err(format!("case {i}: identity below 1"));
            }
            if c.len() >= 4 && bleu(&id) != 1.0 {
                return Err(format!("case {i}: bleu identity {}", bleu(&id)));
            }
        }
    }
    Ok(format!("{} fixed and {random_cases} random cases within 1e-12, rougeL <= rouge1 throughout", fixed.len()))
}

// ---------------------------------------------------------------- kendall

/// τ-b from explicit pair classification.
pub fn naive_tau(a: &[f64], b: &[f64]) -> Option<f64> {
    let (mut c, mut d, mut ta, mut tb) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let da = a[i] - a[j];
            let db = b[i] - b[j];
            if da == 0.0 && db == 0.0 {
                continue;
            } else if da == 0.0 {
                ta += 1;
            } else if db == 0.0 {
                tb += 1;
            } else if (da > 0.0) == (db > 0.0) {
                c += 1;
            } else {
                d += 1;
            }
        }
    }
    let denom = (((c + d + ta) * (c + d + tb)) as f64).sqrt();
    if denom == 0.0 {
        None
    } else {
        Some((c - d) as f64 / denom)
    }
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

pub fn check_kendall(tied_cases: usize, seed: u64) -> Check {
    const TOL: f64 = 1e-12;
    let mut pairs = 0;
    for n in 2..=5 {
        let perms = permutations(n);
        for p in &perms {
            for q in &perms {
                let a: Vec<f64> = p.iter().map(|&x| x as f64).collect();
                let b: Vec<f64> = q.iter().map(|&x| x as f64).collect();
                let fast = kendall_tau(&a, &b).map_err(|e| e.to_string())?;
                let slow = naive_tau(&a, &b).expect("tie-free");
                if (fast - slow).abs() > TOL {
                    return Err(format!("{p:?} vs {q:?}: {fast} vs {slow}"));
                }
                pairs += 1;
            }
        }
    }
    let mut r = rng(seed);
    let mut tied = 0;
    while tied < tied_cases {
        let n = r.random_range(2..40);
        let levels = r.random_range(1..6);
        let a: Vec<f64> = (0..n).map(|_| r.random_range(0..levels) as f64).collect();
        let b: Vec<f64> = (0..n).map(|_| r.random_range(0..levels) as f64 * 0.5).collect();
        match (kendall_tau(&a, &b), naive_tau(&a, &b)) {
            (Ok(fast), Some(slow)) if (fast - slow).abs() <= TOL => tied += 1,
            (Err(_), None) => {}
            (Ok(_), None) if a.windows(2).all(|w| w[0] == w[1]) || b.windows(2).all(|w| w[0] == w[1]) => {
                return Err(format!("all-tied input accepted: {a:?} {b:?}"))
            }
            (fast, slow) => return Err(format!("{a:?} vs {b:?}: {fast:?} vs {slow:?}")),
        }
    }
    Ok(format!("{pairs} permutation pairs (n <= 5) and {tied} tied cases within 1e-12"))
}

// ---------------------------------------------------------------- ratings

pub const MODELS6: [&str; 6] = ["m1", "m2", "m3", "m4", "m5", "m6"];

pub fn random_ranking(r: &mut ChaCha8Rng, case: &str, annotator: &str, models: &[&str]) -> RankingRecord {
    let mut ordering: Vec<String> = models.iter().map(|s| s.to_string()).collect();
    ordering.shuffle(r);
    RankingRecord {
        case_id: case.into(),
        annotator: annotator.into(),
        mode: RankingMode::Human,
        ordering,
        ties: Vec::new(),
    }
}

pub fn check_rating_scheme(records: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    let mut recs = Vec::new();
    for i in 0..records {
        let rec = random_ranking(&mut r, &format!("c{}", i / 3), &format!("h{}", i % 3), &MODELS6);
        let scores = ranks_to_scores(&rec, 6).map_err(|e| e.to_string())?;
        let mut values: Vec<u32> = scores.values().copied().collect();
        values.sort_unstable();
        if values != [1, 2, 3, 4, 5, 6] {
            return Err(format!("{:?} gave {values:?}", rec.ordering));
        }
        if scores[&rec.ordering[0]] != 6 || scores[&rec.ordering[5]] != 1 {
            return Err(format!("{:?}: top/bottom not 6/1", rec.ordering));
        }
        recs.push(rec);
    }
    let langs = BTreeMap::new();
    let m = aggregate_ratings(&recs, &langs).map_err(|e| e.to_string())?;
    for c in m.cases() {
        if c.scores.values().sum::<u32>() != 21 {
            return Err(format!("case {} sums to {}", c.case_id, c.scores.values().sum::<u32>()));
        }
    }
    Ok(format!("{records} random 6-model rankings score exactly 1..6, sum 21"))
}

// ------------------------------------------------------------------ split

pub fn qa_item(id: &str) -> QAItem {
    QAItem {
        id: id.to_string(),
        lang: "ja".into(),
        question: format!("question {id}"),
        options: [("A", "one"), ("B", "two"), ("C", "three"), ("D", "four")]
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect(),
        answers: ["A".to_string()].into(),
        rationale: None,
        human_verified: false,
        topic: None,
    }
}

fn split_bytes(items: &[QAItem], spec: &SplitSpec) -> Result<(Vec<u8>, [usize; 3]), String> {
    let s = split_dataset(items, spec).map_err(|e| e.to_string())?;
    let mut bytes = Vec::new();
    for part in [&s.train, &s.val, &s.test] {
        for it in part {
            bytes.extend(serde_json::to_vec(it).map_err(|e| e.to_string())?);
            bytes.push(b'\n');
        }
        bytes.extend(b"--\n");
    }
    Ok((bytes, [s.train.len(), s.val.len(), s.test.len()]))
}

pub fn check_split(seed: u64) -> Check {
    let spec = SplitSpec::default();
    if spec.ratios != (8, 1, 1) || spec.seed != 42 {
        return Err(format!("default spec {spec:?}"));
    }
    let items: Vec<QAItem> = (0..1988).map(|i| qa_item(&format!("igaku-{i:04}"))).collect();
    let (first, sizes) = split_bytes(&items, &spec)?;
    if sizes != [1590, 199, 199] {
        return Err(format!("n = 1988 gave {sizes:?}"));
    }
    let (second, _) = split_bytes(&items, &spec)?;
    if first != second {
        return Err("two runs differ".into());
    }
    let mut r = rng(seed);
    for _ in 0..5 {
        let mut shuffled = items.clone();
        shuffled.shuffle(&mut r);
        if split_bytes(&shuffled, &spec)?.0 != first {
            return Err("input order changed the split".into());
        }
    }
    for n in [1usize, 2, 9, 10, 11, 99, 1000, 1789] {
        let its: Vec<QAItem> = (0..n).map(|i| qa_item(&i.to_string())).collect();
        let (_, s) = split_bytes(&its, &spec)?;
        let want = [n * 8 / 10, n * 9 / 10 - n * 8 / 10, n - n * 9 / 10];
        if s != want {
            return Err(format!("n = {n}: {s:?} vs {want:?}"));
        }
    }
    Ok("n = 1988 gives 1590/199/199, identical bytes across runs and 5 input shuffles".into())
}

// ---------------------------------------------------------------- prompts

pub const TEMPLATE_ANCHORS: [(PromptKind, &str); 7] = [
    (PromptKind::ZeroShotChoice, "You need to answer the letter of the option instead of answering the entire option or anything else. Options may not be unique."),
    (PromptKind::ZeroShotRationale, "The template is like 'Reason:... [End] Answer: A, B'"),
    (PromptKind::FtChoice, "You're a French doctor, kindly address the medical queries according to the patient's account. Answer with the best option directly."),
    (PromptKind::FtRationale, "Let\u{2019}s solve this step-by-step"),
    (PromptKind::RationaleGen, "Analyze the reasons behind choosing this particular option in 100 words for the following question in French."),
    (PromptKind::TopicClassify, "choose one subject out of"),
    (PromptKind::JudgeRanking, "Please act as an impartial judge and evaluate the quality of the responses provided by six"),
];

pub fn check_prompts() -> Check {
    let item = qa_item("p1");
    for (kind, anchor) in TEMPLATE_ANCHORS {
        let extras: BTreeMap<String, String> = kind
            .required_extras()
            .iter()
            .map(|k| (k.to_string(), format!("<{k}>")))
            .collect();
        let p = build_prompt(kind, "French", &item, &extras).map_err(|e| e.to_string())?;
        if !p.contains(anchor) {
            return Err(format!("{kind} lacks {anchor:?}"));
        }
        if !p.contains(kind.anchor()) {
            return Err(format!("{kind} lacks its own anchor"));
        }
        if p != build_prompt(kind, "French", &item, &extras).map_err(|e| e.to_string())? {
            return Err(format!("{kind} not deterministic"));
        }
    }
    Ok("all 7 kinds contain their verbatim anchors".into())
}

// -------------------------------------------------------------------- ocr

pub fn random_layout(r: &mut ChaCha8Rng) -> Vec<TextBox> {
    let n = r.random_range(1..25);
    (0..n)
        .map(|i| {
            let x0 = r.random_range(0..500) as f64;
            let y0 = r.random_range(0..800) as f64;
            let w = r.random_range(1..120) as f64;
            let h = r.random_range(1..40) as f64;
            TextBox {
                page: 1,
                x0,
                y0,
                x1: x0 + w,
                y1: y0 + h,
                content: format!("b{i}"),
            }
        })
        .collect()
}

pub fn check_ocr(layouts: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    for i in 0..layouts {
        let boxes = random_layout(&mut r);
        let base = reading_order(&boxes).map_err(|e| e.to_string())?;
        let mut shuffled = boxes.clone();
        shuffled.shuffle(&mut r);
        if reading_order(&shuffled).map_err(|e| e.to_string())? != base {
            return Err(format!("layout {i}: permutation changed the order"));
        }
        let (dx, dy) = (r.random_range(-1000..1000) as f64, r.random_range(-1000..1000) as f64);
        let moved: Vec<TextBox> = boxes
            .iter()
            .map(|b| TextBox {
                x0: b.x0 + dx,
                x1: b.x1 + dx,
                y0: b.y0 + dy,
                y1: b.y1 + dy,
                ..b.clone()
            })
            .collect();
        if reading_order(&moved).map_err(|e| e.to_string())? != base {
            return Err(format!("layout {i}: translation changed the order"));
        }
    }
    let cell = |x0: f64, y0: f64, c: &str| TextBox {
        page: 1,
        x0,
        y0,
        x1: x0 + 10.0,
        y1: y0 + 10.0,
        content: c.into(),
    };
    let grid = vec![cell(20.0, 20.0, "BR"), cell(0.0, 20.0, "BL"), cell(20.0, 0.0, "TR"), cell(0.0, 0.0, "TL")];
    let order = reading_order(&grid).map_err(|e| e.to_string())?;
    if order != ["TL", "TR", "BL", "BR"] {
        return Err(format!("2x2 grid: {order:?}"));
    }
    Ok(format!("{layouts} layouts invariant under permutation and translation, 2x2 grid TL,TR,BL,BR"))
}
