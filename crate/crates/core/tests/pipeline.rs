use std::collections::BTreeSet;
use std::io::Cursor;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use medcorpus_core::config::FilterConfig;
use medcorpus_core::corpus::{filter_stream, AnnotatedRecord, CorpusFilter, Reject, RejectKind, StreamOptions};
use medcorpus_core::lexicon::load_lexicon_dir;
use medcorpus_core::sample::sample_for_review;
use medcorpus_core::tokenize::DefaultTokenizer;
use serde_json::json;

const LANGS: [&str; 6] = ["en", "es", "fr", "ru", "zh", "ja"];

fn shipped_filter() -> CorpusFilter {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../lexicons");
    let lexicons = load_lexicon_dir(dir, LANGS).unwrap();
    CorpusFilter::new(lexicons, &FilterConfig::shipped(), Arc::new(DefaultTokenizer)).unwrap()
}

fn medical_en(i: usize) -> String {
    format!(
        "Patient {i} with diabetes and hypertension received insulin therapy. Diagnosis of pneumonia, fever \
         and infection was confirmed; the physician adjusted the medication."
    )
}

fn corpus(n: usize) -> String {
    let mut lines = Vec::new();
    for i in 0..n {
        let (lang, text) = match i % 4 {
            0 => ("en", medical_en(i)),
            1 => ("en", format!("Weather report {i}: sunny with a light breeze over the harbour.")),
            2 => ("zh", "糖尿病患者的高血压治疗需要医生诊断和药物，症状包括发烧。".to_string()),
            _ => ("ja", "今日は天気がいいので公園を散歩しました。".to_string()),
        };
        lines.push(json!({"id": format!("d{i}"), "lang": lang, "text": text, "source": "filtered_web"}).to_string());
    }
    lines.join("\n") + "\n"
}

fn run(input: &str, opts: StreamOptions) -> (Vec<AnnotatedRecord>, Vec<Reject>, medcorpus_core::corpus::FilterStats) {
    let filter = shipped_filter();
    let (mut out, mut rej) = (Vec::new(), Vec::new());
    let stats = filter_stream(&filter, Cursor::new(input.as_bytes()), &mut out, &mut rej, opts).unwrap();
    let parse = |b: &[u8]| String::from_utf8(b.to_vec()).unwrap();
    let recs = parse(&out).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let rejs = parse(&rej).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    (recs, rejs, stats)
}

#[test]
fn keeps_medical_text_and_reports_ratios() {
    let (recs, rejects, stats) = run(&corpus(400), StreamOptions::default());
    assert!(rejects.is_empty());
    assert_eq!(recs.len(), 400);
    for r in &recs {
        let i: usize = r.record.id[1..].parse().unwrap();
        assert_eq!(r.keep, i % 4 == 0 || i % 4 == 2, "{}: mkc {} dens {}", r.record.id, r.mkc, r.dens);
    }
    assert_eq!(stats.lang("en").remain_ratio(), 0.5);
    assert_eq!(stats.lang("zh").remain_ratio(), 1.0);
    assert_eq!(stats.lang("ja").remain_ratio(), 0.0);
    let report = stats.to_report();
    assert_eq!(report["total"]["documents_in"], 400);
}

#[test]
fn ordered_and_unordered_agree() {
    let input = corpus(1000);
    let ordered = StreamOptions { batch_size: 64, ..Default::default() };
    let unordered = StreamOptions { ordered: false, ..Default::default() };
    let (a, _, sa) = run(&input, ordered);
    let (b, _, sb) = run(&input, unordered);
    let ids: Vec<&str> = a.iter().map(|r| r.record.id.as_str()).collect();
    let expected: Vec<String> = (0..1000).map(|i| format!("d{i}")).collect();
    assert_eq!(ids, expected);
    let key = |v: &[AnnotatedRecord]| v.iter().map(|r| (r.record.id.clone(), r.keep)).collect::<BTreeSet<_>>();
    assert_eq!(key(&a), key(&b));
    assert_eq!(sa.total(), sb.total());
}

#[test]
fn bad_lines_are_persisted_not_fatal() {
    let mut input = corpus(4);
    input.push_str("{not json}\n");
    input.push_str(&json!({"id": "d0", "lang": "en", "text": "dup", "source": "website"}).to_string());
    input.push('\n');
    input.push_str(&json!({"id": "x", "lang": "de", "text": "Hallo", "source": "website"}).to_string());
    input.push('\n');
    input.push_str(&json!({"id": " ", "lang": "en", "text": "x", "source": "website"}).to_string());
    input.push_str("\n\n");
    let (recs, rejects, stats) = run(&input, StreamOptions::default());
    assert_eq!(recs.len(), 4);
    let kinds: Vec<RejectKind> = rejects.iter().map(|r| r.kind).collect();
    assert_eq!(kinds, [RejectKind::Malformed, RejectKind::DuplicateId, RejectKind::UnknownLang, RejectKind::EmptyId]);
    assert_eq!(rejects[0].line, 5);
    assert_eq!(stats.rejected, 4);
}

#[test]
fn kept_only_and_review_sample() {
    let (recs, _, _) = run(&corpus(400), StreamOptions { kept_only: true, ..Default::default() });
    assert!(recs.iter().all(|r| r.keep));
    let sample = sample_for_review(recs.iter().map(|r| r.record.clone()), 100, 42);
    assert_eq!(sample["en"].len(), 100);
    assert_eq!(sample["zh"].len(), 100);
    let again = sample_for_review(recs.iter().map(|r| r.record.clone()), 100, 42);
    assert_eq!(sample, again);
}

#[test]
fn throughput_report() {
    let input = corpus(20_000);
    let start = Instant::now();
    let (recs, _, _) = run(&input, StreamOptions::default());
    let secs = start.elapsed().as_secs_f64();
    let mb = input.len() as f64 / 1e6;
    println!("filtered {} records, {mb:.1} MB in {secs:.2}s ({:.1} MB/s)", recs.len(), mb / secs);
    assert_eq!(recs.len(), 20_000);
}
