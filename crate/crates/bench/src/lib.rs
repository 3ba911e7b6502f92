//! Seeded input generators shared by the benchmarks.

use std::collections::BTreeMap;

use curator::annotations::{AnnotatedSpan, SpanCategory};
use curator::{Corpus, Granularity, ParallelRecord, Translation, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random permutation of `0..n`.
pub fn permutation(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        v.swap(i, rng.gen_range(0..=i));
    }
    v
}

/// `n` overlapping spans over a text of `len` characters, mixing categories.
pub fn spans(rng: &mut ChaCha8Rng, n: usize, len: usize) -> Vec<AnnotatedSpan> {
    (0..n)
        .map(|_| {
            let start = rng.gen_range(0..len - 1);
            let end = rng.gen_range(start + 1..=len.min(start + 40));
            AnnotatedSpan {
                annotator: "a".into(),
                record_id: "r".into(),
                system_id: "s".into(),
                start,
                end,
                category: SpanCategory::ALL[rng.gen_range(0..SpanCategory::ALL.len())],
            }
        })
        .collect()
}

/// A two-direction corpus with one random reference perplexity per record.
pub fn corpus_with_ppl(rng: &mut ChaCha8Rng, n: usize) -> (Corpus, BTreeMap<String, f64>) {
    let directions = ["en-zh".parse().unwrap(), "de-en".parse().unwrap()];
    let mut ppl = BTreeMap::new();
    let records = (0..n)
        .map(|i| {
            let id = format!("r{i:06}");
            ppl.insert(id.clone(), rng.gen_range(1.0..300.0));
            ParallelRecord {
                id,
                direction: directions[i % 2],
                domain: None,
                granularity: Granularity::Sentence,
                source_text: "s".into(),
                translations: vec![Translation::new("gold", Variant::Reference, "t")],
            }
        })
        .collect();
    (Corpus::new(records).expect("unique ids"), ppl)
}

pub fn normal_pairs(rng: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<f64>) {
    let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let y = x.iter().map(|v| v + rng.gen_range(-0.5..0.5)).collect();
    (x, y)
}
