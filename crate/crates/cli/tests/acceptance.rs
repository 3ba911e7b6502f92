//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Expected values come from test-side oracles, never from the
//! library under test.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use curator::analysis::{pearson, spearman};
use curator::annotations::{
    kendall_tau, parse_annotation_json, summarize_tsr, translationese_categories, tsr_records, SpanCategory,
    SIGNIFICANT_TSR,
};
use curator::curation::{filter_by_perplexity, render_prompt, PromptVariant};
use curator::metrics::{paired_significance, perplexity};
use curator::{Corpus, Direction, Granularity, ParallelRecord, TokenScore, Translation, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::{json, Value};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure!(took < limit, "took {took:?}, limit {limit:?}");
    Ok(took)
}

// ---------------------------------------------------------------------------
// 1. Perplexity examples and monotonicity.

fn ppl_of(logprobs: &[f64]) -> f64 {
    let scores: Vec<TokenScore> = logprobs.iter().map(|l| TokenScore::new("t", Some(*l))).collect();
    perplexity(&scores).unwrap()
}

fn criterion_perplexity() -> Check {
    let start = Instant::now();
    let half = 0.5f64.ln();
    let examples = [
        (vec![half; 4], 2.0),
        (vec![0.0], 1.0),
        (vec![-1.0, -3.0], 7.38905609893065),
    ];
    for (logprobs, expected) in &examples {
        let got = ppl_of(logprobs);
        ensure!((got - expected).abs() < 1e-9, "ppl({logprobs:?}) = {got}, expected {expected}");
    }
    // Absent logprobs are skipped.
    let mut with_gap = vec![TokenScore::new("<s>", None)];
    with_gap.extend([-1.0, -3.0].map(|l| TokenScore::new("t", Some(l))));
    ensure!((perplexity(&with_gap).unwrap() - (2.0f64).exp()).abs() < 1e-9, "absent logprob not skipped");

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for case in 0..1000 {
        let n = rng.gen_range(1..40);
        let v: Vec<f64> = (0..n).map(|_| -rng.gen_range(0.0..12.0)).collect();
        let oracle = (-v.iter().sum::<f64>() / n as f64).exp();
        let base = ppl_of(&v);
        ensure!((base - oracle).abs() <= 1e-9 * oracle, "case {case}: {base} vs oracle {oracle}");
        ensure!(base >= 1.0, "case {case}: ppl {base} below 1");
        let mut lower = v.clone();
        let j = rng.gen_range(0..n);
        lower[j] -= rng.gen_range(0.01..3.0);
        let after = ppl_of(&lower);
        ensure!(after > base, "case {case}: lowering a logprob moved ppl {base} -> {after}");
    }
    let took = within(Duration::from_secs(1), start)?;
    Ok(format!("3 examples, 1000 monotonicity vectors in {took:?}"))
}

// ---------------------------------------------------------------------------
// 2. Span-ratio fixture: 3 annotators x 5 documents x 2 systems.

const S: &str = "Unnatural Sentence Flow";
const P: &str = "Unnatural Phrase Flow";
const M: &str = "Mistranslation";
const T: &str = "Terminology";

type Spans = &'static [(usize, usize, &'static str)];

struct Doc {
    id: &'static str,
    len: usize,
    /// Per annotator: spans and the hand-computed translationese union.
    annotators: [(Spans, usize); 3],
    /// Union over every category, for the unfiltered check.
    all_categories: [usize; 3],
}

const SYSTEM_A: [Doc; 5] = [
    Doc { id: "d1", len: 50, annotators: [(&[(0, 10, S), (5, 15, P)], 15), (&[(20, 30, P), (0, 50, M)], 10), (&[], 0)], all_categories: [15, 50, 0] },
    Doc { id: "d2", len: 40, annotators: [(&[(0, 40, S)], 40), (&[(0, 20, S), (20, 40, S)], 40), (&[(10, 30, P), (10, 30, P)], 20)], all_categories: [40, 40, 20] },
    Doc { id: "d3", len: 100, annotators: [(&[(0, 10, P), (20, 30, P), (40, 50, P)], 30), (&[(0, 50, S), (25, 75, P)], 75), (&[(0, 100, T)], 0)], all_categories: [30, 75, 100] },
    Doc { id: "d4", len: 20, annotators: [(&[(0, 4, P)], 4), (&[(2, 6, P)], 4), (&[(0, 4, P), (3, 5, S)], 5)], all_categories: [4, 4, 5] },
    Doc { id: "d5", len: 80, annotators: [(&[], 0), (&[(0, 80, M)], 0), (&[(70, 80, S)], 10)], all_categories: [0, 80, 10] },
];

const SYSTEM_B: [Doc; 5] = [
    Doc { id: "d1", len: 50, annotators: [(&[(0, 25, S)], 25), (&[(10, 35, S)], 25), (&[(0, 5, P), (45, 50, P)], 10)], all_categories: [25, 25, 10] },
    Doc { id: "d2", len: 40, annotators: [(&[], 0), (&[], 0), (&[], 0)], all_categories: [0, 0, 0] },
    Doc { id: "d3", len: 100, annotators: [(&[(0, 20, S)], 20), (&[(10, 30, P)], 20), (&[(0, 20, P), (90, 100, M)], 20)], all_categories: [20, 20, 30] },
    Doc { id: "d4", len: 20, annotators: [(&[(0, 20, S)], 20), (&[(0, 20, M)], 0), (&[(15, 20, P)], 5)], all_categories: [20, 20, 5] },
    Doc { id: "d5", len: 80, annotators: [(&[(0, 16, P)], 16), (&[(0, 16, P)], 16), (&[(64, 80, P)], 16)], all_categories: [16, 16, 16] },
];

const ANNOTATORS: [&str; 3] = ["ann-x", "ann-y", "ann-z"];

/// Hand-computed record means per system, as exact fractions of the union
/// totals over 3 x length.
const EXPECTED_A: [(&str, f64); 5] =
    [("d1", 25.0 / 150.0), ("d2", 100.0 / 120.0), ("d3", 105.0 / 300.0), ("d4", 13.0 / 60.0), ("d5", 10.0 / 240.0)];
const EXPECTED_B: [(&str, f64); 5] =
    [("d1", 60.0 / 150.0), ("d2", 0.0), ("d3", 60.0 / 300.0), ("d4", 25.0 / 60.0), ("d5", 48.0 / 240.0)];

fn export(systems: &[(&str, &[Doc; 5])]) -> Value {
    let mut tasks = Vec::new();
    for (system, docs) in systems {
        for doc in docs.iter() {
            let annotations: Vec<Value> = ANNOTATORS
                .iter()
                .zip(&doc.annotators)
                .map(|(who, (spans, _))| {
                    let result: Vec<Value> = spans
                        .iter()
                        .map(|(s, e, l)| json!({"type": "labels", "value": {"start": s, "end": e, "labels": [l]}}))
                        .collect();
                    json!({"completed_by": {"email": who}, "result": result})
                })
                .collect();
            tasks.push(json!({
                "id": tasks.len(),
                "data": {"record_id": doc.id, "system_id": system, "text": "x".repeat(doc.len)},
                "annotations": annotations,
            }));
        }
    }
    Value::Array(tasks)
}

fn criterion_tsr() -> Check {
    let start = Instant::now();
    let content = export(&[("sys-a", &SYSTEM_A), ("sys-b", &SYSTEM_B)]).to_string();
    let set = parse_annotation_json(&content, None).map_err(|e| e.to_string())?;
    let records = tsr_records(&set, &translationese_categories()).map_err(|e| e.to_string())?;
    ensure!(records.len() == 10, "{} records, expected 10", records.len());

    for (system, docs, expected) in [("sys-a", &SYSTEM_A, &EXPECTED_A), ("sys-b", &SYSTEM_B, &EXPECTED_B)] {
        for (doc, (id, mean)) in docs.iter().zip(expected) {
            let r = records
                .iter()
                .find(|r| r.record_id == *id && r.system_id == system)
                .ok_or_else(|| format!("no record {system}/{id}"))?;
            ensure!((r.mean_tsr - mean).abs() <= 1e-12, "{system}/{id}: mean {} vs {mean}", r.mean_tsr);
            for (who, (_, union)) in ANNOTATORS.iter().zip(&doc.annotators) {
                let want = *union as f64 / doc.len as f64;
                let got = r.per_annotator[*who];
                ensure!((got - want).abs() <= 1e-12, "{system}/{id}/{who}: {got} vs {want}");
            }
        }
    }

    let summary = summarize_tsr(&records, None, SIGNIFICANT_TSR).map_err(|e| e.to_string())?;
    // Strictly above 0.2: a has d2, d3, d4; b has d1, d4 (d3 and d5 sit at exactly 0.2).
    for (system, expected, share) in [("sys-a", &EXPECTED_A, 0.6), ("sys-b", &EXPECTED_B, 0.4)] {
        let row = summary.iter().find(|s| s.system_id == system).ok_or("missing summary row")?;
        let mean = expected.iter().map(|(_, v)| v).sum::<f64>() / 5.0;
        ensure!((row.mean_tsr - mean).abs() <= 1e-12, "{system} mean {} vs {mean}", row.mean_tsr);
        ensure!(row.proportion_significant == share, "{system} share {} vs {share}", row.proportion_significant);
        ensure!(row.n == 5, "{system} n {}", row.n);
    }

    // Counting every category must change exactly the documents whose
    // non-translationese spans were excluded.
    let every: BTreeSet<SpanCategory> = SpanCategory::ALL.into_iter().collect();
    let unfiltered = tsr_records(&set, &every).map_err(|e| e.to_string())?;
    for (system, docs) in [("sys-a", &SYSTEM_A), ("sys-b", &SYSTEM_B)] {
        for doc in docs.iter() {
            let r = unfiltered.iter().find(|r| r.record_id == doc.id && r.system_id == system).unwrap();
            for (who, union) in ANNOTATORS.iter().zip(doc.all_categories) {
                let want = union as f64 / doc.len as f64;
                ensure!((r.per_annotator[*who] - want).abs() <= 1e-12, "unfiltered {system}/{}/{who}", doc.id);
            }
        }
    }
    let took = within(Duration::from_secs(1), start)?;
    Ok(format!("10 records, 30 annotator ratios, 2 summaries in {took:?}"))
}

// ---------------------------------------------------------------------------
// 3. Kendall tau, exhaustive for n <= 6.

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, left: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..left.len() {
            let x = left.remove(k);
            prefix.push(x);
            go(prefix, left, out);
            prefix.pop();
            left.insert(k, x);
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut (0..n).collect(), &mut out);
    out
}

fn kendall_oracle(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let pos = |r: &[usize], x: usize| r.iter().position(|y| *y == x).unwrap();
    let (mut concordant, mut discordant) = (0i64, 0i64);
    for x in 0..n {
        for y in x + 1..n {
            let s = (pos(a, x) as i64 - pos(a, y) as i64).signum() * (pos(b, x) as i64 - pos(b, y) as i64).signum();
            if s > 0 {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    (concordant - discordant) as f64 / (n * (n - 1) / 2) as f64
}

fn criterion_kendall() -> Check {
    let mut pairs = 0usize;
    for n in 2..=6 {
        let perms = permutations(n);
        for a in &perms {
            for b in &perms {
                let got = kendall_tau(a, b).map_err(|e| e.to_string())?;
                let want = kendall_oracle(a, b);
                ensure!(got == want, "tau({a:?}, {b:?}) = {got}, oracle {want}");
                pairs += 1;
            }
        }
    }
    Ok(format!("{pairs} permutation pairs, exact"))
}

// ---------------------------------------------------------------------------
// 4. Pearson and Spearman against pairwise-difference oracles.

fn pearson_oracle(x: &[f64], y: &[f64]) -> f64 {
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let (dx, dy) = (x[i] - x[j], y[i] - y[j]);
            sxy += dx * dy;
            sxx += dx * dx;
            syy += dy * dy;
        }
    }
    sxy / (sxx * syy).sqrt()
}

fn rank_oracle(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|a| {
            let below = v.iter().filter(|b| *b < a).count() as f64;
            let equal = v.iter().filter(|b| *b == a).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

fn criterion_correlation() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..100 {
        let ties = case % 2 == 1;
        let draw = |rng: &mut ChaCha8Rng| {
            let v: f64 = rng.gen_range(-50.0..50.0);
            if ties {
                (v / 10.0).round()
            } else {
                v
            }
        };
        let x: Vec<f64> = (0..50).map(|_| draw(&mut rng)).collect();
        let y: Vec<f64> = x.iter().map(|xi| 0.3 * xi + draw(&mut rng)).collect();

        let r = pearson(&x, &y).ok_or(format!("case {case}: pearson undefined"))?;
        let rho = spearman(&x, &y).ok_or(format!("case {case}: spearman undefined"))?;
        let (r_o, rho_o) = (pearson_oracle(&x, &y), pearson_oracle(&rank_oracle(&x), &rank_oracle(&y)));
        ensure!((r - r_o).abs() <= 1e-9, "case {case}: pearson {r} vs {r_o}");
        ensure!((rho - rho_o).abs() <= 1e-9, "case {case}: spearman {rho} vs {rho_o}");

        let affine: Vec<f64> = x.iter().map(|v| 2.5 * v - 7.0).collect();
        let flipped: Vec<f64> = x.iter().map(|v| -0.5 * v + 3.0).collect();
        let monotone: Vec<f64> = x.iter().map(|v| (v / 20.0).exp() + v.powi(3)).collect();
        ensure!((pearson(&affine, &y).unwrap() - r).abs() <= 1e-9, "case {case}: pearson not affine invariant");
        ensure!((pearson(&flipped, &y).unwrap() + r).abs() <= 1e-9, "case {case}: negative scale did not flip r");
        ensure!((spearman(&monotone, &y).unwrap() - rho).abs() <= 1e-12, "case {case}: spearman not monotone invariant");
        ensure!((spearman(&y, &x).unwrap() - rho).abs() <= 1e-12, "case {case}: spearman not symmetric");
    }
    Ok("100 vectors of 50 points, half with ties".into())
}

// ---------------------------------------------------------------------------
// 5. Perplexity filtering.

fn random_corpus(rng: &mut ChaCha8Rng, n: usize) -> (Corpus, BTreeMap<String, f64>) {
    let directions: [Direction; 2] = ["en-zh".parse().unwrap(), "de-en".parse().unwrap()];
    let coarse = rng.gen_bool(0.5);
    let mut ppl = BTreeMap::new();
    let records = (0..n)
        .map(|i| {
            let id = format!("r{i:05}");
            let value = if coarse { rng.gen_range(1..20) as f64 } else { rng.gen_range(1.0..500.0) };
            ppl.insert(id.clone(), value);
            ParallelRecord {
                id,
                direction: directions[rng.gen_range(0..2)],
                domain: None,
                granularity: Granularity::Sentence,
                source_text: "s".into(),
                translations: vec![Translation::new("gold", Variant::Reference, "t")],
            }
        })
        .collect();
    (Corpus::new(records).unwrap(), ppl)
}

fn criterion_filter() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sizes = [1usize, 2, 7, 100, 999, 2_500, 10_000];
    for &n in &sizes {
        let (corpus, ppl) = random_corpus(&mut rng, n);
        let mut previous: Option<BTreeSet<String>> = None;
        for k in [0u64, 5, 10, 20, 29, 50, 73, 99] {
            let p = k as f64 / 100.0;
            let out = filter_by_perplexity(&corpus, &ppl, p).map_err(|e| e.to_string())?;
            let removed: BTreeSet<String> = out.removed.iter().map(|r| r.record_id.clone()).collect();
            for dir in corpus.directions() {
                let members: Vec<&ParallelRecord> = corpus.records().iter().filter(|r| r.direction == dir).collect();
                let (gone, kept): (Vec<&ParallelRecord>, Vec<&ParallelRecord>) = members.iter().partition(|r| removed.contains(&r.id));
                let want = (k as usize * members.len()) / 100;
                ensure!(gone.len() == want, "n={n} p={p} {dir}: removed {} expected {want}", gone.len());
                let kept_max = kept.iter().map(|r| ppl[&r.id]).fold(f64::NEG_INFINITY, f64::max);
                let gone_min = gone.iter().map(|r| ppl[&r.id]).fold(f64::INFINITY, f64::min);
                ensure!(kept_max <= gone_min, "n={n} p={p} {dir}: retained {kept_max} > removed {gone_min}");
            }
            ensure!(out.retained.len() + removed.len() == n, "n={n} p={p}: records lost");
            if let Some(prev) = &previous {
                ensure!(prev.is_subset(&removed), "n={n} p={p}: removal sets not nested");
            }
            previous = Some(removed);
        }
    }

    // Ties: r2, r3 and r5 share the top value; floor(0.34 * 6) = 2 removes
    // the two smallest ids.
    let values = [5.0, 9.0, 9.0, 7.0, 9.0, 1.0];
    let records: Vec<ParallelRecord> = (1..=6)
        .map(|i| ParallelRecord {
            id: format!("r{i}"),
            direction: "en-zh".parse().unwrap(),
            domain: None,
            granularity: Granularity::Sentence,
            source_text: "s".into(),
            translations: vec![Translation::new("gold", Variant::Reference, "t")],
        })
        .collect();
    let ppl: BTreeMap<String, f64> = (1..=6).map(|i| (format!("r{i}"), values[i - 1])).collect();
    let out = filter_by_perplexity(&Corpus::new(records).unwrap(), &ppl, 0.34).map_err(|e| e.to_string())?;
    let got: Vec<(&str, usize)> = out.removed.iter().map(|r| (r.record_id.as_str(), r.rank)).collect();
    ensure!(got == [("r2", 1), ("r3", 2)], "tie-break removed {got:?}");

    let took = within(Duration::from_secs(5), start)?;
    Ok(format!("{} corpora up to N=10000 x 8 proportions, tie fixture, in {took:?}", sizes.len()))
}

// ---------------------------------------------------------------------------
// 6. Golden prompts.

fn criterion_prompts() -> Check {
    const EN: &str = "The committee approved the budget after a long debate.";
    const ZH: &str = "委员会经过长时间辩论后批准了预算。";
    const DE: &str = "Der Ausschuss hat den Haushalt nach langer Debatte genehmigt.";
    const EN2: &str = "After a long debate, the committee approved the budget.";
    let golden = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden");
    let cases = [
        (PromptVariant::Direct, "en-zh", EN, None),
        (PromptVariant::Direct, "de-en", DE, None),
        (PromptVariant::Specified, "en-zh", EN, None),
        (PromptVariant::Specified, "de-en", DE, None),
        (PromptVariant::Polishing, "en-zh", EN, Some(ZH)),
        (PromptVariant::Polishing, "de-en", DE, Some(EN2)),
    ];
    for (variant, dir, src, tgt) in cases {
        let rendered = render_prompt(variant, dir.parse().unwrap(), src, tgt).map_err(|e| e.to_string())?;
        let path = golden.join(format!("{variant}_{dir}.txt"));
        let want = std::fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        ensure!(rendered.as_bytes() == want.as_slice(), "{variant} {dir} differs from {}", path.display());
    }
    Ok("3 templates x 2 directions byte-exact".into())
}

// ---------------------------------------------------------------------------
// 7. Hermetic end-to-end through the binary.

fn run_pipeline(root: &std::path::Path) -> Result<(), String> {
    common::write_fixtures(root);
    for step in common::PIPELINE {
        let out = common::curator(root, step);
        ensure!(
            out.status.success(),
            "`curator {}` exited {:?}: {}",
            step.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        );
    }
    Ok(())
}

fn criterion_end_to_end() -> Check {
    let start = Instant::now();
    let (a, b) = (tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?);
    run_pipeline(a.path())?;
    run_pipeline(b.path())?;
    let (ta, tb) = (common::tree(a.path()), common::tree(b.path()));
    ensure!(ta.keys().eq(tb.keys()), "output trees list different files");
    for (name, bytes) in &ta {
        ensure!(tb[name] == *bytes, "{name} differs between runs");
    }

    let report = String::from_utf8(ta["out/report/report.md"].clone()).map_err(|e| e.to_string())?;
    let lines: BTreeSet<&str> = report.lines().collect();
    for row in common::expected_metric_rows().iter().chain(&common::expected_tsr_rows()) {
        ensure!(lines.contains(row.as_str()), "report lacks row `{row}`");
    }
    ensure!(
        lines.contains("Removed 4 of 20 records, ranked by perplexity within each direction."),
        "report lacks the filtering summary"
    );

    let removed = String::from_utf8(ta["out/filter/removed.csv"].clone()).unwrap();
    let ids: Vec<&str> = removed.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    ensure!(ids == common::EXPECTED_REMOVED, "removed {ids:?}, expected {:?}", common::EXPECTED_REMOVED);

    let sft = String::from_utf8(ta["out/sft/sft.jsonl"].clone()).unwrap();
    ensure!(sft.lines().count() == 16, "{} SFT instances, expected 16", sft.lines().count());
    for line in sft.lines() {
        let v: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let id = v["id"].as_str().unwrap_or_default();
        ensure!(v["completion"] == format!("polished {id}"), "instance {id} does not use the polished reference");
    }

    let meta: Value = serde_json::from_slice(&ta["out/report/run-meta.json"]).map_err(|e| e.to_string())?;
    ensure!(meta["status"] == "ok" && meta["seed"] == 7, "unexpected run-meta {meta}");
    let took = within(Duration::from_secs(30), start)?;
    Ok(format!("7 steps twice, {} identical files, report rows match, in {took:?}", ta.len()))
}

// ---------------------------------------------------------------------------
// 8. Paired bootstrap power and size.

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn criterion_bootstrap() -> Check {
    const N: usize = 50;
    let mut worst_shift: f64 = 0.0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1_000 + seed);
        let base = normals(&mut rng, N);
        let shifted: Vec<f64> = normals(&mut rng, N).into_iter().map(|v| v + 3.0).collect();
        let p = paired_significance(&shifted, &base, seed, 1000).map_err(|e| e.to_string())?;
        ensure!(p < 0.01, "seed {seed}: shifted sample p = {p}");
        worst_shift = worst_shift.max(p);
    }
    let mut accepted = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(2_000 + seed);
        let (a, b) = (normals(&mut rng, N), normals(&mut rng, N));
        if paired_significance(&a, &b, seed, 1000).map_err(|e| e.to_string())? > 0.05 {
            accepted += 1;
        }
    }
    ensure!(accepted >= 90, "only {accepted} of 100 null seeds had p > 0.05");
    Ok(format!("shift: max p {worst_shift:.4} over 20 seeds; null: {accepted}/100 with p > 0.05"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("perplexity examples and monotonicity", criterion_perplexity),
        ("span-ratio fixture", criterion_tsr),
        ("kendall tau exhaustive n <= 6", criterion_kendall),
        ("pearson and spearman oracles", criterion_correlation),
        ("perplexity filtering", criterion_filter),
        ("golden prompts", criterion_prompts),
        ("hermetic end-to-end", criterion_end_to_end),
        ("paired bootstrap", criterion_bootstrap),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
