//! A 20-record two-direction fixture with replay, tagger and annotation files
//! whose metric values are fixed by construction.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use curator::curation::{render_prompt, PromptVariant};
use curator::inference::{
    chat_body, chat_response_body, request_hash, score_body, score_response_body, write_replay_fixture, ChatMessage,
    ReplayEntry, CHAT_PATH, COMPLETIONS_PATH,
};
use curator::metrics::TagFixtureLine;
use curator::{Corpus, Direction, EndpointConfig, Granularity, ParallelRecord, TaggedToken, TokenScore, Translation, Upos, Variant};
use serde_json::{json, Value};

pub const CHAT_URL: &str = "http://chat.invalid/v1";
pub const CHAT_MODEL: &str = "teacher";
pub const SCORE_URL: &str = "http://score.invalid/v1";
pub const SCORE_MODEL: &str = "scorer";
pub const PER_DIRECTION: usize = 10;
pub const SOURCE_WORDS: usize = 10;

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_curator"))
}

/// Runs the binary with `cwd` as working directory.
pub fn curator(cwd: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .current_dir(cwd)
        .args(args)
        .env_remove("CURATOR_API_KEY")
        .output()
        .expect("spawning curator")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Dir {
    DeEn,
    EnZh,
}

impl Dir {
    pub const ALL: [Dir; 2] = [Dir::DeEn, Dir::EnZh];

    pub fn code(self) -> &'static str {
        match self {
            Dir::DeEn => "de-en",
            Dir::EnZh => "en-zh",
        }
    }

    pub fn prefix(self) -> char {
        match self {
            Dir::DeEn => 'd',
            Dir::EnZh => 'z',
        }
    }

    pub fn direction(self) -> Direction {
        self.code().parse().unwrap()
    }

    pub fn id(self, i: usize) -> String {
        format!("{}{i:02}", self.prefix())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Reference,
    Mt,
}

/// (content words, function words, trailing punctuation) of a translation.
pub fn shape(dir: Dir, role: Role, i: usize) -> (usize, usize, bool) {
    match (dir, role) {
        (Dir::EnZh, Role::Reference) => (5 + i % 3, 6 - i % 3, true),
        (Dir::EnZh, Role::Mt) => (8, 2 + i % 2, true),
        (Dir::DeEn, Role::Reference) => (4 + i % 2, 4, false),
        (Dir::DeEn, Role::Mt) => (7, 3, false),
    }
}

/// Per-token negative logprob; the perplexity is `exp` of it.
pub fn nll(dir: Dir, role: Role, i: usize) -> f64 {
    let i = i as f64;
    match (dir, role) {
        (Dir::EnZh, Role::Reference) => 1.0 + 0.1 * i,
        (Dir::DeEn, Role::Reference) => 1.2 + 0.1 * i,
        (Dir::EnZh, Role::Mt) => 2.0 + 0.05 * i,
        (Dir::DeEn, Role::Mt) => 2.5 + 0.05 * i,
    }
}

/// Per-token negative logprob of each polished reference.
pub fn polished_nll(dir: Dir, i: usize) -> f64 {
    match dir {
        Dir::EnZh => [1.5, 3.0, 1.2, 2.9, 3.0, 1.1, 3.0, 1.3, 1.4, 2.0][i],
        Dir::DeEn => [2.5, 1.0, 1.0, 4.0, 1.0, 1.0, 1.0, 1.0, 1.0, 3.9][i],
    }
}

/// Hand-derived removals at p = 0.2: the two highest polished perplexities per
/// direction, the three-way tie in en-zh going to the smaller ids.
pub const EXPECTED_REMOVED: [&str; 4] = ["d03", "d09", "z01", "z04"];

const CONTENT: [Upos; 5] = [Upos::Noun, Upos::Verb, Upos::Adj, Upos::Adv, Upos::Propn];
const FUNCTION: [Upos; 3] = [Upos::Det, Upos::Adp, Upos::Aux];

fn tokens(tag: &str, content: usize, function: usize, punct: bool) -> Vec<TaggedToken> {
    let mut out = vec![TaggedToken::new(tag, Upos::Propn)];
    out.extend((1..content).map(|k| TaggedToken::new(format!("c{k}"), CONTENT[k % CONTENT.len()])));
    out.extend((0..function).map(|k| TaggedToken::new(format!("f{k}"), FUNCTION[k % FUNCTION.len()])));
    if punct {
        out.push(TaggedToken::new(".", Upos::Punct));
    }
    out
}

fn text_of(tokens: &[TaggedToken]) -> String {
    tokens.iter().map(|t| t.surface.as_str()).collect::<Vec<_>>().join(" ")
}

pub fn source_tokens(dir: Dir, i: usize) -> Vec<TaggedToken> {
    tokens(&format!("{}src", dir.id(i)), SOURCE_WORDS, 0, true)
}

pub fn translation_tokens(dir: Dir, role: Role, i: usize) -> Vec<TaggedToken> {
    let (c, f, p) = shape(dir, role, i);
    let tag = match role {
        Role::Reference => format!("{}ref", dir.id(i)),
        Role::Mt => format!("{}mt", dir.id(i)),
    };
    tokens(&tag, c, f, p)
}

pub fn translation_text(dir: Dir, role: Role, i: usize) -> String {
    text_of(&translation_tokens(dir, role, i))
}

pub fn polished_text(dir: Dir, i: usize) -> String {
    format!("polished {}", dir.id(i))
}

pub fn corpus() -> Corpus {
    let records = Dir::ALL
        .into_iter()
        .flat_map(|dir| (0..PER_DIRECTION).map(move |i| (dir, i)))
        .map(|(dir, i)| ParallelRecord {
            id: dir.id(i),
            direction: dir.direction(),
            domain: Some("news".into()),
            granularity: Granularity::Sentence,
            source_text: text_of(&source_tokens(dir, i)),
            translations: vec![
                Translation::new("gold", Variant::Reference, translation_text(dir, Role::Reference, i)),
                Translation::new("mt", Variant::Direct, translation_text(dir, Role::Mt, i)),
            ],
        })
        .collect();
    Corpus::new(records).unwrap()
}

fn score_entry(cfg: &EndpointConfig, text: &str, nll: f64) -> ReplayEntry {
    let mut scores = vec![TokenScore::new("<s>", None)];
    scores.extend((0..4).map(|k| TokenScore::new(format!("t{k}"), Some(-nll))));
    ReplayEntry {
        request_hash: request_hash(&cfg.url_for(COMPLETIONS_PATH), &cfg.model, &score_body(cfg, text)),
        response_body: score_response_body(&scores),
    }
}

/// Annotated span ends per annotator for the mt translation of record `i`:
/// `ann1` marks `[0, 2i+2)`, `ann2` marks `[i, 2i+1)` and `[2i, 3i+2)` plus
/// a whole-text mistranslation that must not count.
pub fn annotated_chars(i: usize) -> usize {
    2 * i + 2
}

fn span(start: usize, end: usize, label: &str) -> Value {
    json!({"type": "labels", "from_name": "label", "to_name": "text",
           "value": {"start": start, "end": end, "labels": [label]}})
}

pub fn annotation_export() -> Value {
    let mut tasks = Vec::new();
    for dir in Dir::ALL {
        for i in 0..PER_DIRECTION {
            let text = translation_text(dir, Role::Mt, i);
            let len = text.chars().count();
            tasks.push(json!({
                "id": tasks.len() + 1,
                "data": {"record_id": dir.id(i), "system_id": "mt", "text": text},
                "annotations": [
                    {"completed_by": {"email": "ann1@example.org"},
                     "result": [span(0, 2 * i + 2, "Unnatural Phrase Flow")]},
                    {"completed_by": {"email": "ann2@example.org"},
                     "result": [span(i, 2 * i + 1, "Unnatural Sentence Flow"),
                                span(2 * i, 3 * i + 2, "Unnatural Phrase Flow"),
                                span(0, len, "Mistranslation")]},
                ],
            }));
        }
    }
    Value::Array(tasks)
}

/// Writes every fixture under `root/fixtures` with relative paths in the
/// config file.
pub fn write_fixtures(root: &Path) {
    let dir = root.join("fixtures");
    std::fs::create_dir_all(&dir).unwrap();
    let corpus = corpus();
    corpus.save(&dir.join("corpus.jsonl")).unwrap();

    let chat = EndpointConfig::new(CHAT_URL, CHAT_MODEL);
    let score = EndpointConfig::new(SCORE_URL, SCORE_MODEL);
    let mut chat_entries = Vec::new();
    let mut score_entries = Vec::new();
    let mut tags = Vec::new();
    for d in Dir::ALL {
        let (src, tgt) = (d.direction().source.code(), d.direction().target.code());
        for i in 0..PER_DIRECTION {
            let r = corpus.get(&d.id(i)).unwrap();
            let reference = translation_text(d, Role::Reference, i);
            let prompt = render_prompt(PromptVariant::Polishing, r.direction, &r.source_text, Some(&reference)).unwrap();
            chat_entries.push(ReplayEntry {
                request_hash: request_hash(
                    &chat.url_for(CHAT_PATH),
                    &chat.model,
                    &chat_body(&chat, &[ChatMessage::user(prompt)]),
                ),
                response_body: chat_response_body(&polished_text(d, i)),
            });
            for role in [Role::Reference, Role::Mt] {
                score_entries.push(score_entry(&score, &translation_text(d, role, i), nll(d, role, i)));
                tags.push(TagFixtureLine {
                    lang: tgt.into(),
                    text: translation_text(d, role, i),
                    tokens: translation_tokens(d, role, i),
                });
            }
            score_entries.push(score_entry(&score, &polished_text(d, i), polished_nll(d, i)));
            tags.push(TagFixtureLine { lang: src.into(), text: r.source_text.clone(), tokens: source_tokens(d, i) });
        }
    }
    write_replay_fixture(&dir.join("chat.jsonl"), &chat_entries).unwrap();
    write_replay_fixture(&dir.join("score.jsonl"), &score_entries).unwrap();
    let tag_lines: String = tags.iter().map(|t| serde_json::to_string(t).unwrap() + "\n").collect();
    std::fs::write(dir.join("tags.jsonl"), tag_lines).unwrap();
    std::fs::write(
        dir.join("annotations.json"),
        serde_json::to_string_pretty(&annotation_export()).unwrap(),
    )
    .unwrap();
    let config = json!({
        "chat_url": CHAT_URL, "chat_model": CHAT_MODEL, "chat_replay": "fixtures/chat.jsonl",
        "score_url": SCORE_URL, "score_model": SCORE_MODEL, "score_replay": "fixtures/score.jsonl",
        "tagger_fixture": "fixtures/tags.jsonl", "seed": 7, "concurrency": 3,
    });
    std::fs::write(dir.join("config.json"), serde_json::to_string_pretty(&config).unwrap()).unwrap();
}

/// The pipeline steps, run from the fixture root.
pub const PIPELINE: &[&[&str]] = &[
    &["--config", "fixtures/config.json", "score", "--corpus", "fixtures/corpus.jsonl", "--out", "out/score"],
    &["--config", "fixtures/config.json", "tsr", "--annotations", "fixtures/annotations.json",
      "--corpus", "fixtures/corpus.jsonl", "--out", "out/tsr"],
    &["--config", "fixtures/config.json", "correlate", "--metrics", "out/score/metrics.csv",
      "--tsr-records", "out/tsr/tsr_records.csv", "--bins", "5", "--out", "out/correlate"],
    &["--config", "fixtures/config.json", "polish", "--corpus", "fixtures/corpus.jsonl", "--out", "out/polish"],
    &["--config", "fixtures/config.json", "filter", "--corpus", "out/polish/corpus.jsonl", "--proportion", "0.2",
      "--out", "out/filter"],
    &["--config", "fixtures/config.json", "emit-sft", "--corpus", "out/filter/corpus.jsonl", "--out", "out/sft"],
    &["--config", "fixtures/config.json", "report", "--corpus", "fixtures/corpus.jsonl",
      "--metrics", "out/score/metrics.csv", "--annotations", "fixtures/annotations.json",
      "--removed", "out/filter/removed.csv", "--retained", "out/filter/corpus.jsonl", "--out", "out/report"],
];

/// Every file under `root`, keyed by relative path.
pub fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for path in entries {
            if path.is_dir() {
                walk(base, &path, out);
            } else {
                let rel = path.strip_prefix(base).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    v.iter().sum::<f64>() / v.len() as f64
}

/// Metric-table rows computed from the fixture's construction parameters.
pub fn expected_metric_rows() -> Vec<String> {
    let mut rows = Vec::new();
    for d in Dir::ALL {
        for (system, variant, role) in [("gold", "reference", Role::Reference), ("mt", "direct", Role::Mt)] {
            let lex = mean((0..PER_DIRECTION).map(|i| {
                let (c, f, _) = shape(d, role, i);
                c as f64 / (c + f) as f64
            }));
            let len = mean((0..PER_DIRECTION).map(|i| {
                let (c, f, _) = shape(d, role, i);
                (c + f).abs_diff(SOURCE_WORDS) as f64 / SOURCE_WORDS as f64
            }));
            let ppl = mean((0..PER_DIRECTION).map(|i| nll(d, role, i).exp()));
            rows.push(format!(
                "| {} | sentence | {system} | {variant} | {lex:.3} | {len:.3} | {ppl:.1} | {PER_DIRECTION} |",
                d.code()
            ));
        }
    }
    rows
}

/// Span-ratio rows for the annotated mt translations.
pub fn expected_tsr_rows() -> Vec<String> {
    Dir::ALL
        .into_iter()
        .map(|d| {
            let values: Vec<f64> = (0..PER_DIRECTION)
                .map(|i| annotated_chars(i) as f64 / translation_text(d, Role::Mt, i).chars().count() as f64)
                .collect();
            let share = values.iter().filter(|v| **v > 0.2).count() as f64 / values.len() as f64;
            format!("| {} | mt | {:.2} | {:.1}% | {PER_DIRECTION} |", d.code(), mean(values.iter().copied()), share * 100.0)
        })
        .collect()
}
