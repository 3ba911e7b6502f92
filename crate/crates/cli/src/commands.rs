use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Subcommand};
use curator::analysis::{
    compare_variants, correlate_by_direction, filter_sweep, join_ppl_tsr, read_sweep_csv, render_report,
    write_correlation_bins, write_correlation_summary, write_paired_points, write_sweep_csv, FilterSummary,
    ReportInputs, RetainedSetEvaluator, VariantTable, DEFAULT_ALPHA, DEFAULT_BINS,
};
use curator::annotations::{
    average_rank, mean_category_counts, pairwise_agreement, parse_annotation_export, parse_rankings, read_tsr_rows,
    summarize_tsr, translationese_categories, tsr_histogram, tsr_records, write_agreement, write_average_ranks,
    write_category_counts, write_histogram_csv, write_tsr_records, write_tsr_summary, AnnotationSet, SpanCategory,
    TsrRecord, DEFAULT_HISTOGRAM_EDGES, SIGNIFICANT_TSR,
};
use curator::corpus::{corpus_stats, ingest_corpus, split_train_dev, write_stats_csv, Schema, SplitSpec};
use curator::curation::{
    filter_by_perplexity, kd_translate, polish_references, read_manifest, sft_instances, write_manifest,
    write_sft_jsonl, GenerationJob, GenerationOutcome, SftTarget, TrainingConfig, DEFAULT_ABORT_THRESHOLD, KD_SYSTEM,
};
use curator::metrics::{
    aggregate_metrics, perplexity, read_metric_records, score_many, write_metric_records, write_metric_table,
    BasicTokenizer, TaggerTokenizer, Tokenizer, TranslationSelector, MIN_BOOTSTRAP_ITERATIONS,
};
use curator::{Corpus, Granularity, MetricRecord, Variant};
use serde::Serialize;

use crate::config::{check_file, Endpoint, Needs, Settings};

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Validate a corpus file and write it in canonical JSONL, optionally split.
    Ingest(IngestArgs),
    /// Per-direction record counts, source lengths and domains.
    Stats,
    /// Perplexity, lexical density, length variety and quality per translation.
    Score(ScoreArgs),
    /// Translationese span ratios from an annotation export.
    Tsr(TsrArgs),
    /// Average human ranks and pairwise Kendall's tau.
    Agreement(AgreementArgs),
    /// Correlate perplexity with span ratios.
    Correlate(CorrelateArgs),
    /// Polish every reference with the chat endpoint.
    Polish(GenerationArgs),
    /// Add a distilled direct translation to every record.
    Kd(KdArgs),
    /// Remove the highest-perplexity share of each direction.
    Filter(FilterArgs),
    /// Evaluate a range of filtering proportions.
    Sweep(SweepArgs),
    /// Write prompt/completion JSONL and a trainer config.
    EmitSft(EmitSftArgs),
    /// Render a Markdown report from earlier outputs.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemaArg {
    Jsonl,
    Tsv,
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    /// File to ingest.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "jsonl")]
    pub schema: SchemaArg,
    /// Source language for TSV input.
    #[arg(long)]
    pub src_lang: Option<String>,
    /// Target language for TSV input.
    #[arg(long)]
    pub tgt_lang: Option<String>,
    #[arg(long, default_value = "sentence")]
    pub granularity: String,
    #[arg(long)]
    pub domain: Option<String>,
    /// Also write train.jsonl and dev.jsonl with this dev share per direction.
    #[arg(long)]
    pub dev_fraction: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct ScoreArgs {
    /// Only score these systems (repeatable); default is every translation.
    #[arg(long = "system")]
    pub systems: Vec<String>,
    /// Only score this variant.
    #[arg(long)]
    pub variant: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct TsrArgs {
    /// Annotation platform JSON export.
    #[arg(long)]
    pub annotations: PathBuf,
    /// Span categories counted as translationese (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub categories: Vec<String>,
    #[arg(long, default_value_t = SIGNIFICANT_TSR)]
    pub threshold: f64,
    /// Histogram edges (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub edges: Vec<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct AgreementArgs {
    /// CSV of `annotator,record_id,rank1,rank2,...`.
    #[arg(long)]
    pub rankings: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct CorrelateArgs {
    /// Per-record metrics from `score`.
    #[arg(long)]
    pub metrics: PathBuf,
    /// Per-record span ratios from `tsr`.
    #[arg(long)]
    pub tsr_records: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct GenerationArgs {
    /// Largest tolerated failure share before the job aborts.
    #[arg(long, default_value_t = DEFAULT_ABORT_THRESHOLD)]
    pub abort_threshold: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct KdArgs {
    #[command(flatten)]
    pub generation: GenerationArgs,
    /// Replace existing translations of the distillation system.
    #[arg(long)]
    pub force: bool,
    #[arg(long, default_value = KD_SYSTEM)]
    pub system: String,
}

#[derive(Debug, Args, Serialize)]
pub struct FilterArgs {
    /// Share of each direction to remove, in [0, 1).
    #[arg(long)]
    pub proportion: f64,
    /// Per-record metrics holding reference perplexities; without it the
    /// references are scored with the score endpoint.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    /// Increasing proportions (comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    pub proportions: Vec<f64>,
    /// Per-record metrics holding reference perplexities and quality.
    #[arg(long)]
    pub metrics: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EmitSftArgs {
    /// Variant used as the completion.
    #[arg(long, default_value = "reference")]
    pub variant: String,
    /// Restrict the completion to one system.
    #[arg(long)]
    pub system: Option<String>,
    /// Dataset name recorded in the trainer config.
    #[arg(long, default_value = "sft.jsonl")]
    pub name: String,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    #[arg(long, default_value = "Translationese report")]
    pub title: String,
    /// Per-record metrics for the automatic-metric tables.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    /// `LABEL=metrics.csv` tables to compare; the first is the baseline.
    #[arg(long = "compare")]
    pub compare: Vec<String>,
    #[arg(long, default_value_t = MIN_BOOTSTRAP_ITERATIONS)]
    pub iterations: usize,
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    #[arg(long)]
    pub rankings: Option<PathBuf>,
    /// Removal manifest from `filter`.
    #[arg(long)]
    pub removed: Option<PathBuf>,
    /// Retained corpus from `filter`.
    #[arg(long)]
    pub retained: Option<PathBuf>,
    #[arg(long)]
    pub sweep: Option<PathBuf>,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Stats => "stats",
            Command::Score(_) => "score",
            Command::Tsr(_) => "tsr",
            Command::Agreement(_) => "agreement",
            Command::Correlate(_) => "correlate",
            Command::Polish(_) => "polish",
            Command::Kd(_) => "kd",
            Command::Filter(_) => "filter",
            Command::Sweep(_) => "sweep",
            Command::EmitSft(_) => "emit-sft",
            Command::Report(_) => "report",
        }
    }

    pub fn needs(&self) -> Needs {
        let corpus = Needs { corpus: true, ..Needs::default() };
        match self {
            Command::Ingest(_) | Command::Agreement(_) | Command::Correlate(_) | Command::Tsr(_) => Needs::default(),
            Command::Report(_) => Needs::default(),
            Command::Stats | Command::Sweep(_) | Command::EmitSft(_) => corpus,
            Command::Score(_) => Needs { score: true, tagger: true, ..corpus },
            Command::Polish(_) | Command::Kd(_) => Needs { chat: true, ..corpus },
            Command::Filter(a) => Needs { score: a.metrics.is_none(), ..corpus },
        }
    }

    /// Problems with subcommand arguments, reported alongside setting problems.
    pub fn validate(&self) -> Vec<String> {
        let mut p = Vec::new();
        match self {
            Command::Ingest(a) => {
                check_file(&mut p, "input", Some(&a.input));
                if a.schema == SchemaArg::Tsv && (a.src_lang.is_none() || a.tgt_lang.is_none()) {
                    p.push("TSV input needs --src-lang and --tgt-lang".into());
                }
                if let Some(f) = a.dev_fraction {
                    if !(0.0..1.0).contains(&f) {
                        p.push(format!("--dev-fraction {f} outside [0, 1)"));
                    }
                }
                if a.granularity.parse::<Granularity>().is_err() {
                    p.push(format!("unknown granularity `{}`", a.granularity));
                }
            }
            Command::Score(a) => {
                if let Some(v) = &a.variant {
                    if v.parse::<Variant>().is_err() {
                        p.push(format!("unknown variant `{v}`"));
                    }
                }
            }
            Command::Tsr(a) => {
                check_file(&mut p, "annotation export", Some(&a.annotations));
                for c in &a.categories {
                    if c.parse::<SpanCategory>().is_err() {
                        p.push(format!("unknown span category `{c}`"));
                    }
                }
            }
            Command::Agreement(a) => check_file(&mut p, "rankings", Some(&a.rankings)),
            Command::Correlate(a) => {
                check_file(&mut p, "metrics", Some(&a.metrics));
                check_file(&mut p, "TSR records", Some(&a.tsr_records));
            }
            Command::Polish(g) | Command::Kd(KdArgs { generation: g, .. }) => {
                if !(0.0..=1.0).contains(&g.abort_threshold) {
                    p.push(format!("--abort-threshold {} outside [0, 1]", g.abort_threshold));
                }
            }
            Command::Filter(a) => {
                check_file(&mut p, "metrics", a.metrics.as_ref());
                if !(0.0..1.0).contains(&a.proportion) {
                    p.push(format!("--proportion {} outside [0, 1)", a.proportion));
                }
            }
            Command::Sweep(a) => check_file(&mut p, "metrics", Some(&a.metrics)),
            Command::EmitSft(a) => {
                if a.variant.parse::<Variant>().is_err() {
                    p.push(format!("unknown variant `{}`", a.variant));
                }
            }
            Command::Report(a) => {
                check_file(&mut p, "metrics", a.metrics.as_ref());
                check_file(&mut p, "annotation export", a.annotations.as_ref());
                check_file(&mut p, "rankings", a.rankings.as_ref());
                check_file(&mut p, "removal manifest", a.removed.as_ref());
                check_file(&mut p, "retained corpus", a.retained.as_ref());
                check_file(&mut p, "sweep", a.sweep.as_ref());
                for spec in &a.compare {
                    match spec.split_once('=') {
                        Some((label, path)) if !label.is_empty() => {
                            check_file(&mut p, "comparison table", Some(&PathBuf::from(path)))
                        }
                        _ => p.push(format!("--compare `{spec}` is not LABEL=PATH")),
                    }
                }
                if a.removed.is_some() != a.retained.is_some() {
                    p.push("--removed and --retained go together".into());
                }
                if a.iterations < MIN_BOOTSTRAP_ITERATIONS {
                    p.push(format!("--iterations must be at least {MIN_BOOTSTRAP_ITERATIONS}"));
                }
            }
            Command::Stats => {}
        }
        p
    }
}

/// Files written so far, relative to the output directory.
pub struct Outputs {
    dir: PathBuf,
    pub written: Vec<String>,
}

impl Outputs {
    pub fn new(dir: PathBuf) -> Self {
        Outputs { dir, written: Vec::new() }
    }

    pub fn write(&mut self, name: &str, fill: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        fill(&mut w)?;
        w.flush().with_context(|| format!("writing {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn load_corpus(settings: &Settings) -> Result<Corpus> {
    let path = settings.corpus.as_ref().context("--corpus is required")?;
    Ok(ingest_corpus(path, &Schema::ParallelJsonl)?)
}

fn optional_corpus(settings: &Settings) -> Result<Option<Corpus>> {
    settings.corpus.as_ref().map(|_| load_corpus(settings)).transpose()
}

fn load_metrics(path: &Path) -> Result<Vec<MetricRecord>> {
    read_metric_records(open(path)?).with_context(|| format!("reading metrics {}", path.display()))
}

/// Perplexity and quality of each record's reference, keyed by record id.
fn reference_scores(metrics: &[MetricRecord]) -> Result<(BTreeMap<String, f64>, BTreeMap<String, f64>)> {
    let (mut ppl, mut quality) = (BTreeMap::new(), BTreeMap::new());
    for m in metrics.iter().filter(|m| m.variant == Variant::Reference) {
        ensure!(ppl.insert(m.record_id.clone(), m.ppl).is_none(), "several reference rows for `{}`", m.record_id);
        if let Some(q) = m.quality {
            quality.insert(m.record_id.clone(), q);
        }
    }
    Ok((ppl, quality))
}

pub fn run(command: &Command, settings: &Settings, out: &mut Outputs) -> Result<()> {
    match command {
        Command::Ingest(a) => ingest(a, settings, out),
        Command::Stats => stats(settings, out),
        Command::Score(a) => score(a, settings, out),
        Command::Tsr(a) => tsr(a, settings, out),
        Command::Agreement(a) => agreement(a, out),
        Command::Correlate(a) => correlate(a, out),
        Command::Polish(a) => {
            let corpus = load_corpus(settings)?;
            let client = settings.client(Endpoint::Chat)?;
            let job = GenerationJob { abort_threshold: a.abort_threshold, ..GenerationJob::default() };
            write_generation(polish_references(&corpus, &client, &job)?, "polish_failures.csv", out)
        }
        Command::Kd(a) => {
            let corpus = load_corpus(settings)?;
            let client = settings.client(Endpoint::Chat)?;
            let job = GenerationJob { abort_threshold: a.generation.abort_threshold, force: a.force, system: a.system.clone() };
            write_generation(kd_translate(&corpus, &client, &job)?, "kd_failures.csv", out)
        }
        Command::Filter(a) => filter(a, settings, out),
        Command::Sweep(a) => sweep(a, settings, out),
        Command::EmitSft(a) => emit_sft(a, settings, out),
        Command::Report(a) => report(a, settings, out),
    }
}

fn ingest(a: &IngestArgs, settings: &Settings, out: &mut Outputs) -> Result<()> {
    let schema = match a.schema {
        SchemaArg::Jsonl => Schema::ParallelJsonl,
        SchemaArg::Tsv => Schema::TsvPairs {
            direction: curator::Direction::from_codes(
                a.src_lang.as_deref().unwrap_or_default(),
                a.tgt_lang.as_deref().unwrap_or_default(),
            )?,
            granularity: a.granularity.parse()?,
            domain: a.domain.clone(),
        },
    };
    let corpus = ingest_corpus(&a.input, &schema)?;
    out.write("corpus.jsonl", |w| Ok(corpus.write_jsonl(w)?))?;
    if let Some(fraction) = a.dev_fraction {
        let (train, dev) = split_train_dev(&corpus, &SplitSpec { dev_fraction: fraction, seed: settings.seed() })?;
        out.write("train.jsonl", |w| Ok(train.write_jsonl(w)?))?;
        out.write("dev.jsonl", |w| Ok(dev.write_jsonl(w)?))?;
    }
    Ok(())
}

fn stats(settings: &Settings, out: &mut Outputs) -> Result<()> {
    let corpus = load_corpus(settings)?;
    let tagger = settings.tagger()?;
    let tokenizer: Box<dyn Tokenizer + '_> = match &tagger {
        Some(t) => Box::new(TaggerTokenizer(t.as_ref())),
        None => Box::new(BasicTokenizer),
    };
    let stats = corpus_stats(&corpus, tokenizer.as_ref())?;
    out.write("stats.csv", |w| Ok(write_stats_csv(&stats, w)?))
}

fn score(a: &ScoreArgs, settings: &Settings, out: &mut Outputs) -> Result<()> {
    let corpus = load_corpus(settings)?;
    let scorer = settings.client(Endpoint::Score)?;
    let tagger = settings.tagger()?.context("no tagger configured")?;
    let quality = settings.quality()?;
    let variant: Option<Variant> = a.variant.as_deref().map(str::parse).transpose()?;
    let jobs: Vec<_> = corpus
        .records()
        .iter()
        .flat_map(|r| {
            r.translations
                .iter()
                .filter(|t| a.systems.is_empty() || a.systems.contains(&t.system))
                .filter(|t| variant.is_none_or(|v| v == t.variant))
                .map(move |t| (r, TranslationSelector::new(t.system.clone(), Some(t.variant))))
        })
        .collect();
    ensure!(!jobs.is_empty(), "no translations match the requested systems and variant");
    let records = score_many(&scorer, tagger.as_ref(), quality.as_deref(), &jobs, scorer.config().max_concurrency)?;
    let summary = aggregate_metrics(&records)?;
    out.write("metrics.csv", |w| Ok(write_metric_records(&records, w)?))?;
    out.write("metrics_summary.csv", |w| Ok(write_metric_table(&summary, w)?))
}

fn annotation_set(path: &Path, corpus: Option<&Corpus>) -> Result<AnnotationSet> {
    parse_annotation_export(path, corpus).with_context(|| format!("reading annotations {}", path.display()))
}

fn direction_of(corpus: Option<&Corpus>, record_id: &str) -> String {
    corpus
        .and_then(|c| c.get(record_id))
        .map(|r| r.direction.to_string())
        .unwrap_or_else(|| "unknown".into())
}

fn tsr(a: &TsrArgs, settings: &Settings, out: &mut Outputs) -> Result<()> {
    let corpus = optional_corpus(settings)?;
    let set = annotation_set(&a.annotations, corpus.as_ref())?;
    let categories = if a.categories.is_empty() {
        translationese_categories()
    } else {
        a.categories.iter().map(|c| c.parse()).collect::<curator::Result<_>>()?
    };
    let records = tsr_records(&set, &categories)?;
    ensure!(!records.is_empty(), "the export contains no annotated translations");
    let summary = summarize_tsr(&records, corpus.as_ref(), a.threshold)?;
    let edges = if a.edges.is_empty() { DEFAULT_HISTOGRAM_EDGES.to_vec() } else { a.edges.clone() };
    let values: Vec<f64> = records.iter().map(|r| r.mean_tsr).collect();
    let histogram = tsr_histogram(&values, &edges, a.threshold)?;
    let counts: BTreeMap<String, _> = mean_category_counts(&set, |s| {
        format!("{} {}", direction_of(corpus.as_ref(), &s.record_id), s.system_id)
    });

    out.write("tsr.csv", |w| Ok(write_tsr_summary(&summary, a.threshold, w)?))?;
    out.write("tsr_records.csv", |w| Ok(write_tsr_records(&records, w)?))?;
    out.write("tsr_categories.csv", |w| Ok(write_category_counts(&counts, w)?))?;
    out.write("tsr_histogram.csv", |w| Ok(write_histogram_csv(&histogram, w)?))
}

fn agreement(a: &AgreementArgs, out: &mut Outputs) -> Result<()> {
    let rankings = parse_rankings(open(&a.rankings)?)?;
    let ranks = average_rank(&rankings)?;
    let agreement = pairwise_agreement(&rankings)?;
    out.write("ranks.csv", |w| Ok(write_average_ranks(&ranks, w)?))?;
    out.write("agreement.csv", |w| Ok(write_agreement(&agreement, w)?))
}

fn correlate(a: &CorrelateArgs, out: &mut Outputs) -> Result<()> {
    let metrics = load_metrics(&a.metrics)?;
    let tsr = read_tsr_rows(open(&a.tsr_records)?)?;
    let points = join_ppl_tsr(&metrics, &tsr)?;
    let scopes = correlate_by_direction(&points, a.bins)?;
    out.write("correlation.csv", |w| Ok(write_paired_points(&points, w)?))?;
    out.write("correlation_summary.csv", |w| Ok(write_correlation_summary(&scopes, w)?))?;
    out.write("correlation_bins.csv", |w| Ok(write_correlation_bins(&scopes, w)?))
}

fn write_generation(outcome: GenerationOutcome, failures: &str, out: &mut Outputs) -> Result<()> {
    for f in &outcome.failures {
        eprintln!("record {} left unchanged: {}", f.record_id, f.error);
    }
    out.write("corpus.jsonl", |w| Ok(outcome.corpus.write_jsonl(w)?))?;
    out.write(failures, |w| {
        writeln!(w, "record_id,error")?;
        for f in &outcome.failures {
            writeln!(w, "{},\"{}\"", f.record_id, f.error.replace('"', "\"\""))?;
        }
        Ok(())
    })
}

fn score_references(corpus: &Corpus, settings: &Settings) -> Result<BTreeMap<String, f64>> {
    let client = settings.client(Endpoint::Score)?;
    corpus
        .records()
        .iter()
        .map(|r| {
            let reference = r.reference().with_context(|| format!("record `{}` has no reference", r.id))?;
            let ppl = perplexity(&client.score_text(&reference.text)?)?;
            Ok((r.id.clone(), ppl))
        })
        .collect()
}

fn filter(a: &FilterArgs, settings: &Settings, out: &mut Outputs) -> Result<()> {
    let corpus = load_corpus(settings)?;
    let ppl = match &a.metrics {
        Some(path) => reference_scores(&load_metrics(path)?)?.0,
        None => score_references(&corpus, settings)?,
    };
    let outcome = filter_by_perplexity(&corpus, &ppl, a.proportion)?;
    out.write("corpus.jsonl", |w| Ok(outcome.retained.write_jsonl(w)?))?;
    out.write("removed.csv", |w| Ok(write_manifest(&outcome.removed, w)?))
}

fn sweep(a: &SweepArgs, settings: &Settings, out: &mut Outputs) -> Result<()> {
    let corpus = load_corpus(settings)?;
    let (ppl, quality) = reference_scores(&load_metrics(&a.metrics)?)?;
    let evaluator = RetainedSetEvaluator { ppl: ppl.clone(), quality };
    let workers = settings.concurrency.unwrap_or(4);
    let points = filter_sweep(&corpus, &ppl, &a.proportions, &evaluator, workers)?;
    out.write("sweep.csv", |w| Ok(write_sweep_csv(&points, w)?))
}

fn emit_sft(a: &EmitSftArgs, settings: &Settings, out: &mut Outputs) -> Result<()> {
    let corpus = load_corpus(settings)?;
    let variant: Variant = a.variant.parse()?;
    let target = match &a.system {
        Some(s) => SftTarget::system(s.clone(), variant),
        None => SftTarget::variant(variant),
    };
    let instances = sft_instances(&corpus, &target)?;
    out.write("sft.jsonl", |w| Ok(write_sft_jsonl(&instances, w)?))?;
    let config = TrainingConfig::for_dataset(&a.name);
    out.write("training_config.txt", |w| Ok(w.write_all(config.to_key_values().as_bytes())?))
}

fn report(a: &ReportArgs, settings: &Settings, out: &mut Outputs) -> Result<()> {
    let corpus = optional_corpus(settings)?;
    let mut inputs = ReportInputs { title: a.title.clone(), alpha: DEFAULT_ALPHA, ..ReportInputs::default() };

    let metrics = a.metrics.as_deref().map(load_metrics).transpose()?;
    if let Some(m) = &metrics {
        inputs.metrics = aggregate_metrics(m)?;
    }
    if !a.compare.is_empty() {
        let tables = a
            .compare
            .iter()
            .map(|spec| {
                let (label, path) = spec.split_once('=').context("--compare takes LABEL=PATH")?;
                Ok(VariantTable::new(label, load_metrics(Path::new(path))?))
            })
            .collect::<Result<Vec<_>>>()?;
        inputs.comparison = compare_variants(&tables, settings.seed(), a.iterations)?;
    }
    if let Some(path) = &a.annotations {
        let set = annotation_set(path, corpus.as_ref())?;
        let records: Vec<TsrRecord> = tsr_records(&set, &translationese_categories())?;
        if records.is_empty() {
            bail!("the annotation export contains no annotated translations");
        }
        inputs.tsr = summarize_tsr(&records, corpus.as_ref(), SIGNIFICANT_TSR)?;
        let values: Vec<f64> = records.iter().map(|r| r.mean_tsr).collect();
        inputs.tsr_histogram = Some(tsr_histogram(&values, &DEFAULT_HISTOGRAM_EDGES, SIGNIFICANT_TSR)?);
        if let Some(m) = &metrics {
            let rows: Vec<_> = records.iter().map(Into::into).collect();
            inputs.correlation = correlate_by_direction(&join_ppl_tsr(m, &rows)?, DEFAULT_BINS)?;
        }
    }
    if let Some(path) = &a.rankings {
        let rankings = parse_rankings(open(path)?)?;
        inputs.average_ranks = average_rank(&rankings)?;
        inputs.agreement = pairwise_agreement(&rankings)?;
    }
    if let (Some(removed), Some(retained)) = (&a.removed, &a.retained) {
        inputs.filter = Some(FilterSummary {
            removed: read_manifest(open(removed)?)?.len(),
            retained: ingest_corpus(retained, &Schema::ParallelJsonl)?.len(),
        });
    }
    if let Some(path) = &a.sweep {
        inputs.sweep = read_sweep_csv(open(path)?)?;
    }
    let markdown = render_report(&inputs);
    out.write("report.md", |w| Ok(w.write_all(markdown.as_bytes())?))
}
