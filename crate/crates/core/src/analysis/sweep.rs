//! Filtering-proportion sweep.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::corpus::Corpus;
use crate::curation::filter_by_perplexity;
use crate::util::{parallel_map, stable_mean};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub proportion: f64,
    pub mean_ppl: f64,
    pub mean_quality: Option<f64>,
}

/// Scores a filtered training corpus.
pub trait SweepEvaluator: Sync {
    /// Returns (mean PPL, mean quality) for the retained corpus.
    fn evaluate(&self, retained: &Corpus) -> Result<(f64, Option<f64>)>;
}

/// Averages precomputed per-record scores over the retained records.
///
/// This measures the training data itself rather than a model trained on
/// it. Quality is reported only when every retained record has a score.
#[derive(Debug, Clone, Default)]
pub struct RetainedSetEvaluator {
    pub ppl: BTreeMap<String, f64>,
    pub quality: BTreeMap<String, f64>,
}

impl SweepEvaluator for RetainedSetEvaluator {
    fn evaluate(&self, retained: &Corpus) -> Result<(f64, Option<f64>)> {
        if retained.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut ppl = retained
            .records()
            .iter()
            .map(|r| self.ppl.get(&r.id).copied().ok_or_else(|| Error::MissingPerplexity(r.id.clone())))
            .collect::<Result<Vec<f64>>>()?;
        let quality: Option<Vec<f64>> = retained.records().iter().map(|r| self.quality.get(&r.id).copied()).collect();
        Ok((stable_mean(&mut ppl), quality.map(|mut q| stable_mean(&mut q))))
    }
}

/// Filters `corpus` at each proportion and evaluates the retained set.
/// Proportions must be strictly increasing and within [0, 1).
pub fn filter_sweep(
    corpus: &Corpus,
    ppl: &BTreeMap<String, f64>,
    proportions: &[f64],
    evaluator: &dyn SweepEvaluator,
    workers: usize,
) -> Result<Vec<SweepPoint>> {
    if proportions.is_empty() {
        return Err(Error::param("sweep needs at least one proportion"));
    }
    if let Some(p) = proportions.iter().find(|p| !(0.0..1.0).contains(*p)) {
        return Err(Error::param(format!("sweep proportion {p} outside [0, 1)")));
    }
    if proportions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("sweep proportions must be strictly increasing"));
    }
    parallel_map(proportions, workers, |&p| {
        let outcome = filter_by_perplexity(corpus, ppl, p)?;
        let (mean_ppl, mean_quality) = evaluator.evaluate(&outcome.retained)?;
        Ok(SweepPoint { proportion: p, mean_ppl, mean_quality })
    })
    .into_iter()
    .collect()
}

/// `proportion,mean_ppl,mean_quality` rows; quality scaled by 100.
pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["proportion", "mean_ppl", "mean_quality"])?;
    for p in points {
        out.write_record([
            p.proportion.to_string(),
            format!("{:.4}", p.mean_ppl),
            p.mean_quality.map(|q| format!("{:.4}", q * 100.0)).unwrap_or_default(),
        ])?;
    }
    out.flush().map_err(|e| Error::io("<sweep writer>", e))?;
    Ok(())
}

/// Reads rows written by [`write_sweep_csv`].
pub fn read_sweep_csv<R: Read>(r: R) -> Result<Vec<SweepPoint>> {
    let number = |s: &str| s.parse::<f64>().map_err(|_| Error::param(format!("bad sweep value `{s}`")));
    let mut out = Vec::new();
    for row in csv::Reader::from_reader(r).records() {
        let row = row?;
        if row.len() != 3 {
            return Err(Error::param("sweep rows need proportion, mean_ppl and mean_quality"));
        }
        out.push(SweepPoint {
            proportion: number(&row[0])?,
            mean_ppl: number(&row[1])?,
            mean_quality: if row[2].is_empty() { None } else { Some(number(&row[2])? / 100.0) },
        });
    }
    Ok(out)
}
