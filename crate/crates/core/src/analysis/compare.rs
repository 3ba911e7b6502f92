//! Metric deltas of several variants against a baseline, with paired
//! bootstrap p-values.

use std::collections::BTreeMap;

use crate::corpus::{Direction, Granularity};
use crate::metrics::significance::paired_significance;
use crate::metrics::MetricRecord;
use crate::util::stable_mean;
use crate::{Error, Result};

/// Significance level used to mark deltas in reports.
pub const DEFAULT_ALPHA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    LexicalDensity,
    LengthVariety,
    Perplexity,
    Quality,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::LexicalDensity, Metric::LengthVariety, Metric::Perplexity, Metric::Quality];

    /// Higher lexical density, length variety and quality are more natural
    /// or better; lower perplexity is more natural.
    pub fn higher_is_better(self) -> bool {
        !matches!(self, Metric::Perplexity)
    }

    pub fn label(self) -> &'static str {
        match self {
            Metric::LexicalDensity => "Lex.",
            Metric::LengthVariety => "Len.",
            Metric::Perplexity => "PPL",
            Metric::Quality => "QE",
        }
    }

    fn value(self, r: &MetricRecord) -> Option<f64> {
        match self {
            Metric::LexicalDensity => Some(r.lexical_density),
            Metric::LengthVariety => Some(r.length_variety),
            Metric::Perplexity => Some(r.ppl),
            Metric::Quality => r.quality,
        }
    }
}

/// One labelled metric table, such as all records scored for one trained
/// system.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantTable {
    pub label: String,
    pub records: Vec<MetricRecord>,
}

impl VariantTable {
    pub fn new(label: impl Into<String>, records: Vec<MetricRecord>) -> Self {
        VariantTable { label: label.into(), records }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricCell {
    pub metric: Metric,
    pub mean: f64,
    /// `mean - baseline mean`; zero for the baseline.
    pub delta: f64,
    /// Paired bootstrap p-value against the baseline; `None` for the baseline.
    pub p_value: Option<f64>,
    /// Best or worst value of the column within its group. Ties share the mark.
    pub best: bool,
    pub worst: bool,
}

impl MetricCell {
    /// Delta moves in the metric's good direction.
    pub fn improved(&self) -> bool {
        if self.metric.higher_is_better() {
            self.delta > 0.0
        } else {
            self.delta < 0.0
        }
    }

    pub fn significant(&self, alpha: f64) -> bool {
        self.p_value.is_some_and(|p| p < alpha)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub direction: Direction,
    pub granularity: Granularity,
    pub label: String,
    pub n: usize,
    /// Quality is present only when every paired record in the group has it.
    pub cells: Vec<MetricCell>,
}

type Group = (Direction, Granularity);

fn index_table(table: &VariantTable) -> Result<BTreeMap<Group, BTreeMap<&str, &MetricRecord>>> {
    let mut out: BTreeMap<Group, BTreeMap<&str, &MetricRecord>> = BTreeMap::new();
    for r in &table.records {
        if out.entry((r.direction, r.granularity)).or_default().insert(&r.record_id, r).is_some() {
            return Err(Error::param(format!(
                "table `{}` has more than one row for record `{}` in {} {}",
                table.label, r.record_id, r.direction, r.granularity
            )));
        }
    }
    Ok(out)
}

/// Compares every table against the first one, per (direction, granularity).
///
/// Records are paired by id; every table must cover the same groups and the
/// same record ids within each group. Rows come out grouped, in table order.
pub fn compare_variants(tables: &[VariantTable], seed: u64, iterations: usize) -> Result<Vec<ComparisonRow>> {
    let baseline = tables.first().ok_or_else(|| Error::param("no metric tables to compare"))?;
    let indexed = tables.iter().map(index_table).collect::<Result<Vec<_>>>()?;
    if indexed[0].is_empty() {
        return Err(Error::param(format!("baseline table `{}` is empty", baseline.label)));
    }
    for (table, index) in tables.iter().zip(&indexed).skip(1) {
        if index.keys().ne(indexed[0].keys()) {
            return Err(Error::param(format!(
                "table `{}` covers different direction/granularity groups than `{}`",
                table.label, baseline.label
            )));
        }
        for (group, records) in index {
            if records.keys().ne(indexed[0][group].keys()) {
                return Err(Error::param(format!(
                    "table `{}` covers different records than `{}` in {} {}",
                    table.label, baseline.label, group.0, group.1
                )));
            }
        }
    }

    let mut rows = Vec::new();
    for group in indexed[0].keys() {
        let series: Vec<Vec<&MetricRecord>> = indexed.iter().map(|ix| ix[group].values().copied().collect()).collect();
        let metrics: Vec<Metric> = Metric::ALL
            .into_iter()
            .filter(|m| series.iter().flatten().all(|r| m.value(r).is_some()))
            .collect();
        let mut group_rows: Vec<ComparisonRow> = Vec::with_capacity(tables.len());
        for (i, records) in series.iter().enumerate() {
            let cells = metrics
                .iter()
                .map(|&m| {
                    let values: Vec<f64> = records.iter().map(|r| m.value(r).expect("filtered")).collect();
                    let base: Vec<f64> = series[0].iter().map(|r| m.value(r).expect("filtered")).collect();
                    let mean = stable_mean(&mut values.clone());
                    let base_mean = stable_mean(&mut base.clone());
                    let p_value = if i == 0 { None } else { Some(paired_significance(&values, &base, seed, iterations)?) };
                    Ok(MetricCell {
                        metric: m,
                        mean,
                        delta: if i == 0 { 0.0 } else { mean - base_mean },
                        p_value,
                        best: false,
                        worst: false,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            group_rows.push(ComparisonRow {
                direction: group.0,
                granularity: group.1,
                label: tables[i].label.clone(),
                n: records.len(),
                cells,
            });
        }
        mark_extremes(&mut group_rows);
        rows.extend(group_rows);
    }
    Ok(rows)
}

fn mark_extremes(rows: &mut [ComparisonRow]) {
    if rows.len() < 2 {
        return;
    }
    for c in 0..rows[0].cells.len() {
        let key = |r: &ComparisonRow| {
            let cell = &r.cells[c];
            if cell.metric.higher_is_better() {
                cell.mean
            } else {
                -cell.mean
            }
        };
        let max = rows.iter().map(key).fold(f64::NEG_INFINITY, f64::max);
        let min = rows.iter().map(key).fold(f64::INFINITY, f64::min);
        if max == min {
            continue;
        }
        for r in rows.iter_mut() {
            let k = key(r);
            r.cells[c].best = k == max;
            r.cells[c].worst = k == min;
        }
    }
}
