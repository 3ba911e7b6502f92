//! Pearson and Spearman coefficients with a quantile-binned view.

use std::collections::BTreeMap;
use std::io::Write;

use crate::annotations::TsrRow;
use crate::corpus::Direction;
use crate::metrics::MetricRecord;
use crate::{Error, Result};

pub const DEFAULT_BINS: usize = 10;

/// Mean of `y` within one equal-count bin of `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedMean {
    pub x_lower: f64,
    pub x_upper: f64,
    pub mean_x: f64,
    pub mean_y: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationResult {
    pub n: usize,
    /// `None` when either input has zero variance.
    pub pearson_r: Option<f64>,
    pub spearman_rho: Option<f64>,
    /// Ordered by `x`.
    pub bins: Vec<BinnedMean>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn constant(v: &[f64]) -> bool {
    v.iter().all(|x| *x == v[0])
}

/// Pearson's r, clamped to [-1, 1]. `None` for constant input.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 || constant(x) || constant(y) {
        return None;
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of their positions.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rho: Pearson on average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&average_ranks(x), &average_ranks(y))
}

fn check_inputs(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::param(format!("correlation inputs differ in length: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::param("correlation needs at least 3 points"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::param("correlation inputs must be finite"));
    }
    Ok(())
}

pub fn correlate(x: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    correlate_with_bins(x, y, DEFAULT_BINS)
}

/// Correlation plus `bins` equal-count bins over `x` (fewer when there are
/// fewer points). Bin `i` holds the points ranked `[i*n/k, (i+1)*n/k)` by
/// `x`, ties broken by input order.
pub fn correlate_with_bins(x: &[f64], y: &[f64], bins: usize) -> Result<CorrelationResult> {
    check_inputs(x, y)?;
    if bins == 0 {
        return Err(Error::param("bin count must be positive"));
    }
    let n = x.len();
    let k = bins.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let binned = (0..k)
        .map(|i| {
            let members = &order[i * n / k..(i + 1) * n / k];
            let xs: Vec<f64> = members.iter().map(|&j| x[j]).collect();
            let ys: Vec<f64> = members.iter().map(|&j| y[j]).collect();
            BinnedMean {
                x_lower: xs[0],
                x_upper: xs[xs.len() - 1],
                mean_x: mean(&xs),
                mean_y: mean(&ys),
                n: members.len(),
            }
        })
        .collect();
    Ok(CorrelationResult { n, pearson_r: pearson(x, y), spearman_rho: spearman(x, y), bins: binned })
}

/// Perplexity and span ratio of one annotated translation.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedPoint {
    pub record_id: String,
    pub system: String,
    pub direction: Direction,
    pub ppl: f64,
    pub tsr: f64,
}

/// Pairs each TSR row with the metric row of the same record and system,
/// sorted by (record, system). Every TSR row needs exactly one metric row.
pub fn join_ppl_tsr(metrics: &[MetricRecord], tsr: &[TsrRow]) -> Result<Vec<PairedPoint>> {
    let mut index: BTreeMap<(&str, &str), Vec<&MetricRecord>> = BTreeMap::new();
    for m in metrics {
        index.entry((&m.record_id, &m.system)).or_default().push(m);
    }
    let mut points = tsr
        .iter()
        .map(|t| match index.get(&(t.record_id.as_str(), t.system_id.as_str())).map(Vec::as_slice) {
            Some([m]) => Ok(PairedPoint {
                record_id: t.record_id.clone(),
                system: t.system_id.clone(),
                direction: m.direction,
                ppl: m.ppl,
                tsr: t.mean_tsr,
            }),
            Some(_) => Err(Error::param(format!(
                "several metric rows for record `{}` system `{}`; score one variant per system",
                t.record_id, t.system_id
            ))),
            None => Err(Error::param(format!(
                "no metric row for annotated record `{}` system `{}`",
                t.record_id, t.system_id
            ))),
        })
        .collect::<Result<Vec<_>>>()?;
    points.sort_by(|a, b| (&a.record_id, &a.system).cmp(&(&b.record_id, &b.system)));
    Ok(points)
}

/// Correlation of PPL against TSR within each direction that has at least 3
/// points, followed by the pooled `all` scope.
pub fn correlate_by_direction(points: &[PairedPoint], bins: usize) -> Result<Vec<(String, CorrelationResult)>> {
    let mut by_direction: BTreeMap<Direction, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for p in points {
        let e = by_direction.entry(p.direction).or_default();
        e.0.push(p.ppl);
        e.1.push(p.tsr);
    }
    let mut out = Vec::new();
    for (direction, (x, y)) in &by_direction {
        if x.len() >= 3 {
            out.push((direction.to_string(), correlate_with_bins(x, y, bins)?));
        }
    }
    let x: Vec<f64> = points.iter().map(|p| p.ppl).collect();
    let y: Vec<f64> = points.iter().map(|p| p.tsr).collect();
    out.push(("all".to_string(), correlate_with_bins(&x, &y, bins)?));
    Ok(out)
}

/// `record_id,system,direction,ppl,tsr` rows.
pub fn write_paired_points<W: Write>(points: &[PairedPoint], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["record_id", "system", "direction", "ppl", "tsr"])?;
    for p in points {
        out.write_record([
            p.record_id.clone(),
            p.system.clone(),
            p.direction.to_string(),
            p.ppl.to_string(),
            p.tsr.to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::io("<correlation writer>", e))?;
    Ok(())
}

fn coefficient(v: Option<f64>) -> String {
    v.map(|r| format!("{r:.6}")).unwrap_or_else(|| "undefined".into())
}

/// `scope,n,pearson_r,spearman_rho,bins` rows.
pub fn write_correlation_summary<W: Write>(rows: &[(String, CorrelationResult)], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["scope", "n", "pearson_r", "spearman_rho", "bins"])?;
    for (scope, r) in rows {
        out.write_record([
            scope.clone(),
            r.n.to_string(),
            coefficient(r.pearson_r),
            coefficient(r.spearman_rho),
            format!("{} equal-count", r.bins.len()),
        ])?;
    }
    out.flush().map_err(|e| Error::io("<correlation writer>", e))?;
    Ok(())
}

/// `scope,bin,x_lower,x_upper,mean_x,mean_y,n` rows.
pub fn write_correlation_bins<W: Write>(rows: &[(String, CorrelationResult)], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["scope", "bin", "x_lower", "x_upper", "mean_x", "mean_y", "n"])?;
    for (scope, r) in rows {
        for (i, b) in r.bins.iter().enumerate() {
            out.write_record([
                scope.clone(),
                (i + 1).to_string(),
                format!("{:.6}", b.x_lower),
                format!("{:.6}", b.x_upper),
                format!("{:.6}", b.mean_x),
                format!("{:.6}", b.mean_y),
                b.n.to_string(),
            ])?;
        }
    }
    out.flush().map_err(|e| Error::io("<correlation writer>", e))?;
    Ok(())
}
