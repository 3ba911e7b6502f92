//! Self-contained Markdown report.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::annotations::ranking::Agreement;
use crate::annotations::tsr::{TsrHistogram, TsrSummary};
use crate::metrics::MetricSummary;

use super::compare::{ComparisonRow, MetricCell};
use super::correlation::CorrelationResult;
use super::sweep::SweepPoint;

/// Removal summary of one filtering run.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSummary {
    pub removed: usize,
    pub retained: usize,
}

/// Every section is optional; empty inputs are left out of the report.
#[derive(Debug, Clone, Default)]
pub struct ReportInputs {
    pub title: String,
    pub metrics: Vec<MetricSummary>,
    pub comparison: Vec<ComparisonRow>,
    pub alpha: f64,
    pub average_ranks: BTreeMap<String, f64>,
    pub agreement: Vec<Agreement>,
    pub tsr: Vec<TsrSummary>,
    pub tsr_histogram: Option<TsrHistogram>,
    pub correlation: Vec<(String, CorrelationResult)>,
    pub filter: Option<FilterSummary>,
    pub sweep: Vec<SweepPoint>,
}

fn table(out: &mut String, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) {
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}", header.iter().map(|_| "---|").collect::<String>());
    for row in rows {
        let _ = writeln!(out, "| {} |", row.join(" | "));
    }
    out.push('\n');
}

fn coefficient(v: Option<f64>) -> String {
    v.map(|r| format!("{r:.3}")).unwrap_or_else(|| "undefined".into())
}

fn cell(c: &MetricCell, alpha: f64) -> String {
    let scale = if c.metric == super::compare::Metric::Quality { 100.0 } else { 1.0 };
    let digits = match c.metric {
        super::compare::Metric::LexicalDensity | super::compare::Metric::LengthVariety => 3,
        _ => 1,
    };
    let mut s = format!("{:.*}", digits, c.mean * scale);
    if c.best {
        s = format!("**{s}**");
    }
    if let Some(p) = c.p_value {
        let _ = write!(s, " ({:+.*}, p={p:.3}", digits, c.delta * scale);
        s.push_str(if c.significant(alpha) { ")*" } else { ")" });
    }
    if c.worst {
        s.push_str(" ↓");
    }
    s
}

/// Renders the report. Output depends only on the inputs.
pub fn render_report(r: &ReportInputs) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {}\n", if r.title.is_empty() { "Translationese report" } else { &r.title });

    if !r.metrics.is_empty() {
        out.push_str("## Automatic naturalness metrics\n\n");
        table(
            &mut out,
            &["Direction", "Granularity", "System", "Variant", "Lex.", "Len.", "PPL", "n"],
            r.metrics.iter().map(|m| {
                vec![
                    m.key.direction.to_string(),
                    m.key.granularity.to_string(),
                    m.key.system.clone(),
                    m.key.variant.to_string(),
                    format!("{:.3}", m.lexical_density),
                    format!("{:.3}", m.length_variety),
                    format!("{:.1}", m.ppl),
                    m.n.to_string(),
                ]
            }),
        );
        if r.metrics.iter().any(|m| m.quality.is_some()) {
            out.push_str("## Translation quality (QE x100)\n\n");
            table(
                &mut out,
                &["Direction", "Granularity", "System", "Variant", "QE"],
                r.metrics.iter().filter_map(|m| {
                    m.quality.map(|q| {
                        vec![
                            m.key.direction.to_string(),
                            m.key.granularity.to_string(),
                            m.key.system.clone(),
                            m.key.variant.to_string(),
                            format!("{:.1}", q * 100.0),
                        ]
                    })
                }),
            );
        }
    }

    if !r.comparison.is_empty() {
        out.push_str("## Comparison against baseline\n\n");
        let metrics: Vec<&str> = r.comparison[0].cells.iter().map(|c| c.metric.label()).collect();
        let mut header = vec!["Direction", "Granularity", "Variant", "n"];
        header.extend(&metrics);
        table(
            &mut out,
            &header,
            r.comparison.iter().map(|row| {
                let mut cells = vec![
                    row.direction.to_string(),
                    row.granularity.to_string(),
                    row.label.clone(),
                    row.n.to_string(),
                ];
                cells.extend(row.cells.iter().map(|c| cell(c, r.alpha)));
                cells
            }),
        );
        let _ = writeln!(
            out,
            "Bold marks the best value per group and ↓ the worst. Parentheses hold the delta against the first \
             variant and its paired bootstrap p-value; * marks p < {}.\n",
            r.alpha
        );
    }

    if !r.average_ranks.is_empty() {
        out.push_str("## Human naturalness ranking\n\n");
        table(
            &mut out,
            &["System", "Average rank"],
            r.average_ranks.iter().map(|(s, v)| vec![s.clone(), format!("{v:.1}")]),
        );
    }

    if !r.agreement.is_empty() {
        out.push_str("## Annotator agreement (Kendall's tau)\n\n");
        table(
            &mut out,
            &["Annotator A", "Annotator B", "tau", "Shared records"],
            r.agreement.iter().map(|a| {
                vec![a.annotator_a.clone(), a.annotator_b.clone(), format!("{:.3}", a.tau), a.shared_records.to_string()]
            }),
        );
    }

    if !r.tsr.is_empty() {
        out.push_str("## Translationese span ratio\n\n");
        table(
            &mut out,
            &["Direction", "System", "Mean TSR", "Share TSR > 0.2", "n"],
            r.tsr.iter().map(|t| {
                vec![
                    t.direction.clone(),
                    t.system_id.clone(),
                    format!("{:.2}", t.mean_tsr),
                    format!("{:.1}%", t.proportion_significant * 100.0),
                    t.n.to_string(),
                ]
            }),
        );
    }

    if let Some(h) = &r.tsr_histogram {
        out.push_str("## TSR distribution\n\n");
        table(
            &mut out,
            &["Bin", "Count", "Share"],
            h.bins.iter().enumerate().map(|(i, b)| {
                vec![b.label(i == 0), b.count.to_string(), format!("{:.1}%", b.proportion * 100.0)]
            }),
        );
        let _ = writeln!(out, "Share above {}: {:.1}%\n", h.threshold, h.share_above * 100.0);
    }

    if !r.correlation.is_empty() {
        out.push_str("## PPL and TSR correlation\n\n");
        table(
            &mut out,
            &["Scope", "n", "Pearson r", "Spearman rho", "Bins"],
            r.correlation.iter().map(|(scope, c)| {
                vec![
                    scope.clone(),
                    c.n.to_string(),
                    coefficient(c.pearson_r),
                    coefficient(c.spearman_rho),
                    format!("{} equal-count", c.bins.len()),
                ]
            }),
        );
    }

    if let Some(f) = &r.filter {
        out.push_str("## Perplexity filtering\n\n");
        let _ = writeln!(
            out,
            "Removed {} of {} records, ranked by perplexity within each direction.\n",
            f.removed,
            f.removed + f.retained
        );
    }

    if !r.sweep.is_empty() {
        out.push_str("## Filtering sweep\n\n");
        table(
            &mut out,
            &["Proportion", "Mean PPL", "Mean QE"],
            r.sweep.iter().map(|p| {
                vec![
                    p.proportion.to_string(),
                    format!("{:.2}", p.mean_ppl),
                    p.mean_quality.map(|q| format!("{:.1}", q * 100.0)).unwrap_or_else(|| "n/a".into()),
                ]
            }),
        );
    }

    out.push_str("## Notes\n\n");
    out.push_str("- TSR denominators count Unicode characters of the translation.\n");
    out.push_str("- PPL scores the translation alone, without the source as context.\n");
    out.push_str("- QE scores are scaled by 100.\n");
    out.push_str("- Agreement is Kendall's tau-a over strict rankings.\n");
    out.push_str("- Significance pairs records by id.\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Granularity, Variant};
    use crate::metrics::GroupKey;

    #[test]
    fn metric_rows_use_table_precision() {
        let inputs = ReportInputs {
            metrics: vec![MetricSummary {
                key: GroupKey {
                    direction: "en-zh".parse().unwrap(),
                    granularity: Granularity::Document,
                    system: "SFT".into(),
                    variant: Variant::Direct,
                },
                lexical_density: 0.5094,
                length_variety: 0.6386,
                ppl: 13.81,
                quality: Some(0.8),
                n: 3,
            }],
            ..ReportInputs::default()
        };
        let md = render_report(&inputs);
        assert!(md.contains("| en-zh | document | SFT | direct | 0.509 | 0.639 | 13.8 | 3 |"));
        assert!(md.contains("| en-zh | document | SFT | direct | 80.0 |"));
        assert!(!md.contains("## Translationese span ratio"));
        assert!(md.ends_with("- Significance pairs records by id.\n"));
    }

    #[test]
    fn tsr_rows() {
        let inputs = ReportInputs {
            tsr: vec![TsrSummary {
                direction: "en-zh".into(),
                system_id: "GPT-4 Polishing".into(),
                mean_tsr: 0.14,
                proportion_significant: 0.25,
                n: 4,
            }],
            ..ReportInputs::default()
        };
        assert!(render_report(&inputs).contains("| en-zh | GPT-4 Polishing | 0.14 | 25.0% | 4 |"));
    }
}
