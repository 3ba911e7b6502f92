//! Correlation, variant comparison, filtering sweeps and reports.

pub mod compare;
pub mod correlation;
pub mod report;
pub mod sweep;

pub use compare::{compare_variants, ComparisonRow, Metric, MetricCell, VariantTable, DEFAULT_ALPHA};
pub use correlation::{
    average_ranks, correlate, correlate_by_direction, correlate_with_bins, join_ppl_tsr, pearson, spearman,
    write_correlation_bins, write_correlation_summary, write_paired_points, BinnedMean, CorrelationResult,
    PairedPoint, DEFAULT_BINS,
};
pub use report::{render_report, FilterSummary, ReportInputs};
pub use sweep::{filter_sweep, read_sweep_csv, write_sweep_csv, RetainedSetEvaluator, SweepEvaluator, SweepPoint};
