//! Reporting: QD metrics, Pareto extraction, quartile balance, archive
//! flattening, and file exports.

mod export;
mod flatten;
mod metrics;

pub use export::{
    export_population, export_run, pair_view_name, read_archive_csv, write_archive_csv, ArchiveRow, ArchiveTable,
    ExportPaths, write_metrics_jsonl, write_parallel_csv,
};
pub use flatten::{flatten, flatten_all_pairs};
pub use metrics::{
    balance_fraction, coverage, pareto_front, qd_score, GenerationRecord, QdScore, RunMetrics,
};
