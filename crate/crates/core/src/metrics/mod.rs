//! Run observables: an append-only store filled during the run, flat export
//! tables, summaries and SVG renderings.

mod store;
mod summary;
mod svg;
mod tables;

use std::path::Path;

pub use store::{AckEntry, AckStatus, Delivery, EventLine, LeaderTerm, MetricsStore, ProducedRecord, Truncation};
pub use summary::{classify, percentile, summarize, Fate, LatencyStats, PortSummary, Summary, TopicSummary};
pub use svg::{delivery_svg, latency_svg, throughput_svg, ANNOTATED_EVENTS};
pub use tables::{
    read_csv, read_events, write_csv, write_events, DeliveryRow, E2eRow, ExportError, ExportTables, Flag, LatencyRow,
    PortRow, RecordRow, SinkRow, DELIVERY_CSV, E2E_CSV, EVENTS_LOG, LATENCY_CSV, PORT_CSV, RECORDS_CSV, SINK_CSV,
};

pub const SUMMARY_JSON: &str = "summary.json";
pub const LATENCY_SVG: &str = "latency.svg";
pub const THROUGHPUT_SVG: &str = "throughput.svg";
pub const DELIVERY_SVG: &str = "delivery_matrix.svg";

/// Write every table, the summary and the SVGs into `dir`.
pub fn export(tables: &ExportTables, dir: &Path) -> Result<Summary, ExportError> {
    tables.write_dir(dir)?;
    let summary = summarize(tables);
    let path = dir.join(SUMMARY_JSON);
    let json = serde_json::to_string_pretty(&summary).map_err(|source| ExportError::Json {
        path: path.clone(),
        source,
    })?;
    write_file(&path, json + "\n")?;
    write_file(&dir.join(LATENCY_SVG), latency_svg(tables))?;
    write_file(&dir.join(THROUGHPUT_SVG), throughput_svg(tables))?;
    write_file(&dir.join(DELIVERY_SVG), delivery_svg(tables))?;
    Ok(summary)
}

fn write_file(path: &Path, text: String) -> Result<(), ExportError> {
    std::fs::write(path, text).map_err(|source| ExportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Load a summary previously written by [`export`].
pub fn read_summary(dir: &Path) -> Result<Summary, ExportError> {
    let path = dir.join(SUMMARY_JSON);
    let text = std::fs::read_to_string(&path).map_err(|source| ExportError::Io {
        path: path.clone(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| ExportError::Json { path, source })
}
