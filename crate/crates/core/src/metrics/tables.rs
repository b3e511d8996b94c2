//! Flat export tables and their CSV / log encodings.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::net::Network;
use crate::world::Directory;

use super::store::{AckStatus, EventLine, MetricsStore};
use crate::sim::SimTime;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub const LATENCY_CSV: &str = "latency.csv";
pub const DELIVERY_CSV: &str = "delivery_matrix.csv";
pub const PORT_CSV: &str = "port_throughput.csv";
pub const EVENTS_LOG: &str = "events.log";
pub const RECORDS_CSV: &str = "records.csv";
pub const E2E_CSV: &str = "e2e.csv";
pub const SINK_CSV: &str = "sink_state.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Flag {
    Y,
    N,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyRow {
    pub topic: String,
    pub producer: String,
    pub producer_seq: u64,
    pub consumer: String,
    pub produce_time_us: u64,
    pub deliver_time_us: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeliveryRow {
    pub producer: String,
    pub producer_seq: u64,
    pub topic: String,
    pub consumer: String,
    pub delivered: Flag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortRow {
    pub time_s: f64,
    pub node: String,
    pub port: u32,
    pub tx_bytes: u64,
    pub rx_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub topic: String,
    pub producer: String,
    pub producer_seq: u64,
    pub size_bytes: u32,
    pub produce_time_us: u64,
    pub ack_status: String,
    pub truncated: bool,
    pub in_final_log: bool,
    pub duplicates: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct E2eRow {
    pub topic: String,
    pub producer: String,
    pub producer_seq: u64,
    pub produce_time_us: u64,
    pub sink_time_us: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinkRow {
    pub component: String,
    pub key: String,
    pub value: f64,
}

const LATENCY_HEADER: &[&str] = &["topic", "producer", "producer_seq", "consumer", "produce_time_us", "deliver_time_us"];
const DELIVERY_HEADER: &[&str] = &["producer", "producer_seq", "topic", "consumer", "delivered"];
const PORT_HEADER: &[&str] = &["time_s", "node", "port", "tx_bytes", "rx_bytes"];
const RECORDS_HEADER: &[&str] = &[
    "topic",
    "producer",
    "producer_seq",
    "size_bytes",
    "produce_time_us",
    "ack_status",
    "truncated",
    "in_final_log",
    "duplicates",
];
const E2E_HEADER: &[&str] = &["topic", "producer", "producer_seq", "produce_time_us", "sink_time_us"];
const SINK_HEADER: &[&str] = &["component", "key", "value"];

/// Every exported table of one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExportTables {
    pub latency: Vec<LatencyRow>,
    pub delivery: Vec<DeliveryRow>,
    pub ports: Vec<PortRow>,
    pub events: Vec<EventLine>,
    pub records: Vec<RecordRow>,
    pub e2e: Vec<E2eRow>,
    pub sink_state: Vec<SinkRow>,
}

impl ExportTables {
    pub fn build(metrics: &MetricsStore, dir: &Directory, net: &Network) -> Self {
        let topic = |t: crate::proto::TopicId| dir.topic(t).name.clone();
        let records: Vec<RecordRow> = metrics
            .records
            .iter()
            .map(|r| RecordRow {
                topic: topic(r.topic),
                producer: dir.label(r.producer).to_string(),
                producer_seq: r.seq,
                size_bytes: r.size_bytes,
                produce_time_us: r.produce_time.as_micros(),
                ack_status: r.status.as_str().to_string(),
                truncated: r.truncated,
                in_final_log: r.in_final_log,
                duplicates: r.duplicates,
            })
            .collect();
        let latency = metrics
            .deliveries
            .iter()
            .map(|d| {
                let r = &metrics.records[d.record];
                LatencyRow {
                    topic: topic(r.topic),
                    producer: dir.label(r.producer).to_string(),
                    producer_seq: r.seq,
                    consumer: dir.label(d.consumer).to_string(),
                    produce_time_us: r.produce_time.as_micros(),
                    deliver_time_us: d.time.as_micros(),
                }
            })
            .collect();
        let mut delivery = Vec::new();
        for (i, r) in metrics.records.iter().enumerate() {
            for (consumer, topics) in &metrics.subscriptions {
                if topics.contains(&r.topic) {
                    delivery.push(DeliveryRow {
                        producer: dir.label(r.producer).to_string(),
                        producer_seq: r.seq,
                        topic: topic(r.topic),
                        consumer: dir.label(*consumer).to_string(),
                        delivered: if metrics.is_delivered(i, *consumer) { Flag::Y } else { Flag::N },
                    });
                }
            }
        }
        let mut ports = Vec::new();
        let list: Vec<(usize, u32)> = net.port_list().collect();
        let series: Vec<_> = list
            .iter()
            .map(|(n, p)| net.port_counters(net.node_id(*n), *p).expect("listed port"))
            .collect();
        let samples = series.first().map_or(0, |s| s.len());
        for k in 0..samples {
            for ((n, p), s) in list.iter().zip(&series) {
                let sample = &s[k];
                ports.push(PortRow {
                    time_s: sample.time.as_micros() as f64 / 1e6,
                    node: net.node_id(*n).to_string(),
                    port: *p,
                    tx_bytes: sample.tx.total(),
                    rx_bytes: sample.rx.total(),
                });
            }
        }
        let mut e2e: Vec<E2eRow> = metrics
            .e2e
            .iter()
            .map(|(i, t)| {
                let r = &metrics.records[*i];
                E2eRow {
                    topic: topic(r.topic),
                    producer: dir.label(r.producer).to_string(),
                    producer_seq: r.seq,
                    produce_time_us: r.produce_time.as_micros(),
                    sink_time_us: t.as_micros(),
                }
            })
            .collect();
        e2e.sort_by(|a, b| (a.produce_time_us, &a.producer, a.producer_seq).cmp(&(b.produce_time_us, &b.producer, b.producer_seq)));
        let sink_state = metrics
            .sink_state
            .iter()
            .map(|((c, k), v)| SinkRow {
                component: dir.label(*c).to_string(),
                key: k.clone(),
                value: *v,
            })
            .collect();
        ExportTables {
            latency,
            delivery,
            ports,
            events: metrics.events.clone(),
            records,
            e2e,
            sink_state,
        }
    }

    pub fn write_dir(&self, dir: &Path) -> Result<(), ExportError> {
        fs::create_dir_all(dir).map_err(|source| ExportError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        write_csv(&dir.join(LATENCY_CSV), LATENCY_HEADER, &self.latency)?;
        write_csv(&dir.join(DELIVERY_CSV), DELIVERY_HEADER, &self.delivery)?;
        write_csv(&dir.join(PORT_CSV), PORT_HEADER, &self.ports)?;
        write_csv(&dir.join(RECORDS_CSV), RECORDS_HEADER, &self.records)?;
        write_csv(&dir.join(E2E_CSV), E2E_HEADER, &self.e2e)?;
        write_csv(&dir.join(SINK_CSV), SINK_HEADER, &self.sink_state)?;
        write_events(&dir.join(EVENTS_LOG), &self.events)
    }

    pub fn read_dir(dir: &Path) -> Result<Self, ExportError> {
        Ok(ExportTables {
            latency: read_csv(&dir.join(LATENCY_CSV))?,
            delivery: read_csv(&dir.join(DELIVERY_CSV))?,
            ports: read_csv(&dir.join(PORT_CSV))?,
            events: read_events(&dir.join(EVENTS_LOG))?,
            records: read_csv(&dir.join(RECORDS_CSV))?,
            e2e: read_csv(&dir.join(E2E_CSV))?,
            sink_state: read_csv(&dir.join(SINK_CSV))?,
        })
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExportError + '_ {
    move |source| ExportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<(), ExportError> {
    let csv_err = |source| ExportError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(file));
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, ExportError> {
    let csv_err = |source| ExportError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().collect::<Result<Vec<T>, _>>().map_err(csv_err)
}

/// One event per line: `time_us component kind detail`.
pub fn write_events(path: &Path, events: &[EventLine]) -> Result<(), ExportError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for e in events {
        let line = if e.detail.is_empty() {
            format!("{} {} {}", e.time.as_micros(), e.component, e.kind)
        } else {
            format!("{} {} {} {}", e.time.as_micros(), e.component, e.kind, e.detail)
        };
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_events(path: &Path) -> Result<Vec<EventLine>, ExportError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        let mut parts = line.splitn(4, ' ');
        let bad = |message: &str| ExportError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: message.to_string(),
        };
        let time = parts
            .next()
            .and_then(|t| t.parse::<u64>().ok())
            .ok_or_else(|| bad("bad time"))?;
        let component = parts.next().ok_or_else(|| bad("missing component"))?.to_string();
        let kind = parts.next().ok_or_else(|| bad("missing kind"))?.to_string();
        let detail = parts.next().unwrap_or("").to_string();
        out.push(EventLine {
            time: SimTime::from_micros(time),
            component,
            kind,
            detail,
        });
    }
    Ok(out)
}

impl RecordRow {
    pub fn status(&self) -> Option<AckStatus> {
        AckStatus::parse(&self.ack_status)
    }
}
