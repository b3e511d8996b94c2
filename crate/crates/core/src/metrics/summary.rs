//! Aggregates computed purely from export tables, so a summary can be
//! recomputed from re-imported CSVs.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::store::AckStatus;
use super::tables::{ExportTables, Flag};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct LatencyStats {
    pub count: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
}

/// Nearest-rank percentile of sorted samples.
pub fn percentile(sorted: &[u64], p: f64) -> u64 {
    if sorted.is_empty() {
        return 0;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

impl LatencyStats {
    pub fn from_micros(mut samples: Vec<u64>) -> Self {
        if samples.is_empty() {
            return Self::default();
        }
        samples.sort_unstable();
        let sum: u128 = samples.iter().map(|s| u128::from(*s)).sum();
        LatencyStats {
            count: samples.len(),
            mean_ms: sum as f64 / samples.len() as f64 / 1e3,
            median_ms: percentile(&samples, 50.0) as f64 / 1e3,
            p99_ms: percentile(&samples, 99.0) as f64 / 1e3,
            max_ms: *samples.last().expect("non-empty") as f64 / 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TopicSummary {
    pub topic: String,
    pub produced: usize,
    pub acked: usize,
    /// Received by at least one subscriber.
    pub delivered: usize,
    pub lost: usize,
    pub in_flight: usize,
    pub duplicates: u64,
    pub latency: LatencyStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortSummary {
    pub node: String,
    pub port: u32,
    pub tx_bytes: u64,
    pub rx_bytes: u64,
    pub mean_tx_kbps: f64,
    pub mean_rx_kbps: f64,
    pub peak_tx_kbps: f64,
    pub peak_rx_kbps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Summary {
    pub topics: Vec<TopicSummary>,
    /// Source record to final sink.
    pub pipeline: LatencyStats,
    pub ports: Vec<PortSummary>,
    pub events: usize,
}

/// Fate of one produced record at the end of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fate {
    Delivered,
    Lost,
    InFlight,
}

/// Classify every record row, in table order.
pub fn classify(tables: &ExportTables) -> Vec<Fate> {
    let delivered: HashSet<(&str, u64, &str)> = tables
        .delivery
        .iter()
        .filter(|d| d.delivered == Flag::Y)
        .map(|d| (d.producer.as_str(), d.producer_seq, d.topic.as_str()))
        .collect();
    tables
        .records
        .iter()
        .map(|r| {
            if delivered.contains(&(r.producer.as_str(), r.producer_seq, r.topic.as_str())) {
                Fate::Delivered
            } else if r.status() == Some(AckStatus::Failed) || (r.truncated && !r.in_final_log) {
                Fate::Lost
            } else {
                Fate::InFlight
            }
        })
        .collect()
}

fn kbps(bytes: u64, secs: f64) -> f64 {
    if secs <= 0.0 {
        0.0
    } else {
        bytes as f64 * 8.0 / secs / 1e3
    }
}

pub fn summarize(tables: &ExportTables) -> Summary {
    let fates = classify(tables);
    let mut topics: BTreeMap<&str, TopicSummary> = BTreeMap::new();
    for (r, fate) in tables.records.iter().zip(&fates) {
        let t = topics.entry(&r.topic).or_insert_with(|| TopicSummary {
            topic: r.topic.clone(),
            ..Default::default()
        });
        t.produced += 1;
        t.duplicates += r.duplicates;
        if r.status() == Some(AckStatus::Acked) {
            t.acked += 1;
        }
        match fate {
            Fate::Delivered => t.delivered += 1,
            Fate::Lost => t.lost += 1,
            Fate::InFlight => t.in_flight += 1,
        }
    }
    let mut lat: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
    for l in &tables.latency {
        lat.entry(&l.topic)
            .or_default()
            .push(l.deliver_time_us.saturating_sub(l.produce_time_us));
    }
    for (topic, samples) in lat {
        if let Some(t) = topics.get_mut(topic) {
            t.latency = LatencyStats::from_micros(samples);
        }
    }
    let pipeline = LatencyStats::from_micros(
        tables
            .e2e
            .iter()
            .map(|e| e.sink_time_us.saturating_sub(e.produce_time_us))
            .collect(),
    );

    let mut series: BTreeMap<(&str, u32), Vec<(f64, u64, u64)>> = BTreeMap::new();
    for p in &tables.ports {
        series
            .entry((&p.node, p.port))
            .or_default()
            .push((p.time_s, p.tx_bytes, p.rx_bytes));
    }
    let ports = series
        .into_iter()
        .map(|((node, port), s)| {
            let first = s.first().copied().unwrap_or_default();
            let last = s.last().copied().unwrap_or_default();
            let span = last.0 - first.0;
            let (mut peak_tx, mut peak_rx) = (0.0f64, 0.0f64);
            for w in s.windows(2) {
                let dt = w[1].0 - w[0].0;
                peak_tx = peak_tx.max(kbps(w[1].1 - w[0].1, dt));
                peak_rx = peak_rx.max(kbps(w[1].2 - w[0].2, dt));
            }
            PortSummary {
                node: node.to_string(),
                port,
                tx_bytes: last.1,
                rx_bytes: last.2,
                mean_tx_kbps: kbps(last.1 - first.1, span),
                mean_rx_kbps: kbps(last.2 - first.2, span),
                peak_tx_kbps: peak_tx,
                peak_rx_kbps: peak_rx,
            }
        })
        .collect();
    Summary {
        topics: topics.into_values().collect(),
        pipeline,
        ports,
        events: tables.events.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_percentiles() {
        let s: Vec<u64> = (1..=100).collect();
        assert_eq!(percentile(&s, 50.0), 50);
        assert_eq!(percentile(&s, 99.0), 99);
        assert_eq!(percentile(&s, 100.0), 100);
        assert_eq!(percentile(&[7], 99.0), 7);
        assert_eq!(percentile(&[], 50.0), 0);
    }

    #[test]
    fn latency_stats_in_millis() {
        let st = LatencyStats::from_micros(vec![3000, 1000, 2000]);
        assert_eq!(st.count, 3);
        assert_eq!(st.mean_ms, 2.0);
        assert_eq!(st.median_ms, 2.0);
        assert_eq!(st.max_ms, 3.0);
    }
}
