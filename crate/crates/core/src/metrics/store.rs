use std::collections::{BTreeMap, HashMap};

use crate::proto::{Record, SourceTag, TopicId};
use crate::sim::{ComponentId, SimDuration, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AckStatus {
    Pending,
    Acked,
    Failed,
}

impl AckStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            AckStatus::Pending => "pending",
            AckStatus::Acked => "acked",
            AckStatus::Failed => "failed",
        }
    }

    pub fn parse(raw: &str) -> Option<Self> {
        Some(match raw {
            "pending" => AckStatus::Pending,
            "acked" => AckStatus::Acked,
            "failed" => AckStatus::Failed,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProducedRecord {
    pub topic: TopicId,
    pub producer: ComponentId,
    pub seq: u64,
    pub size_bytes: u32,
    pub produce_time: SimTime,
    pub status: AckStatus,
    pub truncated: bool,
    pub in_final_log: bool,
    pub duplicates: u64,
    /// Emitted by a producer stub rather than derived by a job.
    pub source: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventLine {
    pub time: SimTime,
    pub component: String,
    pub kind: String,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Delivery {
    pub record: usize,
    pub consumer: ComponentId,
    pub time: SimTime,
}

/// A producer observing a successful acknowledgment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AckEntry {
    pub time: SimTime,
    pub record: usize,
    pub offset: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Truncation {
    pub time: SimTime,
    pub broker: ComponentId,
    pub topic: TopicId,
    pub from_offset: u64,
    /// `(producer, seq, epoch)` of each discarded entry.
    pub records: Vec<(ComponentId, u64, u32)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LeaderTerm {
    pub time: SimTime,
    pub topic: TopicId,
    pub epoch: u32,
    pub broker: ComponentId,
}

/// Append-only observations of one run.
#[derive(Debug, Clone, Default)]
pub struct MetricsStore {
    pub records: Vec<ProducedRecord>,
    index: HashMap<(ComponentId, u64), usize>,
    first_delivery: HashMap<(usize, ComponentId), SimTime>,
    pub deliveries: Vec<Delivery>,
    pub events: Vec<EventLine>,
    pub acks: Vec<AckEntry>,
    pub truncations: Vec<Truncation>,
    /// Latest sink receipt per source record index.
    pub e2e: HashMap<usize, SimTime>,
    pub sink_state: BTreeMap<(ComponentId, String), f64>,
    pub leader_terms: Vec<LeaderTerm>,
    pub busy: BTreeMap<ComponentId, SimDuration>,
    pub processed: BTreeMap<ComponentId, u64>,
    pub malformed: BTreeMap<ComponentId, u64>,
    /// Topics each consuming component subscribes to.
    pub subscriptions: BTreeMap<ComponentId, Vec<TopicId>>,
}

impl MetricsStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn subscribe(&mut self, consumer: ComponentId, topics: Vec<TopicId>) {
        self.subscriptions.insert(consumer, topics);
    }

    pub fn log(&mut self, time: SimTime, component: String, kind: &str, detail: String) {
        debug_assert!(self.events.last().is_none_or(|e| e.time <= time));
        self.events.push(EventLine {
            time,
            component,
            kind: kind.to_string(),
            detail,
        });
    }

    pub fn record_index(&self, producer: ComponentId, seq: u64) -> Option<usize> {
        self.index.get(&(producer, seq)).copied()
    }

    pub fn produced(&mut self, r: &Record, source: bool) {
        let idx = self.records.len();
        self.records.push(ProducedRecord {
            topic: r.topic,
            producer: r.producer,
            seq: r.seq,
            size_bytes: r.size_bytes,
            produce_time: r.produce_time,
            status: AckStatus::Pending,
            truncated: false,
            in_final_log: false,
            duplicates: 0,
            source,
        });
        self.index.insert((r.producer, r.seq), idx);
    }

    pub fn acked(&mut self, time: SimTime, producer: ComponentId, seq: u64, offset: u64) {
        if let Some(i) = self.record_index(producer, seq) {
            if self.records[i].status == AckStatus::Pending {
                self.records[i].status = AckStatus::Acked;
                self.acks.push(AckEntry { time, record: i, offset });
            }
        }
    }

    pub fn failed(&mut self, producer: ComponentId, seq: u64) {
        if let Some(i) = self.record_index(producer, seq) {
            if self.records[i].status == AckStatus::Pending {
                self.records[i].status = AckStatus::Failed;
            }
        }
    }

    pub fn truncated(&mut self, t: Truncation) {
        for (p, s, _) in &t.records {
            if let Some(i) = self.record_index(*p, *s) {
                self.records[i].truncated = true;
            }
        }
        self.truncations.push(t);
    }

    /// Mark a delivery; returns false for a duplicate.
    pub fn deliver(&mut self, consumer: ComponentId, r: &Record, time: SimTime) -> bool {
        let Some(i) = self.record_index(r.producer, r.seq) else {
            return false;
        };
        if self.first_delivery.contains_key(&(i, consumer)) {
            self.records[i].duplicates += 1;
            return false;
        }
        self.first_delivery.insert((i, consumer), time);
        self.deliveries.push(Delivery {
            record: i,
            consumer,
            time,
        });
        true
    }

    pub fn is_delivered(&self, record: usize, consumer: ComponentId) -> bool {
        self.first_delivery.contains_key(&(record, consumer))
    }

    /// A final sink saw output derived from `sources` at `time`.
    pub fn sink(&mut self, time: SimTime, sources: &[SourceTag]) {
        for tag in sources {
            if let Some(i) = self.record_index(tag.producer, tag.seq) {
                let slot = self.e2e.entry(i).or_insert(time);
                *slot = (*slot).max(time);
            }
        }
    }

    pub fn leader_term(&mut self, time: SimTime, topic: TopicId, epoch: u32, broker: ComponentId) {
        self.leader_terms.push(LeaderTerm {
            time,
            topic,
            epoch,
            broker,
        });
    }

    pub fn busy(&mut self, job: ComponentId, d: SimDuration, records: u64) {
        *self.busy.entry(job).or_default() += d;
        *self.processed.entry(job).or_default() += records;
    }

    pub fn malformed(&mut self, job: ComponentId) {
        *self.malformed.entry(job).or_default() += 1;
    }

    pub fn set_in_final_log(&mut self, producer: ComponentId, seq: u64) {
        if let Some(i) = self.record_index(producer, seq) {
            self.records[i].in_final_log = true;
        }
    }
}
