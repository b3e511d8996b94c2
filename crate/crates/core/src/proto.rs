//! Records and the messages exchanged between components.

use std::sync::Arc;

use crate::net::FrameClass;
use crate::sim::{ComponentId, SimDuration, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TopicId(pub u32);

impl TopicId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Identity of a source record, carried through operators for lineage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SourceTag {
    pub producer: ComponentId,
    pub seq: u64,
    pub produce_time: SimTime,
}

pub type Lineage = Arc<[SourceTag]>;

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    /// Size-only content.
    Blob,
    Text { key: Arc<str>, text: Arc<str> },
    Pair { key: Arc<str>, value: f64 },
}

impl Payload {
    pub fn key(&self) -> Option<&str> {
        match self {
            Payload::Blob => None,
            Payload::Text { key, .. } | Payload::Pair { key, .. } => Some(key),
        }
    }

    /// Encoded size of a payload that carries content.
    pub fn natural_size(&self) -> u32 {
        match self {
            Payload::Blob => 0,
            Payload::Text { key, text } => (key.len() + 1 + text.len()) as u32,
            Payload::Pair { key, value } => (key.len() + 1 + format_value(*value).len()) as u32,
        }
    }
}

pub fn format_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// One message as produced. `offset` and `epoch` are assigned by the leader
/// that appends it.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub topic: TopicId,
    pub producer: ComponentId,
    pub seq: u64,
    pub size_bytes: u32,
    pub produce_time: SimTime,
    pub payload: Payload,
    /// Source records this one derives from; empty for source records.
    pub lineage: Lineage,
}

impl Record {
    pub fn tag(&self) -> SourceTag {
        SourceTag {
            producer: self.producer,
            seq: self.seq,
            produce_time: self.produce_time,
        }
    }

    /// Lineage to hand to derived records.
    pub fn sources(&self) -> Lineage {
        if self.lineage.is_empty() {
            Arc::from(vec![self.tag()])
        } else {
            self.lineage.clone()
        }
    }
}

/// A record as stored in a broker log.
#[derive(Debug, Clone, PartialEq)]
pub struct LogEntry {
    pub offset: u64,
    pub epoch: u32,
    pub record: Arc<Record>,
}

pub type Entries = Arc<[LogEntry]>;

fn entries_bytes(e: &[LogEntry]) -> u64 {
    e.iter().map(|x| u64::from(x.record.size_bytes)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TopicMeta {
    pub leader: Option<ComponentId>,
    pub epoch: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElectionReason {
    Initial,
    Failover,
    PreferredRestore,
    IsrShrink,
    IsrExpand,
    Snapshot,
}

impl ElectionReason {
    pub fn as_str(self) -> &'static str {
        match self {
            ElectionReason::Initial => "initial",
            ElectionReason::Failover => "failover",
            ElectionReason::PreferredRestore => "preferred",
            ElectionReason::IsrShrink => "isrShrink",
            ElectionReason::IsrExpand => "isrExpand",
            ElectionReason::Snapshot => "snapshot",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProduceResult {
    Ok(Vec<u64>),
    NotLeader(Option<(ComponentId, u32)>),
    UnknownTopic,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FetchResult {
    Records { entries: Entries, hw: u64 },
    NotLeader(Option<(ComponentId, u32)>),
    OffsetOutOfRange { hw: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum AppendResult {
    Ok { log_end: u64 },
    Fenced { epoch: u32 },
    Diverging { conflict_epoch: u32, conflict_first_offset: u64 },
    Gap { log_end: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Msg {
    ProduceRequest {
        batch: u64,
        topic: TopicId,
        records: Arc<[Record]>,
    },
    ProduceResponse {
        batch: u64,
        topic: TopicId,
        result: ProduceResult,
    },
    FetchRequest {
        topic: TopicId,
        offset: u64,
        request: u64,
        max_wait: SimDuration,
    },
    FetchResponse {
        topic: TopicId,
        request: u64,
        result: FetchResult,
    },
    Append {
        topic: TopicId,
        epoch: u32,
        from_offset: u64,
        prev_epoch: u32,
        entries: Entries,
        leader_hw: u64,
        leader_log_end: u64,
    },
    AppendResponse {
        topic: TopicId,
        epoch: u32,
        result: AppendResult,
    },
    Heartbeat {
        restarted: bool,
    },
    HeartbeatAck,
    LeaderAndIsr {
        topic: TopicId,
        leader: Option<ComponentId>,
        epoch: u32,
        isr: Arc<[ComponentId]>,
        version: u64,
        reason: ElectionReason,
    },
    MetadataRequest,
    MetadataUpdate {
        topics: Arc<[TopicMeta]>,
    },
    IsrExpand {
        topic: TopicId,
        epoch: u32,
        follower: ComponentId,
    },
    TransferLeadership {
        topic: TopicId,
        epoch: u32,
        target: ComponentId,
    },
    TransferReady {
        topic: TopicId,
        epoch: u32,
    },
    Put {
        id: u64,
        key: Arc<str>,
        value: f64,
    },
    PutAck {
        id: u64,
    },
    Get {
        id: u64,
        key: Arc<str>,
    },
    GetResponse {
        id: u64,
        value: Option<f64>,
    },
}

impl Msg {
    pub fn class(&self) -> FrameClass {
        match self {
            Msg::ProduceRequest { .. } => FrameClass::Produce,
            Msg::ProduceResponse { .. } => FrameClass::ProduceAck,
            Msg::FetchRequest { .. } => FrameClass::FetchRequest,
            Msg::FetchResponse { .. } => FrameClass::FetchResponse,
            Msg::Append { .. } => FrameClass::Replication,
            Msg::AppendResponse { .. } => FrameClass::ReplicationAck,
            Msg::Put { .. } => FrameClass::Produce,
            Msg::PutAck { .. } => FrameClass::ProduceAck,
            Msg::Get { .. } => FrameClass::FetchRequest,
            Msg::GetResponse { .. } => FrameClass::FetchResponse,
            _ => FrameClass::Control,
        }
    }

    /// Payload bytes carried; control messages are header-only.
    pub fn payload_bytes(&self) -> u64 {
        match self {
            Msg::ProduceRequest { records, .. } => records.iter().map(|r| u64::from(r.size_bytes)).sum(),
            Msg::FetchResponse {
                result: FetchResult::Records { entries, .. },
                ..
            } => entries_bytes(entries),
            Msg::Append { entries, .. } => entries_bytes(entries),
            Msg::Put { key, value, .. } => (key.len() + format_value(*value).len()) as u64,
            Msg::GetResponse { value: Some(v), .. } => format_value(*v).len() as u64,
            _ => 0,
        }
    }
}
