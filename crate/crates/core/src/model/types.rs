use std::path::PathBuf;

use crate::sim::SimTime;

use super::components::{BrokerConfig, ConsumerConfig, JobConfig, ProducerConfig, StoreConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Host,
    Switch,
}

/// An attached component: optional `*Type` label plus its config file.
#[derive(Debug, Clone, PartialEq)]
pub struct Component<C> {
    pub type_name: Option<String>,
    pub cfg_ref: String,
    pub config: C,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub id: String,
    pub kind: NodeKind,
    pub producer: Option<Component<ProducerConfig>>,
    pub consumer: Option<Component<ConsumerConfig>>,
    pub stream_proc: Option<Component<JobConfig>>,
    pub store: Option<Component<StoreConfig>>,
    pub broker: Option<Component<BrokerConfig>>,
    /// Service-rate scale for everything hosted here, in `(0, 1]`.
    pub cpu_percentage: f64,
}

impl NodeSpec {
    pub fn new(id: impl Into<String>, kind: NodeKind) -> Self {
        NodeSpec {
            id: id.into(),
            kind,
            producer: None,
            consumer: None,
            stream_proc: None,
            store: None,
            broker: None,
            cpu_percentage: 1.0,
        }
    }

    pub fn has_components(&self) -> bool {
        self.producer.is_some()
            || self.consumer.is_some()
            || self.stream_proc.is_some()
            || self.store.is_some()
            || self.broker.is_some()
    }

    pub fn is_broker(&self) -> bool {
        self.broker.is_some()
    }
}

pub const DEFAULT_BW_MBPS: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub id: String,
    pub source: String,
    pub target: String,
    pub lat_ms: f64,
    pub bw_mbps: f64,
    pub loss_pct: f64,
    pub src_port: Option<u32>,
    pub dst_port: Option<u32>,
}

impl LinkSpec {
    pub fn new(id: impl Into<String>, source: impl Into<String>, target: impl Into<String>) -> Self {
        LinkSpec {
            id: id.into(),
            source: source.into(),
            target: target.into(),
            lat_ms: 0.0,
            bw_mbps: DEFAULT_BW_MBPS,
            loss_pct: 0.0,
            src_port: None,
            dst_port: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConsistencyMode {
    /// Leader-local acknowledgment; stale-epoch records are truncated on merge.
    Zk,
    /// In-sync quorum acknowledgment; acked records survive leader changes.
    Raft,
}

impl ConsistencyMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ConsistencyMode::Zk => "zk",
            ConsistencyMode::Raft => "raft",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicSpec {
    pub name: String,
    pub preferred_leader: String,
    pub replication_factor: u32,
    pub consistency: ConsistencyMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultKind {
    LinkDown,
    LinkUp,
    NodeCrash,
    NodeRecover,
    SetLoss,
}

impl FaultKind {
    pub fn parse(raw: &str) -> Option<Self> {
        Some(match raw {
            "linkDown" => FaultKind::LinkDown,
            "linkUp" => FaultKind::LinkUp,
            "nodeCrash" => FaultKind::NodeCrash,
            "nodeRecover" => FaultKind::NodeRecover,
            "setLoss" => FaultKind::SetLoss,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FaultKind::LinkDown => "linkDown",
            FaultKind::LinkUp => "linkUp",
            FaultKind::NodeCrash => "nodeCrash",
            FaultKind::NodeRecover => "nodeRecover",
            FaultKind::SetLoss => "setLoss",
        }
    }

    pub fn targets_link(self) -> bool {
        matches!(self, FaultKind::LinkDown | FaultKind::LinkUp | FaultKind::SetLoss)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaultSpec {
    pub kind: FaultKind,
    pub target: String,
    pub at: SimTime,
    pub param: Option<f64>,
}

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_DURATION: SimTime = SimTime::from_secs(600);

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub nodes: Vec<NodeSpec>,
    pub links: Vec<LinkSpec>,
    pub topics: Vec<TopicSpec>,
    pub faults: Vec<FaultSpec>,
    pub seed: u64,
    pub duration: SimTime,
    pub topic_cfg: Option<String>,
    pub fault_cfg: Option<String>,
    /// Directory that config references resolve against.
    pub config_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn node(&self, id: &str) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn node_mut(&mut self, id: &str) -> Option<&mut NodeSpec> {
        self.nodes.iter_mut().find(|n| n.id == id)
    }

    pub fn link(&self, id: &str) -> Option<&LinkSpec> {
        self.links.iter().find(|l| l.id == id)
    }

    pub fn link_mut(&mut self, id: &str) -> Option<&mut LinkSpec> {
        self.links.iter_mut().find(|l| l.id == id)
    }

    pub fn topic(&self, name: &str) -> Option<&TopicSpec> {
        self.topics.iter().find(|t| t.name == name)
    }

    /// Broker-hosting node ids, sorted.
    pub fn broker_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self
            .nodes
            .iter()
            .filter(|n| n.is_broker())
            .map(|n| n.id.as_str())
            .collect();
        ids.sort_unstable();
        ids
    }

    /// Replica set of a topic: the preferred leader followed by the next
    /// `replicationFactor - 1` brokers in sorted-id order, wrapping around.
    pub fn replicas_of(&self, topic: &TopicSpec) -> Vec<String> {
        let brokers = self.broker_ids();
        let Some(start) = brokers.iter().position(|b| *b == topic.preferred_leader) else {
            return Vec::new();
        };
        (0..topic.replication_factor as usize)
            .map(|i| brokers[(start + i) % brokers.len()].to_string())
            .collect()
    }
}
