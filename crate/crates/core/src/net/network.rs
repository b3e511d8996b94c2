//! Store-and-forward frame delivery over the link graph.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::ExperimentSpec;
use crate::sim::SimTime;

use super::link::{LinkState, FRAME_OVERHEAD_BYTES};
use super::routing::{DisconnectedError, RoutingTable};

/// Traffic category, kept separately in the per-port counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FrameClass {
    Produce,
    ProduceAck,
    Replication,
    ReplicationAck,
    FetchRequest,
    FetchResponse,
    Control,
}

impl FrameClass {
    pub const COUNT: usize = 7;
    pub const ALL: [FrameClass; Self::COUNT] = [
        FrameClass::Produce,
        FrameClass::ProduceAck,
        FrameClass::Replication,
        FrameClass::ReplicationAck,
        FrameClass::FetchRequest,
        FrameClass::FetchResponse,
        FrameClass::Control,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FrameClass::Produce => "produce",
            FrameClass::ProduceAck => "produce_ack",
            FrameClass::Replication => "replication",
            FrameClass::ReplicationAck => "replication_ack",
            FrameClass::FetchRequest => "fetch_request",
            FrameClass::FetchResponse => "fetch_response",
            FrameClass::Control => "control",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Frame<P> {
    pub src: usize,
    pub dst: usize,
    /// Wire size, overhead included.
    pub size_bytes: u64,
    pub class: FrameClass,
    pub payload: P,
}

impl<P> Frame<P> {
    /// A frame carrying `payload_bytes` of payload.
    pub fn new(src: usize, dst: usize, payload_bytes: u64, class: FrameClass, payload: P) -> Self {
        Frame {
            src,
            dst,
            size_bytes: FRAME_OVERHEAD_BYTES + payload_bytes,
            class,
            payload,
        }
    }
}

/// A frame on its way across one link.
#[derive(Debug, Clone)]
pub struct InFlight<P> {
    pub frame: Frame<P>,
    link: usize,
    generation: u64,
    to: usize,
}

impl<P> InFlight<P> {
    /// Node the frame reaches at the end of the current hop.
    pub fn next_node(&self) -> usize {
        self.to
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DropReason {
    #[error("link down")]
    LinkDown,
    #[error("lost on link")]
    Loss,
    #[error("node down")]
    NodeDown,
    #[error("no route")]
    NoRoute,
}

#[derive(Debug)]
pub enum Hop<P> {
    /// Reached its destination node.
    Delivered(Frame<P>),
    /// Queued on the next link; arrives at the given time.
    Forward(SimTime, InFlight<P>),
    Dropped(DropReason, Frame<P>),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassBytes(pub [u64; FrameClass::COUNT]);

impl ClassBytes {
    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn get(&self, class: FrameClass) -> u64 {
        self.0[class.index()]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PortCounters {
    pub tx: ClassBytes,
    pub rx: ClassBytes,
}

/// One sample of a port's cumulative counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PortSample {
    pub time: SimTime,
    pub tx: ClassBytes,
    pub rx: ClassBytes,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("node `{node}` has no port {port}")]
pub struct UnknownPortError {
    pub node: String,
    pub port: u32,
}

#[derive(Debug, Clone)]
struct Port {
    node: usize,
    number: u32,
    counters: PortCounters,
    series: Vec<PortSample>,
}

pub struct Network {
    links: Vec<LinkState>,
    routes: RoutingTable,
    node_ids: Vec<String>,
    node_up: Vec<bool>,
    ports: Vec<Port>,
    /// `link_ports[link][end]`: index into `ports`; end 0 is the source side.
    link_ports: Vec<[usize; 2]>,
    port_index: BTreeMap<(usize, u32), usize>,
    delivered: u64,
    dropped: [u64; 4],
}

fn drop_slot(r: DropReason) -> usize {
    match r {
        DropReason::LinkDown => 0,
        DropReason::Loss => 1,
        DropReason::NodeDown => 2,
        DropReason::NoRoute => 3,
    }
}

/// Port numbers per link end: explicit `st`/`dt` first, then the smallest
/// free number from 1 in link order.
pub fn assign_ports(spec: &ExperimentSpec) -> Vec<[u32; 2]> {
    let mut used: BTreeMap<String, BTreeSet<u32>> = BTreeMap::new();
    for l in &spec.links {
        if let Some(p) = l.src_port {
            used.entry(l.source.clone()).or_default().insert(p);
        }
        if let Some(p) = l.dst_port {
            used.entry(l.target.clone()).or_default().insert(p);
        }
    }
    let mut next_free = |node: &str| {
        let set = used.entry(node.to_string()).or_default();
        let p = (1..).find(|p| !set.contains(p)).expect("unbounded");
        set.insert(p);
        p
    };
    spec.links
        .iter()
        .map(|l| {
            let s = l.src_port.unwrap_or_else(|| next_free(&l.source));
            let d = l.dst_port.unwrap_or_else(|| next_free(&l.target));
            [s, d]
        })
        .collect()
}

impl Network {
    pub fn new(spec: &ExperimentSpec) -> Result<Self, DisconnectedError> {
        let routes = RoutingTable::compute(spec)?;
        Ok(Self::with_routes(spec, routes))
    }

    /// Build without the connectivity check.
    pub fn with_routes(spec: &ExperimentSpec, routes: RoutingTable) -> Self {
        let index = |id: &str| spec.nodes.iter().position(|x| x.id == id).expect("validated endpoint");
        let numbers = assign_ports(spec);
        let mut ports = Vec::new();
        let mut link_ports = Vec::new();
        let mut port_index = BTreeMap::new();
        for (l, nums) in spec.links.iter().zip(&numbers) {
            let mut pair = [0; 2];
            for (end, (node, number)) in [(index(&l.source), nums[0]), (index(&l.target), nums[1])]
                .into_iter()
                .enumerate()
            {
                pair[end] = ports.len();
                port_index.insert((node, number), ports.len());
                ports.push(Port {
                    node,
                    number,
                    counters: PortCounters::default(),
                    series: Vec::new(),
                });
            }
            link_ports.push(pair);
        }
        Network {
            links: spec.links.iter().map(|l| LinkState::new(l.clone(), spec.seed)).collect(),
            routes,
            node_ids: spec.nodes.iter().map(|n| n.id.clone()).collect(),
            node_up: vec![true; spec.nodes.len()],
            ports,
            link_ports,
            port_index,
            delivered: 0,
            dropped: [0; 4],
        }
    }

    pub fn routes(&self) -> &RoutingTable {
        &self.routes
    }

    pub fn link(&self, index: usize) -> &LinkState {
        &self.links[index]
    }

    pub fn link_mut(&mut self, index: usize) -> &mut LinkState {
        &mut self.links[index]
    }

    pub fn link_index(&self, id: &str) -> Option<usize> {
        self.links.iter().position(|l| l.spec.id == id)
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.node_ids.iter().position(|n| n == id)
    }

    pub fn node_id(&self, index: usize) -> &str {
        &self.node_ids[index]
    }

    pub fn set_node_up(&mut self, node: usize, up: bool) {
        self.node_up[node] = up;
    }

    pub fn node_up(&self, node: usize) -> bool {
        self.node_up[node]
    }

    pub fn delivered_count(&self) -> u64 {
        self.delivered
    }

    pub fn dropped_count(&self, reason: DropReason) -> u64 {
        self.dropped[drop_slot(reason)]
    }

    fn drop<P>(&mut self, reason: DropReason, frame: Frame<P>) -> Hop<P> {
        self.dropped[drop_slot(reason)] += 1;
        Hop::Dropped(reason, frame)
    }

    /// Queue `frame` on the next link from node `at`.
    fn forward<P>(&mut self, now: SimTime, at: usize, frame: Frame<P>) -> Hop<P> {
        let Some(hop) = self.routes.next_hop(at, frame.dst) else {
            return self.drop(DropReason::NoRoute, frame);
        };
        let link = &mut self.links[hop.link];
        if !link.up {
            return self.drop(DropReason::LinkDown, frame);
        }
        let generation = link.generation;
        let (arrival, kept) = link.reserve(now, hop.dir, frame.size_bytes);
        let out_port = self.link_ports[hop.link][hop.dir];
        self.ports[out_port].counters.tx.0[frame.class.index()] += frame.size_bytes;
        if !kept {
            return self.drop(DropReason::Loss, frame);
        }
        Hop::Forward(
            arrival,
            InFlight {
                frame,
                link: hop.link,
                generation,
                to: hop.to,
            },
        )
    }

    /// Inject a frame at its source node.
    pub fn send<P>(&mut self, now: SimTime, frame: Frame<P>) -> Hop<P> {
        if !self.node_up[frame.src] {
            return self.drop(DropReason::NodeDown, frame);
        }
        if frame.src == frame.dst {
            self.delivered += 1;
            return Hop::Delivered(frame);
        }
        self.forward(now, frame.src, frame)
    }

    /// Handle arrival at the end of a hop.
    pub fn arrive<P>(&mut self, now: SimTime, inflight: InFlight<P>) -> Hop<P> {
        let InFlight {
            frame,
            link,
            generation,
            to,
        } = inflight;
        let state = &self.links[link];
        if !state.up || state.generation != generation {
            return self.drop(DropReason::LinkDown, frame);
        }
        if !self.node_up[to] {
            return self.drop(DropReason::NodeDown, frame);
        }
        let in_end = if self.ports[self.link_ports[link][0]].node == to { 0 } else { 1 };
        let in_port = self.link_ports[link][in_end];
        self.ports[in_port].counters.rx.0[frame.class.index()] += frame.size_bytes;
        if to == frame.dst {
            self.delivered += 1;
            return Hop::Delivered(frame);
        }
        self.forward(now, to, frame)
    }

    /// Record the current counters of every port.
    pub fn sample(&mut self, now: SimTime) {
        for p in &mut self.ports {
            p.series.push(PortSample {
                time: now,
                tx: p.counters.tx,
                rx: p.counters.rx,
            });
        }
    }

    /// `(node index, port number)` of every port, in link order.
    pub fn port_list(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.ports.iter().map(|p| (p.node, p.number))
    }

    /// Port number at `node`'s end of `link`.
    pub fn port_of(&self, link: usize, node: usize) -> Option<u32> {
        self.link_ports[link]
            .iter()
            .map(|&i| &self.ports[i])
            .find(|p| p.node == node)
            .map(|p| p.number)
    }

    fn port(&self, node: &str, port: u32) -> Result<&Port, UnknownPortError> {
        self.node_index(node)
            .and_then(|n| self.port_index.get(&(n, port)))
            .map(|&i| &self.ports[i])
            .ok_or_else(|| UnknownPortError {
                node: node.to_string(),
                port,
            })
    }

    pub fn counters(&self, node: &str, port: u32) -> Result<PortCounters, UnknownPortError> {
        self.port(node, port).map(|p| p.counters)
    }

    /// Sampled cumulative counters for one port.
    pub fn port_counters(&self, node: &str, port: u32) -> Result<&[PortSample], UnknownPortError> {
        self.port(node, port).map(|p| p.series.as_slice())
    }
}
