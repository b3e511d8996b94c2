use std::path::Path;

use thiserror::Error;

use crate::broker::{Broker, Controller};
use crate::faults::{FaultTarget, FaultTimeline};
use crate::metrics::MetricsStore;
use crate::model::{ExperimentSpec, ProducerMode, DEFAULT_BUFFER_BYTES};
use crate::net::{DisconnectedError, Frame, Hop, InFlight, Network};
use crate::proto::{Msg, TopicId, TopicMeta};
use crate::sim::{ComponentId, EventQueue, HandlerError, RandomSource, SimDuration, SimError, SimTime};
use crate::workload::{
    load_directory, load_lines, ConsumerStub, Fetcher, Job, JobOutput, KvStore, MetadataView, ProducerCore,
    ProducerStub, SourceItem,
};

use super::ctx::{Action, Actor, Ctx, Timer};
use super::directory::{ComponentInfo, Directory, Role, TopicInfo};

/// Event target used for network hops, faults and sampling.
pub const NETWORK: ComponentId = ComponentId(u32::MAX);

#[derive(Debug, Clone)]
pub struct SimOptions {
    pub seed: Option<u64>,
    pub duration: Option<SimTime>,
    pub sample_interval: SimDuration,
    pub trace: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            seed: None,
            duration: None,
            sample_interval: SimDuration::from_millis(500),
            trace: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Disconnected(#[from] DisconnectedError),
    #[error("cannot read producer data {path}: {source}")]
    Data {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("sample interval must be positive")]
    SampleInterval,
}

pub enum Component {
    Broker(Broker),
    Controller(Controller),
    Producer(ProducerStub),
    Consumer(ConsumerStub),
    Job(Job),
    Store(KvStore),
}

impl Component {
    fn actor(&mut self) -> &mut dyn Actor {
        match self {
            Component::Broker(a) => a,
            Component::Controller(a) => a,
            Component::Producer(a) => a,
            Component::Consumer(a) => a,
            Component::Job(a) => a,
            Component::Store(a) => a,
        }
    }
}

struct Envelope {
    from: ComponentId,
    to: ComponentId,
    msg: Msg,
}

enum Event {
    Hop(InFlight<Envelope>),
    Deliver(Envelope),
    Timer { incarnation: u64, timer: Timer },
    Fault(usize),
    Sample,
}

struct State {
    dir: Directory,
    net: Network,
    metrics: MetricsStore,
    components: Vec<Component>,
    rngs: Vec<RandomSource>,
    incarnation: Vec<u64>,
    alive: Vec<bool>,
    faults: FaultTimeline,
    sample_interval: SimDuration,
    duration: SimTime,
    actions: Vec<Action>,
    last_sample: Option<SimTime>,
}

/// A fully wired experiment, before or after running.
pub struct World {
    pub spec: ExperimentSpec,
    queue: EventQueue<Event>,
    st: State,
    finished: bool,
}

impl State {
    fn invoke(&mut self, q: &mut EventQueue<Event>, id: ComponentId, f: impl FnOnce(&mut dyn Actor, &mut Ctx)) {
        let i = id.0 as usize;
        let mut actions = std::mem::take(&mut self.actions);
        {
            let mut ctx = Ctx {
                now: q.now(),
                me: id,
                dir: &self.dir,
                metrics: &mut self.metrics,
                rng: &mut self.rngs[i],
                actions: &mut actions,
            };
            f(self.components[i].actor(), &mut ctx);
        }
        for a in actions.drain(..) {
            self.act(q, id, a);
        }
        self.actions = actions;
    }

    fn act(&mut self, q: &mut EventQueue<Event>, me: ComponentId, action: Action) {
        match action {
            Action::Timer { at, timer } => {
                let incarnation = self.incarnation[me.0 as usize];
                q.schedule(at, me, Event::Timer { incarnation, timer })
                    .expect("timers are clamped to now");
            }
            Action::Send { to, msg } => {
                let src = self.dir.node_of(me);
                let dst = self.dir.node_of(to);
                let frame = Frame::new(src, dst, msg.payload_bytes(), msg.class(), Envelope { from: me, to, msg });
                let hop = self.net.send(q.now(), frame);
                self.route(q, hop);
            }
        }
    }

    fn route(&mut self, q: &mut EventQueue<Event>, hop: Hop<Envelope>) {
        match hop {
            Hop::Delivered(frame) => {
                let to = frame.payload.to;
                q.schedule_in(SimDuration::ZERO, to, Event::Deliver(frame.payload));
            }
            Hop::Forward(at, inflight) => {
                q.schedule(at, NETWORK, Event::Hop(inflight)).expect("arrival after now");
            }
            Hop::Dropped(..) => {}
        }
    }

    fn handle(&mut self, q: &mut EventQueue<Event>, target: ComponentId, ev: Event) -> Result<(), HandlerError> {
        match ev {
            Event::Hop(inflight) => {
                let hop = self.net.arrive(q.now(), inflight);
                match hop {
                    Hop::Delivered(frame) => self.deliver(q, frame.payload),
                    other => self.route(q, other),
                }
            }
            Event::Deliver(env) => self.deliver(q, env),
            Event::Timer { incarnation, timer } => {
                let i = target.0 as usize;
                if self.alive[i] && self.incarnation[i] == incarnation {
                    self.invoke(q, target, |a, ctx| a.on_timer(ctx, timer));
                }
            }
            Event::Fault(i) => {
                let mut faults = std::mem::replace(&mut self.faults, FaultTimeline::new(Vec::new()));
                let result = faults.apply(i, &mut Applier { st: self, q });
                self.faults = faults;
                if let Some(detail) = result? {
                    self.metrics.log(q.now(), "faults".to_string(), "FaultApplied", detail);
                }
            }
            Event::Sample => {
                self.net.sample(q.now());
                self.last_sample = Some(q.now());
                let next = q.now() + self.sample_interval;
                if next <= self.duration {
                    q.schedule(next, NETWORK, Event::Sample).expect("future");
                }
            }
        }
        Ok(())
    }

    fn deliver(&mut self, q: &mut EventQueue<Event>, env: Envelope) {
        if !self.alive[env.to.0 as usize] {
            return;
        }
        let Envelope { from, to, msg } = env;
        self.invoke(q, to, |a, ctx| a.on_message(ctx, from, msg));
    }

    fn on_node(&self, node: usize) -> Vec<ComponentId> {
        (0..self.components.len())
            .filter(|i| self.dir.components[*i].node == node)
            .map(|i| ComponentId(i as u32))
            .collect()
    }
}

struct Applier<'a> {
    st: &'a mut State,
    q: &'a mut EventQueue<Event>,
}

impl FaultTarget for Applier<'_> {
    fn link_down(&mut self, link: &str) -> bool {
        let Some(i) = self.st.net.link_index(link) else { return false };
        self.st.net.link_mut(i).set_down();
        true
    }

    fn link_up(&mut self, link: &str) -> bool {
        let Some(i) = self.st.net.link_index(link) else { return false };
        self.st.net.link_mut(i).set_up();
        true
    }

    fn set_loss(&mut self, link: &str, loss_pct: f64) -> bool {
        let Some(i) = self.st.net.link_index(link) else { return false };
        self.st.net.link_mut(i).set_loss(loss_pct);
        true
    }

    fn node_crash(&mut self, node: &str) -> bool {
        let Some(n) = self.st.net.node_index(node) else { return false };
        self.st.net.set_node_up(n, false);
        for id in self.st.on_node(n) {
            let i = id.0 as usize;
            if !self.st.alive[i] {
                continue;
            }
            let mut discarded = Vec::new();
            {
                let mut ctx = Ctx {
                    now: self.q.now(),
                    me: id,
                    dir: &self.st.dir,
                    metrics: &mut self.st.metrics,
                    rng: &mut self.st.rngs[i],
                    actions: &mut discarded,
                };
                self.st.components[i].actor().crash(&mut ctx);
            }
            self.st.alive[i] = false;
            self.st.incarnation[i] += 1;
        }
        true
    }

    fn node_recover(&mut self, node: &str) -> bool {
        let Some(n) = self.st.net.node_index(node) else { return false };
        self.st.net.set_node_up(n, true);
        for id in self.st.on_node(n) {
            let i = id.0 as usize;
            if self.st.alive[i] {
                continue;
            }
            self.st.alive[i] = true;
            self.st.invoke(self.q, id, |a, ctx| a.recover(ctx));
        }
        true
    }
}

fn load_items(spec: &ExperimentSpec, mode: ProducerMode, path: Option<&str>) -> Result<Vec<SourceItem>, RunError> {
    let Some(path) = path else {
        return Ok(Vec::new());
    };
    let full = spec.config_dir.join(path);
    let read = |p: &Path| match mode {
        ProducerMode::LineOfFile => load_lines(p),
        ProducerMode::FileOfDirectory => load_directory(p),
        ProducerMode::SyntheticRate => Ok(Vec::new()),
    };
    read(&full).map_err(|source| RunError::Data {
        path: full.display().to_string(),
        source,
    })
}

impl World {
    /// Wire every component of a validated spec onto the network.
    pub fn new(mut spec: ExperimentSpec, opts: &SimOptions) -> Result<Self, RunError> {
        if let Some(seed) = opts.seed {
            spec.seed = seed;
        }
        if let Some(d) = opts.duration {
            spec.duration = d;
        }
        if opts.sample_interval == SimDuration::ZERO {
            return Err(RunError::SampleInterval);
        }
        let net = Network::new(&spec)?;

        let controller_node = spec.broker_ids().first().map(|s| s.to_string());
        let mut infos = Vec::new();
        for (n, node) in spec.nodes.iter().enumerate() {
            let mut add = |role: Role, label: String| {
                infos.push(ComponentInfo {
                    name: format!("{}/{}", node.id, role.as_str()),
                    label,
                    node: n,
                    role,
                });
            };
            if node.broker.is_some() {
                add(Role::Broker, node.id.clone());
                if controller_node.as_deref() == Some(node.id.as_str()) {
                    add(Role::Controller, node.id.clone());
                }
            }
            if node.store.is_some() {
                add(Role::Store, node.id.clone());
            }
            if node.stream_proc.is_some() {
                add(Role::Job, format!("{}/job", node.id));
            }
            if node.producer.is_some() {
                add(Role::Producer, node.id.clone());
            }
            if node.consumer.is_some() {
                add(Role::Consumer, node.id.clone());
            }
        }
        let find = |infos: &[ComponentInfo], node: &str, role: Role| {
            infos
                .iter()
                .position(|c| c.role == role && spec.nodes[c.node].id == node)
                .map(|i| ComponentId(i as u32))
        };
        let topics: Vec<TopicInfo> = spec
            .topics
            .iter()
            .map(|t| TopicInfo {
                name: t.name.clone(),
                consistency: t.consistency,
                preferred: find(&infos, &t.preferred_leader, Role::Broker).expect("validated leader"),
                replicas: spec
                    .replicas_of(t)
                    .iter()
                    .map(|b| find(&infos, b, Role::Broker).expect("validated replica"))
                    .collect(),
            })
            .collect();
        let controller = (0..infos.len())
            .find(|i| infos[*i].role == Role::Controller)
            .map(|i| ComponentId(i as u32));
        let clients: Vec<ComponentId> = (0..infos.len())
            .filter(|i| matches!(infos[*i].role, Role::Producer | Role::Consumer | Role::Job))
            .map(|i| ComponentId(i as u32))
            .collect();
        let dir = Directory {
            components: infos,
            topics,
            controller,
            clients: clients.clone(),
        };
        let topic_ids = |names: &[String]| -> Vec<TopicId> {
            names.iter().filter_map(|n| dir.topic_id(n)).collect()
        };
        let initial: Vec<TopicMeta> = dir
            .topics
            .iter()
            .map(|t| TopicMeta {
                leader: Some(t.preferred),
                epoch: 1,
            })
            .collect();

        let mut metrics = MetricsStore::new();
        let mut components = Vec::new();
        for (i, info) in dir.components.iter().enumerate() {
            let me = ComponentId(i as u32);
            let node = &spec.nodes[info.node];
            let c = match info.role {
                Role::Broker => {
                    let cfg = node.broker.as_ref().expect("role").config.clone();
                    let mut b = Broker::new(me, cfg, controller);
                    for (t, ti) in dir.topics.iter().enumerate() {
                        if ti.replicas.contains(&me) {
                            b.add_topic(TopicId(t as u32), ti.consistency, ti.replicas.clone(), ti.preferred);
                        }
                    }
                    Component::Broker(b)
                }
                Role::Controller => {
                    let cfg = node.broker.as_ref().expect("role").config.clone();
                    let brokers: Vec<ComponentId> = (0..dir.components.len())
                        .filter(|j| dir.components[*j].role == Role::Broker)
                        .map(|j| ComponentId(j as u32))
                        .collect();
                    let mut c = Controller::new(cfg, &brokers, clients.clone());
                    for ti in &dir.topics {
                        c.add_topic(ti.replicas.clone(), ti.preferred);
                    }
                    Component::Controller(c)
                }
                Role::Producer => {
                    let cfg = node.producer.as_ref().expect("role").config.clone();
                    let names: Vec<String> = cfg.topics.iter().map(|w| w.topic.clone()).collect();
                    let items = load_items(&spec, cfg.mode, cfg.path.as_deref())?;
                    let meta = MetadataView::new(initial.clone(), controller, cfg.retry_interval);
                    let core = ProducerCore::new(me, meta, cfg.retry_interval, cfg.produce_timeout, cfg.buffer_bytes);
                    Component::Producer(ProducerStub::new(core, cfg, topic_ids(&names), items))
                }
                Role::Consumer => {
                    let cfg = &node.consumer.as_ref().expect("role").config;
                    let ts = topic_ids(&cfg.topics);
                    metrics.subscribe(me, ts.clone());
                    let meta = MetadataView::new(initial.clone(), controller, cfg.retry_interval);
                    let fetcher = Fetcher::new(meta, &ts, cfg.fetch_max_wait, cfg.retry_interval);
                    Component::Consumer(ConsumerStub::new(me, fetcher))
                }
                Role::Job => {
                    let cfg = node.stream_proc.as_ref().expect("role").config.clone();
                    let ts = topic_ids(&cfg.in_topics);
                    metrics.subscribe(me, ts.clone());
                    let meta = MetadataView::new(initial.clone(), controller, cfg.retry_interval);
                    let fetcher = Fetcher::new(meta.clone(), &ts, cfg.fetch_max_wait, cfg.retry_interval);
                    let core = ProducerCore::new(me, meta, cfg.retry_interval, cfg.produce_timeout, DEFAULT_BUFFER_BYTES);
                    let output = if let Some(t) = cfg.out_topic.as_deref().and_then(|n| dir.topic_id(n)) {
                        JobOutput::Topic(t)
                    } else if let Some(s) = cfg.store.as_deref().and_then(|n| find(&dir.components, n, Role::Store)) {
                        JobOutput::Store(s)
                    } else {
                        JobOutput::Sink
                    };
                    Component::Job(Job::new(me, cfg, node.cpu_percentage, fetcher, core, output))
                }
                Role::Store => {
                    let cfg = &node.store.as_ref().expect("role").config;
                    Component::Store(KvStore::new(cfg, node.cpu_percentage))
                }
            };
            components.push(c);
        }

        let rngs = dir
            .components
            .iter()
            .map(|c| RandomSource::new(spec.seed, &c.name))
            .collect();
        let n = components.len();
        let mut queue = EventQueue::new();
        if opts.trace {
            queue.enable_trace();
        }
        let faults = FaultTimeline::from_spec(&spec);
        for (i, at) in faults.times() {
            if at <= spec.duration {
                queue.schedule(at, NETWORK, Event::Fault(i)).expect("future");
            }
        }
        queue.schedule(SimTime::ZERO, NETWORK, Event::Sample).expect("future");
        let st = State {
            dir,
            net,
            metrics,
            components,
            rngs,
            incarnation: vec![0; n],
            alive: vec![true; n],
            faults,
            sample_interval: opts.sample_interval,
            duration: spec.duration,
            actions: Vec::new(),
            last_sample: None,
        };
        Ok(World {
            spec,
            queue,
            st,
            finished: false,
        })
    }

    /// Run to the configured duration. Calling it again is a no-op.
    pub fn run(&mut self) -> Result<(), RunError> {
        if self.finished {
            return Ok(());
        }
        self.finished = true;
        let q = &mut self.queue;
        let st = &mut self.st;
        for i in 0..st.components.len() {
            st.invoke(q, ComponentId(i as u32), |a, ctx| a.start(ctx));
        }
        q.run_until(st.duration, |q, ev| st.handle(q, ev.target, ev.payload))?;
        let now = q.now();
        if st.last_sample != Some(now) {
            st.net.sample(now);
            st.last_sample = Some(now);
        }
        self.mark_final_logs();
        Ok(())
    }

    fn mark_final_logs(&mut self) {
        let st = &mut self.st;
        for (t, ti) in st.dir.topics.iter().enumerate() {
            let topic = TopicId(t as u32);
            let leader = st.components.iter().find_map(|c| match c {
                Component::Controller(c) => c.assignment(topic).leader,
                _ => None,
            });
            let holders: Vec<ComponentId> = match leader {
                Some(l) => vec![l],
                None => ti.replicas.clone(),
            };
            for h in holders {
                if let Component::Broker(b) = &st.components[h.0 as usize] {
                    if let Some(log) = b.log(topic) {
                        for e in log.entries() {
                            st.metrics.set_in_final_log(e.record.producer, e.record.seq);
                        }
                    }
                }
            }
        }
    }

    pub fn now(&self) -> SimTime {
        self.queue.now()
    }

    pub fn metrics(&self) -> &MetricsStore {
        &self.st.metrics
    }

    pub fn network(&self) -> &Network {
        &self.st.net
    }

    pub fn directory(&self) -> &Directory {
        &self.st.dir
    }

    pub fn components(&self) -> &[Component] {
        &self.st.components
    }

    pub fn component(&self, name: &str) -> Option<&Component> {
        self.st.dir.find(name).map(|id| &self.st.components[id.0 as usize])
    }

    pub fn broker(&self, node: &str) -> Option<&Broker> {
        match self.component(&format!("{node}/broker"))? {
            Component::Broker(b) => Some(b),
            _ => None,
        }
    }

    pub fn controller(&self) -> Option<&Controller> {
        self.st.components.iter().find_map(|c| match c {
            Component::Controller(c) => Some(c),
            _ => None,
        })
    }

    pub fn producer(&self, node: &str) -> Option<&ProducerStub> {
        match self.component(&format!("{node}/producer"))? {
            Component::Producer(p) => Some(p),
            _ => None,
        }
    }

    pub fn consumer(&self, node: &str) -> Option<&ConsumerStub> {
        match self.component(&format!("{node}/consumer"))? {
            Component::Consumer(c) => Some(c),
            _ => None,
        }
    }

    pub fn job(&self, node: &str) -> Option<&Job> {
        match self.component(&format!("{node}/job"))? {
            Component::Job(j) => Some(j),
            _ => None,
        }
    }

    pub fn store(&self, node: &str) -> Option<&KvStore> {
        match self.component(&format!("{node}/store"))? {
            Component::Store(s) => Some(s),
            _ => None,
        }
    }

    pub fn faults_applied(&self) -> bool {
        self.st.faults.all_applied()
    }

    pub fn events_processed(&self) -> u64 {
        self.queue.processed()
    }

    /// Digest of the dequeued event sequence; requires `SimOptions::trace`.
    pub fn trace_digest(&self) -> Option<String> {
        self.queue.trace_digest()
    }
}

/// Build and run an experiment.
pub fn run(spec: ExperimentSpec, opts: &SimOptions) -> Result<World, RunError> {
    let mut world = World::new(spec, opts)?;
    world.run()?;
    Ok(world)
}
