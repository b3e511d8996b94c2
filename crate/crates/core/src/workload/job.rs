//! Stream-processing job: fetch input topics, run an operator chain with
//! modeled service time, and hand results to a topic, a store or a sink.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use crate::model::JobConfig;
use crate::proto::{Lineage, LogEntry, Msg, Payload, TopicId};
use crate::sim::{ComponentId, SimDuration, SimTime};
use crate::world::{Actor, Ctx, Timer};

use super::core::ProducerCore;
use super::fetcher::Fetcher;
use super::operators::{Item, Operator};

enum Work {
    Input(LogEntry, usize),
    Close { stage: usize, end: SimTime },
}

/// Where a job's final outputs go.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JobOutput {
    Topic(TopicId),
    Store(ComponentId),
    Sink,
}

pub struct Job {
    me: ComponentId,
    cfg: JobConfig,
    cpu: f64,
    fetcher: Fetcher,
    core: ProducerCore,
    output: JobOutput,
    stages: Vec<Operator>,
    queue: VecDeque<Work>,
    in_service: Option<Vec<Item>>,
    outbox: Vec<Item>,
    closes: BTreeSet<(usize, SimTime)>,
    seen: HashSet<(ComponentId, u64)>,
    next_put: u64,
    puts: BTreeMap<u64, Lineage>,
}

/// Per-record cost of one stage: service time scaled by the node's CPU share.
pub fn stage_cost(service_us: u64, cpu: f64) -> SimDuration {
    SimDuration::from_micros((service_us as f64 / cpu).ceil() as u64)
}

impl Job {
    pub fn new(me: ComponentId, cfg: JobConfig, cpu: f64, fetcher: Fetcher, core: ProducerCore, output: JobOutput) -> Self {
        let stages = Self::fresh_stages(&cfg);
        Job {
            me,
            cfg,
            cpu,
            fetcher,
            core,
            output,
            stages,
            queue: VecDeque::new(),
            in_service: None,
            outbox: Vec::new(),
            closes: BTreeSet::new(),
            seen: HashSet::new(),
            next_put: 0,
            puts: BTreeMap::new(),
        }
    }

    fn fresh_stages(cfg: &JobConfig) -> Vec<Operator> {
        cfg.operators.iter().map(|k| Operator::new(*k, cfg.window)).collect()
    }

    pub fn fetcher(&self) -> &Fetcher {
        &self.fetcher
    }

    fn run_chain(&mut self, ctx: &mut Ctx, start: usize, mut items: Vec<Item>) -> (Vec<Item>, SimDuration) {
        let mut cost = SimDuration::ZERO;
        for s in start..self.stages.len() {
            if items.is_empty() {
                break;
            }
            let per = stage_cost(self.cfg.service_us(self.stages[s].kind()), self.cpu);
            cost += SimDuration::from_micros(per.as_micros() * items.len() as u64);
            let mut next = Vec::new();
            for it in items {
                match self.stages[s].apply(ctx.now, it) {
                    Ok(out) => next.extend(out),
                    Err(_) => ctx.metrics.malformed(self.me),
                }
            }
            if let Some(end) = self.stages[s].window_end(ctx.now) {
                if self.closes.insert((s, end)) {
                    ctx.timer_at(end, Timer::WindowClose { stage: s, end });
                }
            }
            items = next;
        }
        (items, cost)
    }

    fn start_next(&mut self, ctx: &mut Ctx) {
        let Some(work) = self.queue.pop_front() else {
            self.flush(ctx);
            return;
        };
        let (out, cost, records) = match work {
            Work::Input(entry, input) => {
                let item = Item {
                    payload: entry.record.payload.clone(),
                    lineage: entry.record.sources(),
                    input,
                };
                let (out, cost) = self.run_chain(ctx, 0, vec![item]);
                (out, cost, 1)
            }
            Work::Close { stage, end } => {
                self.closes.remove(&(stage, end));
                let items = self.stages[stage].close(end);
                let (out, cost) = self.run_chain(ctx, stage + 1, items);
                (out, cost, 0)
            }
        };
        ctx.metrics.busy(self.me, cost, records);
        self.in_service = Some(out);
        ctx.timer_in(cost, Timer::ServiceDone);
    }

    fn flush(&mut self, ctx: &mut Ctx) {
        if self.outbox.is_empty() {
            return;
        }
        let items = std::mem::take(&mut self.outbox);
        match self.output {
            JobOutput::Topic(topic) => {
                let records = items
                    .into_iter()
                    .map(|it| {
                        let size = it.payload.natural_size().max(1);
                        self.core.record(ctx.now, topic, size, it.payload, it.lineage)
                    })
                    .collect();
                self.core.submit(ctx, topic, records, false);
            }
            JobOutput::Store(store) => {
                for it in items {
                    let Payload::Pair { key, value } = &it.payload else {
                        ctx.metrics.malformed(self.me);
                        continue;
                    };
                    let id = self.next_put;
                    self.next_put += 1;
                    self.puts.insert(id, it.lineage.clone());
                    ctx.send(
                        store,
                        Msg::Put {
                            id,
                            key: key.clone(),
                            value: *value,
                        },
                    );
                }
            }
            JobOutput::Sink => {
                for it in items {
                    ctx.metrics.sink(ctx.now, &it.lineage);
                    if let Payload::Pair { key, value } = &it.payload {
                        ctx.metrics.sink_state.insert((self.me, key.to_string()), *value);
                    }
                }
            }
        }
    }

    fn enqueue(&mut self, ctx: &mut Ctx, work: Work) {
        self.queue.push_back(work);
        if self.in_service.is_none() {
            self.start_next(ctx);
        }
    }
}

impl Actor for Job {
    fn start(&mut self, ctx: &mut Ctx) {
        self.fetcher.start(ctx);
    }

    fn on_message(&mut self, ctx: &mut Ctx, _from: ComponentId, msg: Msg) {
        match msg {
            Msg::FetchResponse { topic, request, result } => {
                let input = self.fetcher.input_of(topic).unwrap_or(0);
                for e in self.fetcher.on_response(ctx, topic, request, result) {
                    if !self.seen.insert((e.record.producer, e.record.seq)) {
                        ctx.metrics.deliver(self.me, &e.record, ctx.now);
                        continue;
                    }
                    ctx.metrics.deliver(self.me, &e.record, ctx.now);
                    self.enqueue(ctx, Work::Input(e, input));
                }
            }
            Msg::ProduceResponse { batch, result, .. } => {
                self.core.on_response(ctx, batch, result);
            }
            Msg::MetadataUpdate { topics } => {
                self.fetcher.on_metadata(ctx, &topics);
                self.core.on_metadata(ctx, &topics);
            }
            Msg::PutAck { id } => {
                if let Some(lineage) = self.puts.remove(&id) {
                    ctx.metrics.sink(ctx.now, &lineage);
                }
            }
            _ => {}
        }
    }

    fn on_timer(&mut self, ctx: &mut Ctx, timer: Timer) {
        match timer {
            Timer::ServiceDone => {
                if let Some(out) = self.in_service.take() {
                    self.outbox.extend(out);
                }
                self.start_next(ctx);
            }
            Timer::WindowClose { stage, end } => self.enqueue(ctx, Work::Close { stage, end }),
            Timer::BatchRetry { batch, attempt } => {
                self.core.on_retry(ctx, batch, attempt);
            }
            other => self.fetcher.on_timer(ctx, &other),
        }
    }

    fn crash(&mut self, ctx: &mut Ctx) {
        self.stages = Self::fresh_stages(&self.cfg);
        self.queue.clear();
        self.in_service = None;
        self.outbox.clear();
        self.closes.clear();
        self.puts.clear();
        self.core.crash(ctx);
        self.fetcher.crash();
    }

    fn recover(&mut self, ctx: &mut Ctx) {
        self.fetcher.start(ctx);
    }
}
