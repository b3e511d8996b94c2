//! Per-topic long-poll fetch loops shared by consumers and jobs.

use std::sync::Arc;

use crate::proto::{FetchResult, LogEntry, Msg, TopicId, TopicMeta};
use crate::sim::{ComponentId, SimDuration};
use crate::world::{Ctx, Timer};

use super::core::MetadataView;

#[derive(Debug, Clone)]
struct FetchLoop {
    topic: TopicId,
    position: u64,
    request: u64,
    sent_to: Option<ComponentId>,
    /// Offset of the last record handed out, for monotonicity checks.
    last_seen: Option<u64>,
}

pub struct Fetcher {
    pub meta: MetadataView,
    loops: Vec<FetchLoop>,
    max_wait: SimDuration,
    retry: SimDuration,
    next_request: u64,
    pub offset_resets: u64,
    pub order_violations: u64,
}

impl Fetcher {
    pub fn new(meta: MetadataView, topics: &[TopicId], max_wait: SimDuration, retry: SimDuration) -> Self {
        Fetcher {
            meta,
            loops: topics
                .iter()
                .map(|t| FetchLoop {
                    topic: *t,
                    position: 0,
                    request: 0,
                    sent_to: None,
                    last_seen: None,
                })
                .collect(),
            max_wait,
            retry,
            next_request: 0,
            offset_resets: 0,
            order_violations: 0,
        }
    }

    pub fn topics(&self) -> Vec<TopicId> {
        self.loops.iter().map(|l| l.topic).collect()
    }

    pub fn position(&self, topic: TopicId) -> Option<u64> {
        self.loops.iter().find(|l| l.topic == topic).map(|l| l.position)
    }

    /// Input index of a topic.
    pub fn input_of(&self, topic: TopicId) -> Option<usize> {
        self.loops.iter().position(|l| l.topic == topic)
    }

    pub fn start(&mut self, ctx: &mut Ctx) {
        for i in 0..self.loops.len() {
            self.send(ctx, i);
        }
    }

    fn send(&mut self, ctx: &mut Ctx, i: usize) {
        self.next_request += 1;
        let request = self.next_request;
        let l = &mut self.loops[i];
        l.request = request;
        let topic = l.topic;
        let leader = self.meta.leader(topic);
        l.sent_to = leader;
        match leader {
            Some(to) => {
                ctx.send(
                    to,
                    Msg::FetchRequest {
                        topic,
                        offset: l.position,
                        request,
                        max_wait: self.max_wait,
                    },
                );
                ctx.timer_in(self.max_wait + self.retry, Timer::FetchTimeout { topic, request });
            }
            None => {
                self.meta.refresh(ctx);
                ctx.timer_in(self.retry, Timer::FetchRetry { topic, request });
            }
        }
    }

    /// Handle a response; returns newly fetched entries in offset order.
    pub fn on_response(&mut self, ctx: &mut Ctx, topic: TopicId, request: u64, result: FetchResult) -> Vec<LogEntry> {
        let Some(i) = self.loops.iter().position(|l| l.topic == topic && l.request == request) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        match result {
            FetchResult::Records { entries, .. } => {
                let l = &mut self.loops[i];
                for e in entries.iter() {
                    if e.offset < l.position {
                        continue;
                    }
                    if l.last_seen.is_some_and(|s| e.offset <= s) {
                        self.order_violations += 1;
                    }
                    l.last_seen = Some(e.offset);
                    l.position = e.offset + 1;
                    out.push(e.clone());
                }
                self.send(ctx, i);
            }
            FetchResult::NotLeader(hint) => {
                if self.meta.apply_hint(topic, hint) {
                    self.send(ctx, i);
                } else {
                    self.meta.refresh(ctx);
                    ctx.timer_in(self.retry, Timer::FetchRetry { topic, request });
                }
            }
            FetchResult::OffsetOutOfRange { hw } => {
                let l = &mut self.loops[i];
                let name = ctx.dir.topic(topic).name.clone();
                ctx.log(
                    "OffsetReset",
                    format!("topic={name} from={} to={hw}", l.position),
                );
                l.position = hw;
                l.last_seen = None;
                self.offset_resets += 1;
                self.send(ctx, i);
            }
        }
        out
    }

    pub fn on_timer(&mut self, ctx: &mut Ctx, timer: &Timer) {
        match *timer {
            Timer::FetchTimeout { topic, request } | Timer::FetchRetry { topic, request } => {
                let Some(i) = self.loops.iter().position(|l| l.topic == topic && l.request == request) else {
                    return;
                };
                if matches!(timer, Timer::FetchTimeout { .. }) {
                    self.meta.refresh(ctx);
                }
                self.send(ctx, i);
            }
            _ => {}
        }
    }

    pub fn on_metadata(&mut self, ctx: &mut Ctx, update: &Arc<[TopicMeta]>) {
        let changed = self.meta.apply(update);
        for i in 0..self.loops.len() {
            let l = &self.loops[i];
            if changed.contains(&l.topic) && l.sent_to != self.meta.leader(l.topic) {
                self.send(ctx, i);
            }
        }
    }

    /// Forget in-flight requests; positions are kept.
    pub fn crash(&mut self) {
        for l in &mut self.loops {
            l.request = 0;
            l.sent_to = None;
        }
    }
}
