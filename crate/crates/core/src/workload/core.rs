//! Client-side produce path shared by producer stubs and jobs: batching,
//! retries, timeouts and the unacked-bytes buffer.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::proto::{Lineage, Msg, Payload, ProduceResult, Record, TopicId, TopicMeta};
use crate::sim::{ComponentId, SimDuration, SimTime};
use crate::world::{Ctx, Timer};

#[derive(Debug, Clone)]
struct Batch {
    topic: TopicId,
    records: Arc<[Record]>,
    bytes: u64,
    deadline: SimTime,
    attempt: u64,
    sent_to: Option<ComponentId>,
}

/// Metadata view shared by every client kind.
#[derive(Debug, Clone)]
pub struct MetadataView {
    pub topics: Vec<TopicMeta>,
    controller: Option<ComponentId>,
    retry: SimDuration,
    last_request: Option<SimTime>,
}

impl MetadataView {
    pub fn new(topics: Vec<TopicMeta>, controller: Option<ComponentId>, retry: SimDuration) -> Self {
        MetadataView {
            topics,
            controller,
            retry,
            last_request: None,
        }
    }

    pub fn leader(&self, t: TopicId) -> Option<ComponentId> {
        self.topics[t.index()].leader
    }

    /// Ask the controller for fresh metadata, at most once per retry interval.
    pub fn refresh(&mut self, ctx: &mut Ctx) {
        let Some(c) = self.controller else { return };
        if self
            .last_request
            .is_some_and(|t| ctx.now.saturating_sub(t) < self.retry)
        {
            return;
        }
        self.last_request = Some(ctx.now);
        ctx.send(c, Msg::MetadataRequest);
    }

    /// Apply a hint; returns true if it moved the leader forward.
    pub fn apply_hint(&mut self, t: TopicId, hint: Option<(ComponentId, u32)>) -> bool {
        match hint {
            Some((leader, epoch)) if epoch > self.topics[t.index()].epoch => {
                self.topics[t.index()] = TopicMeta {
                    leader: Some(leader),
                    epoch,
                };
                true
            }
            _ => false,
        }
    }

    /// Merge an update; returns the topics whose leader changed.
    pub fn apply(&mut self, update: &[TopicMeta]) -> Vec<TopicId> {
        let mut changed = Vec::new();
        for (i, m) in update.iter().enumerate() {
            let cur = &mut self.topics[i];
            if m.epoch >= cur.epoch && (m.epoch != cur.epoch || m.leader != cur.leader) {
                if m.leader != cur.leader {
                    changed.push(TopicId(i as u32));
                }
                *cur = *m;
            }
        }
        changed
    }
}

pub struct ProducerCore {
    pub me: ComponentId,
    pub meta: MetadataView,
    retry: SimDuration,
    timeout: SimDuration,
    buffer_bytes: u64,
    unacked_bytes: u64,
    unacked_records: usize,
    next_seq: u64,
    next_batch: u64,
    batches: BTreeMap<u64, Batch>,
}

impl ProducerCore {
    pub fn new(
        me: ComponentId,
        meta: MetadataView,
        retry: SimDuration,
        timeout: SimDuration,
        buffer_bytes: u64,
    ) -> Self {
        ProducerCore {
            me,
            meta,
            retry,
            timeout,
            buffer_bytes,
            unacked_bytes: 0,
            unacked_records: 0,
            next_seq: 0,
            next_batch: 0,
            batches: BTreeMap::new(),
        }
    }

    pub fn fits(&self, bytes: u64) -> bool {
        self.unacked_bytes + bytes <= self.buffer_bytes
    }

    pub fn unacked_records(&self) -> usize {
        self.unacked_records
    }

    pub fn unacked_bytes(&self) -> u64 {
        self.unacked_bytes
    }

    pub fn record(&mut self, now: SimTime, topic: TopicId, size_bytes: u32, payload: Payload, lineage: Lineage) -> Record {
        let seq = self.next_seq;
        self.next_seq += 1;
        Record {
            topic,
            producer: self.me,
            seq,
            size_bytes,
            produce_time: now,
            payload,
            lineage,
        }
    }

    /// Buffer and send a batch of records for one topic.
    pub fn submit(&mut self, ctx: &mut Ctx, topic: TopicId, records: Vec<Record>, source: bool) {
        if records.is_empty() {
            return;
        }
        for r in &records {
            ctx.metrics.produced(r, source);
        }
        let bytes: u64 = records.iter().map(|r| u64::from(r.size_bytes)).sum();
        self.unacked_bytes += bytes;
        self.unacked_records += records.len();
        let id = self.next_batch;
        self.next_batch += 1;
        self.batches.insert(
            id,
            Batch {
                topic,
                records: Arc::from(records),
                bytes,
                deadline: ctx.now + self.timeout,
                attempt: 0,
                sent_to: None,
            },
        );
        self.send(ctx, id);
    }

    fn send(&mut self, ctx: &mut Ctx, id: u64) {
        let Some(b) = self.batches.get_mut(&id) else { return };
        b.attempt += 1;
        let leader = self.meta.leader(b.topic);
        b.sent_to = leader;
        match leader {
            Some(l) => ctx.send(
                l,
                Msg::ProduceRequest {
                    batch: id,
                    topic: b.topic,
                    records: b.records.clone(),
                },
            ),
            None => self.meta.refresh(ctx),
        }
        let b = &self.batches[&id];
        let at = (ctx.now + self.retry).min(b.deadline.max(ctx.now));
        ctx.timer_at(
            at,
            Timer::BatchRetry {
                batch: id,
                attempt: b.attempt,
            },
        );
    }

    fn release(&mut self, b: &Batch) {
        self.unacked_bytes -= b.bytes;
        self.unacked_records -= b.records.len();
    }

    /// Handle a produce response; returns true if buffer space was freed.
    pub fn on_response(&mut self, ctx: &mut Ctx, batch: u64, result: ProduceResult) -> bool {
        let Some(b) = self.batches.get(&batch) else { return false };
        match result {
            ProduceResult::Ok(offsets) => {
                let b = self.batches.remove(&batch).expect("present");
                for (r, off) in b.records.iter().zip(offsets) {
                    ctx.metrics.acked(ctx.now, r.producer, r.seq, off);
                }
                self.release(&b);
                true
            }
            ProduceResult::NotLeader(hint) => {
                let topic = b.topic;
                if self.meta.apply_hint(topic, hint) {
                    self.send(ctx, batch);
                } else {
                    self.meta.refresh(ctx);
                }
                false
            }
            ProduceResult::UnknownTopic => {
                let b = self.batches.remove(&batch).expect("present");
                self.fail(ctx, &b);
                true
            }
        }
    }

    fn fail(&mut self, ctx: &mut Ctx, b: &Batch) {
        for r in b.records.iter() {
            ctx.metrics.failed(r.producer, r.seq);
        }
        self.release(b);
    }

    /// Retry timer; returns true if the batch timed out and freed space.
    pub fn on_retry(&mut self, ctx: &mut Ctx, batch: u64, attempt: u64) -> bool {
        let Some(b) = self.batches.get(&batch) else { return false };
        if b.attempt != attempt {
            return false;
        }
        if ctx.now >= b.deadline {
            let b = self.batches.remove(&batch).expect("present");
            let name = ctx.dir.topic(b.topic).name.clone();
            ctx.log(
                "ProduceTimeout",
                format!("topic={name} records={} first_seq={}", b.records.len(), b.records[0].seq),
            );
            self.fail(ctx, &b);
            return true;
        }
        self.meta.refresh(ctx);
        self.send(ctx, batch);
        false
    }

    pub fn on_metadata(&mut self, ctx: &mut Ctx, update: &[crate::proto::TopicMeta]) {
        let changed = self.meta.apply(update);
        if changed.is_empty() {
            return;
        }
        let resend: Vec<u64> = self
            .batches
            .iter()
            .filter(|(_, b)| changed.contains(&b.topic) && b.sent_to != self.meta.leader(b.topic))
            .map(|(id, _)| *id)
            .collect();
        for id in resend {
            self.send(ctx, id);
        }
    }

    /// Drop everything in flight; records are marked failed.
    pub fn crash(&mut self, ctx: &mut Ctx) {
        for (_, b) in std::mem::take(&mut self.batches) {
            self.fail(ctx, &b);
        }
    }
}
