//! A broker replica: leader duties (append, replicate, serve fetches) and
//! follower duties (apply the leader's appends).

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::model::{BrokerConfig, ConsistencyMode};
use crate::proto::{
    AppendResult, ElectionReason, FetchResult, LogEntry, Msg, ProduceResult, Record, TopicId,
};
use crate::sim::{ComponentId, SimDuration, SimTime};
use crate::world::{Actor, Ctx, Timer};
use crate::metrics::Truncation;

use super::log::TopicLog;

const TRANSFER_DEADLINE: SimDuration = SimDuration::from_secs(5);

#[derive(Debug, Clone)]
struct Follower {
    next: u64,
    matched: u64,
    inflight: Option<u64>,
    last_expand_request: Option<SimTime>,
}

#[derive(Debug, Clone)]
struct PendingAck {
    client: ComponentId,
    batch: u64,
    offsets: Vec<u64>,
    last: u64,
}

#[derive(Debug, Clone)]
struct ParkedFetch {
    client: ComponentId,
    request: u64,
    offset: u64,
}

#[derive(Debug, Clone)]
struct Transfer {
    target: ComponentId,
    ready_sent: bool,
    parked: Vec<(ComponentId, u64, Arc<[Record]>)>,
}

#[derive(Debug, Clone)]
struct LeaderState {
    followers: BTreeMap<ComponentId, Follower>,
    pending_acks: Vec<PendingAck>,
    parked: Vec<ParkedFetch>,
    transfer: Option<Transfer>,
    /// Set when leadership came from a failover; drives the backlog event.
    failover_at: Option<SimTime>,
}

#[derive(Debug, Clone)]
struct Replica {
    topic: TopicId,
    consistency: ConsistencyMode,
    replicas: Vec<ComponentId>,
    log: TopicLog,
    hw: u64,
    leader: Option<ComponentId>,
    epoch: u32,
    isr: Vec<ComponentId>,
    version: u64,
    lead: Option<LeaderState>,
}

impl Replica {
    fn hint(&self) -> Option<(ComponentId, u32)> {
        self.leader.map(|l| (l, self.epoch))
    }

    fn quorum_ok(&self) -> bool {
        self.isr.len() > self.replicas.len() / 2
    }
}

pub struct Broker {
    id: ComponentId,
    cfg: BrokerConfig,
    controller: Option<ComponentId>,
    topics: BTreeMap<TopicId, Replica>,
    last_ctrl_ack: SimTime,
    next_attempt: u64,
    restarted: bool,
    backlog_logged: bool,
}

impl Broker {
    pub fn new(id: ComponentId, cfg: BrokerConfig, controller: Option<ComponentId>) -> Self {
        Broker {
            id,
            cfg,
            controller,
            topics: BTreeMap::new(),
            last_ctrl_ack: SimTime::ZERO,
            next_attempt: 0,
            restarted: false,
            backlog_logged: false,
        }
    }

    /// Register a topic this broker replicates, with the t=0 assignment.
    pub fn add_topic(
        &mut self,
        topic: TopicId,
        consistency: ConsistencyMode,
        replicas: Vec<ComponentId>,
        leader: ComponentId,
    ) {
        self.topics.insert(
            topic,
            Replica {
                topic,
                consistency,
                isr: replicas.clone(),
                replicas,
                log: TopicLog::new(),
                hw: 0,
                leader: Some(leader),
                epoch: 1,
                version: 1,
                lead: None,
            },
        );
    }

    pub fn log(&self, topic: TopicId) -> Option<&TopicLog> {
        self.topics.get(&topic).map(|r| &r.log)
    }

    pub fn high_watermark(&self, topic: TopicId) -> Option<u64> {
        self.topics.get(&topic).map(|r| r.hw)
    }

    pub fn is_leader(&self, topic: TopicId) -> bool {
        self.topics.get(&topic).is_some_and(|r| r.lead.is_some())
    }

    pub fn epoch(&self, topic: TopicId) -> Option<u32> {
        self.topics.get(&topic).map(|r| r.epoch)
    }

    fn attempt(&mut self) -> u64 {
        self.next_attempt += 1;
        self.next_attempt
    }

    fn become_leader(&mut self, ctx: &mut Ctx, topic: TopicId, reason: ElectionReason) {
        let me = self.id;
        let r = self.topics.get_mut(&topic).expect("replica");
        let log_end = r.log.log_end();
        let followers = r
            .replicas
            .iter()
            .filter(|b| **b != me)
            .map(|b| {
                (
                    *b,
                    Follower {
                        next: log_end,
                        matched: 0,
                        inflight: None,
                        last_expand_request: None,
                    },
                )
            })
            .collect();
        r.lead = Some(LeaderState {
            followers,
            pending_acks: Vec::new(),
            parked: Vec::new(),
            transfer: None,
            failover_at: (reason == ElectionReason::Failover).then_some(ctx.now),
        });
        ctx.metrics.leader_term(ctx.now, topic, r.epoch, me);
        let name = ctx.dir.topic(topic).name.clone();
        let epoch = r.epoch;
        match reason {
            ElectionReason::Failover => ctx.log(
                "LeaderElected",
                format!("topic={name} epoch={epoch} log_end={log_end}"),
            ),
            ElectionReason::PreferredRestore => ctx.log(
                "LeadershipRestored",
                format!("topic={name} epoch={epoch} log_end={log_end}"),
            ),
            ElectionReason::Initial => {}
            _ => ctx.log("LeaderResumed", format!("topic={name} epoch={epoch}")),
        }
        self.advance_hw(ctx, topic);
        self.replicate_all(ctx, topic);
    }

    fn step_down(&mut self, ctx: &mut Ctx, topic: TopicId) {
        let r = self.topics.get_mut(&topic).expect("replica");
        let Some(lead) = r.lead.take() else { return };
        let hint = r.hint().filter(|(l, _)| *l != self.id);
        for p in lead.parked {
            ctx.send(
                p.client,
                Msg::FetchResponse {
                    topic,
                    request: p.request,
                    result: FetchResult::NotLeader(hint),
                },
            );
        }
        for a in lead.pending_acks {
            ctx.send(
                a.client,
                Msg::ProduceResponse {
                    batch: a.batch,
                    topic,
                    result: ProduceResult::NotLeader(hint),
                },
            );
        }
        if let Some(t) = lead.transfer {
            for (client, batch, _) in t.parked {
                ctx.send(
                    client,
                    Msg::ProduceResponse {
                        batch,
                        topic,
                        result: ProduceResult::NotLeader(hint),
                    },
                );
            }
        }
    }

    /// Step down from every led topic once controller contact is stale.
    fn check_fencing(&mut self, ctx: &mut Ctx) {
        if ctx.now.saturating_sub(self.last_ctrl_ack) <= self.cfg.session_timeout {
            return;
        }
        let led: Vec<TopicId> = self
            .topics
            .values()
            .filter(|r| r.lead.is_some())
            .map(|r| r.topic)
            .collect();
        for t in led {
            let r = self.topics.get_mut(&t).expect("replica");
            r.leader = None;
            let epoch = r.epoch;
            self.step_down(ctx, t);
            let name = ctx.dir.topic(t).name.clone();
            ctx.log("LeaderFenced", format!("topic={name} epoch={epoch}"));
        }
    }

    fn replicate_all(&mut self, ctx: &mut Ctx, topic: TopicId) {
        let followers: Vec<ComponentId> = match self.topics.get(&topic).and_then(|r| r.lead.as_ref()) {
            Some(l) => l.followers.keys().copied().collect(),
            None => return,
        };
        for f in followers {
            self.replicate(ctx, topic, f, false);
        }
    }

    fn replicate(&mut self, ctx: &mut Ctx, topic: TopicId, follower: ComponentId, force: bool) {
        let attempt = self.attempt();
        let max_bytes = self.cfg.max_fetch_bytes;
        let retry = self.cfg.replica_retry;
        let r = self.topics.get_mut(&topic).expect("replica");
        let Some(lead) = r.lead.as_mut() else { return };
        let Some(fs) = lead.followers.get_mut(&follower) else { return };
        if fs.inflight.is_some() && !force {
            return;
        }
        let from = fs.next.min(r.log.log_end());
        let entries = r.log.slice(from, r.log.log_end(), max_bytes);
        let prev_epoch = if from == 0 { 0 } else { r.log.epoch_at(from - 1).unwrap_or(0) };
        fs.inflight = Some(attempt);
        ctx.send(
            follower,
            Msg::Append {
                topic,
                epoch: r.epoch,
                from_offset: from,
                prev_epoch,
                entries,
                leader_hw: r.hw,
                leader_log_end: r.log.log_end(),
            },
        );
        ctx.timer_in(
            retry,
            Timer::ReplicaRetry {
                topic,
                follower,
                attempt,
            },
        );
    }

    /// Recompute the high watermark and release whatever it unblocks.
    fn advance_hw(&mut self, ctx: &mut Ctx, topic: TopicId) {
        let me = self.id;
        let max_bytes = self.cfg.max_fetch_bytes;
        let r = self.topics.get_mut(&topic).expect("replica");
        let Some(lead) = r.lead.as_mut() else { return };
        let log_end = r.log.log_end();
        let min = r
            .isr
            .iter()
            .map(|b| {
                if *b == me {
                    log_end
                } else {
                    lead.followers.get(b).map_or(0, |f| f.matched)
                }
            })
            .min()
            .unwrap_or(log_end);
        if min > r.hw {
            r.hw = min;
        }
        let hw = r.hw;

        if r.consistency == ConsistencyMode::Raft && r.isr.len() > r.replicas.len() / 2 {
            let (ready, waiting): (Vec<_>, Vec<_>) =
                std::mem::take(&mut lead.pending_acks).into_iter().partition(|a| a.last < hw);
            lead.pending_acks = waiting;
            for a in ready {
                ctx.send(
                    a.client,
                    Msg::ProduceResponse {
                        batch: a.batch,
                        topic,
                        result: ProduceResult::Ok(a.offsets),
                    },
                );
            }
        }

        let (ready, waiting): (Vec<_>, Vec<_>) =
            std::mem::take(&mut lead.parked).into_iter().partition(|p| p.offset < hw);
        lead.parked = waiting;
        for p in ready {
            self.respond_fetch(ctx, topic, p.client, p.request, p.offset, max_bytes);
        }
    }

    fn respond_fetch(
        &mut self,
        ctx: &mut Ctx,
        topic: TopicId,
        client: ComponentId,
        request: u64,
        offset: u64,
        max_bytes: u64,
    ) {
        let r = self.topics.get(&topic).expect("replica");
        let entries = r.log.slice(offset, r.hw, max_bytes);
        if !self.backlog_logged {
            if let Some(at) = r.lead.as_ref().and_then(|l| l.failover_at) {
                let held: Vec<&LogEntry> = entries.iter().filter(|e| e.record.produce_time < at).collect();
                if !held.is_empty() {
                    self.backlog_logged = true;
                    let bytes: u64 = held.iter().map(|e| u64::from(e.record.size_bytes)).sum();
                    let name = ctx.dir.topic(topic).name.clone();
                    let detail = format!(
                        "topic={name} consumer={} records={} bytes={bytes}",
                        ctx.name(client),
                        held.len()
                    );
                    ctx.log("BacklogServed", detail);
                }
            }
        }
        let hw = r.hw;
        ctx.send(
            client,
            Msg::FetchResponse {
                topic,
                request,
                result: FetchResult::Records { entries, hw },
            },
        );
    }

    fn on_produce(&mut self, ctx: &mut Ctx, from: ComponentId, batch: u64, topic: TopicId, records: Arc<[Record]>) {
        self.check_fencing(ctx);
        let Some(r) = self.topics.get_mut(&topic) else {
            ctx.send(
                from,
                Msg::ProduceResponse {
                    batch,
                    topic,
                    result: ProduceResult::UnknownTopic,
                },
            );
            return;
        };
        let Some(lead) = r.lead.as_mut() else {
            let hint = r.hint().filter(|(l, _)| *l != self.id);
            ctx.send(
                from,
                Msg::ProduceResponse {
                    batch,
                    topic,
                    result: ProduceResult::NotLeader(hint),
                },
            );
            return;
        };
        if let Some(t) = lead.transfer.as_mut() {
            t.parked.push((from, batch, records));
            return;
        }
        self.append_batch(ctx, from, batch, topic, &records);
    }

    fn append_batch(&mut self, ctx: &mut Ctx, from: ComponentId, batch: u64, topic: TopicId, records: &[Record]) {
        let r = self.topics.get_mut(&topic).expect("replica");
        let epoch = r.epoch;
        let offsets: Vec<u64> = records.iter().map(|rec| r.log.append(rec, epoch).0).collect();
        let last = offsets.iter().copied().max().unwrap_or(0);
        match r.consistency {
            ConsistencyMode::Zk => ctx.send(
                from,
                Msg::ProduceResponse {
                    batch,
                    topic,
                    result: ProduceResult::Ok(offsets),
                },
            ),
            ConsistencyMode::Raft => {
                if last < r.hw && r.quorum_ok() {
                    ctx.send(
                        from,
                        Msg::ProduceResponse {
                            batch,
                            topic,
                            result: ProduceResult::Ok(offsets),
                        },
                    );
                } else {
                    r.lead.as_mut().expect("leader").pending_acks.push(PendingAck {
                        client: from,
                        batch,
                        offsets,
                        last,
                    });
                }
            }
        }
        self.advance_hw(ctx, topic);
        self.replicate_all(ctx, topic);
    }

    fn on_fetch(&mut self, ctx: &mut Ctx, from: ComponentId, topic: TopicId, offset: u64, request: u64, max_wait: SimDuration) {
        self.check_fencing(ctx);
        let max_bytes = self.cfg.max_fetch_bytes;
        let Some(r) = self.topics.get_mut(&topic) else {
            ctx.send(
                from,
                Msg::FetchResponse {
                    topic,
                    request,
                    result: FetchResult::NotLeader(None),
                },
            );
            return;
        };
        let hint = r.hint().filter(|(l, _)| *l != self.id);
        let Some(lead) = r.lead.as_mut() else {
            ctx.send(
                from,
                Msg::FetchResponse {
                    topic,
                    request,
                    result: FetchResult::NotLeader(hint),
                },
            );
            return;
        };
        if offset > r.log.log_end() {
            ctx.send(
                from,
                Msg::FetchResponse {
                    topic,
                    request,
                    result: FetchResult::OffsetOutOfRange { hw: r.hw },
                },
            );
            return;
        }
        if offset < r.hw {
            self.respond_fetch(ctx, topic, from, request, offset, max_bytes);
            return;
        }
        lead.parked.push(ParkedFetch {
            client: from,
            request,
            offset,
        });
        ctx.timer_in(
            max_wait,
            Timer::FetchExpire {
                topic,
                client: from,
                request,
            },
        );
    }

    fn on_append(
        &mut self,
        ctx: &mut Ctx,
        from: ComponentId,
        topic: TopicId,
        epoch: u32,
        from_offset: u64,
        prev_epoch: u32,
        entries: &[LogEntry],
        leader_hw: u64,
        leader_log_end: u64,
    ) {
        let Some(r) = self.topics.get_mut(&topic) else { return };
        if epoch < r.epoch {
            let mine = r.epoch;
            ctx.send(
                from,
                Msg::AppendResponse {
                    topic,
                    epoch,
                    result: AppendResult::Fenced { epoch: mine },
                },
            );
            return;
        }
        if epoch > r.epoch || r.leader != Some(from) {
            r.epoch = epoch;
            r.leader = Some(from);
            if r.lead.is_some() {
                self.step_down(ctx, topic);
            }
        }
        let r = self.topics.get_mut(&topic).expect("replica");
        let out = r.log.follower_append(from_offset, prev_epoch, entries, leader_log_end);
        if let AppendResult::Ok { log_end } = out.result {
            let hw = leader_hw.min(log_end).min(r.log.log_end());
            r.hw = r.hw.max(hw).min(r.log.log_end());
        }
        if !out.truncated.is_empty() {
            let from_off = out.truncated[0].offset;
            let name = ctx.dir.topic(topic).name.clone();
            ctx.log(
                "LogTruncated",
                format!(
                    "topic={name} from_offset={from_off} records={} epoch={epoch}",
                    out.truncated.len()
                ),
            );
            ctx.metrics.truncated(Truncation {
                time: ctx.now,
                broker: self.id,
                topic,
                from_offset: from_off,
                records: out
                    .truncated
                    .iter()
                    .map(|e| (e.record.producer, e.record.seq, e.epoch))
                    .collect(),
            });
        }
        ctx.send(
            from,
            Msg::AppendResponse {
                topic,
                epoch,
                result: out.result,
            },
        );
    }

    fn on_append_response(&mut self, ctx: &mut Ctx, from: ComponentId, topic: TopicId, epoch: u32, result: AppendResult) {
        let Some(r) = self.topics.get_mut(&topic) else { return };
        if epoch != r.epoch || r.lead.is_none() {
            return;
        }
        let log_end = r.log.log_end();
        let hw_before = r.hw;
        let lead = r.lead.as_mut().expect("leader");
        let Some(fs) = lead.followers.get_mut(&from) else { return };
        fs.inflight = None;
        let mut expand = false;
        match result {
            AppendResult::Ok { log_end: matched } => {
                fs.matched = fs.matched.max(matched);
                fs.next = matched;
                if !r.isr.contains(&from)
                    && fs.matched >= hw_before
                    && fs
                        .last_expand_request
                        .is_none_or(|t| ctx.now.saturating_sub(t) >= self.cfg.replica_retry)
                {
                    fs.last_expand_request = Some(ctx.now);
                    expand = true;
                }
            }
            AppendResult::Gap { log_end: theirs } => fs.next = theirs.min(log_end),
            AppendResult::Diverging {
                conflict_epoch,
                conflict_first_offset,
            } => {
                let back = match r.log.last_offset_of_epoch(conflict_epoch) {
                    Some(last) => last + 1,
                    None => conflict_first_offset,
                };
                fs.next = back.min(fs.next.saturating_sub(1));
            }
            AppendResult::Fenced { epoch: newer } => {
                if newer > r.epoch {
                    r.epoch = newer;
                    r.leader = None;
                    self.step_down(ctx, topic);
                }
                return;
            }
        }
        let more = fs.next < log_end || !matches!(result, AppendResult::Ok { .. });
        if expand {
            if let Some(c) = self.controller {
                ctx.send(
                    c,
                    Msg::IsrExpand {
                        topic,
                        epoch,
                        follower: from,
                    },
                );
            }
        }
        self.advance_hw(ctx, topic);
        if more {
            self.replicate(ctx, topic, from, false);
        }
        self.check_transfer(ctx, topic);
    }

    fn on_leader_and_isr(
        &mut self,
        ctx: &mut Ctx,
        topic: TopicId,
        leader: Option<ComponentId>,
        epoch: u32,
        isr: &[ComponentId],
        version: u64,
        reason: ElectionReason,
    ) {
        let me = self.id;
        let Some(r) = self.topics.get_mut(&topic) else { return };
        if version < r.version || (version == r.version && reason != ElectionReason::Snapshot) {
            return;
        }
        let was_leader = r.lead.is_some();
        let was_epoch = r.epoch;
        r.version = version;
        r.epoch = r.epoch.max(epoch);
        r.leader = leader;
        r.isr = isr.to_vec();
        let now_leader = leader == Some(me);
        if was_leader && (!now_leader || was_epoch != r.epoch) {
            self.step_down(ctx, topic);
        }
        let r = self.topics.get_mut(&topic).expect("replica");
        if now_leader && r.lead.is_none() {
            self.become_leader(ctx, topic, reason);
        } else if now_leader {
            self.advance_hw(ctx, topic);
        }
    }

    fn on_transfer(&mut self, ctx: &mut Ctx, topic: TopicId, epoch: u32, target: ComponentId) {
        let Some(r) = self.topics.get_mut(&topic) else { return };
        if r.epoch != epoch || !r.isr.contains(&target) {
            return;
        }
        let Some(lead) = r.lead.as_mut() else { return };
        if lead.transfer.is_none() {
            lead.transfer = Some(Transfer {
                target,
                ready_sent: false,
                parked: Vec::new(),
            });
            ctx.timer_in(TRANSFER_DEADLINE, Timer::TransferDeadline { topic, epoch });
        }
        self.replicate(ctx, topic, target, false);
        self.check_transfer(ctx, topic);
    }

    fn check_transfer(&mut self, ctx: &mut Ctx, topic: TopicId) {
        let r = self.topics.get_mut(&topic).expect("replica");
        let log_end = r.log.log_end();
        let epoch = r.epoch;
        let hw = r.hw;
        let Some(lead) = r.lead.as_mut() else { return };
        let Some(t) = lead.transfer.as_mut() else { return };
        let caught_up = lead.followers.get(&t.target).is_some_and(|f| f.matched == log_end);
        if caught_up && hw == log_end && !t.ready_sent {
            t.ready_sent = true;
            if let Some(c) = self.controller {
                ctx.send(c, Msg::TransferReady { topic, epoch });
            }
        }
    }

    fn on_transfer_deadline(&mut self, ctx: &mut Ctx, topic: TopicId, epoch: u32) {
        let Some(r) = self.topics.get_mut(&topic) else { return };
        if r.epoch != epoch {
            return;
        }
        let Some(lead) = r.lead.as_mut() else { return };
        let Some(t) = lead.transfer.take() else { return };
        for (client, batch, records) in t.parked {
            self.append_batch(ctx, client, batch, topic, &records);
        }
    }

    fn heartbeat(&mut self, ctx: &mut Ctx) {
        if let Some(c) = self.controller {
            ctx.send(
                c,
                Msg::Heartbeat {
                    restarted: self.restarted,
                },
            );
        }
    }
}

impl Actor for Broker {
    fn start(&mut self, ctx: &mut Ctx) {
        let me = self.id;
        let led: Vec<TopicId> = self
            .topics
            .values()
            .filter(|r| r.leader == Some(me))
            .map(|r| r.topic)
            .collect();
        for t in led {
            self.become_leader(ctx, t, ElectionReason::Initial);
        }
        self.heartbeat(ctx);
        ctx.timer_in(self.cfg.heartbeat_interval, Timer::HeartbeatTick);
    }

    fn on_message(&mut self, ctx: &mut Ctx, from: ComponentId, msg: Msg) {
        match msg {
            Msg::ProduceRequest { batch, topic, records } => self.on_produce(ctx, from, batch, topic, records),
            Msg::FetchRequest {
                topic,
                offset,
                request,
                max_wait,
            } => self.on_fetch(ctx, from, topic, offset, request, max_wait),
            Msg::Append {
                topic,
                epoch,
                from_offset,
                prev_epoch,
                entries,
                leader_hw,
                leader_log_end,
            } => self.on_append(
                ctx,
                from,
                topic,
                epoch,
                from_offset,
                prev_epoch,
                &entries,
                leader_hw,
                leader_log_end,
            ),
            Msg::AppendResponse { topic, epoch, result } => self.on_append_response(ctx, from, topic, epoch, result),
            Msg::HeartbeatAck => {
                self.last_ctrl_ack = ctx.now;
                self.restarted = false;
            }
            Msg::LeaderAndIsr {
                topic,
                leader,
                epoch,
                isr,
                version,
                reason,
            } => self.on_leader_and_isr(ctx, topic, leader, epoch, &isr, version, reason),
            Msg::TransferLeadership { topic, epoch, target } => self.on_transfer(ctx, topic, epoch, target),
            _ => {}
        }
    }

    fn on_timer(&mut self, ctx: &mut Ctx, timer: Timer) {
        match timer {
            Timer::HeartbeatTick => {
                self.check_fencing(ctx);
                self.heartbeat(ctx);
                ctx.timer_in(self.cfg.heartbeat_interval, Timer::HeartbeatTick);
            }
            Timer::ReplicaRetry {
                topic,
                follower,
                attempt,
            } => {
                let current = self
                    .topics
                    .get(&topic)
                    .and_then(|r| r.lead.as_ref())
                    .and_then(|l| l.followers.get(&follower))
                    .and_then(|f| f.inflight);
                if current == Some(attempt) {
                    self.replicate(ctx, topic, follower, true);
                }
            }
            Timer::FetchExpire { topic, client, request } => {
                let Some(r) = self.topics.get_mut(&topic) else { return };
                let Some(lead) = r.lead.as_mut() else { return };
                if let Some(pos) = lead
                    .parked
                    .iter()
                    .position(|p| p.client == client && p.request == request)
                {
                    lead.parked.remove(pos);
                    let hw = r.hw;
                    ctx.send(
                        client,
                        Msg::FetchResponse {
                            topic,
                            request,
                            result: FetchResult::Records {
                                entries: Arc::from(Vec::new()),
                                hw,
                            },
                        },
                    );
                }
            }
            Timer::TransferDeadline { topic, epoch } => self.on_transfer_deadline(ctx, topic, epoch),
            _ => {}
        }
    }

    fn crash(&mut self, _ctx: &mut Ctx) {
        for r in self.topics.values_mut() {
            r.lead = None;
        }
    }

    fn recover(&mut self, ctx: &mut Ctx) {
        self.restarted = true;
        self.heartbeat(ctx);
        ctx.timer_in(self.cfg.heartbeat_interval, Timer::HeartbeatTick);
    }
}
