//! Cluster controller: broker liveness, leader election, ISR changes and
//! preferred-leader restoration.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::model::BrokerConfig;
use crate::proto::{ElectionReason, Msg, TopicId, TopicMeta};
use crate::sim::{ComponentId, SimTime};
use crate::world::{Actor, Ctx, Timer};

const TRANSFER_DEADLINE: crate::sim::SimDuration = crate::sim::SimDuration::from_secs(5);

#[derive(Debug, Clone)]
pub struct TopicAssignment {
    pub leader: Option<ComponentId>,
    pub epoch: u32,
    pub isr: Vec<ComponentId>,
    pub replicas: Vec<ComponentId>,
    pub preferred: ComponentId,
    pub version: u64,
    transfer_until: Option<SimTime>,
}

pub struct Controller {
    cfg: BrokerConfig,
    last_heartbeat: BTreeMap<ComponentId, SimTime>,
    alive: BTreeMap<ComponentId, bool>,
    topics: Vec<TopicAssignment>,
    clients: Vec<ComponentId>,
}

impl Controller {
    pub fn new(cfg: BrokerConfig, brokers: &[ComponentId], clients: Vec<ComponentId>) -> Self {
        Controller {
            cfg,
            last_heartbeat: brokers.iter().map(|b| (*b, SimTime::ZERO)).collect(),
            alive: brokers.iter().map(|b| (*b, true)).collect(),
            topics: Vec::new(),
            clients,
        }
    }

    pub fn add_topic(&mut self, replicas: Vec<ComponentId>, preferred: ComponentId) {
        self.topics.push(TopicAssignment {
            leader: Some(preferred),
            epoch: 1,
            isr: replicas.clone(),
            replicas,
            preferred,
            version: 1,
            transfer_until: None,
        });
    }

    pub fn assignment(&self, topic: TopicId) -> &TopicAssignment {
        &self.topics[topic.index()]
    }

    pub fn metadata(&self) -> Arc<[TopicMeta]> {
        self.topics
            .iter()
            .map(|t| TopicMeta {
                leader: t.leader,
                epoch: t.epoch,
            })
            .collect()
    }

    fn is_alive(&self, b: ComponentId) -> bool {
        self.alive.get(&b).copied().unwrap_or(false)
    }

    fn push(&self, ctx: &mut Ctx, topic: TopicId, reason: ElectionReason, only: Option<ComponentId>) {
        let t = &self.topics[topic.index()];
        let isr: Arc<[ComponentId]> = Arc::from(t.isr.clone());
        for r in &t.replicas {
            if only.is_some_and(|o| o != *r) {
                continue;
            }
            ctx.send(
                *r,
                Msg::LeaderAndIsr {
                    topic,
                    leader: t.leader,
                    epoch: t.epoch,
                    isr: isr.clone(),
                    version: t.version,
                    reason,
                },
            );
        }
    }

    fn broadcast_metadata(&self, ctx: &mut Ctx) {
        let topics = self.metadata();
        for c in &self.clients {
            ctx.send(*c, Msg::MetadataUpdate { topics: topics.clone() });
        }
    }

    fn declare_dead(&mut self, ctx: &mut Ctx, broker: ComponentId) {
        self.alive.insert(broker, false);
        let mut leadership_changed = false;
        for i in 0..self.topics.len() {
            let topic = TopicId(i as u32);
            let name = ctx.dir.topic(topic).name.clone();
            let t = &mut self.topics[i];
            if !t.replicas.contains(&broker) {
                continue;
            }
            let was_leader = t.leader == Some(broker);
            if was_leader {
                ctx.metrics.log(
                    ctx.now,
                    ctx.dir.name(ctx.me).to_string(),
                    "LeaderDisconnectDetected",
                    format!("topic={name} broker={} epoch={}", ctx.dir.name(broker), t.epoch),
                );
            }
            // The last ISR member stays eligible so the topic can come back.
            if t.isr.len() > 1 {
                t.isr.retain(|b| *b != broker);
            }
            t.version += 1;
            let mut reason = ElectionReason::IsrShrink;
            if was_leader {
                let alive = &self.alive;
                t.leader = t
                    .isr
                    .iter()
                    .filter(|b| **b != broker && alive.get(b).copied().unwrap_or(false))
                    .min_by(|a, b| ctx.dir.name(**a).cmp(ctx.dir.name(**b)))
                    .copied();
                t.epoch += 1;
                t.transfer_until = None;
                reason = ElectionReason::Failover;
                leadership_changed = true;
                match t.leader {
                    Some(l) => {
                        let detail = format!("topic={name} leader={} epoch={}", ctx.dir.name(l), t.epoch);
                        ctx.metrics
                            .log(ctx.now, ctx.dir.name(ctx.me).to_string(), "ElectionStarted", detail);
                    }
                    None => {
                        let detail = format!("topic={name} epoch={}", t.epoch);
                        ctx.metrics
                            .log(ctx.now, ctx.dir.name(ctx.me).to_string(), "TopicUnavailable", detail);
                    }
                }
            }
            self.push(ctx, topic, reason, None);
        }
        if leadership_changed {
            self.broadcast_metadata(ctx);
        }
    }

    fn rejoin(&mut self, ctx: &mut Ctx, broker: ComponentId) {
        self.alive.insert(broker, true);
        ctx.log("BrokerRejoined", format!("broker={}", ctx.dir.name(broker)));
        let mut leadership_changed = false;
        for i in 0..self.topics.len() {
            let topic = TopicId(i as u32);
            let t = &mut self.topics[i];
            if !t.replicas.contains(&broker) {
                continue;
            }
            if t.leader.is_none() && t.isr.contains(&broker) {
                t.leader = Some(broker);
                t.epoch += 1;
                t.version += 1;
                leadership_changed = true;
                self.push(ctx, topic, ElectionReason::Failover, None);
            } else {
                self.push(ctx, topic, ElectionReason::Snapshot, Some(broker));
            }
        }
        if leadership_changed {
            self.broadcast_metadata(ctx);
        }
    }

    fn liveness_check(&mut self, ctx: &mut Ctx) {
        let timeout = self.cfg.session_timeout;
        let dead: Vec<ComponentId> = self
            .last_heartbeat
            .iter()
            .filter(|(b, last)| self.is_alive(**b) && ctx.now.saturating_sub(**last) > timeout)
            .map(|(b, _)| *b)
            .collect();
        for b in dead {
            self.declare_dead(ctx, b);
        }
    }

    fn preferred_check(&mut self, ctx: &mut Ctx) {
        for i in 0..self.topics.len() {
            let alive_pref = self.is_alive(self.topics[i].preferred);
            let t = &mut self.topics[i];
            if t.transfer_until.is_some_and(|d| ctx.now < d) {
                continue;
            }
            t.transfer_until = None;
            let Some(leader) = t.leader else { continue };
            if leader == t.preferred || !alive_pref || !t.isr.contains(&t.preferred) {
                continue;
            }
            t.transfer_until = Some(ctx.now + TRANSFER_DEADLINE);
            let (epoch, target) = (t.epoch, t.preferred);
            ctx.send(
                leader,
                Msg::TransferLeadership {
                    topic: TopicId(i as u32),
                    epoch,
                    target,
                },
            );
        }
    }
}

impl Actor for Controller {
    fn start(&mut self, ctx: &mut Ctx) {
        ctx.timer_in(self.cfg.heartbeat_interval, Timer::LivenessCheck);
        ctx.timer_in(self.cfg.preferred_check_interval, Timer::PreferredCheck);
    }

    fn on_message(&mut self, ctx: &mut Ctx, from: ComponentId, msg: Msg) {
        match msg {
            Msg::Heartbeat { restarted } => {
                if !self.last_heartbeat.contains_key(&from) {
                    return;
                }
                self.last_heartbeat.insert(from, ctx.now);
                ctx.send(from, Msg::HeartbeatAck);
                if restarted || !self.is_alive(from) {
                    self.rejoin(ctx, from);
                }
            }
            Msg::MetadataRequest => {
                ctx.send(
                    from,
                    Msg::MetadataUpdate {
                        topics: self.metadata(),
                    },
                );
            }
            Msg::IsrExpand { topic, epoch, follower } => {
                let alive = self.is_alive(follower);
                let t = &mut self.topics[topic.index()];
                if t.epoch != epoch || !alive || t.isr.contains(&follower) || !t.replicas.contains(&follower) {
                    return;
                }
                t.isr.push(follower);
                t.isr.sort_by(|a, b| ctx.dir.name(*a).cmp(ctx.dir.name(*b)));
                t.version += 1;
                self.push(ctx, topic, ElectionReason::IsrExpand, None);
            }
            Msg::TransferReady { topic, epoch } => {
                let t = &mut self.topics[topic.index()];
                if t.epoch != epoch || t.transfer_until.is_none() {
                    return;
                }
                t.transfer_until = None;
                t.leader = Some(t.preferred);
                t.epoch += 1;
                t.version += 1;
                self.push(ctx, topic, ElectionReason::PreferredRestore, None);
                self.broadcast_metadata(ctx);
            }
            _ => {}
        }
    }

    fn on_timer(&mut self, ctx: &mut Ctx, timer: Timer) {
        match timer {
            Timer::LivenessCheck => {
                self.liveness_check(ctx);
                ctx.timer_in(self.cfg.heartbeat_interval, Timer::LivenessCheck);
            }
            Timer::PreferredCheck => {
                self.preferred_check(ctx);
                ctx.timer_in(self.cfg.preferred_check_interval, Timer::PreferredCheck);
            }
            _ => {}
        }
    }

    fn crash(&mut self, _ctx: &mut Ctx) {}

    fn recover(&mut self, ctx: &mut Ctx) {
        for last in self.last_heartbeat.values_mut() {
            *last = ctx.now;
        }
        self.start(ctx);
    }
}
