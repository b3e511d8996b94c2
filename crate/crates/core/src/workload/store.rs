use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use crate::model::StoreConfig;
use crate::proto::Msg;
use crate::sim::{ComponentId, SimDuration};
use crate::world::{Actor, Ctx, Timer};

use super::job::stage_cost;

enum Op {
    Put { id: u64, key: Arc<str>, value: f64 },
    Get { id: u64, key: Arc<str> },
}

/// Key-value store serving one request at a time in arrival order, which
/// gives read-your-writes for every client.
pub struct KvStore {
    write: SimDuration,
    read: SimDuration,
    map: BTreeMap<Arc<str>, f64>,
    queue: VecDeque<(ComponentId, Op)>,
    busy: bool,
}

impl KvStore {
    pub fn new(cfg: &StoreConfig, cpu: f64) -> Self {
        KvStore {
            write: stage_cost(cfg.write_latency.as_micros(), cpu),
            read: stage_cost(cfg.read_latency.as_micros(), cpu),
            map: BTreeMap::new(),
            queue: VecDeque::new(),
            busy: false,
        }
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.map.get(key).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, f64)> {
        self.map.iter().map(|(k, v)| (&**k, *v))
    }

    fn kick(&mut self, ctx: &mut Ctx) {
        if self.busy {
            return;
        }
        let Some((_, op)) = self.queue.front() else { return };
        self.busy = true;
        let d = match op {
            Op::Put { .. } => self.write,
            Op::Get { .. } => self.read,
        };
        ctx.timer_in(d, Timer::StoreDone);
    }
}

impl Actor for KvStore {
    fn start(&mut self, _ctx: &mut Ctx) {}

    fn on_message(&mut self, ctx: &mut Ctx, from: ComponentId, msg: Msg) {
        match msg {
            Msg::Put { id, key, value } => self.queue.push_back((from, Op::Put { id, key, value })),
            Msg::Get { id, key } => self.queue.push_back((from, Op::Get { id, key })),
            _ => return,
        }
        self.kick(ctx);
    }

    fn on_timer(&mut self, ctx: &mut Ctx, timer: Timer) {
        if timer != Timer::StoreDone {
            return;
        }
        self.busy = false;
        if let Some((client, op)) = self.queue.pop_front() {
            match op {
                Op::Put { id, key, value } => {
                    self.map.insert(key, value);
                    ctx.send(client, Msg::PutAck { id });
                }
                Op::Get { id, key } => {
                    let value = self.map.get(&key).copied();
                    ctx.send(client, Msg::GetResponse { id, value });
                }
            }
        }
        self.kick(ctx);
    }

    fn crash(&mut self, _ctx: &mut Ctx) {
        self.queue.clear();
        self.busy = false;
    }

    fn recover(&mut self, _ctx: &mut Ctx) {}
}
