use crate::metrics::MetricsStore;
use crate::proto::{Msg, TopicId};
use crate::sim::{ComponentId, RandomSource, SimDuration, SimTime};

use super::directory::Directory;

/// Timer kinds of every component.
#[derive(Debug, Clone, PartialEq)]
pub enum Timer {
    Start,
    HeartbeatTick,
    LivenessCheck,
    PreferredCheck,
    ReplicaRetry { topic: TopicId, follower: ComponentId, attempt: u64 },
    FetchExpire { topic: TopicId, client: ComponentId, request: u64 },
    TransferDeadline { topic: TopicId, epoch: u32 },
    Emit { generation: u64 },
    BatchRetry { batch: u64, attempt: u64 },
    FetchTimeout { topic: TopicId, request: u64 },
    FetchRetry { topic: TopicId, request: u64 },
    ServiceDone,
    WindowClose { stage: usize, end: SimTime },
    StoreDone,
}

pub(crate) enum Action {
    Send { to: ComponentId, msg: Msg },
    Timer { at: SimTime, timer: Timer },
}

/// Handle a component uses to act on the world during one event.
pub struct Ctx<'a> {
    pub now: SimTime,
    pub me: ComponentId,
    pub dir: &'a Directory,
    pub metrics: &'a mut MetricsStore,
    pub rng: &'a mut RandomSource,
    pub(crate) actions: &'a mut Vec<Action>,
}

impl Ctx<'_> {
    pub fn send(&mut self, to: ComponentId, msg: Msg) {
        self.actions.push(Action::Send { to, msg });
    }

    pub fn timer_in(&mut self, delay: SimDuration, timer: Timer) {
        self.actions.push(Action::Timer {
            at: self.now + delay,
            timer,
        });
    }

    pub fn timer_at(&mut self, at: SimTime, timer: Timer) {
        self.actions.push(Action::Timer {
            at: at.max(self.now),
            timer,
        });
    }

    pub fn log(&mut self, kind: &str, detail: String) {
        let name = self.dir.name(self.me).to_string();
        self.metrics.log(self.now, name, kind, detail);
    }

    pub fn name(&self, id: ComponentId) -> &str {
        self.dir.name(id)
    }
}

/// Behaviour shared by every simulated component.
pub trait Actor {
    fn start(&mut self, ctx: &mut Ctx);
    fn on_message(&mut self, ctx: &mut Ctx, from: ComponentId, msg: Msg);
    fn on_timer(&mut self, ctx: &mut Ctx, timer: Timer);
    /// Lose volatile state; pending timers are discarded by the caller.
    fn crash(&mut self, ctx: &mut Ctx);
    fn recover(&mut self, ctx: &mut Ctx);
}
