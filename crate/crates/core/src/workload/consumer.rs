use crate::proto::Msg;
use crate::sim::ComponentId;
use crate::world::{Actor, Ctx, Timer};

use super::fetcher::Fetcher;

/// Subscribes to topics and records every delivery.
pub struct ConsumerStub {
    me: ComponentId,
    fetcher: Fetcher,
}

impl ConsumerStub {
    pub fn new(me: ComponentId, fetcher: Fetcher) -> Self {
        ConsumerStub { me, fetcher }
    }

    pub fn fetcher(&self) -> &Fetcher {
        &self.fetcher
    }
}

impl Actor for ConsumerStub {
    fn start(&mut self, ctx: &mut Ctx) {
        self.fetcher.start(ctx);
    }

    fn on_message(&mut self, ctx: &mut Ctx, _from: ComponentId, msg: Msg) {
        match msg {
            Msg::FetchResponse { topic, request, result } => {
                for e in self.fetcher.on_response(ctx, topic, request, result) {
                    if ctx.metrics.deliver(self.me, &e.record, ctx.now) {
                        let sources = e.record.sources();
                        ctx.metrics.sink(ctx.now, &sources);
                    }
                }
            }
            Msg::MetadataUpdate { topics } => self.fetcher.on_metadata(ctx, &topics),
            _ => {}
        }
    }

    fn on_timer(&mut self, ctx: &mut Ctx, timer: Timer) {
        self.fetcher.on_timer(ctx, &timer);
    }

    fn crash(&mut self, _ctx: &mut Ctx) {
        self.fetcher.crash();
    }

    fn recover(&mut self, ctx: &mut Ctx) {
        self.fetcher.start(ctx);
    }
}
