//! Deterministic discrete-event engine.

mod queue;
mod rng;
mod time;

pub use queue::{
    ComponentId, EventQueue, HandlerError, SchedulingInPastError, SimError, SimEvent, TraceEntry,
};
pub use rng::RandomSource;
pub use time::{SimDuration, SimTime};
