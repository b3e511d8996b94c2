//! Ordered event queue and the single-threaded run loop.
//!
//! Events are dequeued strictly by `(time, seq)`, where `seq` is a global
//! insertion counter, so two events scheduled for the same instant leave the
//! queue in the order they entered it.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::panic::{self, AssertUnwindSafe};

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::time::{SimDuration, SimTime};

/// Index of a simulated component (broker, producer, network, ...).
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ComponentId(pub u32);

#[derive(Debug, Clone)]
pub struct SimEvent<E> {
    pub time: SimTime,
    pub seq: u64,
    pub target: ComponentId,
    pub payload: E,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("cannot schedule event at {requested} before current clock {now}")]
pub struct SchedulingInPastError {
    pub requested: SimTime,
    pub now: SimTime,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("handler failed at {time} (seq {seq}, target {target:?}): {message}")]
    Handler {
        time: SimTime,
        seq: u64,
        target: ComponentId,
        message: String,
    },
    #[error("handler panicked at {time} (seq {seq}, target {target:?}): {message}")]
    HandlerPanic {
        time: SimTime,
        seq: u64,
        target: ComponentId,
        message: String,
    },
}

pub type HandlerError = Box<dyn std::error::Error + Send + Sync>;

struct Entry<E>(SimEvent<E>);

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.0.time == other.0.time && self.0.seq == other.0.seq
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Entry<E> {
    // BinaryHeap is a max-heap; invert so the earliest (time, seq) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.0.time, other.0.seq).cmp(&(self.0.time, self.0.seq))
    }
}

/// One dequeued event, as recorded by the optional trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEntry {
    pub time: SimTime,
    pub seq: u64,
    pub target: ComponentId,
}

pub struct EventQueue<E> {
    heap: BinaryHeap<Entry<E>>,
    now: SimTime,
    next_seq: u64,
    processed: u64,
    trace: Option<Vec<TraceEntry>>,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            now: SimTime::ZERO,
            next_seq: 0,
            processed: 0,
            trace: None,
        }
    }

    /// Keep a record of every dequeued `(time, seq, target)`.
    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn trace(&self) -> Option<&[TraceEntry]> {
        self.trace.as_deref()
    }

    /// SHA-256 over the recorded trace; `None` when tracing is off.
    pub fn trace_digest(&self) -> Option<String> {
        let trace = self.trace.as_ref()?;
        let mut hasher = Sha256::new();
        for e in trace {
            hasher.update(e.time.as_micros().to_le_bytes());
            hasher.update(e.seq.to_le_bytes());
            hasher.update(e.target.0.to_le_bytes());
        }
        Some(
            hasher
                .finalize()
                .iter()
                .map(|b| format!("{b:02x}"))
                .collect(),
        )
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn processed(&self) -> u64 {
        self.processed
    }

    pub fn schedule(
        &mut self,
        time: SimTime,
        target: ComponentId,
        payload: E,
    ) -> Result<u64, SchedulingInPastError> {
        if time < self.now {
            return Err(SchedulingInPastError {
                requested: time,
                now: self.now,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry(SimEvent {
            time,
            seq,
            target,
            payload,
        }));
        Ok(seq)
    }

    /// Schedule relative to the current clock; cannot be in the past.
    pub fn schedule_in(&mut self, delay: SimDuration, target: ComponentId, payload: E) -> u64 {
        let at = self.now + delay;
        self.schedule(at, target, payload)
            .expect("relative schedule is never in the past")
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|e| e.0.time)
    }

    /// Dequeue the next event and advance the clock to its time.
    pub fn pop(&mut self) -> Option<SimEvent<E>> {
        let Entry(ev) = self.heap.pop()?;
        debug_assert!(ev.time >= self.now);
        self.now = ev.time;
        self.processed += 1;
        if let Some(trace) = self.trace.as_mut() {
            trace.push(TraceEntry {
                time: ev.time,
                seq: ev.seq,
                target: ev.target,
            });
        }
        Some(ev)
    }

    /// Process every event with `time <= until`, then set the clock to
    /// `until`. Events past the horizon stay queued.
    pub fn run_until<F>(&mut self, until: SimTime, mut handler: F) -> Result<SimTime, SimError>
    where
        F: FnMut(&mut EventQueue<E>, SimEvent<E>) -> Result<(), HandlerError>,
    {
        while self.peek_time().is_some_and(|t| t <= until) {
            let ev = self.pop().expect("peeked");
            let (time, seq, target) = (ev.time, ev.seq, ev.target);
            match panic::catch_unwind(AssertUnwindSafe(|| handler(self, ev))) {
                Ok(Ok(())) => {}
                Ok(Err(e)) => {
                    return Err(SimError::Handler {
                        time,
                        seq,
                        target,
                        message: e.to_string(),
                    })
                }
                Err(panic) => {
                    let message = panic
                        .downcast_ref::<&str>()
                        .map(|s| s.to_string())
                        .or_else(|| panic.downcast_ref::<String>().cloned())
                        .unwrap_or_else(|| "non-string panic payload".to_string());
                    return Err(SimError::HandlerPanic {
                        time,
                        seq,
                        target,
                        message,
                    });
                }
            }
        }
        if until > self.now {
            self.now = until;
        }
        Ok(self.now)
    }
}
