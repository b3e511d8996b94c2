//! Producer stubs: synthetic size-only records, lines of a file, or files of
//! a directory.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::model::{ProducerConfig, ProducerMode};
use crate::proto::{Msg, Payload, TopicId};
use crate::sim::{ComponentId, SimTime};
use crate::world::{Actor, Ctx, Timer};

use super::core::ProducerCore;

/// One data element read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceItem {
    pub payload: Payload,
    pub size_bytes: u32,
}

fn stem_key(name: &str) -> String {
    let stem = Path::new(name)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    stem.split('-').next().unwrap_or("").to_string()
}

/// Parse one line: `key<TAB>rest` is keyed, and a numeric `rest` becomes a pair.
pub fn parse_line(line: &str) -> Payload {
    match line.split_once('\t') {
        Some((key, rest)) => match rest.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => Payload::Pair {
                key: Arc::from(key),
                value: v,
            },
            _ => Payload::Text {
                key: Arc::from(key),
                text: Arc::from(rest),
            },
        },
        None => Payload::Text {
            key: Arc::from(""),
            text: Arc::from(line),
        },
    }
}

/// Non-empty lines of a file, one item each.
pub fn load_lines(path: &Path) -> std::io::Result<Vec<SourceItem>> {
    let text = fs::read_to_string(path)?;
    Ok(text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| SourceItem {
            payload: parse_line(l),
            size_bytes: l.len() as u32,
        })
        .collect())
}

/// Every regular file of a directory, sorted by name, one item each. The key
/// is the file stem up to the first `-`.
pub fn load_directory(path: &Path) -> std::io::Result<Vec<SourceItem>> {
    let mut names: Vec<_> = fs::read_dir(path)?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_file())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|name| {
            let text = fs::read_to_string(path.join(&name))?;
            Ok(SourceItem {
                size_bytes: text.len() as u32,
                payload: Payload::Text {
                    key: Arc::from(stem_key(&name)),
                    text: Arc::from(text),
                },
            })
        })
        .collect()
}

pub struct ProducerStub {
    core: ProducerCore,
    cfg: ProducerConfig,
    topics: Vec<TopicId>,
    weights: Vec<f64>,
    items: Vec<SourceItem>,
    /// Index of the next element to emit.
    next: u64,
    /// Pacing restarts from here after a stall or restart.
    origin: SimTime,
    origin_bytes: u64,
    emitted_bytes: u64,
    generation: u64,
    stalled: bool,
    crashed: bool,
}

impl ProducerStub {
    pub fn new(core: ProducerCore, cfg: ProducerConfig, topics: Vec<TopicId>, items: Vec<SourceItem>) -> Self {
        let weights = cfg.topics.iter().map(|w| w.weight).collect();
        ProducerStub {
            core,
            cfg,
            topics,
            weights,
            items,
            next: 0,
            origin: SimTime::ZERO,
            origin_bytes: 0,
            emitted_bytes: 0,
            generation: 0,
            stalled: false,
            crashed: false,
        }
    }

    pub fn id(&self) -> ComponentId {
        self.core.me
    }

    pub fn emitted(&self) -> u64 {
        self.next
    }

    pub fn is_stalled(&self) -> bool {
        self.stalled
    }

    pub fn unacked_records(&self) -> usize {
        self.core.unacked_records()
    }

    fn finished(&self) -> bool {
        self.cfg.mode != ProducerMode::SyntheticRate && self.next as usize >= self.items.len()
    }

    fn item_size(&self) -> u32 {
        match self.cfg.mode {
            ProducerMode::SyntheticRate => self.cfg.record_size_bytes,
            _ => self.items[self.next as usize].size_bytes,
        }
    }

    /// Emission time of the next element under the pacing rule.
    fn due(&self) -> SimTime {
        let bytes = (self.emitted_bytes - self.origin_bytes) as f64;
        let us = (bytes * 8_000.0 / self.cfg.rate_kbps).floor() as u64;
        self.origin + crate::sim::SimDuration::from_micros(us)
    }

    fn schedule_next(&mut self, ctx: &mut Ctx) {
        if self.finished() {
            return;
        }
        let at = self.due();
        ctx.timer_at(
            at,
            Timer::Emit {
                generation: self.generation,
            },
        );
    }

    fn restart_pacing(&mut self, ctx: &mut Ctx) {
        self.generation += 1;
        self.origin = ctx.now;
        self.origin_bytes = self.emitted_bytes;
        self.schedule_next(ctx);
    }

    fn emit(&mut self, ctx: &mut Ctx) {
        if self.finished() {
            return;
        }
        let size = self.item_size();
        if !self.core.fits(u64::from(size)) {
            self.stalled = true;
            ctx.log(
                "BufferFullStall",
                format!(
                    "unacked={} unacked_bytes={} buffer_bytes={}",
                    self.core.unacked_records(),
                    self.core.unacked_bytes(),
                    self.cfg.buffer_bytes
                ),
            );
            return;
        }
        let topic = if self.topics.len() == 1 {
            self.topics[0]
        } else {
            self.topics[ctx.rng.pick_weighted(&self.weights)]
        };
        let payload = match self.cfg.mode {
            ProducerMode::SyntheticRate => Payload::Blob,
            _ => self.items[self.next as usize].payload.clone(),
        };
        let rec = self.core.record(ctx.now, topic, size, payload, Arc::from(Vec::new()));
        self.core.submit(ctx, topic, vec![rec], true);
        self.next += 1;
        self.emitted_bytes += u64::from(size);
        self.schedule_next(ctx);
    }

    fn space_freed(&mut self, ctx: &mut Ctx) {
        if self.stalled && self.core.fits(u64::from(self.item_size())) {
            self.stalled = false;
            ctx.log("BufferResume", format!("unacked={}", self.core.unacked_records()));
            self.restart_pacing(ctx);
        }
    }
}

impl Actor for ProducerStub {
    fn start(&mut self, ctx: &mut Ctx) {
        self.restart_pacing(ctx);
    }

    fn on_message(&mut self, ctx: &mut Ctx, _from: ComponentId, msg: Msg) {
        match msg {
            Msg::ProduceResponse { batch, result, .. } => {
                if self.core.on_response(ctx, batch, result) {
                    self.space_freed(ctx);
                }
            }
            Msg::MetadataUpdate { topics } => self.core.on_metadata(ctx, &topics),
            _ => {}
        }
    }

    fn on_timer(&mut self, ctx: &mut Ctx, timer: Timer) {
        match timer {
            Timer::Emit { generation } if generation == self.generation && !self.crashed => self.emit(ctx),
            Timer::BatchRetry { batch, attempt } => {
                if self.core.on_retry(ctx, batch, attempt) {
                    self.space_freed(ctx);
                }
            }
            _ => {}
        }
    }

    fn crash(&mut self, ctx: &mut Ctx) {
        self.crashed = true;
        self.stalled = false;
        self.core.crash(ctx);
    }

    fn recover(&mut self, ctx: &mut Ctx) {
        self.crashed = false;
        self.restart_pacing(ctx);
    }
}
