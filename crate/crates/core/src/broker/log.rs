use std::collections::HashMap;
use std::sync::Arc;

use crate::proto::{AppendResult, Entries, LogEntry, Record};
use crate::sim::ComponentId;

/// One broker's copy of a topic log. Offsets are dense from zero.
#[derive(Debug, Clone, Default)]
pub struct TopicLog {
    entries: Vec<LogEntry>,
    by_id: HashMap<(ComponentId, u64), u64>,
}

/// Outcome of applying a leader's append on a follower.
#[derive(Debug, Clone, PartialEq)]
pub struct FollowerAppend {
    pub result: AppendResult,
    pub truncated: Vec<LogEntry>,
}

impl TopicLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn log_end(&self) -> u64 {
        self.entries.len() as u64
    }

    pub fn entries(&self) -> &[LogEntry] {
        &self.entries
    }

    pub fn epoch_at(&self, offset: u64) -> Option<u32> {
        self.entries.get(offset as usize).map(|e| e.epoch)
    }

    pub fn last_epoch(&self) -> u32 {
        self.entries.last().map_or(0, |e| e.epoch)
    }

    pub fn offset_of(&self, producer: ComponentId, seq: u64) -> Option<u64> {
        self.by_id.get(&(producer, seq)).copied()
    }

    pub fn contains(&self, producer: ComponentId, seq: u64) -> bool {
        self.by_id.contains_key(&(producer, seq))
    }

    fn push(&mut self, entry: LogEntry) {
        debug_assert_eq!(entry.offset, self.log_end());
        self.by_id
            .insert((entry.record.producer, entry.record.seq), entry.offset);
        self.entries.push(entry);
    }

    /// Leader-side append with idempotent dedupe. Returns the record's offset
    /// and whether it was newly written.
    pub fn append(&mut self, record: &Record, epoch: u32) -> (u64, bool) {
        if let Some(off) = self.offset_of(record.producer, record.seq) {
            return (off, false);
        }
        let offset = self.log_end();
        self.push(LogEntry {
            offset,
            epoch,
            record: Arc::new(record.clone()),
        });
        (offset, true)
    }

    /// Drop every entry at `offset` and beyond.
    pub fn truncate(&mut self, offset: u64) -> Vec<LogEntry> {
        if offset >= self.log_end() {
            return Vec::new();
        }
        let removed = self.entries.split_off(offset as usize);
        for e in &removed {
            self.by_id.remove(&(e.record.producer, e.record.seq));
        }
        removed
    }

    /// Up to `max_bytes` of entries in `[from, to)`; at least one if any.
    pub fn slice(&self, from: u64, to: u64, max_bytes: u64) -> Entries {
        let to = to.min(self.log_end());
        if from >= to {
            return Arc::from(Vec::new());
        }
        let mut bytes = 0;
        let mut out = Vec::new();
        for e in &self.entries[from as usize..to as usize] {
            let sz = u64::from(e.record.size_bytes);
            if !out.is_empty() && bytes + sz > max_bytes {
                break;
            }
            bytes += sz;
            out.push(e.clone());
        }
        Arc::from(out)
    }

    /// First offset of the run of `epoch` entries ending at `offset`.
    fn first_of_epoch_run(&self, offset: u64) -> u64 {
        let epoch = self.entries[offset as usize].epoch;
        let mut i = offset as usize;
        while i > 0 && self.entries[i - 1].epoch == epoch {
            i -= 1;
        }
        i as u64
    }

    /// Highest offset holding `epoch`, if any.
    pub fn last_offset_of_epoch(&self, epoch: u32) -> Option<u64> {
        self.entries
            .iter()
            .rposition(|e| e.epoch == epoch)
            .map(|i| i as u64)
    }

    /// Apply the leader's entries starting at `from`, after checking that the
    /// entry before `from` carries `prev_epoch`.
    pub fn follower_append(
        &mut self,
        from: u64,
        prev_epoch: u32,
        entries: &[LogEntry],
        leader_log_end: u64,
    ) -> FollowerAppend {
        let end = self.log_end();
        if from > end {
            return FollowerAppend {
                result: AppendResult::Gap { log_end: end },
                truncated: Vec::new(),
            };
        }
        if from > 0 {
            let mine = self.entries[from as usize - 1].epoch;
            if mine != prev_epoch {
                return FollowerAppend {
                    result: AppendResult::Diverging {
                        conflict_epoch: mine,
                        conflict_first_offset: self.first_of_epoch_run(from - 1),
                    },
                    truncated: Vec::new(),
                };
            }
        }
        let mut truncated = Vec::new();
        for e in entries {
            match self.epoch_at(e.offset) {
                Some(epoch) if epoch == e.epoch => continue,
                Some(_) => truncated.extend(self.truncate(e.offset)),
                None => {}
            }
            self.push(e.clone());
        }
        let matched = from + entries.len() as u64;
        // The leader sent through its end: anything past it is stale.
        if matched == leader_log_end {
            truncated.extend(self.truncate(leader_log_end));
        }
        FollowerAppend {
            result: AppendResult::Ok { log_end: matched },
            truncated,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proto::{Payload, TopicId};
    use crate::sim::SimTime;

    fn rec(seq: u64) -> Record {
        Record {
            topic: TopicId(0),
            producer: ComponentId(9),
            seq,
            size_bytes: 10,
            produce_time: SimTime::ZERO,
            payload: Payload::Blob,
            lineage: Arc::from(Vec::new()),
        }
    }

    fn leader_with(epochs: &[u32]) -> TopicLog {
        let mut log = TopicLog::new();
        for (i, e) in epochs.iter().enumerate() {
            log.append(&rec(i as u64 + 100 * u64::from(*e)), *e);
        }
        log
    }

    #[test]
    fn dedupe_returns_existing_offset() {
        let mut log = TopicLog::new();
        assert_eq!(log.append(&rec(1), 1), (0, true));
        assert_eq!(log.append(&rec(2), 1), (1, true));
        assert_eq!(log.append(&rec(1), 1), (0, false));
        assert_eq!(log.log_end(), 2);
    }

    #[test]
    fn stale_suffix_is_truncated_when_leader_log_is_shorter() {
        let leader = leader_with(&[1, 1, 2]);
        let mut follower = leader_with(&[1, 1, 1, 1]);
        // follower holds epoch-1 entries at offsets 2 and 3 that the leader replaced
        let out = follower.follower_append(2, 1, &leader.entries()[2..], leader.log_end());
        assert_eq!(out.result, AppendResult::Ok { log_end: 3 });
        assert_eq!(out.truncated.len(), 2);
        assert_eq!(follower.log_end(), 3);
        assert_eq!(follower.epoch_at(2), Some(2));
    }

    #[test]
    fn divergence_reports_first_offset_of_conflicting_epoch() {
        let mut follower = leader_with(&[1, 1, 3, 3]);
        let out = follower.follower_append(4, 2, &[], 4);
        assert_eq!(
            out.result,
            AppendResult::Diverging {
                conflict_epoch: 3,
                conflict_first_offset: 2
            }
        );
    }

    #[test]
    fn gap_when_leader_is_ahead() {
        let mut follower = leader_with(&[1]);
        assert_eq!(
            follower.follower_append(3, 1, &[], 3).result,
            AppendResult::Gap { log_end: 1 }
        );
    }

    #[test]
    fn repeated_append_is_idempotent() {
        let leader = leader_with(&[1, 1, 1]);
        let mut follower = TopicLog::new();
        follower.follower_append(0, 0, leader.entries(), 3);
        let out = follower.follower_append(0, 0, leader.entries(), 3);
        assert!(out.truncated.is_empty());
        assert_eq!(follower.log_end(), 3);
    }
}
