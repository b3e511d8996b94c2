//! Stream operators. Each consumes one item at a time and may emit items
//! immediately or, for windowed kinds, when a window closes.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::model::OperatorKind;
use crate::proto::{Lineage, Payload, SourceTag};
use crate::sim::{SimDuration, SimTime};

#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub payload: Payload,
    pub lineage: Lineage,
    /// Index of the input topic the item (or its origin) came from.
    pub input: usize,
}

impl Item {
    pub fn new(payload: Payload) -> Self {
        Item {
            payload,
            lineage: Arc::from(Vec::new()),
            input: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{op} cannot process record: {reason}")]
pub struct MalformedRecordError {
    pub op: &'static str,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct Acc {
    sum: f64,
    count: u64,
    lineage: Vec<SourceTag>,
}

#[derive(Debug, Clone, Default)]
pub struct JoinWindow {
    left: BTreeMap<Arc<str>, (Arc<str>, Lineage)>,
    right: BTreeMap<Arc<str>, Vec<(f64, Lineage)>>,
}

#[derive(Debug, Clone)]
pub enum Operator {
    SplitWords,
    CountByKey {
        counts: BTreeMap<Arc<str>, u64>,
    },
    WindowedAverage {
        window: SimDuration,
        open: BTreeMap<SimTime, BTreeMap<Arc<str>, Acc>>,
    },
    JoinGroupWindow {
        window: SimDuration,
        open: BTreeMap<SimTime, JoinWindow>,
    },
    PassthroughCost,
}

fn merge(into: &mut Vec<SourceTag>, from: &Lineage) {
    into.extend(from.iter().copied());
}

fn finish(mut tags: Vec<SourceTag>) -> Lineage {
    tags.sort();
    tags.dedup();
    Arc::from(tags)
}

fn malformed(op: OperatorKind, reason: impl Into<String>) -> MalformedRecordError {
    MalformedRecordError {
        op: op.as_str(),
        reason: reason.into(),
    }
}

impl Operator {
    pub fn new(kind: OperatorKind, window: Option<SimDuration>) -> Self {
        let window = window.unwrap_or(SimDuration::from_secs(1));
        match kind {
            OperatorKind::SplitWords => Operator::SplitWords,
            OperatorKind::CountByKey => Operator::CountByKey {
                counts: BTreeMap::new(),
            },
            OperatorKind::WindowedAverage => Operator::WindowedAverage {
                window,
                open: BTreeMap::new(),
            },
            OperatorKind::JoinGroupWindow => Operator::JoinGroupWindow {
                window,
                open: BTreeMap::new(),
            },
            OperatorKind::PassthroughCost => Operator::PassthroughCost,
        }
    }

    pub fn kind(&self) -> OperatorKind {
        match self {
            Operator::SplitWords => OperatorKind::SplitWords,
            Operator::CountByKey { .. } => OperatorKind::CountByKey,
            Operator::WindowedAverage { .. } => OperatorKind::WindowedAverage,
            Operator::JoinGroupWindow { .. } => OperatorKind::JoinGroupWindow,
            Operator::PassthroughCost => OperatorKind::PassthroughCost,
        }
    }

    /// End of the tumbling window containing `now`, for windowed kinds.
    pub fn window_end(&self, now: SimTime) -> Option<SimTime> {
        let w = match self {
            Operator::WindowedAverage { window, .. } | Operator::JoinGroupWindow { window, .. } => *window,
            _ => return None,
        };
        let w = w.as_micros().max(1);
        Some(SimTime::from_micros((now.as_micros() / w + 1) * w))
    }

    pub fn apply(&mut self, now: SimTime, item: Item) -> Result<Vec<Item>, MalformedRecordError> {
        let end = self.window_end(now);
        let kind = self.kind();
        match self {
            Operator::SplitWords => match &item.payload {
                Payload::Text { text, .. } => Ok(text
                    .split_whitespace()
                    .map(|w| Item {
                        payload: Payload::Pair {
                            key: Arc::from(w),
                            value: 1.0,
                        },
                        lineage: item.lineage.clone(),
                        input: item.input,
                    })
                    .collect()),
                _ => Err(malformed(kind, "expected a text record")),
            },
            Operator::CountByKey { counts } => {
                let key: Arc<str> = match &item.payload {
                    Payload::Text { key, .. } | Payload::Pair { key, .. } => key.clone(),
                    Payload::Blob => return Err(malformed(kind, "record has no key")),
                };
                let c = counts.entry(key.clone()).or_insert(0);
                *c += 1;
                Ok(vec![Item {
                    payload: Payload::Pair {
                        key,
                        value: *c as f64,
                    },
                    lineage: item.lineage,
                    input: item.input,
                }])
            }
            Operator::WindowedAverage { open, .. } => {
                let (key, value) = match &item.payload {
                    Payload::Pair { key, value } => (key.clone(), *value),
                    Payload::Text { key, text } => (key.clone(), text.split_whitespace().count() as f64),
                    Payload::Blob => return Err(malformed(kind, "record has no value")),
                };
                let acc = open
                    .entry(end.expect("windowed"))
                    .or_default()
                    .entry(key)
                    .or_default();
                acc.sum += value;
                acc.count += 1;
                merge(&mut acc.lineage, &item.lineage);
                Ok(Vec::new())
            }
            Operator::JoinGroupWindow { open, .. } => {
                let w = open.entry(end.expect("windowed")).or_default();
                match (item.input, &item.payload) {
                    (0, Payload::Text { key, text }) => {
                        w.left
                            .insert(key.clone(), (Arc::from(text.trim()), item.lineage.clone()));
                    }
                    (1, Payload::Pair { key, value }) => {
                        w.right
                            .entry(key.clone())
                            .or_default()
                            .push((*value, item.lineage.clone()));
                    }
                    (i, _) => return Err(malformed(kind, format!("unexpected payload on input {i}"))),
                }
                Ok(Vec::new())
            }
            Operator::PassthroughCost => Ok(vec![item]),
        }
    }

    /// Emit and forget all windows ending at or before `end`.
    pub fn close(&mut self, end: SimTime) -> Vec<Item> {
        let mut out = Vec::new();
        match self {
            Operator::WindowedAverage { open, .. } => {
                let later = open.split_off(&SimTime::from_micros(end.as_micros() + 1));
                for (_, keys) in std::mem::replace(open, later) {
                    for (key, acc) in keys {
                        out.push(Item {
                            payload: Payload::Pair {
                                key,
                                value: acc.sum / acc.count as f64,
                            },
                            lineage: finish(acc.lineage),
                            input: 0,
                        });
                    }
                }
            }
            Operator::JoinGroupWindow { open, .. } => {
                let later = open.split_off(&SimTime::from_micros(end.as_micros() + 1));
                for (_, w) in std::mem::replace(open, later) {
                    let mut groups: BTreeMap<Arc<str>, Acc> = BTreeMap::new();
                    for (id, values) in &w.right {
                        let Some((group, left_lineage)) = w.left.get(id) else { continue };
                        let acc = groups.entry(group.clone()).or_default();
                        merge(&mut acc.lineage, left_lineage);
                        for (v, l) in values {
                            acc.sum += v;
                            acc.count += 1;
                            merge(&mut acc.lineage, l);
                        }
                    }
                    for (key, acc) in groups {
                        out.push(Item {
                            payload: Payload::Pair {
                                key,
                                value: acc.sum / acc.count as f64,
                            },
                            lineage: finish(acc.lineage),
                            input: 0,
                        });
                    }
                }
            }
            _ => {}
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn text(s: &str) -> Item {
        Item::new(Payload::Text {
            key: Arc::from("k"),
            text: Arc::from(s),
        })
    }

    fn pair(k: &str, v: f64) -> Item {
        Item::new(Payload::Pair {
            key: Arc::from(k),
            value: v,
        })
    }

    fn pairs(items: &[Item]) -> Vec<(String, f64)> {
        items
            .iter()
            .map(|i| match &i.payload {
                Payload::Pair { key, value } => (key.to_string(), *value),
                other => panic!("unexpected {other:?}"),
            })
            .collect()
    }

    #[test]
    fn word_count_chain() {
        let mut split = Operator::new(OperatorKind::SplitWords, None);
        let mut count = Operator::new(OperatorKind::CountByKey, None);
        let words = split.apply(SimTime::ZERO, text("a b a")).unwrap();
        assert_eq!(words.len(), 3);
        let mut last = Vec::new();
        for w in words {
            last.extend(count.apply(SimTime::ZERO, w).unwrap());
        }
        assert_eq!(
            pairs(&last),
            vec![("a".into(), 1.0), ("b".into(), 1.0), ("a".into(), 2.0)]
        );
    }

    #[test]
    fn windowed_average_emits_mean_at_close() {
        let mut op = Operator::new(OperatorKind::WindowedAverage, Some(SimDuration::from_secs(10)));
        assert!(op.apply(SimTime::from_secs(1), pair("t1", 4.0)).unwrap().is_empty());
        assert!(op.apply(SimTime::from_secs(7), pair("t1", 6.0)).unwrap().is_empty());
        assert_eq!(op.window_end(SimTime::from_secs(7)), Some(SimTime::from_secs(10)));
        assert_eq!(pairs(&op.close(SimTime::from_secs(10))), vec![("t1".into(), 5.0)]);
        assert!(op.close(SimTime::from_secs(20)).is_empty());
    }

    #[test]
    fn empty_text_gives_no_words() {
        let mut split = Operator::new(OperatorKind::SplitWords, None);
        assert!(split.apply(SimTime::ZERO, text("")).unwrap().is_empty());
    }

    #[test]
    fn blob_is_malformed_for_keyed_operators() {
        let mut count = Operator::new(OperatorKind::CountByKey, None);
        assert!(count.apply(SimTime::ZERO, Item::new(Payload::Blob)).is_err());
    }

    #[test]
    fn join_averages_per_group() {
        let mut op = Operator::new(OperatorKind::JoinGroupWindow, Some(SimDuration::from_secs(5)));
        let left = |id: &str, g: &str| Item {
            input: 0,
            ..Item::new(Payload::Text {
                key: Arc::from(id),
                text: Arc::from(g),
            })
        };
        let right = |id: &str, v: f64| Item { input: 1, ..pair(id, v) };
        let t = SimTime::from_secs(1);
        for i in [left("r1", "north"), left("r2", "north"), left("r3", "south")] {
            op.apply(t, i).unwrap();
        }
        for i in [right("r1", 2.0), right("r2", 4.0), right("r3", 9.0), right("r4", 100.0)] {
            op.apply(t, i).unwrap();
        }
        assert_eq!(
            pairs(&op.close(SimTime::from_secs(5))),
            vec![("north".into(), 3.0), ("south".into(), 9.0)]
        );
    }
}
