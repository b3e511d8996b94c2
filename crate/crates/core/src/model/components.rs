//! Typed component configurations and their canonical key sets.

use crate::sim::SimDuration;

use super::config::ConfigMap;
use super::error::ConfigError;

pub const DEFAULT_BUFFER_BYTES: u64 = 16 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProducerMode {
    /// Each non-empty line of a file is one record.
    LineOfFile,
    /// Each file of a directory (sorted by name) is one record.
    FileOfDirectory,
    /// Size-only records paced at a fixed byte rate.
    SyntheticRate,
}

impl ProducerMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ProducerMode::LineOfFile => "lineOfFile",
            ProducerMode::FileOfDirectory => "fileOfDirectory",
            ProducerMode::SyntheticRate => "syntheticRate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicWeight {
    pub topic: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProducerConfig {
    pub mode: ProducerMode,
    pub path: Option<String>,
    pub rate_kbps: f64,
    pub record_size_bytes: u32,
    pub buffer_bytes: u64,
    pub topics: Vec<TopicWeight>,
    pub retry_interval: SimDuration,
    pub produce_timeout: SimDuration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsumerConfig {
    pub topics: Vec<String>,
    pub fetch_max_wait: SimDuration,
    pub retry_interval: SimDuration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    SplitWords,
    CountByKey,
    WindowedAverage,
    JoinGroupWindow,
    PassthroughCost,
}

impl OperatorKind {
    pub fn parse(raw: &str) -> Option<Self> {
        Some(match raw {
            "splitWords" => OperatorKind::SplitWords,
            "countByKey" => OperatorKind::CountByKey,
            "windowedAverage" => OperatorKind::WindowedAverage,
            "joinGroupWindow" => OperatorKind::JoinGroupWindow,
            "passthroughCost" => OperatorKind::PassthroughCost,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OperatorKind::SplitWords => "splitWords",
            OperatorKind::CountByKey => "countByKey",
            OperatorKind::WindowedAverage => "windowedAverage",
            OperatorKind::JoinGroupWindow => "joinGroupWindow",
            OperatorKind::PassthroughCost => "passthroughCost",
        }
    }

    /// Per-record service time when `serviceTimeUs` is not configured.
    pub fn default_service_us(self) -> u64 {
        match self {
            OperatorKind::SplitWords => 50,
            OperatorKind::CountByKey => 20,
            OperatorKind::WindowedAverage => 20,
            OperatorKind::JoinGroupWindow => 20,
            OperatorKind::PassthroughCost => 1_000,
        }
    }

    pub fn is_windowed(self) -> bool {
        matches!(self, OperatorKind::WindowedAverage | OperatorKind::JoinGroupWindow)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobConfig {
    /// Operators applied in order; `kind` may list several, comma separated.
    pub operators: Vec<OperatorKind>,
    pub in_topics: Vec<String>,
    pub out_topic: Option<String>,
    pub service_time_us: Option<u64>,
    pub window: Option<SimDuration>,
    /// Node id of a key-value store receiving the job's output.
    pub store: Option<String>,
    pub fetch_max_wait: SimDuration,
    pub retry_interval: SimDuration,
    pub produce_timeout: SimDuration,
}

impl JobConfig {
    pub fn service_us(&self, op: OperatorKind) -> u64 {
        self.service_time_us.unwrap_or_else(|| op.default_service_us())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoreConfig {
    pub write_latency: SimDuration,
    pub read_latency: SimDuration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrokerConfig {
    pub heartbeat_interval: SimDuration,
    pub session_timeout: SimDuration,
    pub preferred_check_interval: SimDuration,
    pub replica_retry: SimDuration,
    pub max_fetch_bytes: u64,
}

impl Default for BrokerConfig {
    fn default() -> Self {
        BrokerConfig {
            heartbeat_interval: SimDuration::from_secs(1),
            session_timeout: SimDuration::from_secs(6),
            preferred_check_interval: SimDuration::from_secs(5),
            replica_retry: SimDuration::from_millis(500),
            max_fetch_bytes: 1024 * 1024,
        }
    }
}

pub const PRODUCER_KEYS: &[&str] = &[
    "mode",
    "path",
    "rateKbps",
    "recordSizeBytes",
    "bufferBytes",
    "topics",
    "retryIntervalMs",
    "produceTimeoutMs",
];
pub const CONSUMER_KEYS: &[&str] = &["topics", "fetchMaxWaitMs", "retryIntervalMs"];
pub const JOB_KEYS: &[&str] = &[
    "kind",
    "inTopic",
    "outTopic",
    "serviceTimeUs",
    "windowSeconds",
    "store",
    "fetchMaxWaitMs",
    "retryIntervalMs",
    "produceTimeoutMs",
];
pub const STORE_KEYS: &[&str] = &["writeLatencyUs", "readLatencyUs"];
pub const BROKER_KEYS: &[&str] = &[
    "heartbeatIntervalMs",
    "sessionTimeoutMs",
    "preferredCheckIntervalMs",
    "replicaRetryMs",
    "maxFetchBytes",
];

fn millis(cfg: &ConfigMap, key: &str, default: SimDuration) -> Result<SimDuration, ConfigError> {
    match cfg.parse_opt::<f64>(key)? {
        None => Ok(default),
        Some(ms) if ms.is_finite() && ms >= 0.0 => Ok(SimDuration::from_millis_f64(ms)),
        Some(_) => Err(cfg.error_at(key, format!("`{key}` must be a non-negative number"))),
    }
}

fn list(raw: &str) -> Vec<String> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// `A:1,B:3` or plain `A,B` (equal weights).
fn topic_weights(cfg: &ConfigMap) -> Result<Vec<TopicWeight>, ConfigError> {
    let raw = cfg.require("topics")?;
    let mut out = Vec::new();
    for item in list(raw) {
        let (topic, weight) = match item.split_once(':') {
            Some((t, w)) => {
                let w: f64 = w
                    .trim()
                    .parse()
                    .map_err(|_| cfg.error_at("topics", format!("invalid weight in `{item}`")))?;
                (t.trim().to_string(), w)
            }
            None => (item.clone(), 1.0),
        };
        if !(weight.is_finite() && weight > 0.0) {
            return Err(cfg.error_at("topics", format!("weight for `{topic}` must be positive")));
        }
        if out.iter().any(|w: &TopicWeight| w.topic == topic) {
            return Err(cfg.error_at("topics", format!("topic `{topic}` listed twice")));
        }
        out.push(TopicWeight { topic, weight });
    }
    if out.is_empty() {
        return Err(cfg.error_at("topics", "at least one topic is required"));
    }
    Ok(out)
}

impl ProducerConfig {
    pub fn from_map(cfg: &ConfigMap) -> Result<Self, ConfigError> {
        cfg.reject_unknown(PRODUCER_KEYS)?;
        let mode = match cfg.require("mode")? {
            "lineOfFile" => ProducerMode::LineOfFile,
            "fileOfDirectory" => ProducerMode::FileOfDirectory,
            "syntheticRate" => ProducerMode::SyntheticRate,
            other => return Err(cfg.error_at("mode", format!("unknown producer mode `{other}`"))),
        };
        let path = cfg.get("path").map(str::to_string);
        if mode != ProducerMode::SyntheticRate && path.is_none() {
            return Err(cfg.error_at("mode", format!("mode `{}` requires `path`", mode.as_str())));
        }
        let rate_kbps: f64 = cfg
            .parse_opt("rateKbps")?
            .ok_or_else(|| cfg.error_at("rateKbps", "missing required key `rateKbps`"))?;
        if !(rate_kbps.is_finite() && rate_kbps > 0.0) {
            return Err(cfg.error_at("rateKbps", "`rateKbps` must be positive"));
        }
        let record_size_bytes: u32 = match mode {
            ProducerMode::SyntheticRate => cfg.parse_opt("recordSizeBytes")?.ok_or_else(|| {
                cfg.error_at("mode", "syntheticRate requires `recordSizeBytes`")
            })?,
            _ => cfg.parse_or("recordSizeBytes", 0)?,
        };
        if mode == ProducerMode::SyntheticRate && record_size_bytes == 0 {
            return Err(cfg.error_at("recordSizeBytes", "`recordSizeBytes` must be positive"));
        }
        let buffer_bytes: u64 = cfg.parse_or("bufferBytes", DEFAULT_BUFFER_BYTES)?;
        if buffer_bytes == 0 {
            return Err(cfg.error_at("bufferBytes", "`bufferBytes` must be positive"));
        }
        Ok(ProducerConfig {
            mode,
            path,
            rate_kbps,
            record_size_bytes,
            buffer_bytes,
            topics: topic_weights(cfg)?,
            retry_interval: millis(cfg, "retryIntervalMs", SimDuration::from_secs(2))?,
            produce_timeout: millis(cfg, "produceTimeoutMs", SimDuration::from_secs(30))?,
        })
    }
}

impl ConsumerConfig {
    pub fn from_map(cfg: &ConfigMap) -> Result<Self, ConfigError> {
        cfg.reject_unknown(CONSUMER_KEYS)?;
        let topics = list(cfg.require("topics")?);
        if topics.is_empty() {
            return Err(cfg.error_at("topics", "at least one topic is required"));
        }
        Ok(ConsumerConfig {
            topics,
            fetch_max_wait: millis(cfg, "fetchMaxWaitMs", SimDuration::from_millis(500))?,
            retry_interval: millis(cfg, "retryIntervalMs", SimDuration::from_secs(2))?,
        })
    }
}

impl JobConfig {
    pub fn from_map(cfg: &ConfigMap) -> Result<Self, ConfigError> {
        cfg.reject_unknown(JOB_KEYS)?;
        let mut operators = Vec::new();
        for raw in list(cfg.require("kind")?) {
            operators.push(
                OperatorKind::parse(&raw)
                    .ok_or_else(|| cfg.error_at("kind", format!("unknown operator kind `{raw}`")))?,
            );
        }
        if operators.is_empty() {
            return Err(cfg.error_at("kind", "at least one operator is required"));
        }
        let in_topics = list(cfg.require("inTopic")?);
        let joins = operators.first() == Some(&OperatorKind::JoinGroupWindow);
        if joins && in_topics.len() != 2 {
            return Err(cfg.error_at("inTopic", "joinGroupWindow reads exactly two topics"));
        }
        if !joins && in_topics.len() != 1 {
            return Err(cfg.error_at("inTopic", "exactly one input topic expected"));
        }
        if operators.iter().skip(1).any(|k| *k == OperatorKind::JoinGroupWindow) {
            return Err(cfg.error_at("kind", "joinGroupWindow must be the first operator"));
        }
        let window = match cfg.parse_opt::<f64>("windowSeconds")? {
            Some(s) if s.is_finite() && s > 0.0 => Some(SimDuration::from_secs_f64(s)),
            Some(_) => return Err(cfg.error_at("windowSeconds", "`windowSeconds` must be positive")),
            None => None,
        };
        if operators.iter().any(|k| k.is_windowed()) && window.is_none() {
            return Err(cfg.error_at("kind", "windowed operators require `windowSeconds`"));
        }
        let out_topic = cfg.get("outTopic").map(str::to_string);
        let store = cfg.get("store").map(str::to_string);
        if out_topic.is_some() && store.is_some() {
            return Err(cfg.error_at("store", "`outTopic` and `store` are mutually exclusive"));
        }
        Ok(JobConfig {
            operators,
            in_topics,
            out_topic,
            service_time_us: cfg.parse_opt("serviceTimeUs")?,
            window,
            store,
            fetch_max_wait: millis(cfg, "fetchMaxWaitMs", SimDuration::from_millis(500))?,
            retry_interval: millis(cfg, "retryIntervalMs", SimDuration::from_secs(2))?,
            produce_timeout: millis(cfg, "produceTimeoutMs", SimDuration::from_secs(30))?,
        })
    }
}

impl StoreConfig {
    pub fn from_map(cfg: &ConfigMap) -> Result<Self, ConfigError> {
        cfg.reject_unknown(STORE_KEYS)?;
        Ok(StoreConfig {
            write_latency: SimDuration::from_micros(cfg.parse_or("writeLatencyUs", 1_000)?),
            read_latency: SimDuration::from_micros(cfg.parse_or("readLatencyUs", 500)?),
        })
    }
}

impl BrokerConfig {
    pub fn from_map(cfg: &ConfigMap) -> Result<Self, ConfigError> {
        cfg.reject_unknown(BROKER_KEYS)?;
        let d = BrokerConfig::default();
        let out = BrokerConfig {
            heartbeat_interval: millis(cfg, "heartbeatIntervalMs", d.heartbeat_interval)?,
            session_timeout: millis(cfg, "sessionTimeoutMs", d.session_timeout)?,
            preferred_check_interval: millis(cfg, "preferredCheckIntervalMs", d.preferred_check_interval)?,
            replica_retry: millis(cfg, "replicaRetryMs", d.replica_retry)?,
            max_fetch_bytes: cfg.parse_or("maxFetchBytes", d.max_fetch_bytes)?,
        };
        for (key, v) in [
            ("heartbeatIntervalMs", out.heartbeat_interval),
            ("preferredCheckIntervalMs", out.preferred_check_interval),
            ("replicaRetryMs", out.replica_retry),
        ] {
            if v == SimDuration::ZERO {
                return Err(cfg.error_at(key, format!("`{key}` must be positive")));
            }
        }
        if out.session_timeout <= out.heartbeat_interval {
            return Err(cfg.error_at("sessionTimeoutMs", "session timeout must exceed the heartbeat interval"));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::config::parse_flat;

    fn map(text: &str) -> ConfigMap {
        parse_flat(text, "t.yaml").unwrap()
    }

    #[test]
    fn synthetic_producer_defaults() {
        let p = ProducerConfig::from_map(&map(
            "mode: syntheticRate\nrateKbps: 30\nrecordSizeBytes: 750\ntopics: A:1,B:1\n",
        ))
        .unwrap();
        assert_eq!(p.buffer_bytes, 16 * 1024 * 1024);
        assert_eq!(p.retry_interval, SimDuration::from_secs(2));
        assert_eq!(p.produce_timeout, SimDuration::from_secs(30));
        assert_eq!(p.topics.len(), 2);
    }

    #[test]
    fn producer_rejects_unknown_key() {
        let err = ProducerConfig::from_map(&map(
            "mode: syntheticRate\nrateKbps: 30\nrecordSizeBytes: 750\ntopics: A\nfoo: 1\n",
        ))
        .unwrap_err();
        assert!(err.to_string().contains("foo"));
    }

    #[test]
    fn job_chain_and_window_rules() {
        let j = JobConfig::from_map(&map("kind: splitWords,countByKey\ninTopic: raw-data\n")).unwrap();
        assert_eq!(j.operators, vec![OperatorKind::SplitWords, OperatorKind::CountByKey]);
        assert_eq!(j.service_us(OperatorKind::SplitWords), 50);
        assert!(JobConfig::from_map(&map("kind: windowedAverage\ninTopic: a\n")).is_err());
        assert!(JobConfig::from_map(&map("kind: joinGroupWindow\ninTopic: a\nwindowSeconds: 5\n")).is_err());
        let join = JobConfig::from_map(&map("kind: joinGroupWindow\ninTopic: a,b\nwindowSeconds: 5\n")).unwrap();
        assert_eq!(join.in_topics, vec!["a", "b"]);
    }

    #[test]
    fn broker_timeouts_must_be_consistent() {
        assert!(BrokerConfig::from_map(&map("sessionTimeoutMs: 500\n")).is_err());
        let b = BrokerConfig::from_map(&map("sessionTimeoutMs: 10000\n")).unwrap();
        assert_eq!(b.session_timeout, SimDuration::from_secs(10));
    }
}
