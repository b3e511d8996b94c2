//! Attribute overrides for parameter sweeps.

use std::str::FromStr;

use streamforge::model::{validate, ExperimentSpec, SpecError};
use streamforge::sim::SimTime;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SweepError {
    #[error("sweep must look like `<attr>=<v1,v2,...>`, got `{0}`")]
    Syntax(String),
    #[error("unknown sweep attribute `{0}`")]
    UnknownAttr(String),
    #[error("`{attr}` has no target `{target}`")]
    MissingTarget { attr: String, target: String },
    #[error("value `{value}` does not type-check for `{attr}`: expected {expected}")]
    BadValue {
        attr: String,
        value: String,
        expected: &'static str,
    },
    #[error("override leaves an invalid spec: {0}")]
    Invalid(String),
}

/// A typed override of one spec attribute.
#[derive(Debug, Clone, PartialEq)]
pub enum Attr {
    LinkLat(String),
    LinkBw(String),
    LinkLoss(String),
    NodeCpu(String),
    Duration,
    Seed,
    /// Total number of copies of a host, each attached like the original.
    Count(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Int(u64),
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Float(v) => write!(f, "{v}"),
            Value::Int(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub name: String,
    pub attr: Attr,
    pub values: Vec<Value>,
}

impl Attr {
    pub fn parse(raw: &str) -> Result<Self, SweepError> {
        let unknown = || SweepError::UnknownAttr(raw.to_string());
        if raw == "graph.duration" {
            return Ok(Attr::Duration);
        }
        if raw == "graph.seed" {
            return Ok(Attr::Seed);
        }
        if let Some(node) = raw.strip_prefix("count:") {
            return Ok(Attr::Count(node.to_string()));
        }
        let (scope, rest) = raw.split_once(':').ok_or_else(unknown)?;
        let (id, field) = rest.rsplit_once('.').ok_or_else(unknown)?;
        let id = id.to_string();
        match (scope, field) {
            ("link", "lat") => Ok(Attr::LinkLat(id)),
            ("link", "bw") => Ok(Attr::LinkBw(id)),
            ("link", "loss") => Ok(Attr::LinkLoss(id)),
            ("node", "cpuPercentage") => Ok(Attr::NodeCpu(id)),
            _ => Err(unknown()),
        }
    }

    fn integral(&self) -> bool {
        matches!(self, Attr::Seed | Attr::Count(_))
    }

    fn parse_value(&self, name: &str, raw: &str) -> Result<Value, SweepError> {
        let bad = |expected| SweepError::BadValue {
            attr: name.to_string(),
            value: raw.to_string(),
            expected,
        };
        if self.integral() {
            let v = u64::from_str(raw).map_err(|_| bad("a non-negative integer"))?;
            if matches!(self, Attr::Count(_)) && v == 0 {
                return Err(bad("a count of at least 1"));
            }
            Ok(Value::Int(v))
        } else {
            let v = f64::from_str(raw).map_err(|_| bad("a number"))?;
            if !v.is_finite() {
                return Err(bad("a finite number"));
            }
            Ok(Value::Float(v))
        }
    }
}

/// Expand `a..b` integer ranges inside a value list.
fn expand(raw: &str) -> Vec<String> {
    let mut out = Vec::new();
    for item in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item.split_once("..") {
            Some((a, b)) => match (a.parse::<u64>(), b.parse::<u64>()) {
                (Ok(a), Ok(b)) if a <= b => out.extend((a..=b).map(|v| v.to_string())),
                _ => out.push(item.to_string()),
            },
            None => out.push(item.to_string()),
        }
    }
    out
}

impl Sweep {
    pub fn parse(raw: &str) -> Result<Self, SweepError> {
        let (name, values) = raw.split_once('=').ok_or_else(|| SweepError::Syntax(raw.to_string()))?;
        let attr = Attr::parse(name)?;
        let values = expand(values)
            .iter()
            .map(|v| attr.parse_value(name, v))
            .collect::<Result<Vec<_>, _>>()?;
        if values.is_empty() {
            return Err(SweepError::Syntax(raw.to_string()));
        }
        Ok(Sweep {
            name: name.to_string(),
            attr,
            values,
        })
    }

    /// Check that every target exists before running anything.
    pub fn check(&self, spec: &ExperimentSpec) -> Result<(), SweepError> {
        for v in &self.values {
            apply(spec.clone(), &self.name, &self.attr, v)?;
        }
        Ok(())
    }
}

fn float(v: &Value) -> f64 {
    match v {
        Value::Float(f) => *f,
        Value::Int(i) => *i as f64,
    }
}

fn int(v: &Value) -> u64 {
    match v {
        Value::Int(i) => *i,
        Value::Float(f) => *f as u64,
    }
}

pub fn apply(mut spec: ExperimentSpec, name: &str, attr: &Attr, v: &Value) -> Result<ExperimentSpec, SweepError> {
    let missing = |target: &str| SweepError::MissingTarget {
        attr: name.to_string(),
        target: target.to_string(),
    };
    match attr {
        Attr::LinkLat(id) => spec.link_mut(id).ok_or_else(|| missing(id))?.lat_ms = float(v),
        Attr::LinkBw(id) => spec.link_mut(id).ok_or_else(|| missing(id))?.bw_mbps = float(v),
        Attr::LinkLoss(id) => spec.link_mut(id).ok_or_else(|| missing(id))?.loss_pct = float(v),
        Attr::NodeCpu(id) => spec.node_mut(id).ok_or_else(|| missing(id))?.cpu_percentage = float(v),
        Attr::Duration => spec.duration = SimTime::from_secs_f64(float(v)),
        Attr::Seed => spec.seed = int(v),
        Attr::Count(id) => {
            let node = spec.node(id).ok_or_else(|| missing(id))?.clone();
            let links: Vec<_> = spec
                .links
                .iter()
                .filter(|l| l.source == *id || l.target == *id)
                .cloned()
                .collect();
            for k in 2..=int(v) {
                let copy_id = format!("{id}x{k}");
                let mut copy = node.clone();
                copy.id = copy_id.clone();
                spec.nodes.push(copy);
                for l in &links {
                    let mut l = l.clone();
                    if l.source == *id {
                        l.source = copy_id.clone();
                        l.src_port = None;
                    }
                    if l.target == *id {
                        l.target = copy_id.clone();
                        l.dst_port = None;
                    }
                    l.id = format!("{}-{}", l.source, l.target);
                    spec.links.push(l);
                }
            }
        }
    }
    validate(&spec).map_err(|e: SpecError| SweepError::Invalid(e.to_string()))?;
    Ok(spec)
}

/// Directory-safe label of one sweep point.
pub fn point_label(name: &str, v: &Value) -> String {
    let clean: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect();
    format!("{clean}={v}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use streamforge::model::{LinkSpec, NodeKind, NodeSpec};

    fn spec() -> ExperimentSpec {
        ExperimentSpec {
            nodes: vec![NodeSpec::new("h1", NodeKind::Host), NodeSpec::new("s1", NodeKind::Switch)],
            links: vec![LinkSpec::new("h1-s1", "h1", "s1")],
            topics: vec![],
            faults: vec![],
            seed: 1,
            duration: SimTime::from_secs(10),
            topic_cfg: None,
            fault_cfg: None,
            config_dir: ".".into(),
        }
    }

    #[test]
    fn parses_link_sweep() {
        let s = Sweep::parse("link:h2-s1.lat=10,50,100,150").unwrap();
        assert_eq!(s.attr, Attr::LinkLat("h2-s1".into()));
        assert_eq!(s.values.len(), 4);
    }

    #[test]
    fn count_range_expands() {
        let s = Sweep::parse("count:h5=1..12").unwrap();
        assert_eq!(s.values.len(), 12);
        assert_eq!(s.values[0], Value::Int(1));
    }

    #[test]
    fn values_type_check() {
        assert!(matches!(
            Sweep::parse("graph.seed=1.5"),
            Err(SweepError::BadValue { .. })
        ));
        assert!(matches!(
            Sweep::parse("link:x.lat=fast"),
            Err(SweepError::BadValue { .. })
        ));
        assert!(matches!(Sweep::parse("link:x.color=1"), Err(SweepError::UnknownAttr(_))));
    }

    #[test]
    fn missing_target_is_reported() {
        let s = Sweep::parse("link:nope.lat=1").unwrap();
        assert!(matches!(s.check(&spec()), Err(SweepError::MissingTarget { .. })));
    }

    #[test]
    fn count_clones_host_and_link() {
        let out = apply(spec(), "count:h1", &Attr::Count("h1".into()), &Value::Int(3)).unwrap();
        assert_eq!(out.nodes.len(), 4);
        assert!(out.link("h1x3-s1").is_some());
    }

    #[test]
    fn invalid_override_is_rejected() {
        let err = apply(spec(), "link:h1-s1.loss", &Attr::LinkLoss("h1-s1".into()), &Value::Float(150.0));
        assert!(matches!(err, Err(SweepError::Invalid(_))));
    }
}
