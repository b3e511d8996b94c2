//! Scheduled fault injection.

use thiserror::Error;

use crate::model::{ExperimentSpec, FaultKind, FaultSpec};
use crate::sim::SimTime;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("{kind} target {target:?} does not exist")]
pub struct TargetMissingError {
    pub kind: &'static str,
    pub target: String,
}

/// State a fault can act on.
pub trait FaultTarget {
    fn link_down(&mut self, link: &str) -> bool;
    fn link_up(&mut self, link: &str) -> bool;
    fn set_loss(&mut self, link: &str, loss_pct: f64) -> bool;
    fn node_crash(&mut self, node: &str) -> bool;
    fn node_recover(&mut self, node: &str) -> bool;
}

/// Faults of one run in the order they fire.
#[derive(Debug, Clone)]
pub struct FaultTimeline {
    faults: Vec<FaultSpec>,
    applied: Vec<bool>,
}

impl FaultTimeline {
    /// Stable sort by time keeps declaration order for ties.
    pub fn new(mut faults: Vec<FaultSpec>) -> Self {
        faults.sort_by_key(|f| f.at);
        let applied = vec![false; faults.len()];
        FaultTimeline { faults, applied }
    }

    pub fn from_spec(spec: &ExperimentSpec) -> Self {
        Self::new(spec.faults.clone())
    }

    pub fn len(&self) -> usize {
        self.faults.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faults.is_empty()
    }

    pub fn get(&self, i: usize) -> &FaultSpec {
        &self.faults[i]
    }

    pub fn times(&self) -> impl Iterator<Item = (usize, SimTime)> + '_ {
        self.faults.iter().enumerate().map(|(i, f)| (i, f.at))
    }

    pub fn is_applied(&self, i: usize) -> bool {
        self.applied[i]
    }

    pub fn all_applied(&self) -> bool {
        self.applied.iter().all(|a| *a)
    }

    /// Apply fault `i`; returns the detail for the event log. A fault is
    /// never applied twice.
    pub fn apply(&mut self, i: usize, target: &mut dyn FaultTarget) -> Result<Option<String>, TargetMissingError> {
        if self.applied[i] {
            return Ok(None);
        }
        self.applied[i] = true;
        apply_fault(&self.faults[i], target).map(Some)
    }
}

pub fn apply_fault(f: &FaultSpec, target: &mut dyn FaultTarget) -> Result<String, TargetMissingError> {
    let ok = match f.kind {
        FaultKind::LinkDown => target.link_down(&f.target),
        FaultKind::LinkUp => target.link_up(&f.target),
        FaultKind::SetLoss => target.set_loss(&f.target, f.param.unwrap_or(0.0)),
        FaultKind::NodeCrash => target.node_crash(&f.target),
        FaultKind::NodeRecover => target.node_recover(&f.target),
    };
    if !ok {
        return Err(TargetMissingError {
            kind: f.kind.as_str(),
            target: f.target.clone(),
        });
    }
    Ok(match f.param {
        Some(p) if f.kind == FaultKind::SetLoss => format!("{} {} {}", f.kind.as_str(), f.target, p),
        _ => format!("{} {}", f.kind.as_str(), f.target),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Default)]
    struct Recorder(Vec<String>);

    impl FaultTarget for Recorder {
        fn link_down(&mut self, link: &str) -> bool {
            self.0.push(format!("down {link}"));
            link != "missing"
        }
        fn link_up(&mut self, link: &str) -> bool {
            self.0.push(format!("up {link}"));
            true
        }
        fn set_loss(&mut self, link: &str, p: f64) -> bool {
            self.0.push(format!("loss {link} {p}"));
            true
        }
        fn node_crash(&mut self, node: &str) -> bool {
            self.0.push(format!("crash {node}"));
            true
        }
        fn node_recover(&mut self, node: &str) -> bool {
            self.0.push(format!("recover {node}"));
            true
        }
    }

    fn fault(kind: FaultKind, target: &str, s: u64) -> FaultSpec {
        FaultSpec {
            kind,
            target: target.into(),
            at: SimTime::from_secs(s),
            param: None,
        }
    }

    #[test]
    fn timeline_orders_by_time_and_keeps_ties_stable() {
        let t = FaultTimeline::new(vec![
            fault(FaultKind::LinkUp, "a", 360),
            fault(FaultKind::LinkDown, "a", 240),
            fault(FaultKind::NodeCrash, "h1", 240),
        ]);
        let kinds: Vec<_> = (0..t.len()).map(|i| t.get(i).kind).collect();
        assert_eq!(kinds, vec![FaultKind::LinkDown, FaultKind::NodeCrash, FaultKind::LinkUp]);
    }

    #[test]
    fn each_fault_applies_once() {
        let mut t = FaultTimeline::new(vec![fault(FaultKind::LinkDown, "a", 1)]);
        let mut r = Recorder::default();
        assert_eq!(t.apply(0, &mut r).unwrap().as_deref(), Some("linkDown a"));
        assert_eq!(t.apply(0, &mut r).unwrap(), None);
        assert_eq!(r.0, vec!["down a"]);
        assert!(t.all_applied());
    }

    #[test]
    fn missing_target_is_reported() {
        let mut r = Recorder::default();
        let err = apply_fault(&fault(FaultKind::LinkDown, "missing", 1), &mut r).unwrap_err();
        assert_eq!(err.target, "missing");
    }
}
