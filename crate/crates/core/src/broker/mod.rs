//! Replicated topic logs, leadership and the cluster controller.

#[allow(clippy::module_inception)]
mod broker;
mod controller;
mod log;

pub use broker::Broker;
pub use controller::{Controller, TopicAssignment};
pub use log::{FollowerAppend, TopicLog};
