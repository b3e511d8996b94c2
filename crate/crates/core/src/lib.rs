//! Deterministic discrete-event emulation of distributed stream-processing
//! pipelines: hosts, switches and links, a replicated log broker cluster,
//! producers, consumers, processing jobs and fault injection.

pub mod broker;
pub mod faults;
pub mod metrics;
pub mod model;
pub mod net;
pub mod proto;
pub mod scenarios;
pub mod sim;
pub mod workload;
pub mod world;
