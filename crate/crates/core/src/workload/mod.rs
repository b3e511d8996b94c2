//! Application components: producer and consumer stubs, processing jobs
//! and a key-value store.

mod consumer;
mod core;
mod fetcher;
mod job;
mod operators;
mod producer;
mod store;

pub use consumer::ConsumerStub;
pub use core::{MetadataView, ProducerCore};
pub use fetcher::Fetcher;
pub use job::{stage_cost, Job, JobOutput};
pub use operators::{Item, MalformedRecordError, Operator};
pub use producer::{load_directory, load_lines, parse_line, ProducerStub, SourceItem};
pub use store::KvStore;
