//! Wiring of components onto nodes and the event loop that drives them.

mod ctx;
mod directory;
mod runner;

pub use ctx::{Actor, Ctx, Timer};
pub use directory::{ComponentInfo, Directory, Role, TopicInfo};
pub use runner::{run, Component, RunError, SimOptions, World, NETWORK};
