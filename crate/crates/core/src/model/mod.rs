//! Experiment description: GraphML topology plus flat component configs.

mod components;
mod config;
mod error;
mod graphml;
mod types;

pub use components::*;
pub use config::{load_component_config, load_rows, parse_flat, parse_rows, ConfigMap};
pub use error::{ConfigError, SpecError};
pub use graphml::{load_experiment, parse_experiment, to_graphml, validate, EDGE_KEYS, GRAPH_KEYS, NODE_KEYS};
pub use types::*;
