//! Scenario pipeline, versioned result store, CLI plumbing and HTTP API.

pub mod config;
pub mod error;
pub mod http;
pub mod pipeline;
pub mod service;
pub mod store;

pub use config::ScenarioConfig;
pub use error::{Result, ServiceError};
pub use service::{ScenarioResult, ScenarioService};
