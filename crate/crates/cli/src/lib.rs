//! Operator tooling and the HTTP service for the design assistant.

pub mod commands;
pub mod config;
pub mod http;

pub use commands::Format;
pub use config::{Config, Overrides};
pub use http::router;
