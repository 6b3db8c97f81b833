//! Runner for orgtree experiments: JSON configs, deterministic simulation
//! loops, JSONL traces, offline detection, field comparisons and SVG
//! snapshots.

pub mod config;
pub mod error;
pub mod field;
pub mod render;
pub mod run;
pub mod trace;

pub use config::{Config, ConfigError};
pub use error::RunError;
