//! Command-line front end and HTTP service over the simulator core.

pub mod api;
pub mod cli;
pub mod config;
pub mod jobs;
pub mod output;
pub mod store;
