//! HTTP service and command line for the watson engine.

pub mod app;
pub mod cli;
pub mod config;
pub mod http;
