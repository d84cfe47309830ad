//! Experiment runner for the semantic-communication trading engine.
//!
//! Each subcommand of the `semtrade` binary lives in [`commands`] and is a
//! pure function of the resolved [`config::Config`]: the same config and
//! seed give byte-identical CSV bodies.

pub mod commands;
pub mod config;
pub mod engines;
pub mod error;
pub mod output;
pub mod scenario;
pub mod seeds;
pub mod stats;
