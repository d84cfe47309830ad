//! Mechanism-design engine for hierarchical semantic-communication markets.
//!
//! Two trading layers share the types in [`market`]:
//!
//! * semantic model trading, a single-item auction whose per-bidder monotone
//!   bid transforms are learned to maximise provider revenue ([`monotone`]);
//! * semantic information trading, a two-stage double auction matching
//!   information buyers to seller devices ([`double_auction`]).
//!
//! [`metrics`] provides the BLEU / sentence-similarity scores and the
//! score-vs-dimension curves that drive valuations, and [`baselines`] holds
//! the reference mechanisms used for comparison.

pub mod baselines;
pub mod double_auction;
pub mod error;
pub mod market;
pub mod metrics;
pub mod monotone;
pub mod outcome;

pub use error::{Error, Result};
pub use outcome::{AuctionEngine, AuctionOutcome};
