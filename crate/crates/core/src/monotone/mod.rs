//! Learned single-item auction for semantic model trading.
//!
//! Each bidder's bid passes through a strictly increasing min-max network;
//! the item goes to the highest transformed bid (against a zero dummy) and
//! the winner pays the inverse transform of the second-price-with-zero-reserve
//! price. Any strictly increasing transforms keep the auction truthful and
//! individually rational, so training only has to chase revenue.

mod net;
mod persist;
mod train;

pub use net::{ActiveUnit, MonotoneAuction, MonotoneNetParams};
pub use persist::{load_params, save_params};
pub use train::{
    hard_revenue, kink_margin, loss_and_gradient, train, EpochStats, LossGradient, Optimizer, Sharing,
    TrainConfig, TrainReport,
};
