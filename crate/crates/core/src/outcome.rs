use crate::error::Result;

/// Result of one single-item auction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AuctionOutcome {
    Sold { winner: usize, payment: f64 },
    Unsold,
}

impl AuctionOutcome {
    pub fn winner(&self) -> Option<usize> {
        match *self {
            AuctionOutcome::Sold { winner, .. } => Some(winner),
            AuctionOutcome::Unsold => None,
        }
    }

    pub fn payment(&self) -> Option<f64> {
        match *self {
            AuctionOutcome::Sold { payment, .. } => Some(payment),
            AuctionOutcome::Unsold => None,
        }
    }

    /// Seller revenue: the payment, or zero when nothing is sold.
    pub fn revenue(&self) -> f64 {
        self.payment().unwrap_or(0.0)
    }
}

/// A single-item auction: bid vector in, winner and payment out.
///
/// The double auction calls this once per seller with that seller's column of
/// buyer bids. Implementations must be pure so one engine can serve many
/// concurrent market replicas.
pub trait AuctionEngine: Send + Sync {
    fn run(&self, bids: &[f64]) -> Result<AuctionOutcome>;

    fn label(&self) -> &str;
}
