//! Two-stage double auction matching information buyers to seller devices.
//!
//! Stage one (candidate determination and pricing) runs the single-item
//! engine once per seller over that seller's column of buyer bids and admits
//! the winner when the engine's payment covers the seller's ask. Stage two
//! (candidate elimination) keeps, for every buyer holding several candidate
//! sellers, only the one giving that buyer the highest utility.
//!
//! Sellers and buyers are addressed by their position in the input slices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::market::{buyer_utility, seller_utility, validate_market, Buyer, Seller};
use crate::outcome::{AuctionEngine, AuctionOutcome};

/// A seller matched to a buyer, with the buyer's price and seller's payment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub seller: usize,
    pub buyer: usize,
    pub price: f64,
    pub payment: f64,
}

/// Output of candidate determination, in ascending seller order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CandidateSet {
    pub matches: Vec<Match>,
}

impl CandidateSet {
    pub fn buyers(&self) -> Vec<usize> {
        let mut b: Vec<usize> = self.matches.iter().map(|m| m.buyer).collect();
        b.sort_unstable();
        b.dedup();
        b
    }

    pub fn sellers(&self) -> Vec<usize> {
        self.matches.iter().map(|m| m.seller).collect()
    }

    pub fn assignment(&self, seller: usize) -> Option<usize> {
        self.matches
            .iter()
            .find(|m| m.seller == seller)
            .map(|m| m.buyer)
    }
}

/// Final matching, in ascending seller order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TradeSet {
    pub trades: Vec<Match>,
}

impl TradeSet {
    pub fn len(&self) -> usize {
        self.trades.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trades.is_empty()
    }

    pub fn winning_sellers(&self) -> Vec<usize> {
        self.trades.iter().map(|t| t.seller).collect()
    }

    pub fn winning_buyers(&self) -> Vec<usize> {
        self.trades.iter().map(|t| t.buyer).collect()
    }

    pub fn for_seller(&self, seller: usize) -> Option<&Match> {
        self.trades.iter().find(|t| t.seller == seller)
    }

    pub fn for_buyer(&self, buyer: usize) -> Option<&Match> {
        self.trades.iter().find(|t| t.buyer == buyer)
    }

    pub fn total_price(&self) -> f64 {
        self.trades.iter().map(|t| t.price).sum()
    }

    pub fn total_payment(&self) -> f64 {
        self.trades.iter().map(|t| t.payment).sum()
    }

    /// True when no buyer appears in more than one trade.
    pub fn is_injective(&self) -> bool {
        let mut buyers = self.winning_buyers();
        buyers.sort_unstable();
        buyers.windows(2).all(|w| w[0] != w[1])
    }
}

/// Work counters for complexity checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counters {
    pub engine_calls: usize,
    pub comparisons: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoubleAuctionRun {
    pub candidates: CandidateSet,
    pub trades: TradeSet,
    pub counters: Counters,
}

/// Stage one: one engine call per seller on its bid column; admit the
/// engine's winner when its payment is at least the seller's ask.
pub fn candidate_determination(
    buyers: &[Buyer],
    sellers: &[Seller],
    engine: &dyn AuctionEngine,
    counters: &mut Counters,
) -> Result<CandidateSet> {
    validate_market(buyers, sellers)?;
    let mut set = CandidateSet::default();
    if buyers.is_empty() {
        return Ok(set);
    }
    let mut column = vec![0.0; buyers.len()];
    for (m, seller) in sellers.iter().enumerate() {
        for (n, buyer) in buyers.iter().enumerate() {
            column[n] = buyer.bids[m];
        }
        counters.engine_calls += 1;
        if let AuctionOutcome::Sold { winner, payment } = engine.run(&column)? {
            if payment >= seller.ask {
                set.matches.push(Match {
                    seller: m,
                    buyer: winner,
                    price: payment,
                    payment,
                });
            }
        }
    }
    Ok(set)
}

/// Stage two: each buyer keeps its best candidate seller by `bid - price`.
///
/// Candidates are visited in ascending seller order. An exact utility tie
/// with the buyer's current best is resolved by reservoir sampling, so each
/// of `k` tied sellers survives with probability `1/k`; the random stream is
/// only consumed on ties, in that visiting order.
pub fn candidate_elimination<R: Rng + ?Sized>(
    candidates: &CandidateSet,
    buyers: &[Buyer],
    rng: &mut R,
    counters: &mut Counters,
) -> TradeSet {
    // (index into candidates, utility, number of tied maxima seen)
    let mut best: Vec<Option<(usize, f64, u32)>> = vec![None; buyers.len()];
    for (i, c) in candidates.matches.iter().enumerate() {
        let utility = buyers[c.buyer].bids[c.seller] - c.price;
        let slot = &mut best[c.buyer];
        match slot {
            None => *slot = Some((i, utility, 1)),
            Some((keep, u, ties)) => {
                counters.comparisons += 1;
                if utility > *u {
                    *slot = Some((i, utility, 1));
                } else if utility == *u {
                    *ties += 1;
                    if rng.gen_range(0..*ties) == 0 {
                        *keep = i;
                    }
                }
            }
        }
    }
    let mut keep: Vec<usize> = best.iter().flatten().map(|(i, _, _)| *i).collect();
    keep.sort_unstable();
    TradeSet {
        trades: keep.into_iter().map(|i| candidates.matches[i]).collect(),
    }
}

/// Both stages, with the elimination tie-break stream seeded by `seed`.
pub fn run_double_auction(
    buyers: &[Buyer],
    sellers: &[Seller],
    engine: &dyn AuctionEngine,
    seed: u64,
) -> Result<DoubleAuctionRun> {
    let mut counters = Counters::default();
    let candidates = candidate_determination(buyers, sellers, engine, &mut counters)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trades = candidate_elimination(&candidates, buyers, &mut rng, &mut counters);
    Ok(DoubleAuctionRun {
        candidates,
        trades,
        counters,
    })
}

/// Realized utilities under true valuations and costs.
#[derive(Debug, Clone, PartialEq)]
pub struct Utilities {
    pub sellers: Vec<f64>,
    pub buyers: Vec<f64>,
}

pub fn utilities(trades: &TradeSet, buyers: &[Buyer], sellers: &[Seller]) -> Utilities {
    let mut u_s = vec![0.0; sellers.len()];
    let mut u_b = vec![0.0; buyers.len()];
    for t in &trades.trades {
        u_s[t.seller] = seller_utility(t.payment, sellers[t.seller].cost(), true);
        u_b[t.buyer] = buyer_utility(buyers[t.buyer].valuation(t.seller, &sellers[t.seller]), t.price, true);
    }
    Utilities {
        sellers: u_s,
        buyers: u_b,
    }
}

pub const TRADE_RECORD_HEADER: &str =
    "seller_id,buyer_id,ask,bid,price,seller_utility,buyer_utility";

/// One trade-record row per matched pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeRecord {
    pub seller_id: usize,
    pub buyer_id: usize,
    pub ask: f64,
    pub bid: f64,
    pub price: f64,
    pub seller_utility: f64,
    pub buyer_utility: f64,
}

impl TradeRecord {
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.seller_id,
            self.buyer_id,
            self.ask,
            self.bid,
            self.price,
            self.seller_utility,
            self.buyer_utility
        )
    }
}

pub fn trade_records(trades: &TradeSet, buyers: &[Buyer], sellers: &[Seller]) -> Vec<TradeRecord> {
    let u = utilities(trades, buyers, sellers);
    trades
        .trades
        .iter()
        .map(|t| TradeRecord {
            seller_id: sellers[t.seller].id,
            buyer_id: buyers[t.buyer].id,
            ask: sellers[t.seller].ask,
            bid: buyers[t.buyer].bids[t.seller],
            price: t.price,
            seller_utility: u.sellers[t.seller],
            buyer_utility: u.buyers[t.buyer],
        })
        .collect()
}
