//! Reference mechanisms: first- and second-price auctions, a Monte-Carlo
//! estimate of the revenue-optimal auction for i.i.d. uniform bidders, and
//! the double auction run with a plain second-price engine.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::double_auction::{run_double_auction, DoubleAuctionRun};
use crate::error::{invalid, Result};
use crate::market::{Buyer, Seller};
use crate::outcome::{AuctionEngine, AuctionOutcome};

fn top_two(bids: &[f64]) -> Result<(usize, f64)> {
    if bids.is_empty() {
        return invalid("no bids");
    }
    if let Some(b) = bids.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
        return invalid(format!("bids must be finite and nonnegative, got {b}"));
    }
    let mut winner = 0;
    for (i, &b) in bids.iter().enumerate().skip(1) {
        if b > bids[winner] {
            winner = i;
        }
    }
    let second = bids
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != winner)
        .map(|(_, &b)| b)
        .fold(0.0_f64, f64::max);
    Ok((winner, second))
}

/// Second-price auction with zero reserve. Highest bid wins (lowest index on
/// ties) and pays the second-highest bid, or 0 when alone.
pub fn spa(bids: &[f64]) -> Result<AuctionOutcome> {
    let (winner, payment) = top_two(bids)?;
    Ok(AuctionOutcome::Sold { winner, payment })
}

/// Second-price auction with a reserve price in value space.
pub fn spa_with_reserve(bids: &[f64], reserve: f64) -> Result<AuctionOutcome> {
    let (winner, second) = top_two(bids)?;
    if bids[winner] < reserve {
        return Ok(AuctionOutcome::Unsold);
    }
    Ok(AuctionOutcome::Sold {
        winner,
        payment: second.max(reserve),
    })
}

/// Highest bid wins and pays its own bid.
pub fn first_price(bids: &[f64]) -> Result<AuctionOutcome> {
    let (winner, _) = top_two(bids)?;
    Ok(AuctionOutcome::Sold {
        winner,
        payment: bids[winner],
    })
}

/// Second-price engine for the double auction.
#[derive(Debug, Clone, Default)]
pub struct SpaEngine;

impl AuctionEngine for SpaEngine {
    fn run(&self, bids: &[f64]) -> Result<AuctionOutcome> {
        spa(bids)
    }

    fn label(&self) -> &str {
        "baseline (SPA engine)"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RevenueEstimate {
    pub mechanism: String,
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

const BLOCK: usize = 50_000;

/// Monte-Carlo mean revenue of `mechanism` over i.i.d. `U[lo, hi]` bid
/// profiles of `bidders` bidders.
///
/// Draws are split into fixed-size blocks, each with its own derived seed,
/// and merged in block order, so the estimate does not depend on how many
/// threads run it.
pub fn monte_carlo_revenue<F>(
    label: &str,
    mechanism: F,
    bidders: usize,
    lo: f64,
    hi: f64,
    draws: usize,
    seed: u64,
) -> Result<RevenueEstimate>
where
    F: Fn(&[f64]) -> Result<AuctionOutcome> + Sync,
{
    if bidders == 0 {
        return invalid("need at least one bidder");
    }
    if draws == 0 {
        return invalid("need at least one draw");
    }
    if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi) {
        return invalid(format!("invalid value range [{lo}, {hi}]"));
    }
    let blocks = draws.div_ceil(BLOCK);
    let sums: Vec<Result<(f64, f64)>> = (0..blocks)
        .into_par_iter()
        .map(|k| {
            let n = BLOCK.min(draws - k * BLOCK);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64 + 1);
            let mut bids = vec![0.0; bidders];
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                for b in &mut bids {
                    *b = rng.gen_range(lo..hi);
                }
                let r = mechanism(&bids)?.revenue();
                s += r;
                s2 += r * r;
            }
            Ok((s, s2))
        })
        .collect();
    let (mut s, mut s2) = (0.0, 0.0);
    for block in sums {
        let (a, b) = block?;
        s += a;
        s2 += b;
    }
    let n = draws as f64;
    let mean = s / n;
    let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
    Ok(RevenueEstimate {
        mechanism: label.to_string(),
        mean,
        std_error: (var / n).sqrt(),
        samples: draws,
        seed,
    })
}

/// Revenue-optimal reserve for i.i.d. `U[lo, hi]` values: the zero of the
/// virtual value `2v - hi`, never below the support.
pub fn optimal_uniform_reserve(lo: f64, hi: f64) -> f64 {
    (hi / 2.0).max(lo)
}

/// Monte-Carlo revenue of the optimal auction for i.i.d. uniform bidders:
/// a second-price auction with reserve [`optimal_uniform_reserve`].
pub fn myerson_uniform_oracle(
    bidders: usize,
    lo: f64,
    hi: f64,
    draws: usize,
    seed: u64,
) -> Result<RevenueEstimate> {
    let reserve = optimal_uniform_reserve(lo, hi);
    monte_carlo_revenue(
        "myerson (SPA, optimal reserve)",
        |b| spa_with_reserve(b, reserve),
        bidders,
        lo,
        hi,
        draws,
        seed,
    )
}

/// Expected SPA revenue for i.i.d. `U[0, hi]` bidders: `hi (M-1)/(M+1)`.
pub fn spa_uniform_closed_form(bidders: usize, hi: f64) -> f64 {
    let m = bidders as f64;
    hi * (m - 1.0) / (m + 1.0)
}

/// The two-stage double auction with a second-price engine in place of the
/// learned one.
pub fn spa_double_auction(
    buyers: &[Buyer],
    sellers: &[Seller],
    seed: u64,
) -> Result<DoubleAuctionRun> {
    run_double_auction(buyers, sellers, &SpaEngine, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sold(winner: usize, payment: f64) -> AuctionOutcome {
        AuctionOutcome::Sold { winner, payment }
    }

    #[test]
    fn spa_examples() {
        assert_eq!(spa(&[0.3, 0.2, 0.1]).unwrap(), sold(0, 0.2));
        assert_eq!(spa(&[0.5]).unwrap(), sold(0, 0.0));
        assert_eq!(spa(&[0.2, 0.2]).unwrap(), sold(0, 0.2));
        assert!(spa(&[]).is_err());
    }

    #[test]
    fn first_price_examples() {
        assert_eq!(first_price(&[0.3, 0.2]).unwrap(), sold(0, 0.3));
        assert_eq!(first_price(&[0.5]).unwrap(), sold(0, 0.5));
        assert_eq!(first_price(&[0.2, 0.2]).unwrap(), sold(0, 0.2));
        assert!(first_price(&[]).is_err());
    }

    #[test]
    fn reserve_binds() {
        assert_eq!(spa_with_reserve(&[0.3, 0.1], 0.2).unwrap(), sold(0, 0.2));
        assert_eq!(spa_with_reserve(&[0.15, 0.1], 0.2).unwrap(), AuctionOutcome::Unsold);
        assert_eq!(spa_with_reserve(&[0.3, 0.25], 0.2).unwrap(), sold(0, 0.25));
    }

    #[test]
    fn optimal_reserve_for_shifted_support() {
        assert_eq!(optimal_uniform_reserve(0.0, 0.4), 0.2);
        assert_eq!(optimal_uniform_reserve(0.5, 0.9), 0.5);
    }

    #[test]
    fn single_bidder_oracle_is_quarter_h() {
        // (h/2) * P(v >= h/2) = h/4
        let est = myerson_uniform_oracle(1, 0.0, 0.4, 400_000, 5).unwrap();
        assert!((est.mean - 0.1).abs() < 4.0 * est.std_error, "{est:?}");
    }

    #[test]
    fn spa_harness_matches_closed_form() {
        let est = monte_carlo_revenue("spa", spa, 10, 0.0, 0.4, 200_000, 9).unwrap();
        let exact = spa_uniform_closed_form(10, 0.4);
        assert!((est.mean - exact).abs() < 4.0 * est.std_error, "{est:?} vs {exact}");
    }

    #[test]
    fn oracle_rejects_bad_ranges() {
        assert!(myerson_uniform_oracle(3, 0.5, 0.5, 10, 1).is_err());
        assert!(myerson_uniform_oracle(3, -0.1, 0.5, 10, 1).is_err());
        assert!(myerson_uniform_oracle(0, 0.0, 0.5, 10, 1).is_err());
        assert!(myerson_uniform_oracle(3, 0.0, 0.5, 0, 1).is_err());
    }

    #[test]
    fn estimate_is_thread_count_independent() {
        let a = monte_carlo_revenue("spa", spa, 4, 0.0, 1.0, 120_000, 77).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool
            .install(|| monte_carlo_revenue("spa", spa, 4, 0.0, 1.0, 120_000, 77))
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn spa_and_first_price_pick_same_winner() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..500 {
            let n = rng.gen_range(1..8);
            let bids: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let s = spa(&bids).unwrap();
            let f = first_price(&bids).unwrap();
            assert_eq!(s.winner(), f.winner());
            assert!(s.revenue() <= f.revenue());
        }
    }
}
