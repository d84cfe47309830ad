use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use semtrade_core::double_auction::{run_double_auction, utilities};
use semtrade_core::market::{Buyer, Seller};
use semtrade_core::monotone::MonotoneNetParams;
use semtrade_core::AuctionEngine;

use crate::config::Config;
use crate::engines::market_engine;
use super::RunSummary;
use crate::error::CliResult;
use crate::output::{OutDir, Table};
use crate::row;
use crate::scenario::Scenario;
use crate::seeds::{derive, Stream};

/// `points` evenly spaced values from `lo` to `hi` inclusive.
pub fn grid(range: [f64; 2], points: usize) -> Vec<f64> {
    let step = (range[1] - range[0]) / (points - 1) as f64;
    (0..points).map(|i| range[0] + step * i as f64).collect()
}

struct Outcome {
    seller_utility: Vec<f64>,
    buyer_utility: Vec<f64>,
    buyer_partner: Vec<Option<usize>>,
}

fn settle(buyers: &[Buyer], sellers: &[Seller], engine: &dyn AuctionEngine, tie_seed: u64) -> CliResult<Outcome> {
    let run = run_double_auction(buyers, sellers, engine, tie_seed)?;
    let u = utilities(&run.trades, buyers, sellers);
    let mut partner = vec![None; buyers.len()];
    for t in &run.trades.trades {
        partner[t.buyer] = Some(t.seller);
    }
    Ok(Outcome {
        seller_utility: u.sellers,
        buyer_utility: u.buyers,
        buyer_partner: partner,
    })
}

/// One agent's utility across the deviation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub instance: usize,
    pub agent: usize,
    /// Seller whose bid is swept; only meaningful for buyer sweeps.
    pub target: usize,
    /// True cost (sellers) or true valuation for `target` (buyers).
    pub truth: f64,
    pub truthful_utility: f64,
    pub won_truthfully: bool,
    pub reports: Vec<f64>,
    pub utilities: Vec<f64>,
    /// Buyer sweeps: which seller the buyer ended up trading with.
    pub partners: Vec<Option<usize>>,
}

impl Sweep {
    pub fn gain(&self) -> f64 {
        self.utilities
            .iter()
            .map(|u| u - self.truthful_utility)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Truthful winning seller: utility equals the truthful plateau for
    /// every ask up to some point and is zero beyond it.
    pub fn plateau_then_zero(&self, tol: f64) -> bool {
        let k = self
            .utilities
            .iter()
            .position(|u| (u - self.truthful_utility).abs() > tol)
            .unwrap_or(self.utilities.len());
        self.truthful_utility > 0.0 && self.utilities[k..].iter().all(|u| u.abs() <= tol)
    }

    /// Truthful losing buyer: zero until it starts winning, and never
    /// positive afterwards.
    pub fn zero_then_nonpositive(&self, tol: f64) -> bool {
        let k = self
            .utilities
            .iter()
            .position(|u| u.abs() > tol)
            .unwrap_or(self.utilities.len());
        self.truthful_utility == 0.0 && self.utilities[k..].iter().all(|&u| u <= tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SideSummary {
    pub sweeps: usize,
    pub max_gain: f64,
    pub violations: usize,
    /// Sweeps whose truthful outcome makes the shape check applicable
    /// (winning sellers, losing buyers).
    pub shape_checked: usize,
    pub shape_ok: usize,
}

fn summarize(sweeps: &[Sweep], tol: f64, applies: fn(&Sweep) -> bool, shape: fn(&Sweep, f64) -> bool) -> SideSummary {
    let checked: Vec<&Sweep> = sweeps.iter().filter(|s| applies(s)).collect();
    SideSummary {
        sweeps: sweeps.len(),
        max_gain: sweeps.iter().map(Sweep::gain).fold(f64::NEG_INFINITY, f64::max),
        violations: sweeps.iter().filter(|s| s.gain() > tol).count(),
        shape_checked: checked.len(),
        shape_ok: checked.iter().filter(|s| shape(s, tol)).count(),
    }
}

pub struct TruthResult {
    pub sellers: Vec<Sweep>,
    pub buyers: Vec<Sweep>,
    pub seller_summary: SideSummary,
    pub buyer_summary: SideSummary,
}

fn sweep_instance(
    cfg: &Config,
    scenario: &Scenario,
    engine: &dyn AuctionEngine,
    grid: &[f64],
    index: usize,
) -> CliResult<(Sweep, Sweep)> {
    let tr = &cfg.truthfulness;
    let mut rng = ChaCha8Rng::seed_from_u64(derive(cfg.seed, Stream::Truthfulness, 2 * index as u64));
    let tie_seed = derive(cfg.seed, Stream::Truthfulness, 2 * index as u64 + 1);
    let inst = scenario.instance(tr.buyers, &mut rng)?;
    let m = tr.seller.unwrap_or_else(|| rng.gen_range(0..inst.sellers.len()));
    let n = tr.buyer.unwrap_or_else(|| rng.gen_range(0..inst.buyers.len()));
    let target = tr.target_seller.unwrap_or_else(|| rng.gen_range(0..inst.sellers.len()));

    let truthful = settle(&inst.buyers, &inst.sellers, engine, tie_seed)?;

    let mut sellers = inst.sellers.clone();
    let mut seller_sweep = Sweep {
        instance: index,
        agent: m,
        target: m,
        truth: inst.sellers[m].cost(),
        truthful_utility: truthful.seller_utility[m],
        won_truthfully: truthful.buyer_partner.contains(&Some(m)),
        reports: grid.to_vec(),
        utilities: Vec::with_capacity(grid.len()),
        partners: Vec::new(),
    };
    for &ask in grid {
        sellers[m].ask = ask;
        seller_sweep
            .utilities
            .push(settle(&inst.buyers, &sellers, engine, tie_seed)?.seller_utility[m]);
    }

    let mut buyers = inst.buyers.clone();
    let mut buyer_sweep = Sweep {
        instance: index,
        agent: n,
        target,
        truth: inst.buyers[n].valuation(target, &inst.sellers[target]),
        truthful_utility: truthful.buyer_utility[n],
        won_truthfully: truthful.buyer_partner[n].is_some(),
        reports: grid.to_vec(),
        utilities: Vec::with_capacity(grid.len()),
        partners: Vec::with_capacity(grid.len()),
    };
    for &bid in grid {
        buyers[n].bids[target] = bid;
        let o = settle(&buyers, &inst.sellers, engine, tie_seed)?;
        buyer_sweep.utilities.push(o.buyer_utility[n]);
        buyer_sweep.partners.push(o.buyer_partner[n]);
    }
    Ok((seller_sweep, buyer_sweep))
}

pub fn sweep(cfg: &Config, saved: Option<&MonotoneNetParams>) -> CliResult<TruthResult> {
    let tr = &cfg.truthfulness;
    let scenario = Scenario::new(&cfg.market)?;
    let engine = market_engine(tr.engine, &scenario, &cfg.training, saved, tr.buyers, cfg.seed)?;
    sweep_with_engine(cfg, &scenario, engine.as_ref())
}

/// Runs the sweeps against `engine`, which must accept
/// `cfg.truthfulness.buyers` bidders.
pub fn sweep_with_engine(cfg: &Config, scenario: &Scenario, engine: &dyn AuctionEngine) -> CliResult<TruthResult> {
    let tr = &cfg.truthfulness;
    let grid = grid(tr.grid, tr.grid_points);
    let pairs: Vec<(Sweep, Sweep)> = (0..tr.instances)
        .into_par_iter()
        .map(|i| sweep_instance(cfg, scenario, engine, &grid, i))
        .collect::<CliResult<_>>()?;
    let (sellers, buyers): (Vec<Sweep>, Vec<Sweep>) = pairs.into_iter().unzip();
    Ok(TruthResult {
        seller_summary: summarize(&sellers, tr.tolerance, |s| s.won_truthfully && s.truthful_utility > 0.0, Sweep::plateau_then_zero),
        buyer_summary: summarize(&buyers, tr.tolerance, |s| !s.won_truthfully, Sweep::zero_then_nonpositive),
        sellers,
        buyers,
    })
}

pub fn seller_table(result: &TruthResult) -> Table {
    let mut t = Table::new(
        "seller-deviation/v1",
        &["instance", "seller_id", "true_cost", "won_truthfully", "truthful_utility", "ask", "utility"],
    );
    for s in &result.sellers {
        for (ask, u) in s.reports.iter().zip(&s.utilities) {
            t.push(row![s.instance, s.agent, s.truth, s.won_truthfully, s.truthful_utility, ask, u]);
        }
    }
    t
}

pub fn buyer_table(result: &TruthResult) -> Table {
    let mut t = Table::new(
        "buyer-deviation/v1",
        &[
            "instance", "buyer_id", "target_seller", "true_valuation", "won_truthfully", "truthful_utility",
            "bid", "utility", "traded_seller",
        ],
    );
    for s in &result.buyers {
        for ((bid, u), p) in s.reports.iter().zip(&s.utilities).zip(&s.partners) {
            let partner = p.map_or_else(|| "none".to_string(), |p| p.to_string());
            t.push(row![s.instance, s.agent, s.target, s.truth, s.won_truthfully, s.truthful_utility, bid, u, partner]);
        }
    }
    t
}

pub fn summary_table(result: &TruthResult) -> Table {
    let mut t = Table::new(
        "truthfulness-summary/v1",
        &["side", "sweeps", "max_gain", "violations", "shape", "shape_checked", "shape_ok"],
    );
    for (side, shape, s) in [
        ("seller", "plateau-then-zero (truthful winners)", &result.seller_summary),
        ("buyer", "zero-then-nonpositive (truthful losers)", &result.buyer_summary),
    ] {
        t.push(row![side, s.sweeps, s.max_gain, s.violations, shape, s.shape_checked, s.shape_ok]);
    }
    t
}

pub fn run(cfg: &Config, saved: Option<&MonotoneNetParams>, out: &mut OutDir) -> CliResult<RunSummary> {
    let result = sweep(cfg, saved)?;
    out.write_table("seller_deviation.csv", &seller_table(&result))?;
    out.write_table("buyer_deviation.csv", &buyer_table(&result))?;
    out.write_table("truthfulness_summary.csv", &summary_table(&result))?;
    let mut failures = Vec::new();
    for (side, s) in [("seller", &result.seller_summary), ("buyer", &result.buyer_summary)] {
        println!(
            "{side}: {} sweeps, max gain over truthful {:.3e}, {} violations, shape {}/{}",
            s.sweeps, s.max_gain, s.violations, s.shape_ok, s.shape_checked
        );
        if s.violations > 0 {
            failures.push(format!("{} {side} sweeps beat the truthful report", s.violations));
        }
        if s.shape_ok != s.shape_checked {
            failures.push(format!("{} {side} curves have the wrong shape", s.shape_checked - s.shape_ok));
        }
    }
    let extras = vec![
        ("instances".into(), cfg.truthfulness.instances.to_string()),
        ("instance_seed".into(), "derive(master, truthfulness, 2 * instance)".into()),
        ("tie_seed".into(), "derive(master, truthfulness, 2 * instance + 1)".into()),
    ];
    Ok(RunSummary::checked(extras, failures))
}
