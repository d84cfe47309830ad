use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use semtrade_core::double_auction::{run_double_auction, trade_records, utilities};
use semtrade_core::monotone::MonotoneNetParams;
use semtrade_core::AuctionEngine;

use super::RunSummary;
use crate::config::{Config, EngineKind};
use crate::engines::market_engine;
use crate::error::CliResult;
use crate::output::{OutDir, Table};
use crate::row;
use crate::scenario::{Instance, Scenario};
use crate::seeds::{derive, Stream};
use crate::stats::{mean_se, MeanSe, SlopeTest};

pub fn replica_key(buyers: usize, replica: usize) -> u64 {
    ((buyers as u64) << 32) | replica as u64
}

/// What one double auction produced, split by the model-price stratum.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplicaStats {
    pub trades: usize,
    pub seller_utilities: Vec<f64>,
    pub buyer_utilities: Vec<f64>,
    pub wins_high: usize,
    pub wins_low: usize,
    pub sim_high: f64,
    pub sim_low: f64,
    pub bleu_high: f64,
    pub bleu_low: f64,
    pub engine_calls: usize,
    pub comparisons: usize,
}

pub fn replica_stats(inst: &Instance, engine: &dyn AuctionEngine, tie_seed: u64, split: f64) -> CliResult<ReplicaStats> {
    let run = run_double_auction(&inst.buyers, &inst.sellers, engine, tie_seed)?;
    let u = utilities(&run.trades, &inst.buyers, &inst.sellers);
    let mut s = ReplicaStats {
        trades: run.trades.len(),
        engine_calls: run.counters.engine_calls,
        comparisons: run.counters.comparisons,
        ..ReplicaStats::default()
    };
    for t in &run.trades.trades {
        s.seller_utilities.push(u.sellers[t.seller]);
        s.buyer_utilities.push(u.buyers[t.buyer]);
        let scores = inst.sellers[t.seller].scores;
        if inst.theta(t.seller) >= split {
            s.wins_high += 1;
            s.sim_high += scores.sim();
            s.bleu_high += scores.bleu();
        } else {
            s.wins_low += 1;
            s.sim_low += scores.sim();
            s.bleu_low += scores.bleu();
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub engine: EngineKind,
    pub buyers: usize,
    pub replicas: usize,
    pub replicas_with_trades: usize,
    pub mean_trades: f64,
    /// Across replicas with at least one trade, of the replica's mean
    /// winning-seller utility.
    pub seller_utility: MeanSe,
    pub buyer_utility: MeanSe,
    pub wins_high: MeanSe,
    pub wins_low: MeanSe,
    /// Pooled over all winning sellers in the stratum.
    pub sim_high: f64,
    pub sim_low: f64,
    pub bleu_high: f64,
    pub bleu_low: f64,
    pub max_engine_calls: usize,
    pub max_comparisons: usize,
}

fn mean_of(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn aggregate(engine: EngineKind, buyers: usize, reps: &[ReplicaStats]) -> SweepRow {
    let traded: Vec<&ReplicaStats> = reps.iter().filter(|r| r.trades > 0).collect();
    let seller: Vec<f64> = traded.iter().map(|r| mean_of(&r.seller_utilities)).collect();
    let buyer: Vec<f64> = traded.iter().map(|r| mean_of(&r.buyer_utilities)).collect();
    let count = |f: fn(&ReplicaStats) -> usize| -> Vec<f64> { reps.iter().map(|r| f(r) as f64).collect() };
    let (wh, wl) = (count(|r| r.wins_high), count(|r| r.wins_low));
    let total_high: usize = reps.iter().map(|r| r.wins_high).sum();
    let total_low: usize = reps.iter().map(|r| r.wins_low).sum();
    let pooled = |f: fn(&ReplicaStats) -> f64, n: usize| reps.iter().map(f).sum::<f64>() / n as f64;
    SweepRow {
        engine,
        buyers,
        replicas: reps.len(),
        replicas_with_trades: traded.len(),
        mean_trades: mean_of(&count(|r| r.trades)),
        seller_utility: mean_se(&seller),
        buyer_utility: mean_se(&buyer),
        wins_high: mean_se(&wh),
        wins_low: mean_se(&wl),
        sim_high: pooled(|r| r.sim_high, total_high),
        sim_low: pooled(|r| r.sim_low, total_low),
        bleu_high: pooled(|r| r.bleu_high, total_high),
        bleu_low: pooled(|r| r.bleu_low, total_low),
        max_engine_calls: reps.iter().map(|r| r.engine_calls).max().unwrap_or(0),
        max_comparisons: reps.iter().map(|r| r.comparisons).max().unwrap_or(0),
    }
}

#[derive(Debug, Clone)]
pub struct Trend {
    pub engine: EngineKind,
    pub test: SlopeTest,
}

pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub trends: Vec<Trend>,
    pub trades: Table,
}

impl SweepResult {
    pub fn row(&self, engine: EngineKind, buyers: usize) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.engine == engine && r.buyers == buyers)
    }
}

pub fn sweep(cfg: &Config, saved: Option<&MonotoneNetParams>) -> CliResult<SweepResult> {
    let m = &cfg.market;
    let scenario = Scenario::new(m)?;
    let mut rows = Vec::new();
    let mut trades = Table::new(
        "market-trades/v1",
        &[
            "engine", "buyers", "replica", "seller_id", "buyer_id", "ask", "bid", "price",
            "seller_utility", "buyer_utility",
        ],
    );
    for &n in &m.buyers {
        let engines: Vec<(EngineKind, Box<dyn AuctionEngine>)> = m
            .engines
            .iter()
            .map(|&k| Ok((k, market_engine(k, &scenario, &cfg.training, saved, n, cfg.seed)?)))
            .collect::<CliResult<_>>()?;
        let per_replica: Vec<Vec<ReplicaStats>> = (0..m.replicas)
            .into_par_iter()
            .map(|r| {
                let key = replica_key(n, r);
                let mut rng = ChaCha8Rng::seed_from_u64(derive(cfg.seed, Stream::MarketInstance, key));
                let inst = scenario.instance(n, &mut rng)?;
                let tie_seed = derive(cfg.seed, Stream::MarketTies, key);
                engines
                    .iter()
                    .map(|(_, e)| replica_stats(&inst, e.as_ref(), tie_seed, m.theta_split))
                    .collect()
            })
            .collect::<CliResult<_>>()?;
        for (i, (kind, engine)) in engines.iter().enumerate() {
            let reps: Vec<ReplicaStats> = per_replica.iter().map(|r| r[i].clone()).collect();
            rows.push(aggregate(*kind, n, &reps));

            let mut rng = ChaCha8Rng::seed_from_u64(derive(cfg.seed, Stream::MarketInstance, replica_key(n, 0)));
            let inst = scenario.instance(n, &mut rng)?;
            let run = run_double_auction(
                &inst.buyers,
                &inst.sellers,
                engine.as_ref(),
                derive(cfg.seed, Stream::MarketTies, replica_key(n, 0)),
            )?;
            for rec in trade_records(&run.trades, &inst.buyers, &inst.sellers) {
                trades.push(row![
                    kind.label(),
                    n,
                    0,
                    rec.seller_id,
                    rec.buyer_id,
                    rec.ask,
                    rec.bid,
                    rec.price,
                    rec.seller_utility,
                    rec.buyer_utility
                ]);
            }
        }
    }
    let mut trends = Vec::new();
    if m.buyers.len() >= 2 {
        for &kind in &m.engines {
            let pts: Vec<&SweepRow> = rows.iter().filter(|r| r.engine == kind).collect();
            let x: Vec<f64> = pts.iter().map(|r| r.buyers as f64).collect();
            let y: Vec<f64> = pts.iter().map(|r| r.seller_utility.mean).collect();
            let se: Vec<f64> = pts.iter().map(|r| r.seller_utility.se).collect();
            trends.push(Trend {
                engine: kind,
                test: SlopeTest::fit(&x, &y, &se),
            });
        }
    }
    Ok(SweepResult { rows, trends, trades })
}

pub fn summary_table(result: &SweepResult) -> Table {
    let mut t = Table::new(
        "market-summary/v1",
        &[
            "engine", "buyers", "replicas", "replicas_with_trades", "mean_trades",
            "mean_winning_seller_utility", "se_winning_seller_utility",
            "mean_winning_buyer_utility", "se_winning_buyer_utility",
            "wins_theta_high", "wins_theta_low", "sim_theta_high", "sim_theta_low",
            "bleu_theta_high", "bleu_theta_low", "max_engine_calls", "max_comparisons",
        ],
    );
    for r in &result.rows {
        t.push(row![
            r.engine.label(),
            r.buyers,
            r.replicas,
            r.replicas_with_trades,
            r.mean_trades,
            r.seller_utility.mean,
            r.seller_utility.se,
            r.buyer_utility.mean,
            r.buyer_utility.se,
            r.wins_high.mean,
            r.wins_low.mean,
            r.sim_high,
            r.sim_low,
            r.bleu_high,
            r.bleu_low,
            r.max_engine_calls,
            r.max_comparisons
        ]);
    }
    t
}

pub fn trend_table(result: &SweepResult) -> Table {
    let mut t = Table::new(
        "market-trend/v1",
        &["engine", "slope_seller_utility", "slope_se", "nondecreasing"],
    );
    for tr in &result.trends {
        t.push(row![tr.engine.label(), tr.test.slope, tr.test.se, tr.test.nondecreasing()]);
    }
    t
}

pub fn run(cfg: &Config, saved: Option<&MonotoneNetParams>, out: &mut OutDir) -> CliResult<RunSummary> {
    let result = sweep(cfg, saved)?;
    out.write_table("market_summary.csv", &summary_table(&result))?;
    out.write_table("market_trend.csv", &trend_table(&result))?;
    out.write_table("market_trades.csv", &result.trades)?;
    for r in &result.rows {
        println!(
            "{:<22} N={:<3} trades {:.2}  seller utility {:.4} ± {:.4}  wins θ≥split {:.2} / θ<split {:.2}",
            r.engine.label(),
            r.buyers,
            r.mean_trades,
            r.seller_utility.mean,
            r.seller_utility.se,
            r.wins_high.mean,
            r.wins_low.mean
        );
    }
    Ok(RunSummary::ok(vec![
        ("replicas".into(), cfg.market.replicas.to_string()),
        (
            "replica_seed".into(),
            "derive(master, market-instance, buyers << 32 | replica)".into(),
        ),
        ("dla_source".into(), if saved.is_some() { "saved parameters" } else { "trained per buyer count" }.into()),
    ]))
}
