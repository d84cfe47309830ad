//! The property suite behind `semtrade verify`.
//!
//! Every check draws from its own seed stream, so the report is
//! reproducible and adding a check does not perturb the others.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use semtrade_core::baselines::SpaEngine;
use semtrade_core::double_auction::{run_double_auction, utilities};
use semtrade_core::metrics::{bleu, BleuConfig, BrevityMode, Sentence};
use semtrade_core::monotone::{kink_margin, loss_and_gradient, MonotoneAuction, MonotoneNetParams};
use semtrade_core::{AuctionEngine, AuctionOutcome};

use super::truthfulness::sweep_with_engine;
use super::RunSummary;
use crate::config::Config;
use crate::engines::fit_to_bidders;
use crate::error::CliResult;
use crate::output::{OutDir, Table};
use crate::row;
use crate::scenario::Scenario;
use crate::seeds::{derive, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub check: String,
    pub cases: usize,
    pub violations: usize,
    pub worst: f64,
    pub threshold: String,
}

impl CheckRow {
    pub fn passed(&self) -> bool {
        self.cases > 0 && self.violations == 0
    }
}

fn check_rng(seed: u64, check: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, Stream::Verify, check))
}

/// Brute-force second price: first index of the maximum wins and pays the
/// largest other bid, floored at zero; nothing sells if no bid is positive.
fn spa_oracle(bids: &[f64]) -> AuctionOutcome {
    let mut winner = 0;
    for (i, &b) in bids.iter().enumerate() {
        if b > bids[winner] {
            winner = i;
        }
    }
    if bids[winner] <= 0.0 {
        return AuctionOutcome::Unsold;
    }
    let second = bids
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != winner)
        .map(|(_, &b)| b)
        .fold(0.0, f64::max);
    AuctionOutcome::Sold { winner, payment: second }
}

fn spa_equivalence(cfg: &Config) -> CliResult<CheckRow> {
    let n = cfg.verify.spa_profiles;
    let mut rng = check_rng(cfg.seed, 1);
    let net = MonotoneNetParams::identity(10, cfg.training.temperature)?;
    let mut violations = 0;
    for i in 0..n {
        // every other profile on a coarse grid so ties and zeros occur
        let bids: Vec<f64> = (0..10)
            .map(|_| {
                let b: f64 = rng.gen_range(0.0..1.0);
                if i % 2 == 1 {
                    (b * 5.0).floor() / 5.0
                } else {
                    b
                }
            })
            .collect();
        if net.infer(&bids)? != spa_oracle(&bids) {
            violations += 1;
        }
    }
    Ok(CheckRow {
        check: "spa-oracle-equivalence".into(),
        cases: n,
        violations,
        worst: violations as f64,
        threshold: "winner and payment identical".into(),
    })
}

fn random_net(rng: &mut ChaCha8Rng, bidders: usize, tied: bool) -> CliResult<MonotoneNetParams> {
    let groups = rng.gen_range(1..=5);
    let units = rng.gen_range(1..=10);
    let kappa = rng.gen_range(1.0..50.0);
    Ok(MonotoneNetParams::random(rng, bidders, groups, units, kappa, 1.0, 0.5, tied)?)
}

fn monotone_round_trip(cfg: &Config) -> CliResult<[CheckRow; 2]> {
    let n = cfg.verify.transform_cases;
    let mut rng = check_rng(cfg.seed, 2);
    let (mut not_monotone, mut bad_trip, mut worst_trip, mut min_step) = (0, 0, 0.0_f64, f64::INFINITY);
    for _ in 0..n {
        let net = random_net(&mut rng, 1, false)?;
        let lo: f64 = rng.gen_range(0.0..1.0);
        let hi = lo + rng.gen_range(1e-6..1.0);
        let (ylo, yhi) = (net.transform(0, lo), net.transform(0, hi));
        min_step = min_step.min(yhi - ylo);
        if yhi <= ylo {
            not_monotone += 1;
        }
        for (b, y) in [(lo, ylo), (hi, yhi)] {
            let err = (net.inverse_transform(0, y) - b).abs();
            worst_trip = worst_trip.max(err);
            if err > 1e-6 {
                bad_trip += 1;
            }
        }
    }
    Ok([
        CheckRow {
            check: "transform-monotone".into(),
            cases: n,
            violations: not_monotone,
            worst: min_step,
            threshold: "phi(hi) - phi(lo) > 0".into(),
        },
        CheckRow {
            check: "transform-round-trip".into(),
            cases: n,
            violations: bad_trip,
            worst: worst_trip,
            threshold: "|inverse(phi(b)) - b| <= 1e-6".into(),
        },
    ])
}

fn softmax_sums(cfg: &Config) -> CliResult<CheckRow> {
    let n = cfg.verify.transform_cases;
    let mut rng = check_rng(cfg.seed, 3);
    let (mut violations, mut worst) = (0, 0.0_f64);
    for _ in 0..n {
        let bidders = rng.gen_range(1..=10);
        let net = random_net(&mut rng, bidders, false)?;
        let bids: Vec<f64> = (0..bidders).map(|_| rng.gen_range(0.0..1.0)).collect();
        let err = (net.soft_allocate(&bids)?.iter().sum::<f64>() - 1.0).abs();
        worst = worst.max(err);
        if err > 1e-12 {
            violations += 1;
        }
    }
    Ok(CheckRow {
        check: "softmax-sums-to-one".into(),
        cases: n,
        violations,
        worst,
        threshold: "|sum - 1| <= 1e-12 (incl. dummy)".into(),
    })
}

fn gradient(cfg: &Config) -> CliResult<CheckRow> {
    const H: f64 = 1e-5;
    let n = cfg.verify.gradient_points;
    let mut rng = check_rng(cfg.seed, 4);
    let loss = |p: &MonotoneNetParams, lw: Vec<f64>, b: Vec<f64>, s: &[Vec<f64>]| -> CliResult<f64> {
        let q = MonotoneNetParams::new(p.bidders(), p.groups(), p.units(), lw, b, p.temperature())?;
        Ok(loss_and_gradient(&q, s)?.loss)
    };
    let rel = |a: f64, f: f64| (a - f).abs() / a.abs().max(f.abs()).max(1e-6);
    let (mut points, mut violations, mut worst) = (0, 0, 0.0_f64);
    while points < n {
        let bidders = rng.gen_range(1..=4);
        let (q, s) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let kappa = rng.gen_range(1.0..20.0);
        let p = MonotoneNetParams::random(&mut rng, bidders, q, s, kappa, 0.5, 0.3, false)?;
        let samples: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..bidders).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        let mut margin = f64::INFINITY;
        for b in &samples {
            margin = margin.min(kink_margin(&p, b)?);
        }
        if margin <= 1e-3 {
            continue;
        }
        points += 1;
        let g = loss_and_gradient(&p, &samples)?;
        let mut point_worst = 0.0_f64;
        for i in 0..p.param_count() {
            let (lw, b) = (p.log_weights().to_vec(), p.biases().to_vec());
            let bump = |v: &[f64], d: f64| {
                let mut v = v.to_vec();
                v[i] += d;
                v
            };
            let fd_w = (loss(&p, bump(&lw, H), b.clone(), &samples)? - loss(&p, bump(&lw, -H), b.clone(), &samples)?)
                / (2.0 * H);
            let fd_b = (loss(&p, lw.clone(), bump(&b, H), &samples)? - loss(&p, lw.clone(), bump(&b, -H), &samples)?)
                / (2.0 * H);
            point_worst = point_worst
                .max(rel(g.d_log_weights[i], fd_w))
                .max(rel(g.d_biases[i], fd_b));
        }
        worst = worst.max(point_worst);
        if point_worst > 1e-4 {
            violations += 1;
        }
    }
    Ok(CheckRow {
        check: "gradient-central-difference".into(),
        cases: n,
        violations,
        worst,
        threshold: "relative error <= 1e-4, h = 1e-5".into(),
    })
}

/// An engine family evaluated at several buyer counts.
struct Family {
    name: String,
    /// Indexed by buyer count.
    engines: Vec<Option<Box<dyn AuctionEngine>>>,
}

impl Family {
    fn at(&self, buyers: usize) -> &dyn AuctionEngine {
        self.engines[buyers].as_deref().expect("engine built for every buyer count")
    }
}

fn families(cfg: &Config, saved: Option<&MonotoneNetParams>, counts: &[usize]) -> CliResult<Vec<Family>> {
    let max = counts.iter().copied().max().unwrap_or(0);
    let build = |name: &str, base: Option<&MonotoneNetParams>| -> CliResult<Family> {
        let mut engines: Vec<Option<Box<dyn AuctionEngine>>> = (0..=max).map(|_| None).collect();
        for &n in counts {
            engines[n] = Some(match base {
                None => Box::new(SpaEngine),
                Some(p) => Box::new(MonotoneAuction::new(fit_to_bidders(p, n)?)),
            });
        }
        Ok(Family {
            name: name.into(),
            engines,
        })
    };
    let mut rng = check_rng(cfg.seed, 5);
    let t = &cfg.training;
    let random = MonotoneNetParams::random(&mut rng, max, t.groups, t.units, t.temperature, 0.5, 0.1, true)?;
    let mut out = vec![build("spa", None)?, build("random-tied-dla", Some(&random))?];
    if let Some(p) = saved {
        out.push(build("loaded-dla", Some(p))?);
    }
    Ok(out)
}

#[derive(Default)]
struct MarketTally {
    ir: usize,
    worst_ir: f64,
    bb: usize,
    worst_bb: f64,
    matching: usize,
    max_comparisons: usize,
}

fn market_checks(cfg: &Config, scenario: &Scenario, fams: &[Family]) -> CliResult<Vec<CheckRow>> {
    let n = cfg.verify.market_instances;
    let m = scenario.sellers();
    let per_instance: Vec<Vec<MarketTally>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let buyers = 2 + i % 9;
            let mut rng = ChaCha8Rng::seed_from_u64(derive(cfg.seed, Stream::Verify, (6 << 32) | i as u64));
            let inst = scenario.instance(buyers, &mut rng)?;
            let tie_seed = derive(cfg.seed, Stream::Verify, (7 << 32) | i as u64);
            fams.iter()
                .map(|f| {
                    let run = run_double_auction(&inst.buyers, &inst.sellers, f.at(buyers), tie_seed)?;
                    let u = utilities(&run.trades, &inst.buyers, &inst.sellers);
                    let mut t = MarketTally::default();
                    let winners_s = run.trades.winning_sellers();
                    let winners_b = run.trades.winning_buyers();
                    for (k, &v) in u.sellers.iter().enumerate() {
                        let bad = if winners_s.contains(&k) { v < 0.0 } else { v != 0.0 };
                        t.ir += usize::from(bad);
                        t.worst_ir = t.worst_ir.max(if v < 0.0 { -v } else { 0.0 });
                    }
                    for (k, &v) in u.buyers.iter().enumerate() {
                        let bad = if winners_b.contains(&k) { v < 0.0 } else { v != 0.0 };
                        t.ir += usize::from(bad);
                        t.worst_ir = t.worst_ir.max(if v < 0.0 { -v } else { 0.0 });
                    }
                    let gap = (run.trades.total_price() - run.trades.total_payment()).abs();
                    t.bb = usize::from(gap != 0.0);
                    t.worst_bb = gap;
                    let c = run.counters;
                    t.matching = usize::from(
                        !run.trades.is_injective() || c.engine_calls != m || c.comparisons > m * (m - 1) / 2,
                    );
                    t.max_comparisons = c.comparisons;
                    Ok(t)
                })
                .collect()
        })
        .collect::<CliResult<_>>()?;
    let mut rows = Vec::new();
    for (fi, f) in fams.iter().enumerate() {
        let tallies = per_instance.iter().map(|v| &v[fi]);
        let mut total = MarketTally::default();
        for t in tallies {
            total.ir += t.ir;
            total.worst_ir = total.worst_ir.max(t.worst_ir);
            total.bb += t.bb;
            total.worst_bb = total.worst_bb.max(t.worst_bb);
            total.matching += t.matching;
            total.max_comparisons = total.max_comparisons.max(t.max_comparisons);
        }
        rows.push(CheckRow {
            check: format!("market-individual-rationality/{}", f.name),
            cases: n,
            violations: total.ir,
            worst: total.worst_ir,
            threshold: "winners >= 0, losers = 0".into(),
        });
        rows.push(CheckRow {
            check: format!("market-budget-balance/{}", f.name),
            cases: n,
            violations: total.bb,
            worst: total.worst_bb,
            threshold: "sum prices - sum payments = 0".into(),
        });
        rows.push(CheckRow {
            check: format!("market-matching-and-counters/{}", f.name),
            cases: n,
            violations: total.matching,
            worst: total.max_comparisons as f64,
            threshold: format!("injective, {m} engine calls, <= {} comparisons", m * (m - 1) / 2),
        });
    }
    Ok(rows)
}

fn truthfulness_checks(cfg: &Config, scenario: &Scenario, fams: &[Family]) -> CliResult<Vec<CheckRow>> {
    let mut tcfg = cfg.clone();
    tcfg.truthfulness.instances = cfg.verify.truthfulness_instances;
    let buyers = tcfg.truthfulness.buyers;
    let mut rows = Vec::new();
    for f in fams {
        let r = sweep_with_engine(&tcfg, scenario, f.at(buyers))?;
        for (side, s) in [("seller", &r.seller_summary), ("buyer", &r.buyer_summary)] {
            rows.push(CheckRow {
                check: format!("{side}-truthfulness/{}", f.name),
                cases: s.sweeps * tcfg.truthfulness.grid_points,
                violations: s.violations,
                worst: s.max_gain,
                threshold: format!("gain over truthful <= {:e}", tcfg.truthfulness.tolerance),
            });
        }
    }
    Ok(rows)
}

fn bleu_sanity(cfg: &Config) -> CliResult<CheckRow> {
    let mut rng = check_rng(cfg.seed, 8);
    let mut cases = 0;
    let mut violations = 0;
    let mut worst = 0.0_f64;
    let mut expect = |got: f64, want: f64| {
        cases += 1;
        worst = worst.max((got - want).abs());
        violations += usize::from((got - want).abs() > 1e-12);
    };
    for mode in [BrevityMode::Standard, BrevityMode::Literal] {
        let uni = BleuConfig::unigram(mode);
        expect(bleu(&Sentence::parse("the cat sat"), &Sentence::parse("the cat sat"), &uni)?, 1.0);
        expect(bleu(&Sentence::parse("a b c d"), &Sentence::parse("a b x d"), &uni)?, 0.75);
    }
    let vocab = ["a", "b", "c", "d", "e", "f"];
    let random_sentence = |rng: &mut ChaCha8Rng| {
        let len = rng.gen_range(1..=15);
        Sentence::from_tokens((0..len).map(|_| vocab[rng.gen_range(0..vocab.len())]))
    };
    let mut out_of_range = 0;
    for _ in 0..1000 {
        let (r, c) = (random_sentence(&mut rng), random_sentence(&mut rng));
        let order = rng.gen_range(1..=4);
        for mode in [BrevityMode::Standard, BrevityMode::Literal] {
            let v = bleu(&r, &c, &BleuConfig::uniform(order, mode)?)?;
            out_of_range += usize::from(!(0.0..=1.0).contains(&v));
        }
    }
    Ok(CheckRow {
        check: "bleu-sanity".into(),
        cases: cases + 2000,
        violations: violations + out_of_range,
        worst,
        threshold: "identity 1, 3-of-4 unigrams 0.75, fuzz in [0, 1]".into(),
    })
}

pub fn checks(cfg: &Config, saved: Option<&MonotoneNetParams>) -> CliResult<Vec<CheckRow>> {
    let scenario = Scenario::new(&cfg.market)?;
    let mut counts: Vec<usize> = (2..=10).collect();
    counts.push(cfg.truthfulness.buyers);
    let fams = families(cfg, saved, &counts)?;
    let mut rows = vec![spa_equivalence(cfg)?];
    rows.extend(monotone_round_trip(cfg)?);
    rows.push(softmax_sums(cfg)?);
    rows.push(gradient(cfg)?);
    rows.extend(market_checks(cfg, &scenario, &fams)?);
    rows.extend(truthfulness_checks(cfg, &scenario, &fams)?);
    rows.push(bleu_sanity(cfg)?);
    Ok(rows)
}

pub fn report_table(rows: &[CheckRow]) -> Table {
    let mut t = Table::new(
        "verify-report/v1",
        &["check", "cases", "violations", "worst", "threshold", "status"],
    );
    for r in rows {
        let status = if r.passed() { "PASS" } else { "FAIL" };
        t.push(row![r.check, r.cases, r.violations, r.worst, r.threshold, status]);
    }
    t
}

pub fn run(cfg: &Config, saved: Option<&MonotoneNetParams>, out: &mut OutDir) -> CliResult<RunSummary> {
    let rows = checks(cfg, saved)?;
    let table = report_table(&rows);
    out.write_table("verify_report.csv", &table)?;
    print!("{}", table.to_csv());
    let failures: Vec<String> = rows
        .iter()
        .filter(|r| !r.passed())
        .map(|r| format!("{} ({} violations)", r.check, r.violations))
        .collect();
    Ok(RunSummary::checked(
        vec![
            ("checks".into(), rows.len().to_string()),
            ("engines".into(), if saved.is_some() { "spa, random-tied-dla, loaded-dla" } else { "spa, random-tied-dla" }.into()),
        ],
        failures,
    ))
}
