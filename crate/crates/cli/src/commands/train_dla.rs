use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semtrade_core::baselines::{myerson_uniform_oracle, spa, spa_uniform_closed_form};
use semtrade_core::monotone::{save_params, train, MonotoneNetParams, TrainReport};

use super::RunSummary;
use crate::config::Config;
use crate::engines::train_config;
use crate::error::CliResult;
use crate::output::{OutDir, Table};
use crate::row;
use crate::seeds::{derive, Stream};
use crate::stats::{mean_se, MeanSe};

pub fn uniform_profiles(bidders: usize, count: usize, range: [f64; 2], seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..bidders).map(|_| rng.gen_range(range[0]..range[1])).collect())
        .collect()
}

#[derive(Debug, Clone)]
pub struct RevenueRow {
    pub mechanism: String,
    pub split: &'static str,
    pub estimate: MeanSe,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: MonotoneNetParams,
    pub report: TrainReport,
    pub spa_train_revenue: f64,
    pub dla_test: MeanSe,
    pub spa_test: MeanSe,
    /// Per-profile DLA minus SPA revenue on the held-out set.
    pub test_difference: MeanSe,
    pub oracle: MeanSe,
    pub spa_closed_form: Option<f64>,
}

impl TrainOutcome {
    pub fn revenue_rows(&self) -> Vec<RevenueRow> {
        let r = |mechanism: &str, split, estimate| RevenueRow {
            mechanism: mechanism.to_string(),
            split,
            estimate,
        };
        let mut rows = vec![
            r("dla", "test", self.dla_test),
            r("spa", "test", self.spa_test),
            r("dla-minus-spa", "test", self.test_difference),
            r("myerson (SPA, optimal reserve)", "oracle", self.oracle),
        ];
        if let Some(v) = self.spa_closed_form {
            rows.push(r(
                "spa closed form",
                "exact",
                MeanSe {
                    mean: v,
                    se: 0.0,
                    n: 0,
                },
            ));
        }
        rows
    }
}

fn revenues(bids: &[Vec<f64>], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    bids.iter().map(|b| f(b)).collect()
}

pub fn run_training(cfg: &Config) -> CliResult<TrainOutcome> {
    let t = &cfg.training;
    let train_set = uniform_profiles(t.bidders, t.samples, t.bids, derive(cfg.seed, Stream::TrainSamples, 0));
    let test_set = uniform_profiles(t.bidders, t.test_samples, t.bids, derive(cfg.seed, Stream::TestSamples, 0));
    let (params, report) = train(&train_set, &train_config(t, derive(cfg.seed, Stream::NetInit, 0)))?;

    let spa_rev = |b: &[f64]| spa(b).map(|o| o.revenue()).unwrap_or(0.0);
    let spa_train = mean_se(&revenues(&train_set, spa_rev)).mean;
    let dla_rev: Vec<f64> = test_set
        .iter()
        .map(|b| params.infer(b).map(|o| o.revenue()))
        .collect::<Result<_, _>>()?;
    let spa_test = revenues(&test_set, spa_rev);
    let diff: Vec<f64> = dla_rev.iter().zip(&spa_test).map(|(a, b)| a - b).collect();
    let oracle = myerson_uniform_oracle(
        t.bidders,
        t.bids[0],
        t.bids[1],
        t.oracle_draws,
        derive(cfg.seed, Stream::Oracle, 0),
    )?;
    Ok(TrainOutcome {
        spa_train_revenue: spa_train,
        dla_test: mean_se(&dla_rev),
        spa_test: mean_se(&spa_test),
        test_difference: mean_se(&diff),
        oracle: MeanSe {
            mean: oracle.mean,
            se: oracle.std_error,
            n: oracle.samples,
        },
        spa_closed_form: (t.bids[0] == 0.0).then(|| spa_uniform_closed_form(t.bidders, t.bids[1])),
        params,
        report,
    })
}

pub fn history_table(outcome: &TrainOutcome) -> Table {
    let mut table = Table::new(
        "train-history/v1",
        &["epoch", "loss", "soft_revenue", "dla_train_revenue", "spa_train_revenue"],
    );
    for e in &outcome.report.history {
        table.push(row![e.epoch, e.loss, e.soft_revenue, e.hard_revenue, outcome.spa_train_revenue]);
    }
    table
}

pub fn summary_table(outcome: &TrainOutcome) -> Table {
    let mut table = Table::new(
        "revenue-summary/v1",
        &["mechanism", "split", "mean", "std_error", "samples"],
    );
    for r in outcome.revenue_rows() {
        table.push(row![r.mechanism, r.split, r.estimate.mean, r.estimate.se, r.estimate.n]);
    }
    table
}

pub fn run(cfg: &Config, out: &mut OutDir) -> CliResult<RunSummary> {
    let outcome = run_training(cfg)?;
    out.write_text("dla_params.txt", &save_params(&outcome.params))?;
    out.write_table("train_history.csv", &history_table(&outcome))?;
    out.write_table("revenue_summary.csv", &summary_table(&outcome))?;
    println!(
        "held-out revenue: dla {:.6} spa {:.6} (difference {:+.3e} ± {:.1e}); optimal-reserve oracle {:.6}",
        outcome.dla_test.mean,
        outcome.spa_test.mean,
        outcome.test_difference.mean,
        outcome.test_difference.se,
        outcome.oracle.mean
    );
    let t = &cfg.training;
    Ok(RunSummary::ok(vec![
        ("train_samples_seed".into(), derive(cfg.seed, Stream::TrainSamples, 0).to_string()),
        ("test_samples_seed".into(), derive(cfg.seed, Stream::TestSamples, 0).to_string()),
        ("net_init_seed".into(), derive(cfg.seed, Stream::NetInit, 0).to_string()),
        ("bid_range".into(), format!("[{}, {}]", t.bids[0], t.bids[1])),
    ]))
}
