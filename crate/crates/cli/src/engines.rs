//! Building single-item engines from config.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use semtrade_core::baselines::SpaEngine;
use semtrade_core::monotone::{
    load_params, train, MonotoneAuction, MonotoneNetParams, Optimizer, Sharing, TrainConfig, TrainReport,
};
use semtrade_core::AuctionEngine;

use crate::config::{EngineKind, OptimizerKind, SharingKind, TrainingConfig};
use crate::error::{CliError, CliResult};
use crate::scenario::Scenario;
use crate::seeds::{derive, Stream};

pub fn train_config(t: &TrainingConfig, seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: t.epochs,
        learning_rate: t.learning_rate,
        groups: t.groups,
        units: t.units,
        temperature: t.temperature,
        seed,
        sharing: match t.sharing {
            SharingKind::Tied => Sharing::Tied,
            SharingKind::PerBidder => Sharing::PerBidder,
        },
        optimizer: match t.optimizer {
            OptimizerKind::Sgd => Optimizer::Sgd,
            OptimizerKind::Adam => Optimizer::Adam,
        },
        init_log_scale: t.init_log_scale,
        init_bias_scale: t.init_bias_scale,
    }
}

pub fn read_params(path: &Path) -> CliResult<MonotoneNetParams> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    load_params(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Fits a network to the bid columns of `scenario` with `buyers` bidders.
pub fn train_for_market(
    scenario: &Scenario,
    training: &TrainingConfig,
    buyers: usize,
    master_seed: u64,
) -> CliResult<(MonotoneNetParams, TrainReport)> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive(master_seed, Stream::MarketTraining, buyers as u64));
    let samples = scenario.column_samples(buyers, training.samples, &mut rng)?;
    let cfg = train_config(training, derive(master_seed, Stream::NetInit, buyers as u64));
    Ok(train(&samples, &cfg)?)
}

/// Adapts a saved network to `buyers` bidders.
pub fn fit_to_bidders(params: &MonotoneNetParams, buyers: usize) -> CliResult<MonotoneNetParams> {
    if params.bidders() == buyers {
        return Ok(params.clone());
    }
    params.resized(buyers).map_err(|_| {
        CliError::Input(format!(
            "saved network has {} untied bidder grids; cannot serve {buyers} buyers",
            params.bidders()
        ))
    })
}

/// The engine for one buyer count: SPA, a saved network, or a network
/// trained in-process on the scenario's bid columns.
pub fn market_engine(
    kind: EngineKind,
    scenario: &Scenario,
    training: &TrainingConfig,
    saved: Option<&MonotoneNetParams>,
    buyers: usize,
    master_seed: u64,
) -> CliResult<Box<dyn AuctionEngine>> {
    Ok(match kind {
        EngineKind::Spa => Box::new(SpaEngine),
        EngineKind::Dla => {
            let params = match saved {
                Some(p) => fit_to_bidders(p, buyers)?,
                None => train_for_market(scenario, training, buyers, master_seed)?.0,
            };
            Box::new(MonotoneAuction::new(params).with_label(kind.label()))
        }
    })
}
