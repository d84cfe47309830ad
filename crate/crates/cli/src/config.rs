//! Run configuration. Every key has a default, so an empty file is a valid
//! config; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub training: TrainingConfig,
    pub market: MarketConfig,
    pub truthfulness: TruthfulnessConfig,
    pub metrics: MetricsConfig,
    pub verify: VerifyConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SharingKind {
    Tied,
    PerBidder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub bidders: usize,
    pub samples: usize,
    pub test_samples: usize,
    /// Bids are drawn i.i.d. uniform on `[lo, hi]`.
    pub bids: [f64; 2],
    pub epochs: usize,
    pub learning_rate: f64,
    pub groups: usize,
    pub units: usize,
    pub temperature: f64,
    pub optimizer: OptimizerKind,
    pub sharing: SharingKind,
    pub init_log_scale: f64,
    pub init_bias_scale: f64,
    pub oracle_draws: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            bidders: 10,
            samples: 1000,
            test_samples: 10_000,
            bids: [0.0, 0.4],
            epochs: 500,
            learning_rate: 0.001,
            groups: 5,
            units: 10,
            temperature: 10.0,
            optimizer: OptimizerKind::Sgd,
            sharing: SharingKind::Tied,
            init_log_scale: 0.1,
            init_bias_scale: 0.01,
            oracle_draws: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PreferenceScope {
    /// A fresh similarity weight for every (buyer, seller) pair.
    PerPair,
    /// One similarity weight per buyer, used for every seller.
    PerBuyer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QualityModel {
    /// Scores are the curve value at the reduced dimension times the model
    /// price: a seller that paid more holds a better model.
    PriceScaled,
    /// Scores are the curve value at the reduced dimension.
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineKind {
    Dla,
    Spa,
}

impl EngineKind {
    pub fn label(self) -> &'static str {
        match self {
            EngineKind::Dla => "dla",
            EngineKind::Spa => "baseline (SPA engine)",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarketConfig {
    pub sellers: usize,
    pub buyers: Vec<usize>,
    pub replicas: usize,
    pub engines: Vec<EngineKind>,
    /// Saved tied network used for every buyer count instead of training.
    pub dla_params: Option<PathBuf>,
    pub lambda: [f64; 2],
    pub preference_scope: PreferenceScope,
    pub data_size: [f64; 2],
    pub dim: [usize; 2],
    pub model_price: [f64; 2],
    pub quality: QualityModel,
    /// `controlled-dropout`, `baseline`, or a path to a score-curve file.
    pub curve: String,
    pub theta_split: f64,
    pub unit_data_cost: f64,
    pub unit_compute_cost: f64,
    pub comm_power: f64,
    pub bits: f64,
    pub rate: f64,
    pub unit_energy_cost: f64,
    pub expected_transmissions: f64,
}

impl Default for MarketConfig {
    fn default() -> Self {
        Self {
            sellers: 20,
            buyers: vec![2, 4, 6, 8, 10],
            replicas: 1000,
            engines: vec![EngineKind::Dla, EngineKind::Spa],
            dla_params: None,
            lambda: [0.0, 1.0],
            preference_scope: PreferenceScope::PerPair,
            data_size: [10.0, 100.0],
            dim: [1, 16],
            model_price: [0.0, 1.0],
            quality: QualityModel::PriceScaled,
            curve: "controlled-dropout".into(),
            theta_split: 0.5,
            unit_data_cost: 0.001,
            unit_compute_cost: 0.001,
            comm_power: 1.0,
            bits: 10_000.0,
            rate: 100_000.0,
            unit_energy_cost: 0.01,
            expected_transmissions: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruthfulnessConfig {
    pub instances: usize,
    pub buyers: usize,
    pub grid: [f64; 2],
    pub grid_points: usize,
    pub engine: EngineKind,
    pub tolerance: f64,
    /// Fixed deviators; random per instance when unset.
    pub seller: Option<usize>,
    pub buyer: Option<usize>,
    pub target_seller: Option<usize>,
}

impl Default for TruthfulnessConfig {
    fn default() -> Self {
        Self {
            instances: 100,
            buyers: 10,
            grid: [0.01, 1.0],
            grid_points: 50,
            engine: EngineKind::Dla,
            tolerance: 1e-9,
            seller: None,
            buyer: None,
            target_seller: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub max_order: usize,
    pub embed_dim: usize,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            max_order: 1,
            embed_dim: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub spa_profiles: usize,
    pub transform_cases: usize,
    pub gradient_points: usize,
    pub market_instances: usize,
    pub truthfulness_instances: usize,
    /// Saved network to include in the market and truthfulness checks.
    pub engine_params: Option<PathBuf>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            spa_profiles: 1000,
            transform_cases: 10_000,
            gradient_points: 100,
            market_instances: 10_000,
            truthfulness_instances: 100,
            engine_params: None,
        }
    }
}

fn bad<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Config(msg.into()))
}

fn check_range(name: &str, r: [f64; 2], lo: f64, hi: f64) -> CliResult<()> {
    if !(r[0].is_finite() && r[1].is_finite() && lo <= r[0] && r[0] <= r[1] && r[1] <= hi) {
        return bad(format!("{name} = {r:?} must satisfy {lo} <= lo <= hi <= {hi}"));
    }
    Ok(())
}

fn positive(name: &str, v: f64) -> CliResult<()> {
    if !(v.is_finite() && v > 0.0) {
        return bad(format!("{name} must be positive, got {v}"));
    }
    Ok(())
}

fn at_least_one(name: &str, v: usize) -> CliResult<()> {
    if v == 0 {
        return bad(format!("{name} must be at least 1"));
    }
    Ok(())
}

impl Config {
    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => {
                let cfg = Config::default();
                cfg.validate()?;
                Ok(cfg)
            }
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                Self::parse(&text)
            }
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let t = &self.training;
        at_least_one("training.bidders", t.bidders)?;
        at_least_one("training.samples", t.samples)?;
        at_least_one("training.test_samples", t.test_samples)?;
        at_least_one("training.epochs", t.epochs)?;
        at_least_one("training.groups", t.groups)?;
        at_least_one("training.units", t.units)?;
        at_least_one("training.oracle_draws", t.oracle_draws)?;
        check_range("training.bids", t.bids, 0.0, f64::MAX)?;
        if t.bids[0] >= t.bids[1] {
            return bad("training.bids must have lo < hi");
        }
        positive("training.learning_rate", t.learning_rate)?;
        positive("training.temperature", t.temperature)?;
        for (name, v) in [
            ("training.init_log_scale", t.init_log_scale),
            ("training.init_bias_scale", t.init_bias_scale),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be nonnegative"));
            }
        }

        let m = &self.market;
        at_least_one("market.sellers", m.sellers)?;
        at_least_one("market.replicas", m.replicas)?;
        if m.buyers.is_empty() || m.buyers.contains(&0) {
            return bad("market.buyers must be a nonempty list of positive counts");
        }
        if m.engines.is_empty() {
            return bad("market.engines must name at least one engine");
        }
        check_range("market.lambda", m.lambda, 0.0, 1.0)?;
        check_range("market.data_size", m.data_size, 0.0, f64::MAX)?;
        check_range("market.model_price", m.model_price, 0.0, f64::MAX)?;
        if m.quality == QualityModel::PriceScaled && m.model_price[1] > 1.0 {
            return bad("market.model_price must lie in [0, 1] when quality = \"price-scaled\"");
        }
        if m.dim[0] == 0 || m.dim[0] > m.dim[1] {
            return bad(format!("market.dim = {:?} must satisfy 1 <= lo <= hi", m.dim));
        }
        for (name, v) in [
            ("market.unit_data_cost", m.unit_data_cost),
            ("market.unit_compute_cost", m.unit_compute_cost),
            ("market.comm_power", m.comm_power),
            ("market.bits", m.bits),
            ("market.unit_energy_cost", m.unit_energy_cost),
            ("market.theta_split", m.theta_split),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and nonnegative"));
            }
        }
        positive("market.rate", m.rate)?;
        if !(m.expected_transmissions >= 1.0 && m.expected_transmissions.is_finite()) {
            return bad("market.expected_transmissions must be at least 1");
        }

        let tr = &self.truthfulness;
        at_least_one("truthfulness.instances", tr.instances)?;
        at_least_one("truthfulness.buyers", tr.buyers)?;
        if tr.grid_points < 2 {
            return bad("truthfulness.grid_points must be at least 2");
        }
        check_range("truthfulness.grid", tr.grid, 0.0, f64::MAX)?;
        if !(tr.tolerance.is_finite() && tr.tolerance >= 0.0) {
            return bad("truthfulness.tolerance must be nonnegative");
        }
        for (name, id, count) in [
            ("truthfulness.seller", tr.seller, m.sellers),
            ("truthfulness.target_seller", tr.target_seller, m.sellers),
            ("truthfulness.buyer", tr.buyer, tr.buyers),
        ] {
            if let Some(id) = id.filter(|&id| id >= count) {
                return bad(format!("{name} = {id} out of range (0..{count})"));
            }
        }

        at_least_one("metrics.max_order", self.metrics.max_order)?;
        at_least_one("metrics.embed_dim", self.metrics.embed_dim)?;
        Ok(())
    }

    /// Canonical serialization of the resolved config.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of [`Config::canonical`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}
