//! Random market instances.
//!
//! Draw order for an instance, which fixes replayability: for each seller
//! in id order its model price, data size and reduced dimension; then for
//! each buyer in id order its similarity weight (per-buyer scope) or one
//! weight per seller in seller order (per-pair scope).

use std::path::Path;

use rand::Rng;
use semtrade_core::market::{Buyer, CostParams, Preference, Seller};
use semtrade_core::metrics::{bundled, ScoreCurve};

use crate::config::{MarketConfig, PreferenceScope, QualityModel};
use crate::error::{CliError, CliResult};

pub fn load_curve(spec: &str) -> CliResult<ScoreCurve> {
    match spec {
        "controlled-dropout" => Ok(bundled::controlled_dropout()),
        "baseline" => Ok(bundled::baseline()),
        path => {
            let text = std::fs::read_to_string(Path::new(path)).map_err(|e| CliError::io(path, e))?;
            Ok(ScoreCurve::parse(&text)?)
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    cfg: MarketConfig,
    curve: ScoreCurve,
}

/// One market: sellers with their reduced dimension, and truthful buyers.
#[derive(Debug, Clone)]
pub struct Instance {
    pub sellers: Vec<Seller>,
    pub dims: Vec<usize>,
    pub buyers: Vec<Buyer>,
}

impl Instance {
    pub fn theta(&self, seller: usize) -> f64 {
        self.sellers[seller].cost_params.model_price
    }
}

fn draw(rng: &mut impl Rng, r: [f64; 2]) -> f64 {
    rng.gen_range(r[0]..=r[1])
}

impl Scenario {
    pub fn new(cfg: &MarketConfig) -> CliResult<Self> {
        let curve = load_curve(&cfg.curve)?;
        if cfg.dim[1] > curve.max_dim() {
            return Err(CliError::Config(format!(
                "market.dim upper bound {} exceeds the curve's {} dimensions",
                cfg.dim[1],
                curve.max_dim()
            )));
        }
        Ok(Self {
            cfg: cfg.clone(),
            curve,
        })
    }

    pub fn sellers(&self) -> usize {
        self.cfg.sellers
    }

    pub fn theta_split(&self) -> f64 {
        self.cfg.theta_split
    }

    fn draw_seller(&self, id: usize, rng: &mut impl Rng) -> CliResult<(Seller, usize)> {
        let c = &self.cfg;
        let theta = draw(rng, c.model_price);
        let data_size = draw(rng, c.data_size);
        let dim = rng.gen_range(c.dim[0]..=c.dim[1]);
        let mut scores = self.curve.scores_at(dim)?;
        if c.quality == QualityModel::PriceScaled {
            scores = scores.scaled(theta)?;
        }
        let cost = CostParams {
            data_size,
            unit_data_cost: c.unit_data_cost,
            unit_compute_cost: c.unit_compute_cost,
            comm_power: c.comm_power,
            bits: c.bits,
            rate: c.rate,
            unit_energy_cost: c.unit_energy_cost,
            model_price: theta,
            expected_transmissions: c.expected_transmissions,
        };
        Ok((Seller::truthful(id, scores, cost)?, dim))
    }

    fn draw_buyer(&self, id: usize, sellers: &[Seller], rng: &mut impl Rng) -> CliResult<Buyer> {
        let mut pref = || Preference::new(draw(rng, self.cfg.lambda));
        Ok(match self.cfg.preference_scope {
            PreferenceScope::PerBuyer => Buyer::truthful(id, pref()?, sellers),
            PreferenceScope::PerPair => {
                let prefs = (0..sellers.len()).map(|_| pref()).collect::<Result<Vec<_>, _>>()?;
                Buyer::truthful_per_seller(id, prefs, sellers)?
            }
        })
    }

    pub fn instance(&self, buyers: usize, rng: &mut impl Rng) -> CliResult<Instance> {
        let mut sellers = Vec::with_capacity(self.cfg.sellers);
        let mut dims = Vec::with_capacity(self.cfg.sellers);
        for id in 0..self.cfg.sellers {
            let (s, d) = self.draw_seller(id, rng)?;
            sellers.push(s);
            dims.push(d);
        }
        let buyers = (0..buyers)
            .map(|id| self.draw_buyer(id, &sellers, rng))
            .collect::<CliResult<Vec<_>>>()?;
        Ok(Instance {
            sellers,
            dims,
            buyers,
        })
    }

    /// Bid columns the engine sees inside the market: one fresh seller and
    /// `buyers` fresh buyers per profile.
    pub fn column_samples(&self, buyers: usize, count: usize, rng: &mut impl Rng) -> CliResult<Vec<Vec<f64>>> {
        (0..count)
            .map(|_| {
                let (seller, _) = self.draw_seller(0, rng)?;
                let one = std::slice::from_ref(&seller);
                (0..buyers)
                    .map(|id| Ok(self.draw_buyer(id, one, rng)?.bids[0]))
                    .collect()
            })
            .collect()
    }
}
