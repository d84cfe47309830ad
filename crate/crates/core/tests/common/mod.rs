#![allow(dead_code)]

use rand::Rng;
use semtrade_core::market::{Buyer, CostParams, Preference, SemanticScores, Seller};

pub fn cost_params<R: Rng>(rng: &mut R) -> CostParams {
    CostParams {
        data_size: rng.gen_range(10.0..=100.0),
        unit_data_cost: 0.001,
        unit_compute_cost: 0.001,
        comm_power: 1.0,
        bits: 10_000.0,
        rate: 100_000.0,
        unit_energy_cost: 0.01,
        model_price: rng.gen_range(0.0..1.0),
        expected_transmissions: 100.0,
    }
}

/// A random market with truthful asks and bids and scores drawn directly.
pub fn random_market<R: Rng>(rng: &mut R, sellers: usize, buyers: usize) -> (Vec<Buyer>, Vec<Seller>) {
    let sellers: Vec<Seller> = (0..sellers)
        .map(|id| {
            let scores = SemanticScores::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)).unwrap();
            Seller::truthful(id, scores, cost_params(rng)).unwrap()
        })
        .collect();
    let buyers = (0..buyers)
        .map(|id| Buyer::truthful(id, Preference::new(rng.gen_range(0.0..=1.0)).unwrap(), &sellers))
        .collect();
    (buyers, sellers)
}
