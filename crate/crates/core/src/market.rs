//! Agents, valuations and costs shared by both trading layers.

use crate::error::{invalid, Result};

/// Weights a party puts on sentence similarity versus BLEU.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preference {
    lambda: f64,
    beta: f64,
}

impl Preference {
    /// Preference with similarity weight `lambda` and BLEU weight `1 - lambda`.
    pub fn new(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return invalid(format!("similarity weight must be in [0, 1], got {lambda}"));
        }
        Ok(Self {
            lambda,
            beta: 1.0 - lambda,
        })
    }

    pub fn from_parts(lambda: f64, beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) || !(0.0..=1.0).contains(&beta) {
            return invalid(format!("weights must be in [0, 1], got ({lambda}, {beta})"));
        }
        if (lambda + beta - 1.0).abs() > 1e-12 {
            return invalid(format!("weights must sum to 1, got {}", lambda + beta));
        }
        Ok(Self { lambda, beta })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemanticScores {
    sim: f64,
    bleu: f64,
}

impl SemanticScores {
    pub fn new(sim: f64, bleu: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&sim) || !(0.0..=1.0).contains(&bleu) {
            return invalid(format!("scores must be in [0, 1], got ({sim}, {bleu})"));
        }
        Ok(Self { sim, bleu })
    }

    pub fn sim(&self) -> f64 {
        self.sim
    }

    pub fn bleu(&self) -> f64 {
        self.bleu
    }

    /// Both scores multiplied by `factor` in [0, 1].
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&factor) {
            return invalid(format!("scale factor must be in [0, 1], got {factor}"));
        }
        Self::new(self.sim * factor, self.bleu * factor)
    }
}

/// `lambda * sim + beta * bleu`.
pub fn accuracy(pref: Preference, scores: SemanticScores) -> f64 {
    pref.lambda * scores.sim + pref.beta * scores.bleu
}

/// A device's value for a provider model: the accuracy it gains. Negative when
/// the device already outperforms the provider.
pub fn model_valuation(provider_accuracy: f64, device_accuracy: f64) -> f64 {
    provider_accuracy - device_accuracy
}

/// Value to a buyer of one seller's semantic information.
pub fn info_valuation(pref: Preference, scores: SemanticScores) -> f64 {
    accuracy(pref, scores)
}

pub fn buyer_utility(valuation: f64, price: f64, won: bool) -> f64 {
    if won {
        valuation - price
    } else {
        0.0
    }
}

pub fn seller_utility(payment: f64, cost: f64, won: bool) -> f64 {
    if won {
        payment - cost
    } else {
        0.0
    }
}

/// Inputs of a device's per-transmission cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    /// Data size in words.
    pub data_size: f64,
    pub unit_data_cost: f64,
    pub unit_compute_cost: f64,
    pub comm_power: f64,
    /// Bits used to represent the semantic information.
    pub bits: f64,
    /// Transmission rate in bits per second.
    pub rate: f64,
    pub unit_energy_cost: f64,
    /// Price paid for the device's semantic model.
    pub model_price: f64,
    /// Expected number of transmissions the model is amortized over.
    pub expected_transmissions: f64,
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("data_size", self.data_size),
            ("unit_data_cost", self.unit_data_cost),
            ("unit_compute_cost", self.unit_compute_cost),
            ("comm_power", self.comm_power),
            ("bits", self.bits),
            ("rate", self.rate),
            ("unit_energy_cost", self.unit_energy_cost),
            ("model_price", self.model_price),
            ("expected_transmissions", self.expected_transmissions),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return invalid(format!("{name} must be finite and nonnegative, got {v}"));
            }
        }
        if self.rate <= 0.0 {
            return invalid("rate must be positive");
        }
        if self.expected_transmissions < 1.0 {
            return invalid("expected transmissions must be at least 1");
        }
        Ok(())
    }

    pub fn data_cost(&self) -> f64 {
        self.data_size * self.unit_data_cost
    }

    pub fn compute_cost(&self) -> f64 {
        self.data_size * self.unit_compute_cost
    }

    pub fn comm_cost(&self) -> f64 {
        self.comm_power * self.bits / self.rate * self.unit_energy_cost
    }

    pub fn model_cost(&self) -> f64 {
        self.model_price / self.expected_transmissions
    }

    /// Sum of the data, compute, communication and amortized model costs.
    pub fn total_cost(&self) -> f64 {
        self.data_cost() + self.compute_cost() + self.comm_cost() + self.model_cost()
    }
}

/// A device selling semantic information.
#[derive(Debug, Clone, PartialEq)]
pub struct Seller {
    pub id: usize,
    pub scores: SemanticScores,
    pub cost_params: CostParams,
    pub ask: f64,
}

impl Seller {
    /// A seller asking its true cost.
    pub fn truthful(id: usize, scores: SemanticScores, cost_params: CostParams) -> Result<Self> {
        cost_params.validate()?;
        Ok(Self {
            id,
            scores,
            ask: cost_params.total_cost(),
            cost_params,
        })
    }

    pub fn cost(&self) -> f64 {
        self.cost_params.total_cost()
    }
}

/// A semantic information buyer with one bid per seller.
///
/// `preferences` holds either a single preference applied to every seller
/// or one preference per seller, in seller order.
#[derive(Debug, Clone, PartialEq)]
pub struct Buyer {
    pub id: usize,
    pub preferences: Vec<Preference>,
    pub bids: Vec<f64>,
}

impl Buyer {
    /// A buyer bidding its true valuation for every seller.
    pub fn truthful(id: usize, preference: Preference, sellers: &[Seller]) -> Self {
        let bids = sellers
            .iter()
            .map(|s| info_valuation(preference, s.scores))
            .collect();
        Self {
            id,
            preferences: vec![preference],
            bids,
        }
    }

    /// A truthful buyer whose preference differs per seller.
    pub fn truthful_per_seller(id: usize, preferences: Vec<Preference>, sellers: &[Seller]) -> Result<Self> {
        if preferences.len() != sellers.len() {
            return Err(crate::Error::ShapeMismatch(format!(
                "{} preferences for {} sellers",
                preferences.len(),
                sellers.len()
            )));
        }
        let bids = preferences
            .iter()
            .zip(sellers)
            .map(|(&p, s)| info_valuation(p, s.scores))
            .collect();
        Ok(Self {
            id,
            preferences,
            bids,
        })
    }

    pub fn preference_for(&self, seller: usize) -> Preference {
        if self.preferences.len() == 1 {
            self.preferences[0]
        } else {
            self.preferences[seller]
        }
    }

    /// True value of seller `index`'s information.
    pub fn valuation(&self, index: usize, seller: &Seller) -> f64 {
        info_valuation(self.preference_for(index), seller.scores)
    }
}

/// Checks the shape and sign constraints the double auction relies on.
pub fn validate_market(buyers: &[Buyer], sellers: &[Seller]) -> Result<()> {
    for s in sellers {
        if !(s.ask.is_finite() && s.ask >= 0.0) {
            return invalid(format!("seller {} has invalid ask {}", s.id, s.ask));
        }
    }
    for b in buyers {
        if b.bids.len() != sellers.len() {
            return Err(crate::Error::ShapeMismatch(format!(
                "buyer {} has {} bids for {} sellers",
                b.id,
                b.bids.len(),
                sellers.len()
            )));
        }
        if b.preferences.len() != 1 && b.preferences.len() != sellers.len() {
            return Err(crate::Error::ShapeMismatch(format!(
                "buyer {} has {} preferences for {} sellers",
                b.id,
                b.preferences.len(),
                sellers.len()
            )));
        }
        if let Some(x) = b.bids.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return invalid(format!("buyer {} has invalid bid {x}", b.id));
        }
    }
    Ok(())
}
