use rand::Rng;

use crate::error::{invalid, Result};
use crate::outcome::{AuctionEngine, AuctionOutcome};

/// Parameters of the per-bidder monotone bid transforms.
///
/// For bidder `m` the transform is `min_q max_s (w[m,q,s] * b + beta[m,q,s])`
/// with `w = exp(log_w)`, so every realized weight is strictly positive and
/// the transform is strictly increasing in the bid.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneNetParams {
    bidders: usize,
    groups: usize,
    units: usize,
    log_weights: Vec<f64>,
    biases: Vec<f64>,
    temperature: f64,
    tied: bool,
}

/// Unit selected by a min/max network evaluation: `(group, unit)`.
pub type ActiveUnit = (usize, usize);

impl MonotoneNetParams {
    pub fn new(
        bidders: usize,
        groups: usize,
        units: usize,
        log_weights: Vec<f64>,
        biases: Vec<f64>,
        temperature: f64,
    ) -> Result<Self> {
        if bidders == 0 || groups == 0 || units == 0 {
            return invalid("bidders, groups and units must all be at least 1");
        }
        let len = bidders * groups * units;
        if log_weights.len() != len || biases.len() != len {
            return invalid(format!(
                "expected {len} weights and biases, got {} and {}",
                log_weights.len(),
                biases.len()
            ));
        }
        if !(temperature.is_finite() && temperature > 0.0) {
            return invalid(format!("temperature must be positive, got {temperature}"));
        }
        if let Some(v) = log_weights.iter().chain(&biases).find(|v| !v.is_finite()) {
            return invalid(format!("non-finite network parameter {v}"));
        }
        let mut params = Self {
            bidders,
            groups,
            units,
            log_weights,
            biases,
            temperature,
            tied: false,
        };
        params.tied = params.compute_tied();
        Ok(params)
    }

    /// Q = S = 1, w = 1, beta = 0: the transform is the identity and the
    /// auction reduces to a second-price auction with zero reserve.
    pub fn identity(bidders: usize, temperature: f64) -> Result<Self> {
        Self::new(
            bidders,
            1,
            1,
            vec![0.0; bidders],
            vec![0.0; bidders],
            temperature,
        )
    }

    /// Random parameters with `log_w ~ U[-log_scale, log_scale]` and
    /// `beta ~ U[-bias_scale, bias_scale]`. With `tied`, every bidder gets
    /// the same grid.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        bidders: usize,
        groups: usize,
        units: usize,
        temperature: f64,
        log_scale: f64,
        bias_scale: f64,
        tied: bool,
    ) -> Result<Self> {
        let per = groups * units;
        let draw = |rng: &mut R, scale: f64| {
            if scale > 0.0 {
                rng.gen_range(-scale..=scale)
            } else {
                0.0
            }
        };
        let mut log_weights = Vec::with_capacity(bidders * per);
        let mut biases = Vec::with_capacity(bidders * per);
        if tied {
            let lw: Vec<f64> = (0..per).map(|_| draw(rng, log_scale)).collect();
            let bs: Vec<f64> = (0..per).map(|_| draw(rng, bias_scale)).collect();
            for _ in 0..bidders {
                log_weights.extend_from_slice(&lw);
                biases.extend_from_slice(&bs);
            }
        } else {
            for _ in 0..bidders * per {
                log_weights.push(draw(rng, log_scale));
                biases.push(draw(rng, bias_scale));
            }
        }
        Self::new(bidders, groups, units, log_weights, biases, temperature)
    }

    pub fn bidders(&self) -> usize {
        self.bidders
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn units(&self) -> usize {
        self.units
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    /// True when every bidder carries an identical grid.
    pub fn is_tied(&self) -> bool {
        self.tied
    }

    /// The same tied grid for a different number of bidders.
    pub fn resized(&self, bidders: usize) -> Result<Self> {
        if !self.tied {
            return invalid("only tied parameters can be resized");
        }
        let per = self.groups * self.units;
        Self::new(
            bidders,
            self.groups,
            self.units,
            self.log_weights[..per].repeat(bidders),
            self.biases[..per].repeat(bidders),
            self.temperature,
        )
    }

    pub fn param_count(&self) -> usize {
        self.log_weights.len()
    }

    #[inline]
    pub fn index(&self, bidder: usize, group: usize, unit: usize) -> usize {
        (bidder * self.groups + group) * self.units + unit
    }

    pub fn weight(&self, bidder: usize, group: usize, unit: usize) -> f64 {
        self.log_weights[self.index(bidder, group, unit)].exp()
    }

    pub fn bias(&self, bidder: usize, group: usize, unit: usize) -> f64 {
        self.biases[self.index(bidder, group, unit)]
    }

    /// Applies an additive update to the raw parameter vectors.
    pub(crate) fn apply_update(&mut self, d_log_weights: &[f64], d_biases: &[f64]) {
        for (p, d) in self.log_weights.iter_mut().zip(d_log_weights) {
            *p += d;
        }
        for (p, d) in self.biases.iter_mut().zip(d_biases) {
            *p += d;
        }
        self.tied = self.compute_tied();
    }

    pub(crate) fn refresh(&mut self) {
        self.tied = self.compute_tied();
    }

    fn compute_tied(&self) -> bool {
        let per = self.groups * self.units;
        let (lw0, b0) = (&self.log_weights[..per], &self.biases[..per]);
        (1..self.bidders).all(|m| {
            let r = m * per..(m + 1) * per;
            self.log_weights[r.clone()] == *lw0 && self.biases[r] == *b0
        })
    }

    /// Transformed bid and the unit that realizes it.
    pub fn transform_active(&self, bidder: usize, bid: f64) -> (f64, ActiveUnit) {
        let mut best = f64::INFINITY;
        let mut active = (0, 0);
        for q in 0..self.groups {
            let mut group_max = f64::NEG_INFINITY;
            let mut group_unit = 0;
            for s in 0..self.units {
                let i = self.index(bidder, q, s);
                let v = self.log_weights[i].exp() * bid + self.biases[i];
                if v > group_max {
                    group_max = v;
                    group_unit = s;
                }
            }
            if group_max < best {
                best = group_max;
                active = (q, group_unit);
            }
        }
        (best, active)
    }

    pub fn transform(&self, bidder: usize, bid: f64) -> f64 {
        self.transform_active(bidder, bid).0
    }

    /// `max_q min_s (y - beta) / w` and the unit that realizes it.
    pub fn inverse_active(&self, bidder: usize, y: f64) -> (f64, ActiveUnit) {
        let mut best = f64::NEG_INFINITY;
        let mut active = (0, 0);
        for q in 0..self.groups {
            let mut group_min = f64::INFINITY;
            let mut group_unit = 0;
            for s in 0..self.units {
                let i = self.index(bidder, q, s);
                let v = (y - self.biases[i]) / self.log_weights[i].exp();
                if v < group_min {
                    group_min = v;
                    group_unit = s;
                }
            }
            if group_min > best {
                best = group_min;
                active = (q, group_unit);
            }
        }
        (best, active)
    }

    pub fn inverse_transform(&self, bidder: usize, y: f64) -> f64 {
        self.inverse_active(bidder, y).0
    }

    pub fn transform_all(&self, bids: &[f64]) -> Vec<f64> {
        bids.iter()
            .enumerate()
            .map(|(m, &b)| self.transform(m, b))
            .collect()
    }

    /// Softmax allocation over the `M` transformed bids plus a dummy slot
    /// fixed at zero. The returned vector has `M + 1` entries, dummy last.
    pub fn soft_allocate(&self, bids: &[f64]) -> Result<Vec<f64>> {
        self.check_bids(bids)?;
        let transformed = self.transform_all(bids);
        Ok(softmax_with_dummy(&transformed, self.temperature))
    }

    /// Second-price-with-zero-reserve payment in transformed space for
    /// `bidder`: `max(0, max_{j != bidder} transformed_j)`.
    pub fn spa0_payment(&self, bids: &[f64], bidder: usize) -> Result<f64> {
        self.check_bids(bids)?;
        if bidder >= self.bidders {
            return invalid(format!("bidder {bidder} out of range"));
        }
        let transformed = self.transform_all(bids);
        Ok(competitor_max(&transformed, bidder).map_or(0.0, |(_, c)| c.max(0.0)))
    }

    /// Deterministic hard auction: highest transformed bid wins if it beats
    /// the zero dummy, and pays the smallest bid that would still have won.
    pub fn infer(&self, bids: &[f64]) -> Result<AuctionOutcome> {
        self.check_bids(bids)?;
        let transformed = self.transform_all(bids);
        let mut winner = 0;
        for (m, &t) in transformed.iter().enumerate().skip(1) {
            if t > transformed[winner] {
                winner = m;
            }
        }
        if transformed[winner] <= 0.0 {
            return Ok(AuctionOutcome::Unsold);
        }
        let competitor = competitor_max(&transformed, winner);
        let raw = match competitor {
            // identical transforms invert each other exactly
            Some((j, c)) if c >= 0.0 && self.tied => bids[j],
            Some((_, c)) => self.inverse_transform(winner, c.max(0.0)),
            None => self.inverse_transform(winner, 0.0),
        };
        // bids live in [0, inf): the threshold price is clamped into that
        // domain, and rounding in the inverse must not push it past the bid
        let payment = raw.max(0.0).min(bids[winner]);
        Ok(AuctionOutcome::Sold { winner, payment })
    }

    pub(crate) fn check_bids(&self, bids: &[f64]) -> Result<()> {
        if bids.len() != self.bidders {
            return invalid(format!(
                "network expects {} bids, got {}",
                self.bidders,
                bids.len()
            ));
        }
        if let Some(b) = bids.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
            return invalid(format!("bids must be finite and nonnegative, got {b}"));
        }
        Ok(())
    }
}

/// Lowest-index argmax over all entries except `skip`.
pub(crate) fn competitor_max(values: &[f64], skip: usize) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (j, &v) in values.iter().enumerate() {
        if j == skip {
            continue;
        }
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((j, v)),
        }
    }
    best
}

pub(crate) fn softmax_with_dummy(transformed: &[f64], temperature: f64) -> Vec<f64> {
    let peak = transformed.iter().copied().fold(0.0_f64, f64::max);
    let mut z: Vec<f64> = transformed
        .iter()
        .chain(std::iter::once(&0.0))
        .map(|&t| (temperature * (t - peak)).exp())
        .collect();
    let total: f64 = z.iter().sum();
    for v in &mut z {
        *v /= total;
    }
    z
}

/// A trained (or hand-built) monotone network used as a single-item engine.
#[derive(Debug, Clone)]
pub struct MonotoneAuction {
    params: MonotoneNetParams,
    label: String,
}

impl MonotoneAuction {
    pub fn new(params: MonotoneNetParams) -> Self {
        Self {
            params,
            label: "dla".to_string(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn params(&self) -> &MonotoneNetParams {
        &self.params
    }
}

impl AuctionEngine for MonotoneAuction {
    fn run(&self, bids: &[f64]) -> Result<AuctionOutcome> {
        self.params.infer(bids)
    }

    fn label(&self) -> &str {
        &self.label
    }
}
