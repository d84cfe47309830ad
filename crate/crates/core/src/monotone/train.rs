use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::net::{competitor_max, softmax_with_dummy, MonotoneNetParams};
use crate::error::{invalid, Result};

/// How bidder grids relate during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sharing {
    /// One grid per bidder, updated independently.
    PerBidder,
    /// All bidders carry the same grid; gradients are pooled across bidders.
    Tied,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    /// Plain full-batch gradient descent.
    Sgd,
    /// Adam with the usual (0.9, 0.999, 1e-8) moments.
    Adam,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub groups: usize,
    pub units: usize,
    pub temperature: f64,
    pub seed: u64,
    pub sharing: Sharing,
    pub optimizer: Optimizer,
    pub init_log_scale: f64,
    pub init_bias_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            learning_rate: 0.001,
            groups: 5,
            units: 10,
            temperature: 10.0,
            seed: 0,
            sharing: Sharing::Tied,
            optimizer: Optimizer::Sgd,
            init_log_scale: 0.1,
            init_bias_scale: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Training loss: negative mean soft revenue.
    pub loss: f64,
    /// Mean soft (softmax-allocation) revenue, equal to `-loss`.
    pub soft_revenue: f64,
    /// Mean revenue of the deterministic auction on the training set.
    pub hard_revenue: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub history: Vec<EpochStats>,
    pub final_revenue: f64,
    pub epochs_run: usize,
    pub seed: u64,
}

/// Loss and its gradient with respect to `(log_weights, biases)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGradient {
    pub loss: f64,
    pub d_log_weights: Vec<f64>,
    pub d_biases: Vec<f64>,
}

/// Negative mean soft revenue over `samples` and its analytic gradient.
///
/// Gradients through each `min`/`max` flow to the single active unit;
/// exact ties resolve to the lowest `(group, unit)` index.
pub fn loss_and_gradient(params: &MonotoneNetParams, samples: &[Vec<f64>]) -> Result<LossGradient> {
    if samples.is_empty() {
        return invalid("no training samples");
    }
    let m_count = params.bidders();
    let kappa = params.temperature();
    let n = params.param_count();
    let mut d_lw = vec![0.0; n];
    let mut d_b = vec![0.0; n];
    let mut total = 0.0;

    let mut transformed = vec![0.0; m_count];
    let mut fwd_active = vec![(0, 0); m_count];
    let mut theta = vec![0.0; m_count];
    let mut d_t = vec![0.0; m_count];

    for bids in samples {
        if bids.len() != m_count {
            return invalid(format!(
                "sample has {} bids, network expects {m_count}",
                bids.len()
            ));
        }
        for (m, &b) in bids.iter().enumerate() {
            let (t, a) = params.transform_active(m, b);
            transformed[m] = t;
            fwd_active[m] = a;
        }
        let z = softmax_with_dummy(&transformed, kappa);

        // inverse-transformed payments, with what is needed for backprop
        struct PayTrace {
            competitor: Option<usize>,
            active: (usize, usize),
            live: bool,
        }
        let mut traces = Vec::with_capacity(m_count);
        for m in 0..m_count {
            let comp = competitor_max(&transformed, m);
            let (y, competitor) = match comp {
                Some((j, c)) if c > 0.0 => (c, Some(j)),
                _ => (0.0, None),
            };
            let (raw, active) = params.inverse_active(m, y);
            let live = raw > 0.0;
            theta[m] = raw.max(0.0);
            traces.push(PayTrace {
                competitor,
                active,
                live,
            });
        }
        let revenue: f64 = (0..m_count).map(|m| z[m] * theta[m]).sum();
        total += revenue;

        // d revenue / d transformed, through the softmax
        for m in 0..m_count {
            d_t[m] = kappa * z[m] * (theta[m] - revenue);
        }
        // d revenue / d theta_m = z_m
        for (m, tr) in traces.iter().enumerate() {
            if !tr.live {
                continue;
            }
            let g = z[m];
            let (q, s) = tr.active;
            let i = params.index(m, q, s);
            let w = params.log_weights()[i].exp();
            // theta = (y - beta) / w
            d_b[i] -= g / w;
            d_lw[i] -= g * theta[m];
            if let Some(j) = tr.competitor {
                d_t[j] += g / w;
            }
        }
        for m in 0..m_count {
            let (q, s) = fwd_active[m];
            let i = params.index(m, q, s);
            let w = params.log_weights()[i].exp();
            // transformed = w * b + beta
            d_lw[i] += d_t[m] * w * bids[m];
            d_b[i] += d_t[m];
        }
    }

    let scale = -1.0 / samples.len() as f64;
    for g in d_lw.iter_mut().chain(d_b.iter_mut()) {
        *g *= scale;
    }
    Ok(LossGradient {
        loss: -total / samples.len() as f64,
        d_log_weights: d_lw,
        d_biases: d_b,
    })
}

/// Distance from `bids` to the nearest switch of an active unit or a ReLU
/// boundary in the loss. The loss is smooth within a neighborhood of this
/// size, so finite-difference checks are meaningful only where it is not
/// tiny.
pub fn kink_margin(params: &MonotoneNetParams, bids: &[f64]) -> Result<f64> {
    params.check_bids(bids)?;
    fn gap(xs: &mut [f64]) -> f64 {
        if xs.len() < 2 {
            return f64::INFINITY;
        }
        xs.sort_by(f64::total_cmp);
        let n = xs.len();
        (xs[1] - xs[0]).min(xs[n - 1] - xs[n - 2])
    }
    let (groups, units) = (params.groups(), params.units());
    // min over groups of max over units (forward) or the mirrored form
    let nested = |f: &dyn Fn(usize, usize) -> f64, forward: bool| -> (f64, f64) {
        let mut margin = f64::INFINITY;
        let mut outer = Vec::with_capacity(groups);
        for q in 0..groups {
            let mut inner: Vec<f64> = (0..units).map(|s| f(q, s)).collect();
            margin = margin.min(gap(&mut inner));
            outer.push(if forward { inner[units - 1] } else { inner[0] });
        }
        let value = if forward {
            outer.iter().copied().fold(f64::INFINITY, f64::min)
        } else {
            outer.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        };
        (value, margin.min(gap(&mut outer)))
    };
    let mut margin = f64::INFINITY;
    let mut transformed = Vec::with_capacity(bids.len());
    for (m, &b) in bids.iter().enumerate() {
        let (t, g) = nested(&|q, s| params.weight(m, q, s) * b + params.bias(m, q, s), true);
        transformed.push(t);
        margin = margin.min(g);
    }
    margin = margin.min(gap(&mut transformed.clone()));
    for m in 0..bids.len() {
        let y = match competitor_max(&transformed, m) {
            Some((_, c)) => {
                margin = margin.min(c.abs());
                c.max(0.0)
            }
            None => 0.0,
        };
        let (raw, g) = nested(&|q, s| (y - params.bias(m, q, s)) / params.weight(m, q, s), false);
        margin = margin.min(g).min(raw.abs());
    }
    Ok(margin)
}

/// Mean revenue of the deterministic auction over `samples`.
pub fn hard_revenue(params: &MonotoneNetParams, samples: &[Vec<f64>]) -> Result<f64> {
    if samples.is_empty() {
        return invalid("no samples");
    }
    let mut total = 0.0;
    for bids in samples {
        total += params.infer(bids)?.revenue();
    }
    Ok(total / samples.len() as f64)
}

fn pool_tied(params: &MonotoneNetParams, grad: &mut [f64]) {
    let per = params.groups() * params.units();
    let mut pooled = vec![0.0; per];
    for chunk in grad.chunks(per) {
        for (p, g) in pooled.iter_mut().zip(chunk) {
            *p += g;
        }
    }
    for chunk in grad.chunks_mut(per) {
        chunk.copy_from_slice(&pooled);
    }
}

struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl AdamState {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    fn step(&mut self, grad: &[f64], lr: f64) -> Vec<f64> {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        self.step += 1;
        let c1 = 1.0 - B1.powi(self.step);
        let c2 = 1.0 - B2.powi(self.step);
        grad.iter()
            .enumerate()
            .map(|(i, &g)| {
                self.m[i] = B1 * self.m[i] + (1.0 - B1) * g;
                self.v[i] = B2 * self.v[i] + (1.0 - B2) * g * g;
                -lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + EPS)
            })
            .collect()
    }
}

/// Trains a monotone auction on bid profiles by minimising negative soft
/// revenue. Deterministic given `cfg.seed`.
pub fn train(samples: &[Vec<f64>], cfg: &TrainConfig) -> Result<(MonotoneNetParams, TrainReport)> {
    if samples.is_empty() {
        return invalid("empty training set");
    }
    if cfg.epochs == 0 {
        return invalid("epochs must be at least 1");
    }
    if !(cfg.learning_rate.is_finite() && cfg.learning_rate > 0.0) {
        return invalid("learning rate must be positive");
    }
    let bidders = samples[0].len();
    if bidders == 0 {
        return invalid("samples must contain at least one bid");
    }
    if let Some(s) = samples.iter().find(|s| s.len() != bidders) {
        return invalid(format!(
            "inconsistent sample widths: {} vs {bidders}",
            s.len()
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = MonotoneNetParams::random(
        &mut rng,
        bidders,
        cfg.groups,
        cfg.units,
        cfg.temperature,
        cfg.init_log_scale,
        cfg.init_bias_scale,
        cfg.sharing == Sharing::Tied,
    )?;

    let n = params.param_count();
    let mut adam_w = AdamState::new(n);
    let mut adam_b = AdamState::new(n);
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut g = loss_and_gradient(&params, samples)?;
        if cfg.sharing == Sharing::Tied {
            pool_tied(&params, &mut g.d_log_weights);
            pool_tied(&params, &mut g.d_biases);
        }
        history.push(EpochStats {
            epoch,
            loss: g.loss,
            soft_revenue: -g.loss,
            hard_revenue: hard_revenue(&params, samples)?,
        });
        let (dw, db): (Vec<f64>, Vec<f64>) = match cfg.optimizer {
            Optimizer::Sgd => (
                g.d_log_weights.iter().map(|x| -cfg.learning_rate * x).collect(),
                g.d_biases.iter().map(|x| -cfg.learning_rate * x).collect(),
            ),
            Optimizer::Adam => (
                adam_w.step(&g.d_log_weights, cfg.learning_rate),
                adam_b.step(&g.d_biases, cfg.learning_rate),
            ),
        };
        params.apply_update(&dw, &db);
    }
    params.refresh();
    let final_revenue = hard_revenue(&params, samples)?;
    Ok((
        params,
        TrainReport {
            history,
            final_revenue,
            epochs_run: cfg.epochs,
            seed: cfg.seed,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn uniform_samples(n: usize, bidders: usize, hi: f64, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| (0..bidders).map(|_| rng.gen_range(0.0..hi)).collect())
            .collect()
    }

    #[test]
    fn kink_margin_of_identity_profile() {
        let p = MonotoneNetParams::identity(2, 10.0).unwrap();
        assert!((kink_margin(&p, &[0.3, 0.1]).unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(kink_margin(&p, &[0.3, 0.3]).unwrap(), 0.0);
        assert!(kink_margin(&p, &[0.3]).is_err());
    }

    #[test]
    fn training_is_deterministic_and_raises_soft_revenue() {
        let samples = uniform_samples(200, 4, 0.4, 1);
        let cfg = TrainConfig {
            epochs: 40,
            optimizer: Optimizer::Adam,
            learning_rate: 0.01,
            ..TrainConfig::default()
        };
        let (a, ra) = train(&samples, &cfg).unwrap();
        let (b, rb) = train(&samples, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
        assert!(a.is_tied());
        let h = &ra.history;
        assert!(h.last().unwrap().soft_revenue > h[0].soft_revenue);
        assert!(h.iter().all(|e| e.loss == -e.soft_revenue));
    }

    #[test]
    fn per_bidder_training_unties() {
        let samples = uniform_samples(100, 3, 1.0, 2);
        let cfg = TrainConfig {
            epochs: 5,
            sharing: Sharing::PerBidder,
            ..TrainConfig::default()
        };
        let (p, _) = train(&samples, &cfg).unwrap();
        assert!(!p.is_tied());
    }

    #[test]
    fn invalid_training_inputs() {
        let cfg = TrainConfig::default();
        assert!(train(&[], &cfg).is_err());
        assert!(train(&[vec![0.1, 0.2], vec![0.1]], &cfg).is_err());
        let zero = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(train(&[vec![0.1]], &zero).is_err());
    }
}
