use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semtrade_core::monotone::{loss_and_gradient, MonotoneNetParams};

const H: f64 = 1e-5;
const MARGIN: f64 = 1e-3;

fn unit_value(p: &MonotoneNetParams, m: usize, q: usize, s: usize, b: f64) -> f64 {
    p.weight(m, q, s) * b + p.bias(m, q, s)
}

fn inverse_unit(p: &MonotoneNetParams, m: usize, q: usize, s: usize, y: f64) -> f64 {
    (y - p.bias(m, q, s)) / p.weight(m, q, s)
}

/// Gap between the extreme and the runner-up of `xs` (infinite for one item).
fn gap(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if v.len() < 2 {
        f64::INFINITY
    } else {
        (v[1] - v[0]).min(v[v.len() - 1] - v[v.len() - 2])
    }
}

/// Smallest distance from any min/max switch or ReLU boundary in the loss.
fn kink_margin(p: &MonotoneNetParams, bids: &[f64]) -> f64 {
    let (q_n, s_n) = (p.groups(), p.units());
    let mut margin = f64::INFINITY;
    let two_level = |f: &dyn Fn(usize, usize) -> f64, inner_max: bool| -> (f64, f64) {
        let mut m = f64::INFINITY;
        let mut outer = Vec::new();
        for q in 0..q_n {
            let units: Vec<f64> = (0..s_n).map(|s| f(q, s)).collect();
            m = m.min(gap(&units));
            let pick = if inner_max {
                units.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            } else {
                units.iter().cloned().fold(f64::INFINITY, f64::min)
            };
            outer.push(pick);
        }
        m = m.min(gap(&outer));
        let value = if inner_max {
            outer.iter().cloned().fold(f64::INFINITY, f64::min)
        } else {
            outer.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        };
        (value, m)
    };
    let mut t = Vec::new();
    for (m, &b) in bids.iter().enumerate() {
        let (v, g) = two_level(&|q, s| unit_value(p, m, q, s, b), true);
        t.push(v);
        margin = margin.min(g);
    }
    margin = margin.min(gap(&t));
    for m in 0..bids.len() {
        let c = t
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != m)
            .map(|(_, &v)| v)
            .fold(f64::NEG_INFINITY, f64::max);
        let y = if c.is_finite() {
            margin = margin.min(c.abs());
            c.max(0.0)
        } else {
            0.0
        };
        let (raw, g) = two_level(&|q, s| inverse_unit(p, m, q, s, y), false);
        margin = margin.min(g).min(raw.abs());
    }
    margin
}

fn rebuild(p: &MonotoneNetParams, lw: Vec<f64>, b: Vec<f64>) -> MonotoneNetParams {
    MonotoneNetParams::new(p.bidders(), p.groups(), p.units(), lw, b, p.temperature()).unwrap()
}

fn loss(p: &MonotoneNetParams, samples: &[Vec<f64>]) -> f64 {
    loss_and_gradient(p, samples).unwrap().loss
}

fn rel_err(a: f64, f: f64) -> f64 {
    (a - f).abs() / a.abs().max(f.abs()).max(1e-6)
}

#[test]
fn analytic_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut points = 0;
    let mut worst = 0.0_f64;
    while points < 100 {
        let bidders = rng.gen_range(1..=4);
        let q = rng.gen_range(1..=3);
        let s = rng.gen_range(1..=3);
        let kappa = rng.gen_range(1.0..20.0);
        let p = MonotoneNetParams::random(&mut rng, bidders, q, s, kappa, 0.5, 0.3, false).unwrap();
        let samples: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..bidders).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        if samples.iter().any(|b| kink_margin(&p, b) <= MARGIN) {
            continue;
        }
        points += 1;
        let g = loss_and_gradient(&p, &samples).unwrap();
        for i in 0..p.param_count() {
            let mut plus = p.log_weights().to_vec();
            let mut minus = plus.clone();
            plus[i] += H;
            minus[i] -= H;
            let fd = (loss(&rebuild(&p, plus, p.biases().to_vec()), &samples)
                - loss(&rebuild(&p, minus, p.biases().to_vec()), &samples))
                / (2.0 * H);
            worst = worst.max(rel_err(g.d_log_weights[i], fd));

            let mut plus = p.biases().to_vec();
            let mut minus = plus.clone();
            plus[i] += H;
            minus[i] -= H;
            let fd = (loss(&rebuild(&p, p.log_weights().to_vec(), plus), &samples)
                - loss(&rebuild(&p, p.log_weights().to_vec(), minus), &samples))
                / (2.0 * H);
            worst = worst.max(rel_err(g.d_biases[i], fd));
        }
    }
    assert!(worst <= 1e-4, "worst relative error {worst}");
}

#[test]
fn loss_is_negative_soft_revenue() {
    let p = MonotoneNetParams::identity(2, 10.0).unwrap();
    let samples = vec![vec![0.3, 0.1]];
    // z ∝ (e^3, e^1, e^0); payments in value space (0.1, 0.3)
    let (e3, e1) = (3.0_f64.exp(), 1.0_f64.exp());
    let z = |x: f64| x / (e3 + e1 + 1.0);
    let want = -(z(e3) * 0.1 + z(e1) * 0.3);
    assert!((loss(&p, &samples) - want).abs() < 1e-12);
}
