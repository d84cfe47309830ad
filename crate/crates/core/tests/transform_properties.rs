use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semtrade_core::monotone::MonotoneNetParams;

fn random_params(rng: &mut ChaCha8Rng, bidders: usize, tied: bool) -> MonotoneNetParams {
    let q = rng.gen_range(1..=6);
    let s = rng.gen_range(1..=6);
    MonotoneNetParams::random(rng, bidders, q, s, 10.0, 1.5, 1.0, tied).unwrap()
}

#[test]
fn ten_thousand_cases_monotone_and_invertible() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut worst = 0.0_f64;
    for _ in 0..10_000 {
        let params = random_params(&mut rng, 3, false);
        let m = rng.gen_range(0..3);
        let b1 = rng.gen_range(0.0..10.0);
        let b2 = b1 + rng.gen_range(1e-6..1.0);
        assert!(params.transform(m, b1) < params.transform(m, b2));
        let back = params.inverse_transform(m, params.transform(m, b1));
        worst = worst.max((back - b1).abs());
    }
    assert!(worst <= 1e-6, "worst round-trip error {worst}");
}

#[test]
fn soft_allocation_is_a_distribution() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..2000 {
        let params = random_params(&mut rng, 5, false);
        let bids: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..1.0)).collect();
        let z = params.soft_allocate(&bids).unwrap();
        assert_eq!(z.len(), 6);
        assert!(z.iter().all(|&p| p >= 0.0));
        assert!((z.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }
}

/// Utility of `bidder` with value `value` when bidding `bid`, others fixed.
fn utility(params: &MonotoneNetParams, others: &[f64], bidder: usize, value: f64, bid: f64) -> f64 {
    let mut bids = others.to_vec();
    bids[bidder] = bid;
    let out = params.infer(&bids).unwrap();
    match out.winner() {
        Some(w) if w == bidder => value - out.revenue(),
        _ => 0.0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn payment_never_exceeds_winning_bid(seed in any::<u64>(), tied in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = random_params(&mut rng, 4, tied);
        let bids: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..2.0)).collect();
        if let Some(w) = params.infer(&bids).unwrap().winner() {
            let p = params.infer(&bids).unwrap().revenue();
            prop_assert!((0.0..=bids[w]).contains(&p));
        }
    }

    #[test]
    fn truthful_bid_maximizes_utility(seed in any::<u64>(), tied in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = random_params(&mut rng, 4, tied);
        let others: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..1.0)).collect();
        let bidder = rng.gen_range(0..4);
        let value = rng.gen_range(0.0..1.0);
        let truthful = utility(&params, &others, bidder, value, value);
        for k in 0..=100 {
            let dev = f64::from(k) * 0.015;
            prop_assert!(utility(&params, &others, bidder, value, dev) <= truthful + 1e-9);
        }
    }

    #[test]
    fn winner_has_highest_transformed_bid(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = random_params(&mut rng, 5, false);
        let bids: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..1.0)).collect();
        let t = params.transform_all(&bids);
        let best = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        match params.infer(&bids).unwrap().winner() {
            Some(w) => prop_assert_eq!(t[w], best),
            None => prop_assert!(best <= 0.0),
        }
    }
}
