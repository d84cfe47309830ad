use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semtrade_core::baselines::spa_with_reserve;
use semtrade_core::monotone::{MonotoneAuction, MonotoneNetParams};
use semtrade_core::{AuctionEngine, AuctionOutcome};

/// Brute force: sort indices by bid (stable, so equal bids keep index order).
fn spa_zero_oracle(bids: &[f64]) -> AuctionOutcome {
    let mut order: Vec<usize> = (0..bids.len()).collect();
    order.sort_by(|&a, &b| bids[b].partial_cmp(&bids[a]).unwrap());
    if bids[order[0]] <= 0.0 {
        return AuctionOutcome::Unsold;
    }
    let payment = order.get(1).map_or(0.0, |&j| bids[j]);
    AuctionOutcome::Sold {
        winner: order[0],
        payment,
    }
}

#[test]
fn identity_network_matches_oracle_on_continuous_profiles() {
    let engine = MonotoneAuction::new(MonotoneNetParams::identity(10, 10.0).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let bids: Vec<f64> = (0..10).map(|_| rng.gen_range(0.0..1.0)).collect();
        assert_eq!(engine.run(&bids).unwrap(), spa_zero_oracle(&bids), "{bids:?}");
    }
}

#[test]
fn identity_network_matches_oracle_with_ties_and_zeros() {
    let engine = MonotoneAuction::new(MonotoneNetParams::identity(10, 10.0).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..1000 {
        let bids: Vec<f64> = (0..10).map(|_| f64::from(rng.gen_range(0..4u8)) / 10.0).collect();
        assert_eq!(engine.run(&bids).unwrap(), spa_zero_oracle(&bids), "{bids:?}");
    }
    assert_eq!(engine.run(&[0.0; 10]).unwrap(), AuctionOutcome::Unsold);
}

#[test]
fn tied_network_is_spa_with_its_implied_reserve() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..200 {
        let params = MonotoneNetParams::random(&mut rng, 6, 3, 4, 10.0, 0.8, 0.3, true).unwrap();
        let reserve = params.inverse_transform(0, 0.0).max(0.0);
        for _ in 0..20 {
            let bids: Vec<f64> = (0..6).map(|_| rng.gen_range(0.0..1.0)).collect();
            let got = params.infer(&bids).unwrap();
            let want = spa_with_reserve(&bids, reserve).unwrap();
            assert_eq!(got.winner(), want.winner(), "{bids:?} reserve {reserve}");
            assert!((got.revenue() - want.revenue()).abs() < 1e-9, "{got:?} vs {want:?}");
        }
    }
}
