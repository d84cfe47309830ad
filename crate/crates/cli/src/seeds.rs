//! Seed derivation. Every random stream in a run is a pure function of the
//! master seed, a stream tag and an index, so results do not depend on
//! thread scheduling.

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent streams within one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    TrainSamples = 1,
    TestSamples = 2,
    NetInit = 3,
    Oracle = 4,
    MarketInstance = 5,
    MarketTies = 6,
    MarketTraining = 7,
    Truthfulness = 8,
    Verify = 9,
}

pub fn derive(master: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(stream as u64)) ^ index)
}
