//! Seeded randomness with a pinned generator.
//!
//! Everything stochastic in this crate (fold assignment, corpus sampling)
//! flows through ChaCha12 seeded from a caller-supplied u64, with shuffling
//! and sampling implemented here. Identical seeds give identical results
//! across platforms and releases.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// The crate-wide deterministic generator.
pub type SeededRng = ChaCha12Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Derives an independent stream for a sub-task (e.g. one experiment sample)
/// from a base seed. SplitMix64 finalizer; stable by construction.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform integer in [0, bound) by rejection sampling; bound > 0.
pub fn gen_below(rng: &mut SeededRng, bound: u64) -> u64 {
    assert!(bound > 0);
    let zone = u64::MAX - (u64::MAX % bound);
    loop {
        let v = rng.next_u64();
        if v < zone {
            return v % bound;
        }
    }
}

/// In-place Fisher-Yates shuffle.
pub fn shuffle<T>(rng: &mut SeededRng, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = gen_below(rng, (i + 1) as u64) as usize;
        items.swap(i, j);
    }
}

/// First `k` elements of a seeded shuffle; `k` is clamped to the input length.
pub fn sample_without_replacement<T: Clone>(rng: &mut SeededRng, items: &[T], k: usize) -> Vec<T> {
    let mut pool: Vec<T> = items.to_vec();
    shuffle(rng, &mut pool);
    pool.truncate(k.min(pool.len()));
    pool
}

/// Uniform f64 in [0, 1).
pub fn gen_unit(rng: &mut SeededRng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal deviate (Box-Muller).
pub fn gen_normal(rng: &mut SeededRng) -> f64 {
    let u1 = loop {
        let u = gen_unit(rng);
        if u > 0.0 {
            break u;
        }
    };
    let u2 = gen_unit(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
