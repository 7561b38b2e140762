//! Counter-based random streams.
//!
//! Every coefficient is a pure function of `(seed, draw_index, lattice point,
//! slot)`, so Monte Carlo draws can be evaluated in any order, on any number
//! of threads, and still reproduce bitwise.

/// SplitMix64 finalizer; the standard 64-bit avalanche mixer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Keyed counter: absorb a sequence of words into a 64-bit state.
fn absorb(state: u64, word: u64) -> u64 {
    splitmix64(state ^ word)
}

/// Derive the keyed state for one coefficient of one draw.
fn key(seed: u64, draw_index: u64, lattice: &[i64], slot: u64) -> u64 {
    let mut h = absorb(0x6c62_272e_07bb_0142, seed);
    h = absorb(h, draw_index);
    for &c in lattice {
        h = absorb(h, c as u64);
    }
    absorb(h, slot)
}

/// Uniform in the open interval (0, 1).
fn to_unit(x: u64) -> f64 {
    ((x >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// Standard normal variate for `(seed, draw_index, lattice)` via Box-Muller.
pub fn gaussian(seed: u64, draw_index: u64, lattice: &[i64]) -> f64 {
    let u1 = to_unit(key(seed, draw_index, lattice, 0));
    let u2 = to_unit(key(seed, draw_index, lattice, 1));
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Rademacher sign (+1 or -1) for `(seed, draw_index, lattice)`.
pub fn rademacher(seed: u64, draw_index: u64, lattice: &[i64]) -> f64 {
    if key(seed, draw_index, lattice, 0) >> 63 == 0 {
        1.0
    } else {
        -1.0
    }
}
