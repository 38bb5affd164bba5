//! Deterministic derivation of child seeds for nested random streams.
//!
//! Experiment sweeps need one independent stream per (ratio, repetition,
//! purpose) cell. Deriving children through a SplitMix64 chain keeps every
//! stream a pure function of the base seed and its tags, with no state
//! threaded between cells.

/// SplitMix64 finalizer; bijective on `u64` with good avalanche behavior.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a base seed and an ordered list of tags.
///
/// Distinct tag lists yield (with overwhelming probability) distinct seeds;
/// the output is a pure function of its inputs.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut state = splitmix64(base);
    for &tag in tags {
        state = splitmix64(state ^ splitmix64(tag.wrapping_add(0x1000_0000_0000_0001)));
    }
    state
}
