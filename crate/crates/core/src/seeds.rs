//! Seed derivation for reproducible sub-streams.
//!
//! Every randomized stage (negative sampling, candidate downsampling, target
//! sampling) derives its own stream from a root seed plus structural context,
//! so results do not depend on iteration or thread order.

use crate::graph::Triple;

/// splitmix64 finalizer; decorrelates structured inputs.
pub fn mix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn mix2(a: u64, b: u64) -> u64 {
    mix(mix(a) ^ b)
}

pub fn mix3(a: u64, b: u64, c: u64) -> u64 {
    mix(mix2(a, b) ^ c)
}

/// Stable fingerprint of a triple for per-target seed offsets.
pub fn triple_tag(t: Triple) -> u64 {
    mix3(t.head as u64, t.relation as u64, t.tail as u64)
}
