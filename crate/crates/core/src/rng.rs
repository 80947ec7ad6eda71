//! Seed derivation. Every stochastic component takes an explicit `u64` seed;
//! sub-streams are derived by hashing a parent seed with a label so that the
//! result never depends on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `parent` and a sequence of integer labels.
pub fn derive(parent: u64, labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(mix64(parent), |acc, &l| mix64(acc ^ mix64(l.wrapping_add(0x51ed_2701))))
}

/// Derive a child seed from a textual label (stream names such as "rir").
pub fn derive_str(parent: u64, label: &str) -> u64 {
    let h = label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    });
    derive(parent, &[h])
}

pub fn rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}
