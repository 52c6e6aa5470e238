//! Derivation of per-operation sub-seeds from one run seed.

/// Derives a sub-seed keyed by an operation name, so every stochastic step
/// draws from its own stream while the whole run hangs off a single seed.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    // FNV-1a over the label, then a SplitMix64 finalizer over the mix.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(seed ^ h.rotate_left(17))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
