use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; good avalanche for seed mixing.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent stream seed from a master seed and a path of
/// indices (trajectory number, ladder position, substream tag, ...).
///
/// Ensembles hand each trajectory `derive_seed(seed, &[index])` so results
/// are identical no matter how the trajectories are scheduled.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut acc = splitmix64(seed ^ 0x6d6f_7261_6e5f_7064); // tag
    for &p in parts {
        acc = splitmix64(acc ^ splitmix64(p));
    }
    acc
}

/// The deterministic RNG used everywhere in this crate.
pub(crate) fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
