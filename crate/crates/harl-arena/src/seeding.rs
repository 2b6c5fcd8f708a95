//! Deterministic seed derivation for per-instance and per-update RNG
//! streams.

/// splitmix64 finalizer; decorrelates nearby inputs.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a master seed and one salt.
pub fn derive_seed(master: u64, salt: u64) -> u64 {
    mix(master ^ mix(salt))
}

/// Derive a child seed from a master seed and two salts (e.g. update index
/// and instance index).
pub fn derive_seed2(master: u64, salt_a: u64, salt_b: u64) -> u64 {
    mix(derive_seed(master, salt_a) ^ mix(salt_b.wrapping_add(0x517cc1b727220a95)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivation_is_stable_and_spread() {
        assert_eq!(derive_seed(7, 0), derive_seed(7, 0));
        assert_ne!(derive_seed(7, 0), derive_seed(7, 1));
        assert_ne!(derive_seed(7, 0), derive_seed(8, 0));
        assert_ne!(derive_seed2(7, 1, 2), derive_seed2(7, 2, 1));
    }
}
