//! Seed derivation.
//!
//! All randomness in the pipeline flows from one master seed. Components
//! derive their own seeds as `derive_seed(master, "component", index)`, so
//! any stage can be re-run in isolation (or in parallel) and still produce
//! the exact bytes of a sequential full run.

/// SplitMix64 finalizer; full-period mixer with good avalanche behavior.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// FNV-1a over the component name; stable across platforms and releases.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Derive a component seed from `(master, component, index)`.
///
/// The derivation is documented and fixed: FNV-1a of the component name is
/// folded into the master seed together with the index, then passed through
/// two SplitMix64 rounds.
pub fn derive_seed(master: u64, component: &str, index: u64) -> u64 {
    let tag = fnv1a(component.as_bytes());
    let folded = master
        .wrapping_add(tag)
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    splitmix64(splitmix64(folded))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        assert_eq!(derive_seed(7, "subject", 3), derive_seed(7, "subject", 3));
    }

    #[test]
    fn components_and_indices_separate() {
        let a = derive_seed(7, "subject", 0);
        let b = derive_seed(7, "subject", 1);
        let c = derive_seed(7, "session", 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_ne!(b, c);
    }

    #[test]
    fn master_seed_matters() {
        assert_ne!(derive_seed(1, "split", 0), derive_seed(2, "split", 0));
    }
}
