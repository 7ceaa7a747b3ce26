//! Deterministic seed derivation.
//!
//! All randomness flows from a single master seed. Independent consumers
//! (per-trial data generation, per-sequence simulation, SGD sampling) each
//! get their own child seed so they can run in any order, or in parallel,
//! without affecting one another.

/// Derive an independent child seed from a master seed and a stream index.
///
/// Uses the splitmix64 finalizer on `master ^ mix(stream)`; distinct streams
/// give statistically independent ChaCha streams.
pub fn child_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
