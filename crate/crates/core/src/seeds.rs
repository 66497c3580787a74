//! Deterministic seed derivation.
//!
//! Every stochastic component (phantom noise, parameter init, dropout,
//! segment sampling, dataset synthesis) takes a seed derived from a master
//! seed and a role, so whole pipelines replay bit-identically.

/// Derives an independent stream seed from a master seed and a salt
/// (SplitMix64 finalizer).
pub fn derive_seed(master: u64, salt: u64) -> u64 {
    let mut z = master ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Salts for the fixed roles in the pipeline.
pub mod salt {
    pub const DROPOUT: u64 = 1;
    pub const SEGMENT_SAMPLING: u64 = 2;
    pub const PHANTOM_NOISE: u64 = 3;
    pub const DATASET: u64 = 4;
    pub const PARAM_INIT: u64 = 5;
}
