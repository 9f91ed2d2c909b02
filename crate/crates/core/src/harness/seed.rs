//! Per-trial seed derivation.
//!
//! Trial `t` of grid cell `c` under master seed `m` uses the generator
//! `ChaCha8Rng::seed_from_u64(trial_seed(m, c, t))` where
//!
//! ```text
//! trial_seed(m, c, t) = mix(mix(mix(m) ^ c) ^ t)
//! ```
//!
//! and `mix` is the splitmix64 output function applied after adding the
//! golden-ratio increment `0x9E3779B97F4A7C15`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator family used for every randomized computation.
pub type TrialRng = ChaCha8Rng;

/// One splitmix64 step.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_seed(master: u64, cell: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ cell) ^ trial)
}

pub fn trial_rng(master: u64, cell: u64, trial: u64) -> TrialRng {
    TrialRng::seed_from_u64(trial_seed(master, cell, trial))
}
