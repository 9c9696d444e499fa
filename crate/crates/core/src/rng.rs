//! Seeded, splittable random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream addressed by
//! `(seed, domain, hi, lo)`. The 256-bit key is the SplitMix64 expansion of
//! `seed ^ domain`, and the 64-bit ChaCha stream id is `hi << 32 | lo`. A
//! stream never depends on how many other streams were drawn before it, so
//! results do not change with evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream families.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    /// One stream per library spec index.
    Library = 0x4c49_4252,
    /// Rollout task selection.
    Tasks = 0x5441_534b,
    /// One stream per `(task, rollout)`.
    Rollout = 0x524f_4c4c,
    /// One stream per `(line task, rollout)` in the integer-line experiment.
    Line = 0x4c49_4e45,
    /// Spec subsets drawn by the runner.
    Subset = 0x5355_4253,
}

pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream `(hi, lo)` of `domain` under `seed`.
pub fn stream(seed: u64, domain: Domain, hi: u32, lo: u32) -> ChaCha8Rng {
    let mut sm = seed ^ domain as u64;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut sm).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(((hi as u64) << 32) | lo as u64);
    rng
}
