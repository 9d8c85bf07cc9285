//! Deterministic random streams.
//!
//! Every random draw in the pipeline comes from a ChaCha8 stream keyed by the
//! run seed and a domain tag, with the stream number selecting the work item
//! (usually a frame index). A work item therefore sees the same numbers no
//! matter which worker runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags separating independent uses of the same run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Frame = 0x4652_414d_4500_0001,
    Blinking = 0x424c_494e_4b00_0002,
    Defocus = 0x4445_464f_4300_0003,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Random stream for work item `index` of `domain` under `seed`.
pub fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ domain as u64));
    rng.set_stream(index);
    rng
}

/// Derives a child seed, e.g. one seed per defocus plane.
pub fn derive_seed(seed: u64, domain: Domain, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ domain as u64).wrapping_add(index))
}
