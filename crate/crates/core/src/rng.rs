//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream addressed by a
//! `(master seed, domain, counter)` triple. Work split across threads draws
//! from streams named by its logical position (time step, particle, draw)
//! rather than by scheduling order, so results do not depend on thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Purpose of a stream. Disjoint domains never share key material.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    InitialState = 1,
    Propagate = 2,
    Resample = 3,
    FinalDraw = 4,
    Observe = 5,
    Proposal = 6,
    Accept = 7,
    PriorDraw = 8,
    FilterSeed = 9,
    Gibbs = 10,
    Population = 11,
    Prediction = 12,
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed; used to give each MCMC iteration its own filter seed.
pub fn derive_seed(master: u64, domain: Domain, index: u64) -> u64 {
    let mut s = master ^ (domain as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93);
    splitmix64(&mut s);
    s ^= index.wrapping_mul(0xA076_1D64_78BD_642F);
    splitmix64(&mut s)
}

/// Stream for `(master, domain, major, minor)`; `major` and `minor` are
/// typically a time step and a particle index.
pub fn stream(master: u64, domain: Domain, major: u32, minor: u32) -> StreamRng {
    let mut s = master ^ (domain as u64).rotate_left(32);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut s).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(((major as u64) << 32) | minor as u64);
    rng
}
