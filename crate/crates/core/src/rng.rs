//! Seed splitting.
//!
//! A scenario seed fans out into independent ChaCha streams, one per concern.
//! Paired benign/attack runs share every stream except [`Stream::Attack`], so
//! switching the attack off reproduces the benign trajectory exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Topology = 1,
    Mobility = 2,
    Radio = 3,
    Ric = 4,
    Attack = 5,
    Training = 6,
}

pub fn stream(seed: u64, which: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// A derived stream for sub-tasks (per cell, per attempt, ...).
pub fn substream(seed: u64, which: Stream, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(which as u64);
    rng
}

/// Gaussian sample with the given standard deviation.
pub fn normal<R: rand::Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    use rand_distr::{Distribution, StandardNormal};
    let z: f64 = StandardNormal.sample(rng);
    z * sigma
}
