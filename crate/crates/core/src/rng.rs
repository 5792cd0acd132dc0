//! Reproducible random streams.
//!
//! Every replicate of every experiment draws from its own ChaCha8 stream whose
//! seed is a hash of `(master seed, replicate index, role)`. A replicate's
//! numbers therefore never depend on how replicates are scheduled on threads.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub type StreamRng = ChaCha8Rng;

/// What a substream is used for; distinct roles never share numbers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StreamRole {
    Configuration,
    Coupling,
    Walk,
    LeftWalk,
    RightWalk,
}

impl StreamRole {
    fn tag(self) -> u64 {
        match self {
            StreamRole::Configuration => 0x01,
            StreamRole::Coupling => 0x02,
            StreamRole::Walk => 0x03,
            StreamRole::LeftWalk => 0x04,
            StreamRole::RightWalk => 0x05,
        }
    }
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the substream for `replicate` in role `role` under `master`.
pub fn substream_seed(master: u64, replicate: u64, role: StreamRole) -> u64 {
    let h = splitmix64(master ^ splitmix64(role.tag()));
    splitmix64(h ^ splitmix64(replicate.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

pub fn rng_from_seed(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn substream(master: u64, replicate: u64, role: StreamRole) -> StreamRng {
    rng_from_seed(substream_seed(master, replicate, role))
}

/// Uniform on the open interval (0, 1) with 53 random bits.
#[inline]
pub fn open_unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    ((rng.next_u64() >> 11) as f64 + 0.5) * SCALE
}

/// Standard exponential by inversion, `-ln U`.
#[inline]
pub fn standard_exponential<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    -crate::math::ln(open_unit(rng))
}
