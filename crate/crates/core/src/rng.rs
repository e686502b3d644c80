//! Reproducible random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 generator
//! addressed by `(seed, stream)`. ChaCha exposes the stream as part of its
//! counter, so two streams never overlap and a replication's draws depend
//! only on its address, never on which worker thread ran it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a tuple of identifiers (experiment tag, replication index, role, ...)
/// into one stream id.
pub fn derive_stream(parts: &[u64]) -> u64 {
    parts.iter().fold(0x5eed_0f_57ab1e_u64, |acc, &p| mix64(acc ^ mix64(p)))
}

/// Stable tag for a string label, used as a stream component.
pub fn tag(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325_u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x100_0000_01b3)
    })
}

/// Uniform on the open interval (0, 1).
#[inline]
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Standard exponential by inversion.
#[inline]
pub fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    -open_unit(rng).ln()
}
