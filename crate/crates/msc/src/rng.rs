//! Deterministic random streams for the benchmark harness.
//!
//! Every random quantity in an experiment is drawn from a substream keyed
//! by (master seed, trial index, stream tag), so trial t's data never
//! depends on how many trials run before it or on scheduling. The
//! generator is ChaCha20 seeded through a fixed 64-bit mixer; Gaussian
//! variates come from the Box-Muller transform on the uniform stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Stream tag for spike positions and amplitudes.
pub const STREAM_SIGNAL: u64 = 1;
/// Stream tag for observation noise.
pub const STREAM_NOISE: u64 = 2;

/// Finalizer-style 64-bit mixer (the xor-shift-multiply bijection used by
/// splittable generators). Applied as
/// `mix(mix(mix(seed) ^ trial) ^ tag)`; since each round is a bijection,
/// substream keys collide only if the xor stages collide, which has no
/// structure an experiment sweep could hit.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Substream key for (master seed, trial, stream tag).
pub fn mix64(master_seed: u64, trial: u64, tag: u64) -> u64 {
    mix(mix(mix(master_seed) ^ trial) ^ tag)
}

/// ChaCha20 generator positioned at the start of a substream.
pub fn substream(master_seed: u64, trial: u64, tag: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(mix64(master_seed, trial, tag))
}

/// Standard normal variates via Box-Muller on a uniform substream. Two
/// variates are produced per transform; the spare is buffered so the
/// stream is a pure function of the draw count.
pub struct GaussianStream {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(master_seed: u64, trial: u64, tag: u64) -> Self {
        GaussianStream { rng: substream(master_seed, trial, tag), spare: None }
    }

    pub fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] keeps the log finite; u2 in [0, 1).
        let u1: f64 = 1.0 - self.rng.gen::<f64>();
        let u2: f64 = self.rng.gen();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }
}
