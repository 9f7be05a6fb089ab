//! Keyed random streams.
//!
//! Every random draw in the crate comes from a stream identified by a base
//! seed and a `(particle, step, purpose)` key. The stream's ChaCha state is a
//! pure function of that tuple, so per-particle work can be scheduled on any
//! number of threads without changing a single bit of output.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// What a stream is used for. Distinct purposes never share draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    ModelNoise,
    TruthNoise,
    ObsNoise,
    Init,
    TruthInit,
    ObsSites,
    Resample { stage: u32 },
    Proposal { stage: u32, iter: u32 },
    Accept { stage: u32, iter: u32 },
    /// Free-form tag for tests and external callers.
    User(u64),
}

impl Purpose {
    fn words(self) -> [u64; 3] {
        match self {
            Purpose::ModelNoise => [1, 0, 0],
            Purpose::TruthNoise => [2, 0, 0],
            Purpose::ObsNoise => [3, 0, 0],
            Purpose::Init => [4, 0, 0],
            Purpose::TruthInit => [5, 0, 0],
            Purpose::ObsSites => [6, 0, 0],
            Purpose::Resample { stage } => [7, stage as u64, 0],
            Purpose::Proposal { stage, iter } => [8, stage as u64, iter as u64],
            Purpose::Accept { stage, iter } => [9, stage as u64, iter as u64],
            Purpose::User(tag) => [10, tag, 0],
        }
    }
}

/// Identifier of one stream under a base seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub particle: u64,
    pub step: u64,
    pub purpose: Purpose,
}

impl StreamKey {
    pub fn new(particle: u64, step: u64, purpose: Purpose) -> Self {
        Self {
            particle,
            step,
            purpose,
        }
    }
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A reproducible random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    key: StreamKey,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, key: StreamKey) -> Self {
        let p = key.purpose.words();
        let mut state = seed;
        let mut acc = splitmix64(&mut state);
        for w in [key.particle, key.step, p[0], p[1], p[2]] {
            state ^= w.wrapping_mul(0xD6E8_FEB8_6659_FD93);
            acc ^= splitmix64(&mut state);
        }
        let mut bytes = [0u8; 32];
        let mut s = acc;
        for chunk in bytes.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut s).to_le_bytes());
        }
        Self {
            seed,
            key,
            inner: ChaCha8Rng::from_seed(bytes),
        }
    }

    /// Shorthand for `RngStream::new(seed, StreamKey::new(particle, step, purpose))`.
    pub fn keyed(seed: u64, particle: u64, step: u64, purpose: Purpose) -> Self {
        Self::new(seed, StreamKey::new(particle, step, purpose))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn key(&self) -> StreamKey {
        self.key
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        // 53 random mantissa bits
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.normal();
        }
    }

    pub fn normals(&mut self, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        self.fill_normal(&mut v);
        v
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
