//! Seeding and sampling primitives.
//!
//! Every random stream in the crate is a ChaCha8 generator (RFC 7539 block
//! function reduced to 8 rounds) keyed by a 64-bit seed. Independent streams
//! derived from one seed use distinct ChaCha stream ids, so the matrix and the
//! solution vector of an instance never share keystream. Derived seeds come
//! from [`mix_seed`], a SplitMix64 finalizer chain.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream id for constraint-matrix entries.
pub const STREAM_MATRIX: u64 = 1;
/// Stream id for the optimal-solution vector `u`.
pub const STREAM_SOLUTION: u64 = 2;
/// Stream id for the optional column shuffle.
pub const STREAM_SHUFFLE: u64 = 3;
/// Stream id for start vectors of iterative eigen-solvers.
pub const STREAM_POWER: u64 = 4;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a master seed together with a list of indices into a child seed.
pub fn mix_seed(master: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// A seeded sampler over one ChaCha8 stream.
#[derive(Clone, Debug)]
pub struct Sampler {
    rng: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl Sampler {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            rng,
            spare_normal: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on the open interval (0, 1), 53 bits of resolution.
    pub fn uniform_open(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via the Box–Muller transform. Each pair of uniforms
    /// yields two normals; the second is cached for the next call.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform_open();
        let u2 = self.uniform_open();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare_normal = Some(radius * angle.sin());
        radius * angle.cos()
    }

    /// `+1` or `-1` with equal probability.
    pub fn rademacher(&mut self) -> f64 {
        if self.rng.next_u64() >> 63 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Uniform integer in `0..bound` (bound > 0), unbiased by rejection.
    pub fn below(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        let bound = bound as u64;
        // 2^64 mod bound; values below it would bias the low residues.
        let reject_below = bound.wrapping_neg() % bound;
        loop {
            let v = self.rng.next_u64();
            if v >= reject_below {
                return (v % bound) as usize;
            }
        }
    }

    /// Fisher–Yates permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.below(i + 1);
            p.swap(i, j);
        }
        p
    }
}
