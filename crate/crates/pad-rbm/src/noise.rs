//! Seeded noise streams and the Gumbel/logistic primitives used by the
//! perturbation machinery.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A reproducible noise stream. Identical (seed, stream_id) pairs produce
/// identical sequences; distinct stream ids are independent streams of the
/// same seed.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    rng: ChaCha8Rng,
}

impl NoiseSource {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { rng }
    }

    /// Derive a child stream id for a named purpose and index, so concurrent
    /// consumers never share a stream.
    pub fn derive_stream(purpose: u64, index: u64) -> u64 {
        // splitmix-style mixing keeps distinct (purpose, index) pairs apart.
        let mut z = purpose
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(index);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform draw from the open interval (0, 1).
    pub fn uniform_open(&mut self) -> f64 {
        loop {
            let u: f64 = self.rng.random();
            if u > 0.0 {
                return u;
            }
        }
    }

    /// Standard Gumbel(0,1) variate via inverse CDF: ε = -log(-log(u)).
    pub fn gumbel(&mut self) -> f64 {
        let u = self.uniform_open();
        -(-u.ln()).ln()
    }

    /// Standard Logistic(0,1) variate, realized as the difference of two
    /// independent standard Gumbels.
    pub fn logistic(&mut self) -> f64 {
        let g1 = self.gumbel();
        let g0 = self.gumbel();
        g1 - g0
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

impl RngCore for NoiseSource {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
}

/// ε = -log(-log(u)) for a given uniform, exposed for direct CDF checks.
pub fn gumbel_from_uniform(u: f64) -> f64 {
    -(-u.ln()).ln()
}
