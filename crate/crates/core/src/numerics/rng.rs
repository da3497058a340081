//! Seeded, stream-addressable random number generation.

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// A ChaCha8 generator addressed by `(seed, stream)`.
///
/// Identical addresses reproduce identical sequences; distinct stream ids
/// select disjoint ChaCha keystreams.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, stream, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// A child stream with the same seed, addressed by `index`. Independent
    /// of how much of `self` has been consumed.
    pub fn derive(&self, index: u64) -> Self {
        Self::new(self.seed, splitmix64(self.stream ^ splitmix64(index.wrapping_add(1))))
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// One draw from `CN(0, variance)`.
    #[inline]
    pub fn complex_gaussian(&mut self, variance: f64) -> Complex64 {
        if variance == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let s = (0.5 * variance).sqrt();
        Complex64::new(s * self.standard_normal(), s * self.standard_normal())
    }

    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Underlying generator, for use with `rand` APIs.
    pub fn rng(&mut self) -> &mut impl Rng {
        &mut self.inner
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

/// One draw from `CN(0, variance)`: real and imaginary parts are independent
/// `N(0, variance / 2)`.
pub fn sample_complex_gaussian(rng: &mut RngStream, variance: f64) -> Complex64 {
    rng.complex_gaussian(variance)
}
