//! Reproducible uniform random numbers.
//!
//! The generators use SplitMix64 (Steele, Lea & Flood) so that streams can be
//! reproduced bit for bit from any language: the state advances by the golden
//! gamma `0x9E3779B97F4A7C15`, the output is the standard 64-bit finaliser, and
//! a uniform double is `(x >> 11) * 2^-53`.

/// Source of uniform samples in `[0, 1)`. Generators take this trait so tests
/// can feed scripted values.
pub trait UniformSource {
    fn next_uniform(&mut self) -> f64;
}

#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

impl UniformSource for SplitMix64 {
    fn next_uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl<F: FnMut() -> f64> UniformSource for F {
    fn next_uniform(&mut self) -> f64 {
        self()
    }
}
