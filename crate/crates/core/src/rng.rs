//! Portable, seedable random numbers.
//!
//! The generator is SplitMix64 (Steele, Lea & Flood 2014): the state advances
//! by the golden-ratio increment `0x9E3779B97F4A7C15` and each output is the
//! state passed through the Stafford variant-13 finalizer. It uses only
//! wrapping 64-bit integer arithmetic, so a given seed yields the same stream
//! on every platform.
//!
//! Floats in `[0, 1)` take the top 53 bits of an output, scaled by `2^-53`.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The SplitMix64 output finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a base seed and a stream index.
///
/// `derive_seed(base, i) = mix64(base + (i + 1) * GOLDEN_GAMMA)` with
/// wrapping arithmetic. Used for sweep runs and percolation trials.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    mix64(base.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Exponential variate with the given mean; always strictly positive.
    pub fn sample_exponential(&mut self, mean: f64) -> f64 {
        exponential_with(|| self.next_f64(), mean)
    }
}

/// Inverse-CDF exponential sampling `-mean * ln(1 - u)`, drawing `u` from
/// `uniform` until it is non-zero so waits are never zero.
pub(crate) fn exponential_with(mut uniform: impl FnMut() -> f64, mean: f64) -> f64 {
    debug_assert!(mean > 0.0);
    loop {
        let u = uniform();
        if u > 0.0 {
            return -mean * (-u).ln_1p();
        }
    }
}
