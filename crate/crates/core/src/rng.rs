//! Portable seeded generator for reproducible sampling.
//!
//! The generator is the 64-bit linear congruential recurrence
//!
//! ```text
//! state <- state * 6364136223846793005 + 1442695040888963407   (mod 2^64)
//! ```
//!
//! (Knuth's MMIX constants). The initial state is the seed itself. Each call
//! to [`Lcg64::next_u64`] advances the state once and returns it. Uniform
//! doubles take the top 53 bits: `(state >> 11) * 2^-53`, which lies in
//! `[0, 1)`. Any language with wrapping 64-bit unsigned arithmetic reproduces
//! the same stream.

#[derive(Debug, Clone)]
pub struct Lcg64 {
    state: u64,
}

const MULTIPLIER: u64 = 6_364_136_223_846_793_005;
const INCREMENT: u64 = 1_442_695_040_888_963_407;

impl Lcg64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_mul(MULTIPLIER).wrapping_add(INCREMENT);
        self.state
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Log-uniform in `[lo, hi)`; both bounds must be positive.
    pub fn log_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.uniform(lo.ln(), hi.ln()).exp()
    }

    /// Uniform integer in `lo..=hi`.
    pub fn int_in(&mut self, lo: usize, hi: usize) -> usize {
        let span = (hi - lo + 1) as u64;
        lo + (self.next_u64() % span) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_outputs_are_fixed() {
        let mut rng = Lcg64::new(0);
        assert_eq!(rng.next_u64(), INCREMENT);
        assert_eq!(rng.next_u64(), INCREMENT.wrapping_mul(MULTIPLIER).wrapping_add(INCREMENT));
    }

    #[test]
    fn uniform_stays_in_range() {
        let mut rng = Lcg64::new(7);
        for _ in 0..10_000 {
            let x = rng.next_f64();
            assert!((0.0..1.0).contains(&x));
            let k = rng.int_in(1, 4);
            assert!((1..=4).contains(&k));
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let a: Vec<u64> = {
            let mut r = Lcg64::new(42);
            (0..16).map(|_| r.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut r = Lcg64::new(42);
            (0..16).map(|_| r.next_u64()).collect()
        };
        assert_eq!(a, b);
    }
}
