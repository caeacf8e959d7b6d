//! Seeded random register states.
//!
//! The stream is SplitMix64 (Steele, Lea and Flood), a counter-based
//! generator that is easy to reproduce in any language: the state advances by
//! `0x9E3779B97F4A7C15` and each output is the standard three-step mix.
//! Uniforms take the top 53 bits, `u = (x >> 11) * 2^-53`. Normals come in
//! pairs from Box-Muller, `sqrt(-2 ln(1 - u1)) (cos, sin)(2 pi u2)`. A
//! Haar-random register draws eight normals as `(re, im)` of
//! `(c_-, c_1, c_+, c_0)` in that order and normalizes them; a single qubit
//! draws four.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::hilbert::QubitPairState;
use crate::C64;

pub struct HaarSampler {
    rng: SplitMix64,
}

impl HaarSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: SplitMix64::seed_from_u64(seed),
        }
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal_pair(&mut self) -> (f64, f64) {
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let (s, c) = (2.0 * std::f64::consts::PI * u2).sin_cos();
        (r * c, r * s)
    }

    fn complex_normal(&mut self) -> C64 {
        let (re, im) = self.normal_pair();
        C64::new(re, im)
    }

    pub fn qubit_pair(&mut self) -> QubitPairState {
        let amplitudes = std::array::from_fn(|_| self.complex_normal());
        QubitPairState { amplitudes }
            .normalized()
            .expect("a Gaussian draw is never exactly zero")
    }

    /// `(a, b)` with `|a|^2 + |b|^2 = 1`.
    pub fn qubit(&mut self) -> (C64, C64) {
        let a = self.complex_normal();
        let b = self.complex_normal();
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        (a / norm, b / norm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_stream() {
        // published SplitMix64 outputs for seed 0
        let mut rng = SplitMix64::seed_from_u64(0);
        assert_eq!(rng.next_u64(), 0xE220A8397B1DCDAF);
        assert_eq!(rng.next_u64(), 0x6E789E6AA1B965F4);
    }

    #[test]
    fn draws_are_normalized_and_reproducible() {
        let mut a = HaarSampler::new(7);
        let mut b = HaarSampler::new(7);
        for _ in 0..50 {
            let x = a.qubit_pair();
            assert!((x.norm_sqr() - 1.0).abs() < 1e-14);
            assert_eq!(x, b.qubit_pair());
        }
        let (p, q) = a.qubit();
        assert!((p.norm_sqr() + q.norm_sqr() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn singlet_weight_has_the_haar_mean() {
        // |c_-|^2 of a Haar state on C^4 is Beta(1, 3): mean 1/4
        let mut s = HaarSampler::new(11);
        let n = 20000;
        let mean: f64 = (0..n)
            .map(|_| s.qubit_pair().c_minus().norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.25).abs() < 0.01);
    }
}
