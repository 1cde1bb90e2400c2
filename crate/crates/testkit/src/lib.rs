//! Independent oracles and seeded circuit generators for tests.
//!
//! Nothing here depends on the circuit crate: generators emit netlist text
//! and oracles compute expected values by other methods (mesh currents with
//! Cramer's rule, closed-form three-terminal nodal equations).

pub mod mesh;
pub mod random;
pub mod three_terminal;

pub use num_complex::Complex64;

/// splitmix64, enough for reproducible test data.
#[derive(Debug, Clone)]
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Log-uniform in [lo, hi].
    pub fn log_range(&mut self, lo: f64, hi: f64) -> f64 {
        (lo.ln() + (hi.ln() - lo.ln()) * self.unit()).exp()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }
}

/// `|a - b| <= tol * max(|a|, |b|, floor)`.
pub fn close(a: Complex64, b: Complex64, tol: f64, floor: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(floor)
}
