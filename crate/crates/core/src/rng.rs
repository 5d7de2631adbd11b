//! Seeded sampling.
//!
//! Every random sample in the verification suites comes from
//! [`Xorshift64Star`], a 64-bit xorshift register with a multiplicative output
//! scramble:
//!
//! ```text
//! x ^= x >> 12;  x ^= x << 25;  x ^= x >> 27;
//! output = x * 0x2545F4914F6CDD1D   (wrapping)
//! ```
//!
//! The register is initialised from a user seed by one SplitMix64 step
//! (`z = seed + 0x9E3779B97F4A7C15; z = (z ^ z>>30) * 0xBF58476D1CE4E5B9;
//! z = (z ^ z>>27) * 0x94D049BB133111EB; z ^= z>>31`), with zero mapped to
//! `0x9E3779B97F4A7C15`. Uniform reals take the top 53 bits of an output;
//! Gaussian reals use the Box-Muller cosine branch with `u1` in `(0, 1]`.
//! Independent streams for (suite, sample index) pairs are derived with
//! [`Xorshift64Star::for_stream`], so results do not depend on evaluation order.

use nalgebra::DVector;

const MULTIPLIER: u64 = 0x2545_F491_4F6C_DD1D;
const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Xorshift64Star {
    state: u64,
}

impl Xorshift64Star {
    pub fn new(seed: u64) -> Self {
        let s = splitmix64(seed);
        Self {
            state: if s == 0 { GOLDEN } else { s },
        }
    }

    /// Generator for sample `index` of stream `stream` under a run seed.
    pub fn for_stream(seed: u64, stream: u64, index: u64) -> Self {
        Self::new(splitmix64(seed ^ splitmix64(stream)) ^ index.wrapping_mul(GOLDEN))
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(MULTIPLIER)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn normal_vector(&mut self, len: usize) -> DVector<f64> {
        DVector::from_fn(len, |_, _| self.normal())
    }

    /// Uniformly distributed unit vector (Euclidean norm).
    pub fn unit_vector(&mut self, len: usize) -> DVector<f64> {
        loop {
            let v = self.normal_vector(len);
            let n = v.norm();
            if n > 1e-6 {
                return v / n;
            }
        }
    }
}

/// Stream identifiers, one per sampling purpose.
pub mod streams {
    pub const FRAMES: u64 = 1;
    pub const TRANSNORMAL: u64 = 2;
    pub const SHAPE: u64 = 3;
    pub const DTAU: u64 = 4;
    pub const CHART: u64 = 5;
    pub const ISOMETRY: u64 = 6;
    pub const CURVATURE: u64 = 7;
    pub const SCAN: u64 = 8;
    pub const SPECTRA: u64 = 9;
    pub const SCREEN_COMPLETION: u64 = 10;
}
