//! Seed hierarchy and complex Gaussian sampling.
//!
//! Streams are derived from a master seed and a path of counters with a
//! SplitMix64-style mix, so any (block, purpose) stream can be recreated
//! independently of evaluation order.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{CMatrix, CVector};

pub type SimRng = ChaCha8Rng;

/// Purpose tags for independent per-block streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Channel = 1,
    Pilots = 2,
    PilotNoise = 3,
    EchoNoise = 4,
    Quantizer = 5,
    Calibration = 6,
    Scene = 7,
    VomBuild = 8,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a seed with a sequence of counters into a new 64-bit seed.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix(seed), |acc, &p| splitmix(acc ^ splitmix(p)))
}

pub fn rng_from(seed: u64, path: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(seed, path))
}

/// One draw from `CN(0, variance)`.
pub fn complex_gaussian<R: rand::Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

pub fn complex_gaussian_vector<R: rand::Rng + ?Sized>(rng: &mut R, len: usize, variance: f64) -> CVector {
    CVector::from_fn(len, |_, _| complex_gaussian(rng, variance))
}

/// Column-major fill, so the draw order is fixed by the shape alone.
pub fn complex_gaussian_matrix<R: rand::Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    variance: f64,
) -> CMatrix {
    let data: Vec<Complex64> = (0..rows * cols).map(|_| complex_gaussian(rng, variance)).collect();
    CMatrix::from_vec(rows, cols, data)
}
