//! Seeded random generators for probes, sweeps and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matrix::{c, diag_real, CMatrix, C64};

pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derived seed for the `index`-th draw of a stream; independent of worker count.
pub fn substream(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn gaussian_c(r: &mut Rng64) -> C64 {
    let re: f64 = r.sample(StandardNormal);
    let im: f64 = r.sample(StandardNormal);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian(r: &mut Rng64, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian_c(r))
}

pub fn gaussian_hermitian(r: &mut Rng64, n: usize) -> CMatrix {
    let g = gaussian(r, n, n);
    (&g + g.adjoint()) * c(0.5, 0.0)
}

/// Haar-distributed unitary from the QR factorization of a Gaussian matrix.
pub fn unitary(r: &mut Rng64, n: usize) -> CMatrix {
    let g = gaussian(r, n, n);
    let qr = g.qr();
    let q = qr.q();
    let rr = qr.r();
    let phases: Vec<C64> = (0..n)
        .map(|i| {
            let d = rr[(i, i)];
            if d.norm() > 0.0 {
                d / d.norm()
            } else {
                c(1.0, 0.0)
            }
        })
        .collect();
    q * crate::matrix::diag(&phases)
}

/// Invertible matrix with singular values spread in [1, cond].
pub fn invertible(r: &mut Rng64, n: usize, cond: f64) -> CMatrix {
    let u = unitary(r, n);
    let v = unitary(r, n);
    let s: Vec<f64> = (0..n)
        .map(|i| {
            if n == 1 || i == 0 {
                1.0
            } else if i == n - 1 {
                cond
            } else {
                1.0 + r.random::<f64>() * (cond - 1.0)
            }
        })
        .collect();
    u * diag_real(&s) * v.adjoint()
}

/// Random idempotent of rank `k` in M_n, similar to a projection by an invertible of bounded condition.
pub fn idempotent(r: &mut Rng64, n: usize, k: usize, cond: f64) -> CMatrix {
    let s = invertible(r, n, cond);
    let d: Vec<f64> = (0..n).map(|i| if i < k { 1.0 } else { 0.0 }).collect();
    let sinv = s.clone().try_inverse().expect("bounded condition");
    s * diag_real(&d) * sinv
}

pub fn uniform(r: &mut Rng64, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * r.random::<f64>()
}

pub fn below(r: &mut Rng64, n: usize) -> usize {
    r.random_range(0..n)
}
