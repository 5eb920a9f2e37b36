//! Common interface for the two ambient models: dense matrices and sampled loops.
//!
//! Block operations act on raw rows and columns. With the Kronecker convention
//! of [`crate::matrix`], `M_2(M_n(A))` splits into four equal blocks and
//! `M_n(A) + M_m(A)` is a plain direct sum.

use crate::error::Result;
use crate::functional_calculus;
use crate::loop_algebra::{winding_k1, LoopElem};
use crate::matrix::{self, c, eye, kron, CMatrix, Tol, C64};

pub trait Elem: Clone + std::fmt::Debug + Send + Sync {
    fn dim(&self) -> usize;
    /// C*-norm: operator norm, or its maximum over samples.
    fn norm(&self) -> f64;
    fn mul(&self, o: &Self) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn scale(&self, z: C64) -> Self;
    fn adjoint(&self) -> Self;
    fn inv(&self, tol: &Tol) -> Result<Self>;
    /// Constant element with the given matrix value.
    fn constant_like(&self, m: &CMatrix) -> Self;
    fn block2(a: &Self, b: &Self, c: &Self, d: &Self) -> Self;
    fn split2(&self, n1: usize) -> (Self, Self, Self, Self);
    fn dsum(&self, o: &Self) -> Self;
    /// Rows and columns `[start, start + len)`.
    fn corner(&self, start: usize, len: usize) -> Self;
    /// `kron(m, x)`: the coarse factor is the constant matrix.
    fn kron_left(m: &CMatrix, x: &Self) -> Self;
    /// `kron(x, m)`: tensoring with a matrix on the fine side.
    fn kron_right(&self, m: &CMatrix) -> Self;
    /// `y[i, j] = x[perm[i], perm[j]]`.
    fn permute(&self, perm: &[usize]) -> Self;
    /// Half-plane spectral idempotent, samplewise for loops.
    fn chi(&self, tol: &Tol) -> Result<Self>;
    /// Extremes of the spectrum of the self-adjoint part.
    fn herm_bounds(&self) -> (f64, f64);
    /// Self-adjointness defect `||x - x*||`.
    fn hermitian_defect(&self) -> f64 {
        self.sub(&self.adjoint()).norm()
    }
    fn hs_inner(&self, o: &Self) -> C64;
    /// Dual norm of the C*-norm under the Hilbert-Schmidt pairing.
    fn trace_norm(&self) -> f64;
    /// Distance of the base value from the identity (basepoint for loops).
    fn basepoint_defect(&self) -> f64;
    /// Total winding of the determinant (zero for matrices).
    fn winding(&self) -> Result<i64>;

    fn identity_like(&self, dim: usize) -> Self {
        self.constant_like(&eye(dim))
    }
    fn zero_like(&self, dim: usize) -> Self {
        self.constant_like(&matrix::zeros(dim, dim))
    }
    fn one_minus(&self) -> Self {
        self.identity_like(self.dim()).sub(self)
    }
    /// `1_k tensor x`.
    fn amp(&self, k: usize) -> Self {
        if k == 1 {
            return self.clone();
        }
        Self::kron_left(&eye(k), self)
    }
}

impl Elem for CMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn norm(&self) -> f64 {
        matrix::norm(self)
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn scale(&self, z: C64) -> Self {
        self * z
    }
    fn adjoint(&self) -> Self {
        CMatrix::adjoint(self)
    }
    fn inv(&self, tol: &Tol) -> Result<Self> {
        matrix::invert(self, tol)
    }
    fn constant_like(&self, m: &CMatrix) -> Self {
        m.clone()
    }
    fn block2(a: &Self, b: &Self, cc: &Self, d: &Self) -> Self {
        matrix::block2(a, b, cc, d)
    }
    fn split2(&self, n1: usize) -> (Self, Self, Self, Self) {
        matrix::split2(self, n1)
    }
    fn dsum(&self, o: &Self) -> Self {
        matrix::dsum(self, o)
    }
    fn corner(&self, start: usize, len: usize) -> Self {
        self.view((start, start), (len, len)).into_owned()
    }
    fn kron_left(m: &CMatrix, x: &Self) -> Self {
        kron(m, x)
    }
    fn kron_right(&self, m: &CMatrix) -> Self {
        kron(self, m)
    }
    fn permute(&self, perm: &[usize]) -> Self {
        CMatrix::from_fn(perm.len(), perm.len(), |i, j| self[(perm[i], perm[j])])
    }
    fn chi(&self, tol: &Tol) -> Result<Self> {
        functional_calculus::chi(self, tol)
    }
    fn herm_bounds(&self) -> (f64, f64) {
        let (vals, _) = matrix::herm_eig(self);
        (vals[0], vals[vals.len() - 1])
    }
    fn hs_inner(&self, o: &Self) -> C64 {
        matrix::hs_inner(self, o)
    }
    fn trace_norm(&self) -> f64 {
        matrix::singular_values(self).iter().sum()
    }
    fn basepoint_defect(&self) -> f64 {
        0.0
    }
    fn winding(&self) -> Result<i64> {
        Ok(0)
    }
}

impl Elem for LoopElem {
    fn dim(&self) -> usize {
        LoopElem::dim(self)
    }
    fn norm(&self) -> f64 {
        LoopElem::norm(self)
    }
    fn mul(&self, o: &Self) -> Self {
        LoopElem::mul(self, o)
    }
    fn add(&self, o: &Self) -> Self {
        LoopElem::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        LoopElem::sub(self, o)
    }
    fn scale(&self, z: C64) -> Self {
        LoopElem::scale(self, z)
    }
    fn adjoint(&self) -> Self {
        LoopElem::adjoint(self)
    }
    fn inv(&self, tol: &Tol) -> Result<Self> {
        LoopElem::inv(self, tol)
    }
    fn constant_like(&self, m: &CMatrix) -> Self {
        LoopElem { samples: vec![m.clone(); self.grid()] }
    }
    fn block2(a: &Self, b: &Self, cc: &Self, d: &Self) -> Self {
        LoopElem {
            samples: (0..a.grid())
                .map(|j| matrix::block2(&a.samples[j], &b.samples[j], &cc.samples[j], &d.samples[j]))
                .collect(),
        }
    }
    fn split2(&self, n1: usize) -> (Self, Self, Self, Self) {
        let parts: Vec<_> = self.samples.iter().map(|s| matrix::split2(s, n1)).collect();
        let pick = |f: fn(&(CMatrix, CMatrix, CMatrix, CMatrix)) -> CMatrix| LoopElem {
            samples: parts.iter().map(f).collect(),
        };
        (pick(|p| p.0.clone()), pick(|p| p.1.clone()), pick(|p| p.2.clone()), pick(|p| p.3.clone()))
    }
    fn dsum(&self, o: &Self) -> Self {
        self.zip(o, matrix::dsum)
    }
    fn corner(&self, start: usize, len: usize) -> Self {
        self.map(|s| s.view((start, start), (len, len)).into_owned())
    }
    fn kron_left(m: &CMatrix, x: &Self) -> Self {
        x.map(|s| kron(m, s))
    }
    fn kron_right(&self, m: &CMatrix) -> Self {
        self.map(|s| kron(s, m))
    }
    fn permute(&self, perm: &[usize]) -> Self {
        self.map(|s| s.permute(perm))
    }
    fn chi(&self, tol: &Tol) -> Result<Self> {
        self.try_map(|s| functional_calculus::chi(s, tol))
    }
    fn herm_bounds(&self) -> (f64, f64) {
        self.samples
            .iter()
            .map(|s| s.herm_bounds())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| (lo.min(a), hi.max(b)))
    }
    fn hs_inner(&self, o: &Self) -> C64 {
        self.samples.iter().zip(&o.samples).map(|(a, b)| matrix::hs_inner(a, b)).sum()
    }
    fn trace_norm(&self) -> f64 {
        self.samples.iter().map(|s| s.trace_norm()).sum()
    }
    fn basepoint_defect(&self) -> f64 {
        let s = &self.samples[0];
        matrix::norm(&(s - eye(s.nrows())))
    }
    fn winding(&self) -> Result<i64> {
        winding_k1(self)
    }
}

/// `[[1, z], [0, 1]]`.
pub fn x_mat<E: Elem>(z: &E) -> E {
    let n = z.dim();
    let one = z.identity_like(n);
    E::block2(&one, z, &z.zero_like(n), &one)
}

/// `[[1, 0], [z, 1]]`.
pub fn y_mat<E: Elem>(z: &E) -> E {
    let n = z.dim();
    let one = z.identity_like(n);
    E::block2(&one, &z.zero_like(n), z, &one)
}

/// `[[0, -1], [1, 0]]` in `M_2(M_n)`.
pub fn j_mat<E: Elem>(like: &E, n: usize) -> E {
    let one = like.identity_like(n);
    let zero = like.zero_like(n);
    E::block2(&zero, &one.scale(c(-1.0, 0.0)), &one, &zero)
}

/// `[[0, 1], [-1, 0]]`.
pub fn j_inv<E: Elem>(like: &E, n: usize) -> E {
    j_mat(like, n).scale(c(-1.0, 0.0))
}

/// `diag(1_n, 0_n)`.
pub fn top_projection<E: Elem>(like: &E, n: usize) -> E {
    E::block2(&like.identity_like(n), &like.zero_like(n), &like.zero_like(n), &like.zero_like(n))
}

pub fn diag2<E: Elem>(a: &E, d: &E) -> E {
    a.dsum(d)
}

pub fn product<E: Elem>(factors: &[E]) -> E {
    let mut out = factors[0].clone();
    for f in &factors[1..] {
        out = out.mul(f);
    }
    out
}
