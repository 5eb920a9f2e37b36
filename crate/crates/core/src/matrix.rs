//! Dense complex linear algebra shared by every other module.
//!
//! Matrices are `nalgebra` dense matrices over `Complex64`. The Kronecker
//! convention is fixed: in `kron(a, b)` the left factor indexes the coarse
//! blocks, so `M_n(M_N)` is realized as `kron(M_n, M_N)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Numerical slack used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tol {
    pub membership_tol: f64,
    pub rank_rel_tol: f64,
    pub invert_cond_max: f64,
}

impl Default for Tol {
    fn default() -> Self {
        Tol {
            membership_tol: 1e-9,
            rank_rel_tol: 1e-8,
            invert_cond_max: 1e12,
        }
    }
}

impl Tol {
    /// Defaults, with `membership_tol` taken from `APPROXK_TOL` when set.
    pub fn from_env() -> Self {
        let mut tol = Tol::default();
        if let Ok(raw) = std::env::var("APPROXK_TOL") {
            if let Ok(v) = raw.trim().parse::<f64>() {
                if v > 0.0 && v.is_finite() {
                    tol.membership_tol = v;
                }
            }
        }
        tol
    }

    pub fn with_membership(mut self, v: f64) -> Self {
        self.membership_tol = v;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.membership_tol, self.rank_rel_tol, self.invert_cond_max]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput("tolerances must be positive".into()))
        }
    }
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn eye(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn zeros(r: usize, c: usize) -> CMatrix {
    CMatrix::zeros(r, c)
}

/// Matrix from real row-major entries.
pub fn real(rows: usize, cols: usize, entries: &[f64]) -> CMatrix {
    assert_eq!(entries.len(), rows * cols);
    CMatrix::from_fn(rows, cols, |i, j| c(entries[i * cols + j], 0.0))
}

/// Matrix from complex rows; rejects ragged or empty input.
pub fn from_rows(rows: &[Vec<C64>]) -> Result<CMatrix> {
    let r = rows.len();
    let cols = rows.first().map(|x| x.len()).unwrap_or(0);
    if r == 0 || cols == 0 || rows.iter().any(|x| x.len() != cols) {
        return Err(Error::InvalidInput("matrix rows must be non-empty and equal length".into()));
    }
    let m = CMatrix::from_fn(r, cols, |i, j| rows[i][j]);
    ensure_finite(&m)?;
    Ok(m)
}

pub fn diag(d: &[C64]) -> CMatrix {
    let n = d.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { d[i] } else { ZERO })
}

pub fn diag_real(d: &[f64]) -> CMatrix {
    diag(&d.iter().map(|x| c(*x, 0.0)).collect::<Vec<_>>())
}

/// Matrix unit e_ij in M_n (zero-based).
pub fn unit(n: usize, i: usize, j: usize) -> CMatrix {
    let mut m = zeros(n, n);
    m[(i, j)] = ONE;
    m
}

/// Real rotation matrix by `angle` radians.
pub fn rotation(angle: f64) -> CMatrix {
    let (s, co) = angle.sin_cos();
    real(2, 2, &[co, -s, s, co])
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn ensure_finite(m: &CMatrix) -> Result<()> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    if !is_finite(m) {
        return Err(Error::InvalidInput("non-finite matrix entry".into()));
    }
    Ok(())
}

/// SVD whose factors reproduce `m`.
///
/// nalgebra's complex SVD can return inconsistent factors for exactly rank-deficient inputs at
/// its default convergence threshold, so the threshold is raised until the reconstruction checks.
/// Iteration cap for the iterative decompositions; nalgebra treats 0 as unbounded.
const MAX_SWEEPS: usize = 10_000;

fn checked_svd(m: &CMatrix) -> nalgebra::SVD<C64, nalgebra::Dyn, nalgebra::Dyn> {
    let scale = hs_norm(m).max(1e-300);
    let mut last = None;
    for eps in [1e-15, 1e-14, 1e-13, 1e-12] {
        let Some(svd) = m.clone().try_svd(true, true, eps, MAX_SWEEPS) else { continue };
        let (Some(u), Some(vt)) = (&svd.u, &svd.v_t) else { continue };
        let sigma = CMatrix::from_diagonal(&svd.singular_values.map(|s| c(s, 0.0)));
        if hs_norm(&(u * sigma * vt - m)) <= 1e-12 * scale {
            return svd;
        }
        last = Some(svd);
    }
    last.unwrap_or_else(|| {
        m.clone().try_svd(true, true, 1e-10, 10 * MAX_SWEEPS).unwrap_or_else(|| m.clone().svd(true, true))
    })
}

/// Singular values in decreasing order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return vec![];
    }
    let mut s: Vec<f64> = checked_svd(m).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    s
}

/// Largest singular value, without input validation.
pub fn norm(m: &CMatrix) -> f64 {
    match (m.nrows(), m.ncols()) {
        (0, _) | (_, 0) => 0.0,
        (1, 1) => m[(0, 0)].norm(),
        _ => {
            let g = if m.nrows() < m.ncols() { m * m.adjoint() } else { m.adjoint() * m };
            let top = g.symmetric_eigenvalues().iter().cloned().fold(0.0, f64::max);
            top.max(0.0).sqrt()
        }
    }
}

/// Operator norm (largest singular value).
pub fn op_norm(m: &CMatrix) -> Result<f64> {
    ensure_finite(m)?;
    Ok(norm(m))
}

/// Hilbert-Schmidt (Frobenius) norm.
pub fn hs_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// tr(a* b).
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

pub fn cond(m: &CMatrix) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Inverse, refusing matrices whose condition number exceeds `tol.invert_cond_max`.
pub fn invert(m: &CMatrix, tol: &Tol) -> Result<CMatrix> {
    ensure_finite(m)?;
    if !m.is_square() {
        return Err(Error::InvalidInput("inverse of a non-square matrix".into()));
    }
    let k = cond(m);
    if !k.is_finite() || k > tol.invert_cond_max {
        return Err(Error::NotInvertible(k));
    }
    m.clone().try_inverse().ok_or(Error::NotInvertible(k))
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn dsum(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (r, c) = (a.nrows() + b.nrows(), a.ncols() + b.ncols());
    let mut m = zeros(r, c);
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    m
}

pub fn direct_sum(parts: &[CMatrix]) -> CMatrix {
    let r: usize = parts.iter().map(|p| p.nrows()).sum();
    let c: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut m = zeros(r, c);
    let (mut i, mut j) = (0, 0);
    for p in parts {
        m.view_mut((i, j), p.shape()).copy_from(p);
        i += p.nrows();
        j += p.ncols();
    }
    m
}

/// [[a, b], [c, d]] from square blocks of compatible sizes.
pub fn block2(a: &CMatrix, b: &CMatrix, cc: &CMatrix, d: &CMatrix) -> CMatrix {
    let (n1, n2) = (a.nrows(), d.nrows());
    let mut m = zeros(n1 + n2, n1 + n2);
    m.view_mut((0, 0), (n1, n1)).copy_from(a);
    m.view_mut((0, n1), (n1, n2)).copy_from(b);
    m.view_mut((n1, 0), (n2, n1)).copy_from(cc);
    m.view_mut((n1, n1), (n2, n2)).copy_from(d);
    m
}

/// Inverse of `block2` for a split after the first `n1` rows and columns.
pub fn split2(m: &CMatrix, n1: usize) -> (CMatrix, CMatrix, CMatrix, CMatrix) {
    let n2 = m.nrows() - n1;
    (
        m.view((0, 0), (n1, n1)).into_owned(),
        m.view((0, n1), (n1, n2)).into_owned(),
        m.view((n1, 0), (n2, n1)).into_owned(),
        m.view((n1, n1), (n2, n2)).into_owned(),
    )
}

/// Hermitian eigendecomposition of the self-adjoint part of `m`, eigenvalues ascending.
pub fn herm_eig(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    let se = h.symmetric_eigen();
    let mut idx: Vec<usize> = (0..se.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let vals = idx.iter().map(|&i| se.eigenvalues[i]).collect();
    let vecs = CMatrix::from_fn(m.nrows(), idx.len(), |r, k| se.eigenvectors[(r, idx[k])]);
    (vals, vecs)
}

/// Singular values (descending) and a full set of right singular vectors.
pub fn svd_right(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let cols = m.ncols();
    let padded = if m.nrows() < cols {
        let mut p = zeros(cols, cols);
        p.view_mut((0, 0), m.shape()).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = checked_svd(&padded);
    let vt = svd.v_t.expect("right singular vectors requested");
    let s = svd.singular_values;
    let mut idx: Vec<usize> = (0..s.len()).collect();
    idx.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap());
    let sv = idx.iter().map(|&i| s[i]).collect();
    let v = CMatrix::from_fn(cols, idx.len(), |r, k| vt[(idx[k], r)].conj());
    (sv, v)
}

/// Orthonormal basis of the column space, with cutoff relative to the largest singular value.
pub fn range_basis(m: &CMatrix, rel_tol: f64) -> CMatrix {
    if m.ncols() == 0 || m.nrows() == 0 {
        return zeros(m.nrows(), 0);
    }
    let svd = checked_svd(m);
    let u = svd.u.expect("left singular vectors requested");
    let s = &svd.singular_values;
    let smax = s.iter().cloned().fold(0.0, f64::max);
    if smax <= 1e-300 {
        return zeros(m.nrows(), 0);
    }
    let keep: Vec<usize> = (0..s.len()).filter(|&i| s[i] > rel_tol * smax).collect();
    CMatrix::from_fn(m.nrows(), keep.len(), |r, k| u[(r, keep[k])])
}

/// Column-major flattening.
pub fn vectorize(m: &CMatrix) -> Vec<C64> {
    m.iter().copied().collect()
}

pub fn unvectorize(v: &[C64], n: usize) -> CMatrix {
    CMatrix::from_column_slice(n, n, v)
}

/// Eigendecomposition m = V diag(lambda) V^-1 for diagonalizable m.
///
/// Eigenvalues come from a complex Schur form; eigenvectors are the
/// smallest right singular vectors of m - lambda for each eigenvalue cluster.
pub fn eig(m: &CMatrix, tol: &Tol) -> Result<(Vec<C64>, CMatrix)> {
    ensure_finite(m)?;
    if !m.is_square() {
        return Err(Error::InvalidInput("eig of a non-square matrix".into()));
    }
    let n = m.nrows();
    let scale = norm(m).max(1e-300);
    let schur = [f64::EPSILON, 1e-14, 1e-12]
        .iter()
        .find_map(|&eps| nalgebra::linalg::Schur::try_new(m.clone(), eps, MAX_SWEEPS))
        .ok_or(Error::DefectiveMatrix(f64::INFINITY))?;
    let (_, t) = schur.unpack();
    let mut lambdas: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    lambdas.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());

    let cluster_tol = 1e-10 * scale.max(1.0);
    let mut clusters: Vec<Vec<C64>> = Vec::new();
    for l in lambdas {
        match clusters.iter_mut().find(|cl| cl.iter().any(|x| (x - l).norm() <= cluster_tol)) {
            Some(cl) => cl.push(l),
            None => clusters.push(vec![l]),
        }
    }

    let mut values = Vec::with_capacity(n);
    let mut v = zeros(n, n);
    let mut col = 0;
    for cl in &clusters {
        let k = cl.len();
        let mean = cl.iter().sum::<C64>() / c(k as f64, 0.0);
        let shifted = m - eye(n) * mean;
        let (s, right) = svd_right(&shifted);
        let worst = s[n - k];
        if worst > 1e-7 * scale.max(1.0) {
            return Err(Error::DefectiveMatrix(worst / scale.max(1e-300)));
        }
        for j in 0..k {
            v.set_column(col, &right.column(n - k + j));
            values.push(if k == 1 { cl[0] } else { mean });
            col += 1;
        }
    }
    let kv = cond(&v);
    if !kv.is_finite() || kv > tol.invert_cond_max {
        return Err(Error::DefectiveMatrix(kv));
    }
    let resid = norm(&(m * &v - &v * diag(&values)));
    if resid > 1e-8 * scale.max(1.0) * norm(&v) {
        return Err(Error::DefectiveMatrix(kv));
    }
    Ok((values, v))
}

/// f(m) = V diag(f(lambda)) V^-1 on a diagonalizable matrix.
pub fn apply_fn(m: &CMatrix, tol: &Tol, f: impl Fn(C64) -> C64) -> Result<CMatrix> {
    let (vals, v) = eig(m, tol)?;
    let vinv = invert(&v, tol)?;
    let fd = diag(&vals.iter().map(|z| f(*z)).collect::<Vec<_>>());
    Ok(&v * fd * vinv)
}

/// Matrix exponential by scaling and squaring of a Taylor series.
pub fn expm(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let nrm = m.iter().map(|z| z.norm()).sum::<f64>().max(1e-300);
    let s = if nrm > 0.5 { (nrm / 0.5).log2().ceil() as i32 } else { 0 };
    let a = m * c(0.5f64.powi(s), 0.0);
    let mut term = eye(n);
    let mut sum = eye(n);
    for k in 1..=20 {
        term = &term * &a * c(1.0 / k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Principal positive p-th root of a positive semidefinite matrix.
pub fn psd_root(m: &CMatrix, p: u32) -> CMatrix {
    let (vals, v) = herm_eig(m);
    let d: Vec<f64> = vals.iter().map(|x| x.max(0.0).powf(1.0 / p as f64)).collect();
    &v * diag_real(&d) * v.adjoint()
}

/// Positive and negative parts of a self-adjoint matrix.
pub fn pos_neg_parts(m: &CMatrix) -> (CMatrix, CMatrix) {
    let (vals, v) = herm_eig(m);
    let pos: Vec<f64> = vals.iter().map(|x| x.max(0.0)).collect();
    let neg: Vec<f64> = vals.iter().map(|x| (-x).max(0.0)).collect();
    (
        &v * diag_real(&pos) * v.adjoint(),
        &v * diag_real(&neg) * v.adjoint(),
    )
}

/// Numerical rank with a relative cutoff on singular values.
pub fn rank(m: &CMatrix, rel_tol: f64) -> usize {
    let s = singular_values(m);
    let smax = s.first().copied().unwrap_or(0.0);
    if smax <= 1e-300 {
        return 0;
    }
    s.iter().filter(|x| **x > rel_tol * smax).count()
}

pub fn approx_eq(a: &CMatrix, b: &CMatrix, eps: f64) -> bool {
    a.shape() == b.shape() && norm(&(a - b)) <= eps
}
