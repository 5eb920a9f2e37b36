//! Approximate ideal structures `(h, C, D)` for a finite-dimensional subspace.

use nalgebra::DMatrix;
use serde::Serialize;

use super::region::Region;
use crate::elem::Elem;
use crate::error::{Error, Result};
use crate::matrix::{c, CMatrix, C64};
use crate::random::{self, gaussian, gaussian_c};

/// Number of random combinations probed on top of the basis.
pub const RANDOM_PROBES: usize = 50;

/// Worst normalized residuals of the three ideal-structure conditions.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IdealCert {
    pub delta_comm: f64,
    pub delta_c: f64,
    pub delta_d: f64,
    pub delta_int1: f64,
    pub delta_int2: f64,
    pub basis_dim: usize,
    pub samples: usize,
}

impl IdealCert {
    pub fn delta(&self) -> f64 {
        self.delta_comm.max(self.delta_c).max(self.delta_d).max(self.delta_int1).max(self.delta_int2)
    }

    pub fn valid_at(&self, delta: f64) -> bool {
        self.delta() <= delta
    }

    fn absorb(&mut self, r: [f64; 5]) {
        self.delta_comm = self.delta_comm.max(r[0]);
        self.delta_c = self.delta_c.max(r[1]);
        self.delta_d = self.delta_d.max(r[2]);
        self.delta_int1 = self.delta_int1.max(r[3]);
        self.delta_int2 = self.delta_int2.max(r[4]);
        self.samples += 1;
    }
}

/// The data `(h, C, D, C ∩ D)` of an ideal structure.
pub struct IdealStructure<'a, R: Region> {
    pub h: &'a R::E,
    pub c: &'a R,
    pub d: &'a R,
    pub cd: &'a R,
}

impl<R: Region> Clone for IdealStructure<'_, R> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<R: Region> Copy for IdealStructure<'_, R> {}

/// `h` must be self-adjoint with spectrum in `[0, 1]`.
pub fn check_contraction<E: Elem>(h: &E) -> Result<()> {
    let (lo, hi) = h.herm_bounds();
    if h.hermitian_defect() > 1e-9 || lo < -1e-9 || hi > 1.0 + 1e-9 {
        return Err(Error::NotAContraction { min: lo, max: hi });
    }
    Ok(())
}

/// Normalized residuals of one element; `h` must already be amplified to its size.
fn residuals<R: Region>(s: IdealStructure<'_, R>, h: &R::E, x: &R::E) -> Result<[f64; 5]> {
    let nx = x.norm();
    if nx == 0.0 {
        return Ok([0.0; 5]);
    }
    let hx = h.mul(x);
    let one_h = h.one_minus();
    let dx = one_h.mul(x);
    let i1 = h.mul(&dx);
    let i2 = h.mul(&i1);
    Ok([
        hx.sub(&x.mul(h)).norm() / nx,
        s.c.distance(&hx, false)? / nx,
        s.d.distance(&dx, false)? / nx,
        s.cd.distance(&i1, false)? / nx,
        s.cd.distance(&i2, false)? / nx,
    ])
}

/// Hilbert-Schmidt orthonormal basis of the span.
pub fn hs_orthonormal<E: Elem>(xs: &[E]) -> Vec<E> {
    let mut out: Vec<E> = vec![];
    for x in xs {
        let mut y = x.clone();
        for _ in 0..2 {
            for q in &out {
                y = y.sub(&q.scale(q.hs_inner(&y)));
            }
        }
        let n = y.hs_inner(&y).re.sqrt();
        let scale = x.hs_inner(x).re.sqrt();
        if n > 1e-10 * scale.max(1e-300) {
            out.push(y.scale(c(1.0 / n, 0.0)));
        }
    }
    out
}

fn combination<E: Elem>(basis: &[E], coeffs: &[C64]) -> E {
    let mut acc = basis[0].scale(coeffs[0]);
    for (b, z) in basis.iter().zip(coeffs).skip(1) {
        acc = acc.add(&b.scale(*z));
    }
    acc
}

/// Measures the ideal-structure conditions over a basis of `X` and random combinations.
pub fn check_delta_ideal_structure<R: Region>(
    s: IdealStructure<'_, R>,
    xs: &[R::E],
    seed: u64,
) -> Result<IdealCert> {
    check_contraction(s.h)?;
    let basis = hs_orthonormal(xs);
    let mut cert = IdealCert { basis_dim: basis.len(), ..Default::default() };
    if basis.is_empty() {
        return Ok(cert);
    }
    let h = s.h.amp(basis[0].dim() / s.h.dim());
    for b in &basis {
        cert.absorb(residuals(s, &h, b)?);
    }
    let mut r = random::rng(seed);
    for _ in 0..RANDOM_PROBES {
        let coeffs: Vec<C64> = (0..basis.len()).map(|_| gaussian_c(&mut r)).collect();
        cert.absorb(residuals(s, &h, &combination(&basis, &coeffs))?);
    }
    Ok(cert)
}

/// Certificate for `(1 ⊗ h, M_m(C), M_m(D))` on `M_m(X)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorScaleCert {
    pub m: usize,
    pub base: IdealCert,
    pub scaled: IdealCert,
    /// `n = dim X`.
    pub n: usize,
    /// Largest norm of the dual functionals of a unit-norm basis.
    pub dual_norm: f64,
    /// `M_X = n M`.
    pub m_x: f64,
    pub bound: f64,
    pub passed: bool,
}

/// Largest norm of the functionals dual to `basis`, realized through the HS pairing.
///
/// `phi_i(x) = <g_i, x>` with `g_i` in the span; its norm is at most the trace
/// norm of `g_i`, so the returned value bounds the optimal constant from above.
pub fn dual_functional_norm<E: Elem>(basis: &[E]) -> Result<f64> {
    let n = basis.len();
    let g = CMatrix::from_fn(n, n, |i, j| basis[i].hs_inner(&basis[j]));
    let ginv: DMatrix<C64> =
        g.try_inverse().ok_or_else(|| Error::InvalidInput("basis of X is linearly dependent".into()))?;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let coeffs: Vec<C64> = (0..n).map(|j| ginv[(i, j)].conj()).collect();
        worst = worst.max(combination(basis, &coeffs).trace_norm());
    }
    Ok(worst)
}

/// Re-measures the structure on `X ⊗ M_m` and compares against `M_X · delta`.
pub fn tensor_scale_ideal_structure<R: Region>(
    s: IdealStructure<'_, R>,
    xs: &[R::E],
    m: usize,
    seed: u64,
) -> Result<TensorScaleCert> {
    if m == 0 {
        return Err(Error::InvalidInput("matrix size must be positive".into()));
    }
    let base = check_delta_ideal_structure(s, xs, seed)?;
    let unit_basis: Vec<R::E> =
        hs_orthonormal(xs).into_iter().map(|b| { let n = b.norm(); b.scale(c(1.0 / n, 0.0)) }).collect();
    let n = unit_basis.len();
    let mut scaled = IdealCert { basis_dim: n * m * m, ..Default::default() };
    if n == 0 {
        return Ok(TensorScaleCert { m, base, scaled, n, dual_norm: 0.0, m_x: 0.0, bound: 0.0, passed: true });
    }
    let dual_norm = dual_functional_norm(&unit_basis)?;
    let m_x = n as f64 * dual_norm;
    let h = s.h.amp(m * unit_basis[0].dim() / s.h.dim());
    let mut r = random::rng(random::substream(seed, 1));
    for x in &unit_basis {
        for a in 0..m {
            for b in 0..m {
                let e = crate::matrix::unit(m, a, b);
                scaled.absorb(residuals(s, &h, &R::E::kron_left(&e, x))?);
            }
        }
    }
    for _ in 0..RANDOM_PROBES {
        let mut acc: Option<R::E> = None;
        for x in &unit_basis {
            let term = R::E::kron_left(&gaussian(&mut r, m, m), x);
            acc = Some(match acc {
                None => term,
                Some(a) => a.add(&term),
            });
        }
        scaled.absorb(residuals(s, &h, &acc.unwrap())?);
    }
    let bound = m_x * base.delta();
    let passed = scaled.delta() <= bound * (1.0 + 1e-9) + 1e-12;
    Ok(TensorScaleCert { m, base, scaled, n, dual_norm, m_x, bound, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::region::MatRegion;
    use crate::loop_algebra::{arc_ideal, bump, scalar_loop, LoopAlg};
    use crate::matrix::{diag_real, eye, real, unit, Tol};
    use crate::star_algebra::Subalg;
    use std::f64::consts::PI;

    fn circle() -> (LoopAlg, LoopAlg, LoopAlg, crate::loop_algebra::LoopElem) {
        let a = LoopAlg::new(720, 1).unwrap();
        let cc = arc_ideal(&a, (-0.6 * PI, 0.6 * PI)).unwrap();
        let d = arc_ideal(&a, (0.4 * PI, 1.6 * PI)).unwrap();
        let i = cc.intersect(&d).unwrap();
        let h = scalar_loop(&bump(&a, (-0.4 * PI, 0.4 * PI), 0.2 * PI).unwrap(), 1);
        (cc, d, i, h)
    }

    #[test]
    fn circle_split_is_exact() {
        let (cc, d, i, h) = circle();
        let a = LoopAlg::new(720, 1).unwrap();
        let one = a.identity(1);
        let xs = vec![a.power_z(1).sub(&one), a.power_z(-1).sub(&one)];
        let s = IdealStructure { h: &h, c: &cc, d: &d, cd: &i };
        let cert = check_delta_ideal_structure(s, &xs, 3).unwrap();
        assert_eq!(cert.delta(), 0.0);
        let t = tensor_scale_ideal_structure(s, &xs, 2, 3).unwrap();
        assert_eq!(t.scaled.delta(), 0.0);
        assert!(t.passed);
    }

    #[test]
    fn trivial_structures() {
        let tol = Tol::default();
        let full = MatRegion::new(Subalg::full(2), &tol, 0).unwrap();
        let zero = MatRegion::new(Subalg::zero(2), &tol, 0).unwrap();
        let xs = vec![real(2, 2, &[1.0, 2.0, 3.0, 4.0]), unit(2, 0, 1)];
        let h = eye(2);
        let s = IdealStructure { h: &h, c: &full, d: &zero, cd: &zero };
        assert_eq!(check_delta_ideal_structure(s, &xs, 0).unwrap().delta(), 0.0);
        let half = eye(2) * c(0.5, 0.0);
        let s = IdealStructure { h: &half, c: &full, d: &full, cd: &full };
        assert_eq!(check_delta_ideal_structure(s, &xs, 0).unwrap().delta(), 0.0);
    }

    #[test]
    fn rejects_non_contraction() {
        let tol = Tol::default();
        let full = MatRegion::new(Subalg::full(2), &tol, 0).unwrap();
        let h = diag_real(&[1.5, 0.0]);
        let s = IdealStructure { h: &h, c: &full, d: &full, cd: &full };
        assert!(matches!(check_delta_ideal_structure(s, &[eye(2)], 0), Err(Error::NotAContraction { .. })));
    }

    #[test]
    fn single_projection_is_self_dual() {
        let m = dual_functional_norm(&[unit(3, 0, 0)]).unwrap();
        assert!((m - 1.0).abs() < 1e-12);
    }
}
