//! Subalgebras of an ambient model, seen through projection, K-theory and similarity.

use serde::Serialize;

use crate::elem::Elem;
use crate::error::{Error, Result};
use crate::functional_calculus::{
    certify_idempotent_chain, certify_invertible, default_epsilon, idempotent_threshold, riesz_bound,
    IdempotentRounding, InvertibleRounding, RoundingCert,
};
use crate::loop_algebra::{arc_k0_trivialize, K1Vec, LoopAlg, LoopElem};
use crate::matrix::{self, kron, CMatrix, Tol, C64};
use crate::random::{self, Rng64};
use crate::star_algebra::Subalg;
use crate::wedderburn::{decompose, decompose_unitized, k0_class, similarity_witness, K0Vec, WedderburnData};

pub trait Region: Send + Sync {
    type E: Elem;

    /// Size of a base element: `N` for `M_N`, the fiber for loops.
    fn base_dim(&self) -> usize;
    /// Nearest point of `M_n(R)` or `M_n(R~)`.
    fn project(&self, x: &Self::E, unitized: bool) -> Result<Self::E>;
    fn distance(&self, x: &Self::E, unitized: bool) -> Result<f64> {
        Ok(x.sub(&self.project(x, unitized)?).norm())
    }
    /// Class of an idempotent over the unitization.
    fn k0(&self, e: &Self::E) -> Result<K0Vec>;
    /// Class of an invertible over the unitization.
    fn k1(&self, u: &Self::E) -> Result<K1Vec>;
    /// Invertible `w` over the unitization with `w e w^-1 = f`.
    fn similarity(&self, e: &Self::E, f: &Self::E, tol: &Tol) -> Result<Self::E>;
    /// Dimension of `R` as a vector space, when finite.
    fn linear_dim(&self) -> Option<usize> {
        None
    }
    /// Random element of `M_m` over the ambient model.
    fn random_ambient(&self, m: usize, r: &mut Rng64) -> Self::E;
    /// The underlying matrix subalgebra, when there is one.
    fn subalg(&self) -> Option<&Subalg> {
        None
    }
}

/// A *-subalgebra of `M_N` with the block data of its unitization.
#[derive(Debug, Clone)]
pub struct MatRegion {
    pub alg: Subalg,
    pub unit: Subalg,
    pub blocks: WedderburnData,
}

impl MatRegion {
    pub fn new(alg: Subalg, tol: &Tol, seed: u64) -> Result<Self> {
        let unit = alg.unitize(tol)?;
        let blocks = if alg.dim() == 0 { decompose(&unit, tol, seed)? } else { decompose_unitized(&alg, tol, seed)? };
        Ok(MatRegion { alg, unit, blocks })
    }

    pub fn ambient_dim(&self) -> usize {
        self.alg.ambient_dim()
    }

    fn check(&self, x: &CMatrix) -> Result<()> {
        let n = self.ambient_dim();
        if !x.nrows().is_multiple_of(n) || !x.is_square() {
            return Err(Error::InvalidInput(format!("element of size {} is not over M_{n}", x.nrows())));
        }
        matrix::ensure_finite(x)
    }
}

impl Region for MatRegion {
    type E = CMatrix;

    fn base_dim(&self) -> usize {
        self.ambient_dim()
    }
    fn project(&self, x: &CMatrix, unitized: bool) -> Result<CMatrix> {
        self.check(x)?;
        let s = if unitized { &self.unit } else { &self.alg };
        Ok(s.space().project_blocks(x))
    }
    fn k0(&self, e: &CMatrix) -> Result<K0Vec> {
        self.check(e)?;
        k0_class(e, &self.blocks)
    }
    fn k1(&self, u: &CMatrix) -> Result<K1Vec> {
        self.check(u)?;
        Ok(vec![])
    }
    fn similarity(&self, e: &CMatrix, f: &CMatrix, tol: &Tol) -> Result<CMatrix> {
        self.check(e)?;
        let (w, _) = similarity_witness(e, f, &self.blocks, tol)?;
        Ok(w)
    }
    fn linear_dim(&self) -> Option<usize> {
        Some(self.alg.dim())
    }
    fn random_ambient(&self, m: usize, r: &mut Rng64) -> CMatrix {
        random::gaussian(r, m * self.ambient_dim(), m * self.ambient_dim())
    }
    fn subalg(&self) -> Option<&Subalg> {
        Some(&self.alg)
    }
}

fn scalar_value(m: &CMatrix, k: usize) -> CMatrix {
    let n = m.nrows() / k;
    CMatrix::from_fn(n, n, |a, b| m[(a * k, b * k)])
}

impl Region for LoopAlg {
    type E = LoopElem;

    fn base_dim(&self) -> usize {
        self.fiber_dim
    }
    fn project(&self, x: &LoopElem, unitized: bool) -> Result<LoopElem> {
        LoopAlg::project(self, x, unitized)
    }
    fn k0(&self, e: &LoopElem) -> Result<K0Vec> {
        LoopAlg::k0(self, e)
    }
    fn k1(&self, u: &LoopElem) -> Result<K1Vec> {
        LoopAlg::k1(self, u)
    }
    fn similarity(&self, e: &LoopElem, f: &LoopElem, tol: &Tol) -> Result<LoopElem> {
        if self.k0(e)? != self.k0(f)? {
            return Err(Error::NotEquivalent("classes differ".into()));
        }
        let te = arc_k0_trivialize(e, self, tol)?;
        let tf = arc_k0_trivialize(f, self, tol)?;
        let k = self.fiber_dim;
        let (le, lf) = (scalar_value(&te.constant, k), scalar_value(&tf.constant, k));
        let full = MatRegion::new(Subalg::full(le.nrows()), tol, 0)?;
        let (s, _) = similarity_witness(&le, &lf, &full.blocks, tol)?;
        let s = e.constant_like(&kron(&s, &matrix::eye(k)));
        let w = tf.conjugator.inv(tol)?.mul(&s).mul(&te.conjugator);
        let winv = w.inv(tol)?;
        let resid = w.mul(e).mul(&winv).sub(f).norm();
        if resid > 1e-6 {
            return Err(Error::NotEquivalent(format!("similarity residual {resid:e}")));
        }
        Ok(w)
    }
    fn random_ambient(&self, m: usize, r: &mut Rng64) -> LoopElem {
        let d = m * self.fiber_dim;
        let modes: Vec<(i32, CMatrix)> = (-3..=3).map(|k| (k, random::gaussian(r, d, d))).collect();
        self.from_fn(|t| {
            modes.iter().fold(matrix::zeros(d, d), |acc, (k, g)| acc + g * C64::from_polar(1.0, *k as f64 * t))
        })
    }
}

/// Rounds an idempotent near `M_n(R~)` into it and returns its class.
pub fn round_idempotent<R: Region>(
    r: &R,
    e: &R::E,
    eps: Option<f64>,
    tol: &Tol,
) -> Result<(R::E, K0Vec, IdempotentRounding)> {
    let cn = e.norm().max(1e-12);
    let eps = eps.unwrap_or_else(|| default_epsilon(cn));
    let proj = r.project(e, true)?;
    let residual = e.sub(&proj).norm();
    let b_defect = proj.mul(&proj).sub(&proj).norm();
    if b_defect >= 1.0 / 16.0 {
        return Err(Error::NotCloseEnough { residual, threshold: idempotent_threshold(cn, eps) });
    }
    let f = proj.chi(tol)?;
    let b_norm = proj.norm();
    let output_distance = proj.sub(&f).norm();
    let bound = riesz_bound(b_defect, b_norm);
    let riesz = RoundingCert {
        input_defect: b_defect,
        input_norm_bound: b_norm,
        output_distance,
        bound,
        passed: output_distance <= bound * (1.0 + 1e-9) + 1e-12,
    };
    let distance = e.sub(&f).norm();
    let threshold = certify_idempotent_chain(cn, eps, residual, b_defect, b_norm, distance)?;
    let class = r.k0(&f)?;
    Ok((f, class, IdempotentRounding { epsilon: eps, threshold, residual, projected_defect: b_defect, distance, riesz }))
}

/// Nearest element of `M_n(R~)` to an invertible, certified invertible.
pub fn round_invertible<R: Region>(r: &R, u: &R::E, tol: &Tol) -> Result<(R::E, InvertibleRounding)> {
    let uinv = u.inv(tol)?;
    let c_inv = uinv.norm();
    let v = r.project(u, true)?;
    let residual = u.sub(&v).norm();
    let contraction = uinv.mul(&v).one_minus().norm();
    let vinv = v.inv(tol).map_err(|e| Error::RoundingUnstable(e.to_string()))?;
    let inverse_norm = vinv.norm();
    let threshold = certify_invertible(c_inv, residual, contraction, inverse_norm)?;
    Ok((v, InvertibleRounding { c: c_inv, threshold, residual, contraction, inverse_norm }))
}

/// Membership certificate `x in_eps M_n(R~)`.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Membership {
    pub residual: f64,
    pub eps: f64,
    pub passed: bool,
}

pub fn membership<R: Region>(r: &R, x: &R::E, eps: f64) -> Result<Membership> {
    let residual = r.distance(x, true)?;
    Ok(Membership { residual, eps, passed: residual <= eps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loop_algebra::{arc_ideal, bump, scalar_loop};
    use crate::matrix::{c, diag_real, eye, unit};
    use std::f64::consts::PI;

    #[test]
    fn matrix_region_rounds_into_diagonal() {
        let tol = Tol::default();
        let r = MatRegion::new(Subalg::diagonal(2), &tol, 1).unwrap();
        let e = diag_real(&[1.0, 0.0]) + unit(2, 0, 1) * c(1e-3, 0.0);
        let (f, class, cert) = round_idempotent(&r, &e, None, &tol).unwrap();
        assert!(matrix::approx_eq(&f, &diag_real(&[1.0, 0.0]), 1e-12));
        assert_eq!(class.entries, vec![1, 0]);
        assert!(cert.distance < 2e-3);
    }

    #[test]
    fn loop_similarity_on_arc() {
        let tol = Tol::default();
        let a = LoopAlg::new(360, 1).unwrap();
        let arc = arc_ideal(&a, (-0.5 * PI, 0.5 * PI)).unwrap();
        let h = bump(&a, (-0.2 * PI, 0.2 * PI), 0.2 * PI).unwrap();
        let p = a.constant(&diag_real(&[1.0, 0.0]));
        let rot = a.from_fn(|_| matrix::rotation(0.0));
        let hl = scalar_loop(&h, 2);
        let g = rot.add(&hl.mul(&a.constant(&(unit(2, 0, 1) * c(0.7, 0.0)))));
        let e = g.mul(&p).mul(&g.inv(&tol).unwrap());
        let w = arc.similarity(&e, &p, &tol).unwrap();
        assert!(w.mul(&e).mul(&w.inv(&tol).unwrap()).sub(&p).norm() < 1e-6);
        assert!(arc.distance(&w, true).unwrap() < 1e-12);
        assert!(matrix::approx_eq(&w.samples[180], &eye(2), 1e-12));
    }
}
