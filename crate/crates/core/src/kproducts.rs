//! External products with matrix idempotents and their compatibility with boundary classes.

use serde::Serialize;

use crate::boundary::classes::boundary_class;
use crate::boundary::lift::{certify_lift, Lift, LiftCert, Pair};
use crate::boundary::region::{MatRegion, Region};
use crate::elem::Elem;
use crate::error::{Error, Result};
use crate::matrix::{self, eye, kron, norm, trace, CMatrix, Tol};
use crate::wedderburn::K0Vec;

const IDEMPOTENT_DEFECT: f64 = 1e-8;

fn check_idempotent(p: &CMatrix) -> Result<i64> {
    if !p.is_square() {
        return Err(Error::InvalidInput("idempotent must be square".into()));
    }
    matrix::ensure_finite(p)?;
    let defect = norm(&(p * p - p));
    if defect > IDEMPOTENT_DEFECT {
        return Err(Error::NotAClass(format!("idempotent defect {defect:e}")));
    }
    Ok(trace(p).re.round() as i64)
}

/// `u ⊠ p` with its inverse `u^-1 ⊠ p`.
#[derive(Debug, Clone)]
pub struct BoxTimes<E: Elem> {
    pub w: E,
    pub winv: E,
    pub inverse_residual: f64,
}

/// `u ⊗ p + 1 ⊗ (1 - p)`, with `p` on the coarse side.
pub fn box_times<E: Elem>(u: &E, p: &CMatrix, tol: &Tol) -> Result<BoxTimes<E>> {
    check_idempotent(p)?;
    let uinv = u.inv(tol)?;
    let one_p = eye(p.nrows()) - p;
    let one = u.identity_like(u.dim());
    let glue = E::kron_left(&one_p, &one);
    let w = E::kron_left(p, u).add(&glue);
    let winv = E::kron_left(p, &uinv).add(&glue);
    let inverse_residual = w.mul(&winv).one_minus().norm();
    if inverse_residual > 1e-8 * w.norm().max(1.0) * winv.norm().max(1.0) {
        return Err(Error::NotInvertible(inverse_residual));
    }
    Ok(BoxTimes { w, winv, inverse_residual })
}

/// Class of `q ⊗ p` next to the rank prediction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductClass {
    pub factor: K0Vec,
    pub rank_q: i64,
    pub class: K0Vec,
    pub predicted: K0Vec,
    pub matches: bool,
}

/// `[p] x [q]` for `p` over the unitization of `r` and `q` an idempotent in `M_m`.
pub fn k0_product<R: Region>(r: &R, p: &R::E, q: &CMatrix) -> Result<ProductClass> {
    let rank_q = check_idempotent(q)?;
    let factor = r.k0(p)?;
    let class = r.k0(&R::E::kron_left(q, p))?;
    let predicted = factor.scale(rank_q);
    let matches = class == predicted;
    Ok(ProductClass { factor, rank_q, class, predicted, matches })
}

/// Both sides of `∂_v(u) x [p] = ∂_{v ⊠ p}(u ⊠ p)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductCheck {
    pub m: usize,
    pub rank_p: i64,
    pub lhs: K0Vec,
    pub rhs: K0Vec,
    pub equal: bool,
    pub lift: LiftCert,
    /// `dim (C ⊗ M_m) ∩ (D ⊗ M_m) - dim (C ∩ D) ⊗ M_m`, for matrix algebras.
    pub intersection_gap: Option<usize>,
}

/// Reorders `M_m(M_2(M_n))` into `M_2(M_m(M_n))`.
fn coarse_to_outer(m: usize, n: usize) -> Vec<usize> {
    let mut perm = Vec::with_capacity(2 * m * n);
    for s in 0..2 {
        for a in 0..m {
            for i in 0..n {
                perm.push(a * 2 * n + s * n + i);
            }
        }
    }
    perm
}

fn intersection_gap<R: Region>(pair: Pair<'_, R>, m: usize) -> Result<Option<usize>> {
    let (Some(c), Some(d), Some(cd)) = (pair.c.subalg(), pair.d.subalg(), pair.cd.subalg()) else {
        return Ok(None);
    };
    let tol = Tol::default();
    let joint = c.amplify(m).intersect(&d.amplify(m), &tol)?;
    Ok(Some(joint.dim().saturating_sub(cd.dim() * m * m)))
}

/// Lift `v ⊠ p` of `u ⊠ p`, blocks reordered so the top projection is `diag(1_{nm}, 0)`.
pub fn box_times_lift<R: Region>(pair: Pair<'_, R>, lift: &Lift<R::E>, p: &CMatrix, tol: &Tol) -> Result<Lift<R::E>> {
    let n = lift.u.dim();
    let m = p.nrows();
    let bu = box_times(&lift.u, p, tol)?;
    let bv = box_times(&lift.v, p, tol)?;
    let perm = coarse_to_outer(m, n);
    let v = bv.w.permute(&perm);
    let vinv = bv.winv.permute(&perm);
    let cert = certify_lift(pair, &bu.w, &bu.winv, &v, &vinv, tol)?;
    Ok(Lift { u: bu.w, uinv: bu.winv, v, vinv, cert })
}

pub fn boundary_product_check<R: Region>(
    pair: Pair<'_, R>,
    lift: &Lift<R::E>,
    p: &CMatrix,
    tol: &Tol,
) -> Result<ProductCheck> {
    let rank_p = check_idempotent(p)?;
    let m = p.nrows();
    let base = boundary_class(pair, lift, None, tol)?;
    let lifted = box_times_lift(pair, lift, p, tol)?;
    let rhs = boundary_class(pair, &lifted, None, tol)?.class;
    let lhs = base.class.scale(rank_p);
    Ok(ProductCheck {
        m,
        rank_p,
        equal: lhs == rhs,
        lhs,
        rhs,
        lift: lifted.cert,
        intersection_gap: intersection_gap(pair, m)?,
    })
}

/// Images of a formal difference `[e] - [f]` over `A~ ⊗ B~` under the two augmentation maps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonunitalCheck {
    /// `(id ⊗ eps_B)` image, a class over `A~`.
    pub image_a: K0Vec,
    /// `(eps_A ⊗ id)` image, a class over `B~`.
    pub image_b: K0Vec,
    pub passed: bool,
}

fn augmentation_vector(r: &MatRegion) -> Result<CMatrix> {
    let i = r
        .blocks
        .augmentation
        .ok_or_else(|| Error::InvalidInput("algebra is unital in its ambient; no augmentation".into()))?;
    Ok(r.blocks.block_isometries[i].columns(0, 1).into_owned())
}

/// Checks that `[e] - [f]` lies in `K0(A ⊗ B)` inside `K0(A~ ⊗ B~)`.
///
/// Elements live in `M_k(M_N ⊗ M_M)` laid out as `kron(M_k, kron(a, b))`.
pub fn nonunital_class_check(a: &MatRegion, b: &MatRegion, e: &CMatrix, f: &CMatrix) -> Result<NonunitalCheck> {
    let (na, nb) = (a.ambient_dim(), b.ambient_dim());
    let cell = na * nb;
    if !e.nrows().is_multiple_of(cell) || e.shape() != f.shape() {
        return Err(Error::InvalidInput(format!("elements must be square over M_{cell}")));
    }
    let k = e.nrows() / cell;
    let xi = augmentation_vector(a)?;
    let eta = augmentation_vector(b)?;
    let to_b = kron(&eye(k), &kron(&xi, &eye(nb)));
    let to_a = kron(&eye(k), &kron(&eye(na), &eta));
    let image = |r: &MatRegion, s: &CMatrix| -> Result<K0Vec> {
        let ce = r.k0(&(s.adjoint() * e * s))?;
        let cf = r.k0(&(s.adjoint() * f * s))?;
        ce.sub(&cf)
    };
    let image_a = image(a, &to_a)?;
    let image_b = image(b, &to_b)?;
    let passed = image_a.is_zero() && image_b.is_zero();
    Ok(NonunitalCheck { image_a, image_b, passed })
}
