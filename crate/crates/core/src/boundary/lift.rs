//! Lifts `v` of an invertible `u` along a pair of subalgebras.

use serde::Serialize;

use super::ideal::check_contraction;
use super::region::{round_idempotent, Region};
use crate::elem::{j_inv, j_mat, product, top_projection, x_mat, y_mat, Elem};
use crate::error::{Error, Result};
use crate::matrix::{c, Tol};
use crate::wedderburn::K0Vec;

/// Measured lift conditions of a pair `(u, v)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiftCert {
    /// Size of `u` in rows of the ambient model.
    pub n: usize,
    pub u_norm: f64,
    pub u_inv_norm: f64,
    pub v_norm: f64,
    pub v_inv_norm: f64,
    /// `v` against `M_2n(D~)`.
    pub in_d: f64,
    /// `v diag(u^-1, u)` against `M_2n(C~)`.
    pub in_c: f64,
    /// `v diag(1, 0) v^-1` against `M_2n((C ∩ D)~)`.
    pub in_cd: f64,
    /// `v v^-1 - 1`, a sanity check on the supplied inverse.
    pub inverse_residual: f64,
    /// Class of the rounded conjugated projection minus `[diag(1, 0)]`.
    pub class: Option<K0Vec>,
    /// Why rounding failed, when it did.
    pub rounding_error: Option<String>,
    /// The class has no component on the adjoined unit.
    pub augmentation_ok: bool,
}

impl LiftCert {
    pub fn c(&self) -> f64 {
        self.v_norm.max(self.v_inv_norm)
    }

    pub fn delta(&self) -> f64 {
        self.in_d.max(self.in_c).max(self.in_cd)
    }

    pub fn valid_at(&self, delta: f64, c: f64) -> bool {
        self.c() <= c && self.delta() <= delta && self.class.is_some() && self.augmentation_ok
    }
}

#[derive(Debug, Clone)]
pub struct Lift<E: Elem> {
    pub u: E,
    pub uinv: E,
    pub v: E,
    pub vinv: E,
    pub cert: LiftCert,
}

/// The three algebras a lift is measured against.
pub struct Pair<'a, R: Region> {
    pub c: &'a R,
    pub d: &'a R,
    pub cd: &'a R,
}

impl<R: Region> Clone for Pair<'_, R> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<R: Region> Copy for Pair<'_, R> {}

/// Measures all lift conditions for given `u`, `v` and their inverses.
pub fn certify_lift<R: Region>(
    pair: Pair<'_, R>,
    u: &R::E,
    uinv: &R::E,
    v: &R::E,
    vinv: &R::E,
    tol: &Tol,
) -> Result<LiftCert> {
    let n = u.dim();
    if v.dim() != 2 * n {
        return Err(Error::InvalidInput(format!("lift of size {} for u of size {n}", v.dim())));
    }
    let e0 = top_projection(u, n);
    let ev = v.mul(&e0).mul(vinv);
    let twisted = v.mul(&uinv.dsum(u));
    let (class, rounding_error) = match round_idempotent(pair.cd, &ev, None, tol) {
        Ok((_, k, _)) => (Some(k.sub(&pair.cd.k0(&e0)?)?), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let augmentation_ok = class.as_ref().is_some_and(|k| k.augmentation_entry() == 0);
    Ok(LiftCert {
        n,
        u_norm: u.norm(),
        u_inv_norm: uinv.norm(),
        v_norm: v.norm(),
        v_inv_norm: vinv.norm(),
        in_d: pair.d.distance(v, true)?,
        in_c: pair.c.distance(&twisted, true)?,
        in_cd: pair.cd.distance(&ev, true)?,
        inverse_residual: v.mul(vinv).one_minus().norm(),
        class,
        rounding_error,
        augmentation_ok,
    })
}

/// `a = h + (1 - h) u` and `b = h + u^-1 (1 - h)` with `h` amplified to the size of `u`.
pub fn cut<E: Elem>(u: &E, uinv: &E, h: &E) -> (E, E) {
    let h = h.amp(u.dim() / h.dim());
    let one_h = h.one_minus();
    (h.add(&one_h.mul(u)), h.add(&uinv.mul(&one_h)))
}

/// `X(a) Y(-b) X(a) J`.
pub fn lift_from_factors<E: Elem>(a: &E, b: &E) -> E {
    let n = a.dim();
    product(&[x_mat(a), y_mat(&b.scale(c(-1.0, 0.0))), x_mat(a), j_mat(a, n)])
}

/// Closed form `[[a(2 - ba), ab - 1], [1 - ba, b]]` of the four-factor product.
pub fn lift_closed_form<E: Elem>(a: &E, b: &E) -> E {
    let n = a.dim();
    let one = a.identity_like(n);
    let ab = a.mul(b);
    let ba = b.mul(a);
    let two = one.scale(c(2.0, 0.0));
    E::block2(&a.mul(&two.sub(&ba)), &ab.sub(&one), &one.sub(&ba), b)
}

/// Closed form `[[b, 1 - ba], [ab - 1, a(2 - ba)]]` of `J^-1 X(-a) Y(b) X(-a)`.
pub fn lift_inverse_closed_form<E: Elem>(a: &E, b: &E) -> E {
    let n = a.dim();
    let one = a.identity_like(n);
    let ab = a.mul(b);
    let ba = b.mul(a);
    let two = one.scale(c(2.0, 0.0));
    E::block2(b, &one.sub(&ba), &ab.sub(&one), &a.mul(&two.sub(&ba)))
}

/// Reversed factor product for the inverse.
pub fn lift_inverse_from_factors<E: Elem>(a: &E, b: &E) -> E {
    let n = a.dim();
    let ma = a.scale(c(-1.0, 0.0));
    product(&[j_inv(a, n), x_mat(&ma), y_mat(b), x_mat(&ma)])
}

/// Builds the explicit lift of `u` for the ideal structure `(h, C, D)`.
pub fn build_lift_v<R: Region>(pair: Pair<'_, R>, u: &R::E, h: &R::E, tol: &Tol) -> Result<Lift<R::E>> {
    check_contraction(h)?;
    if u.dim() % h.dim() != 0 {
        return Err(Error::InvalidInput("u is not over the algebra of h".into()));
    }
    let bp = u.basepoint_defect();
    if bp > 1e-9 {
        return Err(Error::NeedsHomotopyNormalization(format!("u differs from 1 at the basepoint by {bp:e}")));
    }
    let uinv = u.inv(tol)?;
    let (a, b) = cut(u, &uinv, h);
    let v = lift_from_factors(&a, &b);
    let vinv = lift_inverse_closed_form(&a, &b);
    let cert = certify_lift(pair, u, &uinv, &v, &vinv, tol)?;
    Ok(Lift { u: u.clone(), uinv, v, vinv, cert })
}

/// Outcome of the cut estimate for one `(u, h)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvCut {
    pub residual: f64,
    pub delta: f64,
    pub c: f64,
    pub bound: f64,
    pub passed: bool,
}

/// Distance of `ab - 1` and `ba - 1` from `(y + z) h (1 - h)`, against `2(c^2 + c) delta`.
pub fn check_inv_cut<E: Elem>(u: &E, h: &E, tol: &Tol) -> Result<InvCut> {
    check_contraction(h)?;
    let uinv = u.inv(tol)?;
    let h = h.amp(u.dim() / h.dim());
    let y = u.sub(&u.identity_like(u.dim()));
    let z = uinv.sub(&uinv.identity_like(u.dim()));
    let (a, b) = cut(u, &uinv, &h);
    let target = y.add(&z).mul(&h).mul(&h.one_minus());
    let one = u.identity_like(u.dim());
    let r1 = a.mul(&b).sub(&one).sub(&target).norm();
    let r2 = b.mul(&a).sub(&one).sub(&target).norm();
    let comm = |x: &E| {
        let nx = x.norm();
        if nx == 0.0 {
            0.0
        } else {
            h.mul(x).sub(&x.mul(&h)).norm() / nx
        }
    };
    let delta = comm(&y).max(comm(&z));
    let cc = y.norm().max(z.norm());
    let bound = 2.0 * (cc * cc + cc) * delta;
    let residual = r1.max(r2);
    Ok(InvCut { residual, delta, c: cc, bound, passed: residual <= bound * (1.0 + 1e-9) + 1e-13 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::region::MatRegion;
    use crate::loop_algebra::{arc_ideal, bump, scalar_loop, LoopAlg};
    use crate::matrix::{approx_eq, dsum, eye, real, CMatrix};
    use crate::random;
    use crate::star_algebra::Subalg;
    use std::f64::consts::PI;

    fn full(n: usize) -> MatRegion {
        MatRegion::new(Subalg::full(n), &Tol::default(), 0).unwrap()
    }

    #[test]
    fn endpoints_of_the_cut() {
        let tol = Tol::default();
        let r = full(2);
        let pair = Pair { c: &r, d: &r, cd: &r };
        let u = real(2, 2, &[2.0, 1.0, 0.5, 1.0]);
        let l1 = build_lift_v(pair, &u, &eye(2), &tol).unwrap();
        assert!(approx_eq(&l1.v, &eye(4), 1e-12));
        let l0 = build_lift_v(pair, &u, &CMatrix::zeros(2, 2), &tol).unwrap();
        assert!(approx_eq(&l0.v, &dsum(&u, &l0.uinv), 1e-12));
        assert_eq!(l0.cert.class.as_ref().unwrap().entries, vec![0]);
    }

    #[test]
    fn closed_forms_match_factor_products() {
        let mut r = random::rng(11);
        for _ in 0..10 {
            let a = random::gaussian(&mut r, 3, 3);
            let b = random::gaussian(&mut r, 3, 3);
            assert!(approx_eq(&lift_from_factors(&a, &b), &lift_closed_form(&a, &b), 1e-10));
            assert!(approx_eq(&lift_inverse_from_factors(&a, &b), &lift_inverse_closed_form(&a, &b), 1e-10));
            let prod = lift_from_factors(&a, &b) * lift_inverse_closed_form(&a, &b);
            assert!(approx_eq(&prod, &eye(6), 1e-9));
        }
    }

    #[test]
    fn inv_cut_scalar_h_is_exact() {
        let tol = Tol::default();
        let u = real(2, 2, &[1.5, 0.3, -0.2, 0.8]);
        let h = eye(2) * c(0.3, 0.0);
        let r = check_inv_cut(&u, &h, &tol).unwrap();
        assert!(r.residual < 1e-14 && r.passed);
    }

    #[test]
    fn basepoint_must_be_one() {
        let tol = Tol::default();
        let a = LoopAlg::new(64, 1).unwrap();
        let u = a.power_z(1).scale(c(0.0, 1.0));
        let h = a.constant(&eye(1));
        let pair = Pair { c: &a, d: &a, cd: &a };
        assert!(matches!(build_lift_v(pair, &u, &h, &tol), Err(Error::NeedsHomotopyNormalization(_))));
    }

    #[test]
    fn circle_split_lift_is_exact() {
        let tol = Tol::default();
        let a = LoopAlg::new(720, 1).unwrap();
        let cc = arc_ideal(&a, (-0.6 * PI, 0.6 * PI)).unwrap();
        let d = arc_ideal(&a, (0.4 * PI, 1.6 * PI)).unwrap();
        let i = cc.intersect(&d).unwrap();
        let h = scalar_loop(&bump(&a, (-0.4 * PI, 0.4 * PI), 0.2 * PI).unwrap(), 1);
        let lift = build_lift_v(Pair { c: &cc, d: &d, cd: &i }, &a.power_z(1), &h, &tol).unwrap();
        assert!(lift.cert.valid_at(0.15, 3.0), "{:?}", lift.cert);
        assert!(lift.cert.delta() < 1e-12);
    }
}
