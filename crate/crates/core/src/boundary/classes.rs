//! Boundary classes of lifts and the constructions that produce or consume them.

use serde::Serialize;

use super::lift::{certify_lift, Lift, Pair};
use super::region::{membership, round_idempotent, round_invertible, Membership, Region};
use crate::elem::{top_projection, Elem};
use crate::error::{Error, Result};
use crate::functional_calculus::IdempotentRounding;
use crate::loop_algebra::K1Vec;
use crate::matrix::Tol;
use crate::wedderburn::K0Vec;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryClass {
    /// Class in `K_0(C ∩ D)`.
    pub class: K0Vec,
    /// Image in `K_0(C)`; zero by exactness.
    pub push_c: K0Vec,
    /// Image in `K_0(D)`; zero by exactness.
    pub push_d: K0Vec,
    pub rounding: IdempotentRounding,
}

/// Rounds `v diag(1, 0) v^-1` into `(C ∩ D)~` and subtracts `[diag(1, 0)]`.
///
/// Fails with `ExactnessViolation` when the class does not vanish in `C` and `D`.
pub fn boundary_class<R: Region>(
    pair: Pair<'_, R>,
    lift: &Lift<R::E>,
    eps: Option<f64>,
    tol: &Tol,
) -> Result<BoundaryClass> {
    let (class, push_c, push_d, rounding, _) = boundary_parts(pair, &lift.v, &lift.vinv, eps, tol)?;
    if !push_c.is_zero() || !push_d.is_zero() {
        return Err(Error::ExactnessViolation(format!(
            "images {:?} in C and {:?} in D",
            push_c.entries, push_d.entries
        )));
    }
    Ok(BoundaryClass { class, push_c, push_d, rounding })
}

type Parts<E> = (K0Vec, K0Vec, K0Vec, IdempotentRounding, E);

fn boundary_parts<R: Region>(
    pair: Pair<'_, R>,
    v: &R::E,
    vinv: &R::E,
    eps: Option<f64>,
    tol: &Tol,
) -> Result<Parts<R::E>> {
    let n = v.dim() / 2;
    let e0 = top_projection(v, n);
    let ev = v.mul(&e0).mul(vinv);
    let (f, k, rounding) = round_idempotent(pair.cd, &ev, eps, tol)?;
    let class = k.sub(&pair.cd.k0(&e0)?)?;
    let push_c = pair.c.k0(&f)?.sub(&pair.c.k0(&e0)?)?;
    let push_d = pair.d.k0(&f)?.sub(&pair.d.k0(&e0)?)?;
    Ok((class, push_c, push_d, rounding, f))
}

/// The lift `v` of `u = (1 - p) u_C^-1 + p u_D^-1` built from similarities `p ~ q` in `C` and `D`.
pub fn iota_lift<R: Region>(pair: Pair<'_, R>, p: &R::E, q: &R::E, tol: &Tol) -> Result<Lift<R::E>> {
    if p.dim() != q.dim() {
        return Err(Error::InvalidInput("idempotents of different sizes".into()));
    }
    let kp = pair.cd.k0(p)?;
    let kq = pair.cd.k0(q)?;
    let witness = |r: &R| {
        r.similarity(p, q, tol).map_err(|e| match e {
            Error::NotEquivalent(m) | Error::NotAClass(m) | Error::NoWitness(m) => Error::IotaNotZero(format!(
                "classes {:?} and {:?} of C ∩ D: {m}",
                kp.entries, kq.entries
            )),
            other => other,
        })
    };
    let uc = witness(pair.c)?;
    let ud = witness(pair.d)?;
    let uc_inv = uc.inv(tol)?;
    let ud_inv = ud.inv(tol)?;
    let n = p.dim();
    let one = p.identity_like(n);
    let one_p = one.sub(p);
    let one_q = one.sub(q);
    let p_m1 = p.sub(&one);
    let u = one_p.mul(&uc_inv).add(&p.mul(&ud_inv));
    let uinv = uc.mul(&one_p).add(&ud.mul(p));
    let v = R::E::block2(&p.mul(&ud_inv), &p_m1, &one_q, &ud.mul(p));
    let vinv = R::E::block2(&ud.mul(p), &one_q, &p_m1, &p.mul(&ud_inv));
    let cert = certify_lift(pair, &u, &uinv, &v, &vinv, tol)?;
    Ok(Lift { u, uinv, v, vinv, cert })
}

/// Interleaving permutation taking `(top_1, bot_1, ..., top_m, bot_m)` to `(top_1..top_m, bot_1..bot_m)`.
pub fn interleave(sizes: &[usize]) -> Vec<usize> {
    let mut offsets = vec![];
    let mut acc = 0;
    for &s in sizes {
        offsets.push(acc);
        acc += 2 * s;
    }
    let mut perm = Vec::with_capacity(acc);
    for (&o, &s) in offsets.iter().zip(sizes) {
        perm.extend(o..o + s);
    }
    for (&o, &s) in offsets.iter().zip(sizes) {
        perm.extend(o + s..o + 2 * s);
    }
    perm
}

/// Block sum of lifts: `u = ⊕ u_i`, `v = s (⊕ v_i) s^-1`.
pub fn boxplus<R: Region>(pair: Pair<'_, R>, lifts: &[Lift<R::E>], tol: &Tol) -> Result<Lift<R::E>> {
    let first = lifts.first().ok_or_else(|| Error::InvalidInput("empty list of lifts".into()))?;
    let sum = |f: &dyn Fn(&Lift<R::E>) -> &R::E| {
        lifts[1..].iter().fold(f(first).clone(), |acc, l| acc.dsum(f(l)))
    };
    let perm = interleave(&lifts.iter().map(|l| l.u.dim()).collect::<Vec<_>>());
    let u = sum(&|l| &l.u);
    let uinv = sum(&|l| &l.uinv);
    let v = sum(&|l| &l.v).permute(&perm);
    let vinv = sum(&|l| &l.vinv).permute(&perm);
    let cert = certify_lift(pair, &u, &uinv, &v, &vinv, tol)?;
    Ok(Lift { u, uinv, v, vinv, cert })
}

/// `(u^-1, v^-1)`, re-certified.
pub fn inverse_lift<R: Region>(pair: Pair<'_, R>, lift: &Lift<R::E>, tol: &Tol) -> Result<Lift<R::E>> {
    let cert = certify_lift(pair, &lift.uinv, &lift.u, &lift.vinv, &lift.v, tol)?;
    Ok(Lift { u: lift.uinv.clone(), uinv: lift.u.clone(), v: lift.vinv.clone(), vinv: lift.v.clone(), cert })
}

/// `x` in `D~` and `(u ⊕ 1_l) x^-1` in `C~` recovering `u` from a lift with vanishing class.
#[derive(Debug, Clone)]
pub struct SigmaWitness<E: Elem> {
    pub l: usize,
    pub x: E,
    pub factor_c: E,
    pub cert: SigmaCert,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaCert {
    pub l: usize,
    pub x_in_d: Membership,
    pub factor_in_c: Membership,
    /// Off-diagonal blocks of `w v`.
    pub off_diagonal: f64,
    pub k1_c: K1Vec,
    pub k1_d: K1Vec,
    /// Total winding of `u` (zero for matrices).
    pub winding_u: i64,
    /// The factor classes add up to the class of `u`.
    pub recovered: bool,
}

/// Splits `u` as a product of invertibles near `C~` and `D~` using a lift with zero boundary class.
pub fn sigma_witness<R: Region>(
    pair: Pair<'_, R>,
    lift: &Lift<R::E>,
    eps: f64,
    tol: &Tol,
) -> Result<SigmaWitness<R::E>> {
    let (class, _, _, _, f) = boundary_parts(pair, &lift.v, &lift.vinv, None, tol)?;
    if !class.is_zero() {
        return Err(Error::NoWitness(format!("boundary class {:?} is not zero", class.entries)));
    }
    let n = lift.u.dim();
    let e0 = top_projection(&lift.v, n);
    let w = pair.cd.similarity(&f, &e0, tol).map_err(|e| Error::NoWitness(e.to_string()))?;
    let wv = w.mul(&lift.v);
    let (x, b, cc, _) = wv.split2(n);
    let off_diagonal = b.norm().max(cc.norm());
    let xinv = x.inv(tol).map_err(|e| Error::ReconstructionFailed(format!("x not invertible: {e}")))?;
    let factor_c = lift.u.mul(&xinv);
    let x_in_d = membership(pair.d, &x, eps)?;
    let factor_in_c = membership(pair.c, &factor_c, eps)?;
    if !x_in_d.passed || !factor_in_c.passed {
        return Err(Error::ReconstructionFailed(format!(
            "memberships {:e} (x in D) and {:e} (u x^-1 in C) above {eps:e}",
            x_in_d.residual, factor_in_c.residual
        )));
    }
    let (rc, _) = round_invertible(pair.c, &factor_c, tol)?;
    let (rd, _) = round_invertible(pair.d, &x, tol)?;
    let k1_c = pair.c.k1(&rc)?;
    let k1_d = pair.d.k1(&rd)?;
    let winding_u = lift.u.winding()?;
    let recovered = k1_c.iter().sum::<i64>() + k1_d.iter().sum::<i64>() == winding_u;
    let cert = SigmaCert { l: 0, x_in_d, factor_in_c, off_diagonal, k1_c, k1_d, winding_u, recovered };
    Ok(SigmaWitness { l: 0, x, factor_c, cert })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::lift::build_lift_v;
    use crate::boundary::region::MatRegion;
    use crate::matrix::{approx_eq, dsum, eye, kron, rotation, unit, CMatrix};
    use crate::star_algebra::Subalg;
    use std::f64::consts::PI;

    pub(crate) struct Twisted {
        pub c: MatRegion,
        pub d: MatRegion,
        pub cd: MatRegion,
        pub p: CMatrix,
        pub q: CMatrix,
    }

    pub(crate) fn twisted() -> Twisted {
        let tol = Tol::default();
        let ca = Subalg::left_tensor_factor(2, 2);
        let w = kron(&unit(2, 0, 0), &eye(2)) + kron(&unit(2, 1, 1), &rotation(PI / 5.0));
        let da = ca.conjugated(&w, &tol).unwrap();
        let cda = ca.intersect(&da, &tol).unwrap();
        Twisted {
            c: MatRegion::new(ca, &tol, 1).unwrap(),
            d: MatRegion::new(da, &tol, 2).unwrap(),
            cd: MatRegion::new(cda, &tol, 3).unwrap(),
            p: kron(&unit(2, 0, 0), &eye(2)),
            q: kron(&unit(2, 1, 1), &eye(2)),
        }
    }

    /// Normalized ranks of `e` against the minimal projections `P` and `Q`.
    fn rank_oracle(e: &CMatrix, p: &CMatrix, q: &CMatrix) -> (i64, i64) {
        let k = e.nrows() / 4;
        let pk = kron(&eye(k), p);
        let qk = kron(&eye(k), q);
        let rp = (&pk * e * &pk).trace().re / 2.0;
        let rq = (&qk * e * &qk).trace().re / 2.0;
        (rp.round() as i64, rq.round() as i64)
    }

    #[test]
    fn twisted_pair_boundary() {
        let tol = Tol::default();
        let t = twisted();
        let pair = Pair { c: &t.c, d: &t.d, cd: &t.cd };
        assert_eq!(t.cd.alg.dim(), 2);
        let lift = iota_lift(pair, &t.p, &t.q, &tol).unwrap();
        assert!(lift.cert.delta() < 1e-10, "{:?}", lift.cert);
        let b = boundary_class(pair, &lift, None, &tol).unwrap();
        let ev = &lift.v * top_projection(&lift.v, 4) * &lift.vinv;
        let (rp, rq) = rank_oracle(&ev, &t.p, &t.q);
        let (sp, sq) = rank_oracle(&top_projection(&lift.v, 4), &t.p, &t.q);
        let oracle = (rp - sp, rq - sq);
        assert_eq!(oracle, (1, -1));
        let mut entries = b.class.entries.clone();
        let p_first = t.cd.k0(&t.p).unwrap().entries;
        if p_first[0] == 0 {
            entries.reverse();
        }
        assert_eq!((entries[0], entries[1]), oracle);
        let inv = inverse_lift(pair, &lift, &tol).unwrap();
        let bi = boundary_class(pair, &inv, None, &tol).unwrap();
        assert_eq!(bi.class, b.class.neg());
    }

    #[test]
    fn twisted_pair_sums() {
        let tol = Tol::default();
        let t = twisted();
        let pair = Pair { c: &t.c, d: &t.d, cd: &t.cd };
        let lift = iota_lift(pair, &t.p, &t.q, &tol).unwrap();
        let b = boundary_class(pair, &lift, None, &tol).unwrap().class;
        let two = boxplus(pair, &[lift.clone(), lift.clone()], &tol).unwrap();
        assert_eq!(boundary_class(pair, &two, None, &tol).unwrap().class, b.scale(2));
        let inv = inverse_lift(pair, &lift, &tol).unwrap();
        let zero = boxplus(pair, &[lift.clone(), inv], &tol).unwrap();
        assert!(boundary_class(pair, &zero, None, &tol).unwrap().class.is_zero());
        let single = boxplus(pair, std::slice::from_ref(&lift), &tol).unwrap();
        assert!(approx_eq(&single.v, &lift.v, 0.0));
        assert!(matches!(sigma_witness(pair, &lift, 0.05, &tol), Err(Error::NoWitness(_))));
    }

    #[test]
    fn iota_lift_requires_equal_images() {
        let tol = Tol::default();
        let t = twisted();
        let pair = Pair { c: &t.c, d: &t.d, cd: &t.cd };
        let lift = iota_lift(pair, &t.p, &t.p, &tol).unwrap();
        assert!(boundary_class(pair, &lift, None, &tol).unwrap().class.is_zero());
        let zero = CMatrix::zeros(4, 4);
        assert!(matches!(iota_lift(pair, &t.p, &zero, &tol), Err(Error::IotaNotZero(_))));
    }

    #[test]
    fn iota_lift_inverse_formula() {
        let tol = Tol::default();
        let t = twisted();
        let pair = Pair { c: &t.c, d: &t.d, cd: &t.cd };
        let lift = iota_lift(pair, &t.p, &t.q, &tol).unwrap();
        assert!(approx_eq(&(&lift.v * &lift.vinv), &eye(8), 1e-10));
        assert!(approx_eq(&(&lift.u * &lift.uinv), &eye(4), 1e-10));
        let ev = &lift.v * top_projection(&lift.v, 4) * &lift.vinv;
        assert!(approx_eq(&ev, &dsum(&t.p, &(eye(4) - &t.q)), 1e-10));
    }

    #[test]
    fn sigma_witness_for_trivial_cut() {
        let tol = Tol::default();
        let t = twisted();
        let pair = Pair { c: &t.c, d: &t.d, cd: &t.cd };
        let w = kron(&unit(2, 0, 0), &eye(2)) + kron(&unit(2, 1, 1), &rotation(PI / 5.0));
        let u = &w * kron(&rotation(0.4), &eye(2)) * w.adjoint();
        let h = CMatrix::zeros(4, 4);
        let lift = build_lift_v(pair, &u, &h, &tol).unwrap();
        let s = sigma_witness(pair, &lift, 0.05, &tol).unwrap();
        assert!(approx_eq(&s.x, &u, 1e-10));
        assert!(approx_eq(&s.factor_c, &eye(4), 1e-10));
    }

    #[test]
    fn circle_split_sigma_witness() {
        use crate::loop_algebra::{arc_ideal, bump, scalar_loop, LoopAlg};
        let tol = Tol::default();
        let a = LoopAlg::new(720, 1).unwrap();
        let cc = arc_ideal(&a, (-0.6 * PI, 0.6 * PI)).unwrap();
        let d = arc_ideal(&a, (0.4 * PI, 1.6 * PI)).unwrap();
        let i = cc.intersect(&d).unwrap();
        let h = scalar_loop(&bump(&a, (-0.4 * PI, 0.4 * PI), 0.2 * PI).unwrap(), 1);
        let pair = Pair { c: &cc, d: &d, cd: &i };
        let lift = build_lift_v(pair, &a.power_z(1), &h, &tol).unwrap();
        let b = boundary_class(pair, &lift, None, &tol).unwrap();
        assert!(b.class.is_zero());
        let s = sigma_witness(pair, &lift, 0.05, &tol).unwrap();
        assert!(s.cert.x_in_d.residual <= 0.05 && s.cert.factor_in_c.residual <= 0.05, "{:?}", s.cert);
        assert!(s.cert.recovered, "{:?}", s.cert);
    }
}
