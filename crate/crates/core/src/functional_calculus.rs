//! Rounding almost-idempotents and almost-members to exact idempotents and invertibles.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{self, c, eye, norm, CMatrix, Tol};
use crate::random;
use crate::star_algebra::Subalg;
use crate::wedderburn::{k0_class, K0Vec, WedderburnData};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundingCert {
    pub input_defect: f64,
    pub input_norm_bound: f64,
    pub output_distance: f64,
    pub bound: f64,
    pub passed: bool,
}

/// `4 sqrt(delta) (c + 2) / (1 - sqrt(delta))`.
pub fn riesz_bound(delta: f64, c: f64) -> f64 {
    let s = delta.max(0.0).sqrt();
    4.0 * s * (c + 2.0) / (1.0 - s)
}

fn sign_newton(x: &CMatrix, tol: &Tol) -> Result<CMatrix> {
    let mut s = x.clone();
    for _ in 0..100 {
        let next = (&s + matrix::invert(&s, tol)?) * c(0.5, 0.0);
        let step = norm(&(&next - &s));
        s = next;
        if step <= 1e-14 * norm(&s).max(1.0) {
            return Ok(s);
        }
    }
    Err(Error::SpectralAmbiguity("sign iteration did not converge".into()))
}

/// Spectral idempotent for the half-plane `Re z > 1/2`.
///
/// Uses an eigendecomposition, and the Newton iteration for the matrix sign of
/// `2e - 1` when the eigenbasis is too ill-conditioned to give an idempotent.
pub fn chi(e: &CMatrix, tol: &Tol) -> Result<CMatrix> {
    let n = e.nrows();
    let scale = norm(e).max(1.0);
    let by_eig = match matrix::eig(e, tol) {
        Ok((vals, v)) => {
            if let Some(z) = vals.iter().find(|z| (z.re - 0.5).abs() <= tol.rank_rel_tol * scale) {
                return Err(Error::SpectralAmbiguity(format!("{z}")));
            }
            let vinv = matrix::invert(&v, tol)?;
            let d: Vec<_> = vals.iter().map(|z| if z.re > 0.5 { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect();
            Some(&v * matrix::diag(&d) * vinv)
        }
        Err(Error::DefectiveMatrix(_)) | Err(Error::NotInvertible(_)) => None,
        Err(other) => return Err(other),
    };
    if let Some(p) = by_eig {
        if norm(&(&p * &p - &p)) <= 1e-11 * norm(&p).max(1.0) && norm(&(&p * e - e * &p)) <= 1e-9 * scale {
            return Ok(p);
        }
    }
    let sign = sign_newton(&(e * c(2.0, 0.0) - eye(n)), tol)?;
    Ok((eye(n) + sign) * c(0.5, 0.0))
}

/// `chi(e)` for `||e^2 - e|| < 1/16` with the certified distance bound.
pub fn riesz_idempotent(e: &CMatrix, tol: &Tol) -> Result<(CMatrix, RoundingCert)> {
    matrix::ensure_finite(e)?;
    let delta = norm(&(e * e - e));
    if delta >= 1.0 / 16.0 {
        return Err(Error::DefectTooLarge(delta));
    }
    let cn = norm(e);
    let f = chi(e, tol)?;
    let dist = norm(&(&f - e));
    let bound = riesz_bound(delta, cn);
    Ok((
        f,
        RoundingCert { input_defect: delta, input_norm_bound: cn, output_distance: dist, bound, passed: dist <= bound },
    ))
}

/// Largest admissible rounding tolerance strictly below `1/(4c+6)`.
pub fn default_epsilon(c: f64) -> f64 {
    0.9 / (4.0 * c + 6.0)
}

/// A priori membership threshold for rounding idempotents of norm at most `c` to within `eps`.
///
/// Requires `delta < eps/2` and that the projected element, whose defect is at
/// most `(2c + delta + 1) delta`, rounds to within `eps/2`.
pub fn idempotent_threshold(c: f64, eps: f64) -> f64 {
    let ok = |d: f64| {
        let dd = (2.0 * c + d + 1.0) * d;
        d < eps / 2.0 && dd < 1.0 / 16.0 && riesz_bound(dd, c + d) < eps / 2.0
    };
    let (mut lo, mut hi) = (0.0, eps / 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Outcome of the rounding chain for an idempotent close to an algebra.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdempotentRounding {
    pub epsilon: f64,
    /// A priori threshold on the membership residual.
    pub threshold: f64,
    pub residual: f64,
    /// Defect of the projected element.
    pub projected_defect: f64,
    pub distance: f64,
    pub riesz: RoundingCert,
}

/// Validates the chain `e -> b -> chi(b)` for given measured quantities.
///
/// Accepts when the residual is below the a priori threshold, or when the
/// measured defect of `b` already certifies `||b - chi(b)|| < eps/2` and the
/// residual is below `eps/2`.
pub fn certify_idempotent_chain(
    c_norm: f64,
    eps: f64,
    residual: f64,
    b_defect: f64,
    b_norm: f64,
    distance: f64,
) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0 / (4.0 * c_norm + 6.0)) {
        return Err(Error::InvalidInput(format!("epsilon {eps} outside (0, 1/(4c+6))")));
    }
    let threshold = idempotent_threshold(c_norm, eps);
    let a_priori = residual < threshold;
    let measured = residual < eps / 2.0 && b_defect < 1.0 / 16.0 && riesz_bound(b_defect, b_norm) < eps / 2.0;
    if !(a_priori || measured) || distance >= eps {
        return Err(Error::NotCloseEnough { residual, threshold });
    }
    Ok(threshold)
}

/// Rounds an idempotent close to `M_k(B)` to an idempotent of `M_k(B)` and returns its class.
///
/// `b` is the algebra projected onto (pass the unitization when needed) and
/// `w` its block decomposition.
pub fn round_idempotent_in(
    e: &CMatrix,
    b: &Subalg,
    w: &WedderburnData,
    eps: Option<f64>,
    tol: &Tol,
) -> Result<(CMatrix, K0Vec, IdempotentRounding)> {
    matrix::ensure_finite(e)?;
    let cn = norm(e).max(1e-12);
    let eps = eps.unwrap_or_else(|| default_epsilon(cn));
    let proj = b.space().project_blocks(e);
    let residual = norm(&(e - &proj));
    let b_defect = norm(&(&proj * &proj - &proj));
    if b_defect >= 1.0 / 16.0 {
        return Err(Error::NotCloseEnough { residual, threshold: idempotent_threshold(cn, eps) });
    }
    let (f, riesz) = riesz_idempotent(&proj, tol)?;
    let distance = norm(&(e - &f));
    let threshold = certify_idempotent_chain(cn, eps, residual, b_defect, norm(&proj), distance)?;
    let class = k0_class(&f, w)?;
    Ok((f, class, IdempotentRounding { epsilon: eps, threshold, residual, projected_defect: b_defect, distance, riesz }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvertibleRounding {
    /// `c >= ||u^-1||`.
    pub c: f64,
    pub threshold: f64,
    pub residual: f64,
    /// `||1 - u^-1 v||`, certified below 1/4.
    pub contraction: f64,
    pub inverse_norm: f64,
}

/// Validates `||1 - u^-1 v|| < 1/4` and `||v^-1|| <= 2c` for a rounded invertible.
pub fn certify_invertible(c_inv: f64, residual: f64, contraction: f64, inverse_norm: f64) -> Result<f64> {
    let threshold = 1.0 / (4.0 * c_inv);
    if residual >= threshold {
        return Err(Error::NotCloseEnough { residual, threshold });
    }
    if contraction >= 0.25 {
        return Err(Error::RoundingUnstable(format!("||1 - u^-1 v|| = {contraction}")));
    }
    if inverse_norm > 2.0 * c_inv * (1.0 + 1e-9) {
        return Err(Error::RoundingUnstable(format!("||v^-1|| = {inverse_norm} exceeds 2c")));
    }
    Ok(threshold)
}

/// Nearest element of `M_k(B)` to an invertible `u`, certified invertible.
pub fn round_invertible_in(u: &CMatrix, b: &Subalg, tol: &Tol) -> Result<(CMatrix, InvertibleRounding)> {
    let uinv = matrix::invert(u, tol)?;
    let c_inv = norm(&uinv);
    let v = b.space().project_blocks(u);
    let residual = norm(&(u - &v));
    let contraction = norm(&(eye(u.nrows()) - &uinv * &v));
    let vinv = matrix::invert(&v, tol).map_err(|e| Error::RoundingUnstable(e.to_string()))?;
    let inverse_norm = norm(&vinv);
    let threshold = certify_invertible(c_inv, residual, contraction, inverse_norm)?;
    Ok((v, InvertibleRounding { c: c_inv, threshold, residual, contraction, inverse_norm }))
}

/// `||1 - v^-1 v'|| < 1`: the two invertibles lie on a common exponential path.
pub fn same_component(v: &CMatrix, v2: &CMatrix, tol: &Tol) -> Result<bool> {
    let vinv = matrix::invert(v, tol)?;
    Ok(norm(&(eye(v.nrows()) - vinv * v2)) < 1.0)
}

/// `||f - f'|| < 1/||2f - 1||`: the two idempotents are similar.
pub fn similar_idempotents(f: &CMatrix, f2: &CMatrix) -> bool {
    let r = norm(&(f * c(2.0, 0.0) - eye(f.nrows())));
    norm(&(f - f2)) < 1.0 / r
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RieszRow {
    pub seed: u64,
    pub n: usize,
    pub delta: f64,
    pub c: f64,
    pub distance: f64,
    pub bound: f64,
    pub passed: bool,
}

/// Idempotent of rank `k` in `M_n` with norm `target >= 1` (or 0/1 when degenerate).
pub fn skew_idempotent(r: &mut random::Rng64, n: usize, k: usize, target: f64) -> CMatrix {
    let mut p = matrix::zeros(n, n);
    for i in 0..k {
        p[(i, i)] = c(1.0, 0.0);
    }
    if k > 0 && k < n && target > 1.0 {
        let t = random::gaussian(r, k, n - k);
        let t = &t * c((target * target - 1.0).sqrt() / norm(&t).max(1e-300), 0.0);
        p.view_mut((0, k), (k, n - k)).copy_from(&t);
    }
    let u = random::unitary(r, n);
    &u * p * u.adjoint()
}

/// Perturbation of `p` along `g` scaled so that the idempotent defect equals `delta`.
pub fn perturb_to_defect(p: &CMatrix, g: &CMatrix, delta: f64) -> CMatrix {
    let defect = |s: f64| {
        let e = p + g * c(s, 0.0);
        norm(&(&e * &e - &e))
    };
    let mut hi = delta;
    while defect(hi) < delta && hi < 1e6 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if defect(mid) < delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    p + g * c(0.5 * (lo + hi), 0.0)
}

/// One randomized almost-idempotent draw: `n <= 6`, log-uniform defect in `[1e-6, 1e-2]`, norm target in `[1, 5]`.
pub fn riesz_draw(seed: u64, index: u64, tol: &Tol) -> Result<RieszRow> {
    let s = random::substream(seed, index);
    let mut r = random::rng(s);
    let n = 1 + random::below(&mut r, 6);
    let k = random::below(&mut r, n + 1);
    let log_delta = random::uniform(&mut r, (1e-6f64).ln(), (1e-2f64).ln());
    let target_delta = log_delta.exp();
    let target_c = random::uniform(&mut r, 1.0, 4.5);
    let p = skew_idempotent(&mut r, n, k, target_c);
    let g = random::gaussian(&mut r, n, n);
    let g = &g * c(1.0 / norm(&g).max(1e-300), 0.0);
    let e = perturb_to_defect(&p, &g, target_delta);
    let (_, cert) = riesz_idempotent(&e, tol)?;
    Ok(RieszRow {
        seed: s,
        n,
        delta: cert.input_defect,
        c: cert.input_norm_bound,
        distance: cert.output_distance,
        bound: cert.bound,
        passed: cert.passed,
    })
}
