//! Homotopies of invertibles: discretization, Whitehead splittings, and reconstruction over `C ∩ D`.

use serde::Serialize;

use super::ideal::check_contraction;
use super::lift::Pair;
use super::region::Region;
use crate::elem::{j_inv, j_mat, product, x_mat, y_mat, Elem};
use crate::error::{Error, Result};
use crate::loop_algebra::{K1Vec, LoopElem};
use crate::matrix::{self, c, CMatrix, Tol, C64};

fn block_sum<E: Elem>(parts: &[E]) -> E {
    parts[1..].iter().fold(parts[0].clone(), |acc, p| acc.dsum(p))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscretizationCert {
    /// Number of steps `m`.
    pub steps: usize,
    pub max_step: f64,
    pub max_inverse_norm: f64,
    /// `|| u_0 ⊕ 1 - (1 ⊕ a ⊕ a^-1 ⊕ 1)(b ⊕ b^-1) ||`.
    pub defect: f64,
    /// `max_i ||u_i - u_{i+1}|| ||u_i^-1||`.
    pub bound: f64,
}

#[derive(Debug, Clone)]
pub struct Discretization<E: Elem> {
    /// `diag(u_1^-1, ..., u_m^-1)`.
    pub a: E,
    pub a_inv: E,
    /// `diag(u_0, ..., u_m)`.
    pub b: E,
    pub b_inv: E,
    pub cert: DiscretizationCert,
}

/// Turns a sampled path `u_0, ..., u_m = 1` into the block invertibles `a` and `b`.
///
/// With `delta` given, every step must be shorter than `delta`.
pub fn discretize_homotopy<E: Elem>(path: &[E], delta: Option<f64>, tol: &Tol) -> Result<Discretization<E>> {
    if path.len() < 2 {
        return Err(Error::InvalidInput("a path needs at least two samples".into()));
    }
    let n = path[0].dim();
    if path.iter().any(|u| u.dim() != n) {
        return Err(Error::InvalidInput("path samples of different sizes".into()));
    }
    let last = path.last().unwrap();
    let end = last.one_minus().norm();
    if end > 1e-9 {
        return Err(Error::InvalidInput(format!("path ends {end:e} away from the identity")));
    }
    let inverses: Vec<E> = path.iter().map(|u| u.inv(tol)).collect::<Result<_>>()?;
    let m = path.len() - 1;
    let mut max_step: f64 = 0.0;
    let mut bound: f64 = 0.0;
    for i in 0..m {
        let s = path[i].sub(&path[i + 1]).norm();
        if let Some(d) = delta {
            if s >= d {
                return Err(Error::PathTooCoarse(i));
            }
        }
        max_step = max_step.max(s);
        bound = bound.max(s * inverses[i].norm());
    }
    let max_inverse_norm = inverses.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let a = block_sum(&inverses[1..]);
    let a_inv = block_sum(&path[1..]);
    let b = block_sum(path);
    let b_inv = block_sum(&inverses);
    let one_n = path[0].identity_like(n);
    let lhs = path[0].dsum(&path[0].identity_like((2 * m + 1) * n));
    let rhs = block_sum(&[one_n.clone(), a.clone(), a_inv.clone(), one_n]).mul(&b.dsum(&b_inv));
    let defect = lhs.sub(&rhs).norm();
    if defect > bound * (1.0 + 1e-9) + 1e-12 {
        return Err(Error::ReconstructionFailed(format!("discretization defect {defect:e} above {bound:e}")));
    }
    Ok(Discretization { a, a_inv, b, b_inv, cert: DiscretizationCert { steps: m, max_step, max_inverse_norm, defect, bound } })
}

/// The factors `(v^C_t, v^D_t)` of `diag(a, a^-1)` for the cut `h`.
pub fn whitehead_pair_at<E: Elem>(a: &E, a_inv: &E, h: &E, t: f64) -> (E, E) {
    let n = a.dim();
    let h = h.amp(n / h.dim());
    let one = a.identity_like(n);
    let s = c(1.0 - t, 0.0);
    let x = a.sub(&one);
    let y = a_inv.sub(&one);
    let one_h = h.one_minus();
    let xc = one.add(&h.mul(&x).scale(s));
    let xd = one_h.mul(&x).scale(s);
    let yc = one.add(&h.mul(&y).scale(s));
    let yd = one_h.mul(&y).scale(s);
    let neg = c(-1.0, 0.0);
    let vc = product(&[
        x_mat(&xd),
        x_mat(&xc),
        y_mat(&yc.scale(neg)),
        x_mat(&xc),
        j_mat(a, n),
        x_mat(&xd.scale(neg)),
    ]);
    let vd = product(&[
        x_mat(&xd),
        j_inv(a, n),
        x_mat(&xc.scale(neg)),
        y_mat(&yd.scale(neg)),
        x_mat(&xc),
        x_mat(&xd),
        j_mat(a, n),
    ]);
    (vc, vd)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WhiteheadCert {
    /// Number of parameter intervals `T`.
    pub steps: usize,
    /// `max(||a||, ||a^-1||)`.
    pub c: f64,
    pub norm_bound: f64,
    pub max_norm: f64,
    pub max_in_c: f64,
    pub max_in_d: f64,
    pub eps: f64,
    /// `|| v^C_0 v^D_0 - diag(a, a^-1) ||`.
    pub product_residual: f64,
    /// `max(|| v^C_1 - 1 ||, || v^D_1 - 1 ||)`.
    pub endpoint_residual: f64,
    /// Largest `||v_{t+1} - v_t|| ||v_t^-1||` along either path.
    pub max_step_ratio: f64,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct WhiteheadSplit<E: Elem> {
    pub ts: Vec<f64>,
    pub vc: Vec<E>,
    pub vd: Vec<E>,
    pub cert: WhiteheadCert,
}

pub const WHITEHEAD_STEPS: usize = 32;
pub const WHITEHEAD_MAX_STEPS: usize = 512;

fn sample_split<R: Region>(
    a: &R::E,
    a_inv: &R::E,
    h: &R::E,
    pair: Pair<'_, R>,
    steps: usize,
    eps: f64,
    tol: &Tol,
) -> Result<WhiteheadSplit<R::E>> {
    let n = a.dim();
    let cc = a.norm().max(a_inv.norm());
    let norm_bound = (3.0 + cc).powi(5);
    let ts: Vec<f64> = (0..=steps).map(|j| j as f64 / steps as f64).collect();
    let mut vc = Vec::with_capacity(ts.len());
    let mut vd = Vec::with_capacity(ts.len());
    let (mut max_norm, mut max_in_c, mut max_in_d): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for &t in &ts {
        let (pc, pd) = whitehead_pair_at(a, a_inv, h, t);
        max_norm = max_norm.max(pc.norm()).max(pd.norm());
        max_in_c = max_in_c.max(pair.c.distance(&pc.one_minus(), false)?);
        max_in_d = max_in_d.max(pair.d.distance(&pd.one_minus(), false)?);
        vc.push(pc);
        vd.push(pd);
    }
    let product_residual = vc[0].mul(&vd[0]).sub(&a.dsum(a_inv)).norm();
    let endpoint_residual = vc[steps].one_minus().norm().max(vd[steps].one_minus().norm());
    let mut max_step_ratio: f64 = 0.0;
    for path in [&vc, &vd] {
        for j in 0..steps {
            let inv = path[j].inv(tol)?;
            max_step_ratio = max_step_ratio.max(path[j + 1].sub(&path[j]).norm() * inv.norm());
        }
    }
    let passed = max_in_c <= eps
        && max_in_d <= eps
        && max_norm <= norm_bound
        && product_residual <= 1e-9 * norm_bound
        && endpoint_residual <= 1e-12 * (2 * n) as f64
        && max_step_ratio < 1.0;
    let cert = WhiteheadCert {
        steps,
        c: cc,
        norm_bound,
        max_norm,
        max_in_c,
        max_in_d,
        eps,
        product_residual,
        endpoint_residual,
        max_step_ratio,
        passed,
    };
    Ok(WhiteheadSplit { ts, vc, vd, cert })
}

/// Sampled homotopies `v^C_t`, `v^D_t` from the factors of `diag(a, a^-1)` to the identity.
///
/// The parameter grid starts at `T = 32` and doubles up to 512 while consecutive
/// samples are too far apart to lie in a common component.
pub fn whitehead_split<R: Region>(
    pair: Pair<'_, R>,
    a: &R::E,
    h: &R::E,
    eps: f64,
    tol: &Tol,
) -> Result<WhiteheadSplit<R::E>> {
    check_contraction(h)?;
    if a.dim() % h.dim() != 0 {
        return Err(Error::InvalidInput("a is not over the algebra of h".into()));
    }
    let a_inv = a.inv(tol)?;
    let mut steps = WHITEHEAD_STEPS;
    loop {
        let split = sample_split(a, &a_inv, h, pair, steps, eps, tol)?;
        if split.cert.max_step_ratio < 1.0 || steps >= WHITEHEAD_MAX_STEPS {
            return Ok(split);
        }
        steps *= 2;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaReconstructionCert {
    pub discretization: DiscretizationCert,
    /// `|| u_0 - u_C u_D ⊕ 1 ||`.
    pub factor_defect: f64,
    /// `|| v_C v_D - (1 ⊕ a ⊕ a^-1 ⊕ 1)(b ⊕ b^-1) ||`.
    pub split_residual: f64,
    pub v_c_in_c: f64,
    pub v_d_in_d: f64,
    /// `|| c - d ||` for the projected `c ≈ v_C^-1 u_C - 1` and `d ≈ v_D u_D^-1 - 1`.
    pub separation: f64,
    pub ratio: f64,
    pub ratio_limit: f64,
    /// `|| 1 - x^-1 v_C^-1 u_C ||`.
    pub component_c: f64,
    /// `|| 1 - x^-1 v_D u_D^-1 ||`.
    pub component_d: f64,
    pub k1_x_in_c: K1Vec,
    pub k1_u_c: K1Vec,
    pub k1_x_in_d: K1Vec,
    pub k1_u_d: K1Vec,
}

#[derive(Debug, Clone)]
pub struct SigmaReconstruction<E: Elem> {
    pub x: E,
    pub cert: SigmaReconstructionCert,
}

fn pad<E: Elem>(u: &E, size: usize) -> E {
    if u.dim() == size {
        u.clone()
    } else {
        u.dsum(&u.identity_like(size - u.dim()))
    }
}

/// Invertible `x` over `(C ∩ D)~` whose classes in `C` and `D` are those of `u_C` and `u_D^-1`.
///
/// `ratio_limit` is the constant of the uniform pair; an extraction needing a
/// larger ratio fails with `PairNotUniform`.
pub fn sigma_reconstruct<R: Region>(
    pair: Pair<'_, R>,
    path: &[R::E],
    u_c: &R::E,
    u_d: &R::E,
    h: &R::E,
    ratio_limit: f64,
    tol: &Tol,
) -> Result<SigmaReconstruction<R::E>> {
    check_contraction(h)?;
    let n = path.first().ok_or_else(|| Error::InvalidInput("empty path".into()))?.dim();
    if u_c.dim() != u_d.dim() || u_c.dim() > n {
        return Err(Error::InvalidInput("factors must share a size not exceeding the path's".into()));
    }
    let disc = discretize_homotopy(path, None, tol)?;
    let m = disc.cert.steps;
    let big = 2 * (m + 1) * n;
    let uc_n = pad(u_c, n);
    let ud_n = pad(u_d, n);
    let factor_defect = path[0].sub(&uc_n.mul(&ud_n)).norm();

    let one_n = path[0].identity_like(n);
    let embed = |x: &R::E| block_sum(&[one_n.clone(), x.clone(), one_n.clone()]);
    let h_swap = h.one_minus();
    let (da, ca) = whitehead_pair_at(&disc.a, &disc.a_inv, &h_swap, 0.0);
    let (cb, db) = whitehead_pair_at(&disc.b, &disc.b_inv, h, 0.0);
    let (da, ca) = (embed(&da), embed(&ca));
    let da_inv = da.inv(tol)?;
    let v_c = product(&[da.clone(), ca, cb, da_inv]);
    let v_d = da.mul(&db);
    let target = block_sum(&[one_n.clone(), disc.a.clone(), disc.a_inv.clone(), one_n.clone()])
        .mul(&disc.b.dsum(&disc.b_inv));
    let split_residual = v_c.mul(&v_d).sub(&target).norm();

    let uc_big = pad(u_c, big);
    let ud_big = pad(u_d, big);
    let v_c_inv = v_c.inv(tol)?;
    let ud_big_inv = ud_big.inv(tol)?;
    let left = v_c_inv.mul(&uc_big);
    let right = v_d.mul(&ud_big_inv);
    let one_big = left.identity_like(big);
    let cp = pair.c.project(&left.sub(&one_big), false)?;
    let dp = pair.d.project(&right.sub(&one_big), false)?;
    let y = pair.cd.project(&cp.add(&dp).scale(c(0.5, 0.0)), false)?;
    let separation = cp.sub(&dp).norm();
    let reach = y.sub(&cp).norm().max(y.sub(&dp).norm());
    let scale = separation.max(1e-12 * cp.norm().max(1.0));
    let ratio = reach / scale;
    if ratio > ratio_limit {
        return Err(Error::PairNotUniform { ratio, limit: ratio_limit });
    }
    let x = y.add(&one_big);
    let x_inv = x.inv(tol).map_err(|e| Error::ReconstructionFailed(format!("x = 1 + y not invertible: {e}")))?;
    let component_c = x_inv.mul(&left).one_minus().norm();
    let component_d = x_inv.mul(&right).one_minus().norm();
    let k1_x_in_c = pair.c.k1(&x)?;
    let k1_u_c = pair.c.k1(&uc_big)?;
    let k1_x_in_d = pair.d.k1(&x)?;
    let k1_u_d = pair.d.k1(&ud_big)?;
    let cert = SigmaReconstructionCert {
        discretization: disc.cert,
        factor_defect,
        split_residual,
        v_c_in_c: pair.c.distance(&v_c, true)?,
        v_d_in_d: pair.d.distance(&v_d, true)?,
        separation,
        ratio,
        ratio_limit,
        component_c,
        component_d,
        k1_x_in_c,
        k1_u_c,
        k1_x_in_d,
        k1_u_d,
    };
    let neg_d: K1Vec = cert.k1_u_d.iter().map(|k| -k).collect();
    if component_c >= 1.0 || component_d >= 1.0 || cert.k1_x_in_c != cert.k1_u_c || cert.k1_x_in_d != neg_d {
        return Err(Error::ReconstructionFailed(format!(
            "components {component_c:.3e}/{component_d:.3e}, classes {:?}/{:?} vs {:?}/{:?}",
            cert.k1_x_in_c, cert.k1_x_in_d, cert.k1_u_c, neg_d
        )));
    }
    Ok(SigmaReconstruction { x, cert })
}

/// `u_t = exp((1 - t) log u)` on `steps` intervals, with the principal logarithm.
pub fn log_path(u: &CMatrix, steps: usize, tol: &Tol) -> Result<Vec<CMatrix>> {
    let l = matrix::apply_fn(u, tol, |z| z.ln())?;
    Ok((0..=steps).map(|j| matrix::expm(&(&l * c(1.0 - j as f64 / steps as f64, 0.0)))).collect())
}

/// Phase-unwinding path `exp(i (1 - t) phi)` of a scalar loop with zero winding.
pub fn scalar_loop_path(u: &LoopElem, steps: usize) -> Result<Vec<LoopElem>> {
    if u.dim() != 1 {
        return Err(Error::InvalidInput("phase paths need scalar loops".into()));
    }
    if u.winding()? != 0 {
        return Err(Error::InvalidInput("a loop with nonzero winding is not null-homotopic".into()));
    }
    let z: Vec<C64> = u.samples.iter().map(|s| s[(0, 0)]).collect();
    let mut phase = vec![z[0].arg()];
    for j in 1..z.len() {
        phase.push(phase[j - 1] + (z[j] / z[j - 1]).arg());
    }
    let modulus: Vec<f64> = z.iter().map(|w| w.norm().ln()).collect();
    Ok((0..=steps)
        .map(|k| {
            let s = 1.0 - k as f64 / steps as f64;
            LoopElem {
                samples: phase
                    .iter()
                    .zip(&modulus)
                    .map(|(p, r)| CMatrix::from_element(1, 1, C64::new(s * r, s * p).exp()))
                    .collect(),
            }
        })
        .collect())
}
