//! Sampled loops `S^1 -> M_k` on a uniform grid, arc ideals and winding numbers.
//!
//! An element is the list of its samples at `theta_j = 2 pi j / m`. The norm is
//! the maximum over samples, so distances to an arc ideal are exact: they are
//! the largest sample norm outside the arc. Amplified elements have samples of
//! size `n k`, laid out as `kron(M_n, M_k)`.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::matrix::{self, apply_fn, c, eye, kron, norm, trace, CMatrix, Tol, C64};
use crate::wedderburn::K0Vec;

const ARC_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LoopAlg {
    pub grid_size: usize,
    pub fiber_dim: usize,
    /// Samples belonging to the ideal; `None` means the whole circle.
    pub support_mask: Option<Vec<bool>>,
    /// Sample where elements vanish (suspension model).
    pub basepoint_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopElem {
    pub samples: Vec<CMatrix>,
}

/// Winding numbers, one per arc of the support (or one for the whole circle).
pub type K1Vec = Vec<i64>;

impl LoopAlg {
    pub fn new(grid_size: usize, fiber_dim: usize) -> Result<Self> {
        if grid_size < 16 {
            return Err(Error::InvalidInput(format!("grid size {grid_size} below 16")));
        }
        if fiber_dim == 0 {
            return Err(Error::InvalidInput("fiber dimension must be positive".into()));
        }
        Ok(LoopAlg { grid_size, fiber_dim, support_mask: None, basepoint_index: None })
    }

    /// Loops vanishing at angle zero.
    pub fn suspension(grid_size: usize, fiber_dim: usize) -> Result<Self> {
        let mut a = LoopAlg::new(grid_size, fiber_dim)?;
        a.basepoint_index = Some(0);
        Ok(a)
    }

    pub fn theta(&self, j: usize) -> f64 {
        TAU * j as f64 / self.grid_size as f64
    }

    /// Membership of sample `j`, combining the arc mask and the basepoint.
    pub fn in_support(&self, j: usize) -> bool {
        let arc = self.support_mask.as_ref().map(|m| m[j]).unwrap_or(true);
        arc && self.basepoint_index != Some(j)
    }

    pub fn effective_mask(&self) -> Vec<bool> {
        (0..self.grid_size).map(|j| self.in_support(j)).collect()
    }

    pub fn is_full(&self) -> bool {
        (0..self.grid_size).all(|j| self.in_support(j))
    }

    pub fn is_zero(&self) -> bool {
        (0..self.grid_size).all(|j| !self.in_support(j))
    }

    pub fn support_count(&self) -> usize {
        (0..self.grid_size).filter(|&j| self.in_support(j)).count()
    }

    /// Maximal circular runs of supported samples.
    pub fn arcs(&self) -> Vec<Vec<usize>> {
        let m = self.grid_size;
        let mask = self.effective_mask();
        if mask.iter().all(|b| *b) {
            return vec![(0..m).collect()];
        }
        let start = (0..m).find(|&j| !mask[j]).unwrap();
        let mut runs = vec![];
        let mut cur: Vec<usize> = vec![];
        for s in 1..=m {
            let j = (start + s) % m;
            if mask[j] {
                cur.push(j);
            } else if !cur.is_empty() {
                runs.push(std::mem::take(&mut cur));
            }
        }
        runs
    }

    /// Checks that the support is at most two arcs separated by two or more samples.
    pub fn validate(&self) -> Result<()> {
        let arcs = self.arcs();
        if self.is_full() {
            return Ok(());
        }
        if arcs.len() > 2 {
            return Err(Error::InvalidInput(format!("support has {} arcs, at most 2 allowed", arcs.len())));
        }
        if arcs.len() == 2 {
            let outside = self.grid_size - self.support_count();
            let m = self.grid_size;
            let gap = |a: &Vec<usize>, b: &Vec<usize>| (b[0] + m - a[a.len() - 1] - 1) % m;
            if gap(&arcs[0], &arcs[1]) < 2 || gap(&arcs[1], &arcs[0]) < 2 || outside < 4 {
                return Err(Error::InvalidInput("support arcs closer than two samples".into()));
            }
        }
        Ok(())
    }

    pub fn with_mask(&self, mask: Vec<bool>) -> Result<LoopAlg> {
        if mask.len() != self.grid_size {
            return Err(Error::InvalidInput("mask length differs from grid size".into()));
        }
        let a = LoopAlg { support_mask: Some(mask), ..self.clone() };
        a.validate()?;
        Ok(a)
    }

    /// Ideal of loops supported in the intersection of both supports.
    pub fn intersect(&self, other: &LoopAlg) -> Result<LoopAlg> {
        if self.grid_size != other.grid_size || self.fiber_dim != other.fiber_dim {
            return Err(Error::InvalidInput("loop algebras on different grids".into()));
        }
        let mask = (0..self.grid_size).map(|j| self.in_support(j) && other.in_support(j)).collect();
        let basepoint = self.basepoint_index.or(other.basepoint_index);
        let a = LoopAlg { support_mask: Some(mask), basepoint_index: basepoint, ..self.clone() };
        a.validate()?;
        Ok(a)
    }

    pub fn from_fn(&self, f: impl Fn(f64) -> CMatrix) -> LoopElem {
        LoopElem { samples: (0..self.grid_size).map(|j| f(self.theta(j))).collect() }
    }

    /// Constant loop with value `m` (already of sample size).
    pub fn constant(&self, m: &CMatrix) -> LoopElem {
        LoopElem { samples: vec![m.clone(); self.grid_size] }
    }

    pub fn identity(&self, n: usize) -> LoopElem {
        self.constant(&eye(n * self.fiber_dim))
    }

    /// `z^p tensor 1_k` with `z = e^{i theta}`.
    pub fn power_z(&self, p: i64) -> LoopElem {
        let k = self.fiber_dim;
        self.from_fn(|t| eye(k) * C64::from_polar(1.0, p as f64 * t))
    }

    /// Scalar loop `f(theta) 1_k`.
    pub fn scalar_fn(&self, f: impl Fn(f64) -> C64) -> LoopElem {
        let k = self.fiber_dim;
        self.from_fn(|t| eye(k) * f(t))
    }

    fn check_elem(&self, x: &LoopElem) -> Result<usize> {
        if x.samples.len() != self.grid_size {
            return Err(Error::InvalidInput(format!(
                "loop has {} samples, grid has {}",
                x.samples.len(),
                self.grid_size
            )));
        }
        let d = x.dim();
        if !d.is_multiple_of(self.fiber_dim) {
            return Err(Error::InvalidInput(format!("sample size {d} not a multiple of fiber {}", self.fiber_dim)));
        }
        Ok(d / self.fiber_dim)
    }

    /// `lambda tensor 1_k` closest in Hilbert-Schmidt norm to the sample.
    fn scalar_part(&self, s: &CMatrix) -> CMatrix {
        let k = self.fiber_dim;
        let n = s.nrows() / k;
        let lam = CMatrix::from_fn(n, n, |a, b| {
            trace(&s.view((a * k, b * k), (k, k)).into_owned()) / c(k as f64, 0.0)
        });
        kron(&lam, &eye(k))
    }

    /// Nearest element of `M_n(I)` (or `M_n(I~)`): unsupported samples are zeroed,
    /// or replaced by the mean scalar part of the unsupported samples.
    pub fn project(&self, x: &LoopElem, unitized: bool) -> Result<LoopElem> {
        self.check_elem(x)?;
        let outside: Vec<usize> = (0..self.grid_size).filter(|&j| !self.in_support(j)).collect();
        if outside.is_empty() {
            return Ok(x.clone());
        }
        let d = x.dim();
        let fill = if unitized {
            let mut mean = matrix::zeros(d, d);
            for &j in &outside {
                mean += self.scalar_part(&x.samples[j]);
            }
            mean / c(outside.len() as f64, 0.0)
        } else {
            matrix::zeros(d, d)
        };
        let mut out = x.clone();
        for &j in &outside {
            out.samples[j] = fill.clone();
        }
        Ok(out)
    }

    pub fn distance(&self, x: &LoopElem, unitized: bool) -> Result<f64> {
        let p = self.project(x, unitized)?;
        Ok(x.sub(&p).norm())
    }

    /// Class of an idempotent over the unitized ideal.
    ///
    /// Open arcs have trivial `K_0`, so only the constant value outside the
    /// support carries information; it is reported as the augmentation block.
    /// On the whole circle the class is the rank of any sample.
    pub fn k0(&self, e: &LoopElem) -> Result<K0Vec> {
        self.check_elem(e)?;
        let k = self.fiber_dim as i64;
        let mut ranks = vec![];
        for (j, s) in e.samples.iter().enumerate() {
            let defect = norm(&(s * s - s));
            if defect > 1e-6 {
                return Err(Error::NotAClass(format!("idempotent defect {defect:e} at sample {j}")));
            }
            let t = trace(s);
            let r = t.re.round();
            if (t.re - r).abs() > 1e-6 || t.im.abs() > 1e-6 {
                return Err(Error::NotAClass(format!("non-integral rank at sample {j}")));
            }
            ranks.push(r as i64);
        }
        if ranks.iter().any(|r| *r != ranks[0]) {
            return Err(Error::NotAClass("rank jumps along the loop".into()));
        }
        if self.is_full() {
            return Ok(K0Vec {
                blocks: vec![(self.fiber_dim, 1)],
                entries: vec![ranks[0]],
                augmentation: None,
            });
        }
        let outside: Vec<usize> = (0..self.grid_size).filter(|&j| !self.in_support(j)).collect();
        let reference = &e.samples[outside[0]];
        for &j in &outside {
            let dev = norm(&(&e.samples[j] - reference)) + norm(&(&e.samples[j] - self.scalar_part(&e.samples[j])));
            if dev > 1e-6 {
                return Err(Error::NotAClass(format!("not a scalar constant outside the support (sample {j})")));
            }
        }
        if ranks[0] % k != 0 {
            return Err(Error::NotAClass("scalar part rank not divisible by the fiber".into()));
        }
        Ok(K0Vec { blocks: vec![(1, self.fiber_dim)], entries: vec![ranks[0] / k], augmentation: Some(0) })
    }

    /// Windings of an invertible over the unitized ideal, one per support arc.
    pub fn k1(&self, u: &LoopElem) -> Result<K1Vec> {
        self.check_elem(u)?;
        if self.is_full() {
            return Ok(vec![winding_k1(u)?]);
        }
        let m = self.grid_size;
        self.arcs()
            .iter()
            .map(|run| {
                let before = (run[0] + m - 1) % m;
                let after = (run[run.len() - 1] + 1) % m;
                let mut idx = vec![before];
                idx.extend(run.iter().copied());
                idx.push(after);
                winding_along(u, &idx)
            })
            .collect()
    }
}

impl LoopElem {
    pub fn grid(&self) -> usize {
        self.samples.len()
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map(|s| s.nrows()).unwrap_or(0)
    }

    pub fn norm(&self) -> f64 {
        self.samples.iter().map(norm).fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(&CMatrix) -> CMatrix) -> LoopElem {
        LoopElem { samples: self.samples.iter().map(f).collect() }
    }

    pub fn try_map(&self, f: impl Fn(&CMatrix) -> Result<CMatrix>) -> Result<LoopElem> {
        Ok(LoopElem { samples: self.samples.iter().map(f).collect::<Result<_>>()? })
    }

    pub fn zip(&self, o: &LoopElem, f: impl Fn(&CMatrix, &CMatrix) -> CMatrix) -> LoopElem {
        assert_eq!(self.grid(), o.grid(), "loops on different grids");
        LoopElem { samples: self.samples.iter().zip(&o.samples).map(|(a, b)| f(a, b)).collect() }
    }

    pub fn mul(&self, o: &LoopElem) -> LoopElem {
        self.zip(o, |a, b| a * b)
    }

    pub fn add(&self, o: &LoopElem) -> LoopElem {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &LoopElem) -> LoopElem {
        self.zip(o, |a, b| a - b)
    }

    pub fn scale(&self, z: C64) -> LoopElem {
        self.map(|a| a * z)
    }

    pub fn adjoint(&self) -> LoopElem {
        self.map(|a| a.adjoint())
    }

    pub fn inv(&self, tol: &Tol) -> Result<LoopElem> {
        self.try_map(|a| matrix::invert(a, tol))
    }

    /// Multiplies each sample by the scalar sample of `h`.
    pub fn scalar_mul(&self, h: &[f64]) -> LoopElem {
        LoopElem { samples: self.samples.iter().zip(h).map(|(a, t)| a * c(*t, 0.0)).collect() }
    }
}

/// Sum of principal phase increments of `det u` along the given sample indices, in turns.
fn winding_along(u: &LoopElem, idx: &[usize]) -> Result<i64> {
    let dets: Vec<C64> = idx.iter().map(|&j| u.samples[j].clone().determinant()).collect();
    if dets.iter().any(|d| d.norm() == 0.0 || !d.re.is_finite() || !d.im.is_finite()) {
        return Err(Error::NotInvertible(f64::INFINITY));
    }
    let mut total = 0.0;
    for w in 0..dets.len() - 1 {
        let step = (dets[w + 1] / dets[w]).arg();
        if step.abs() >= PI / 2.0 {
            return Err(Error::GridTooCoarse { index: idx[w], step });
        }
        total += step;
    }
    let turns = total / TAU;
    let rounded = turns.round();
    if (turns - rounded).abs() > 1e-3 {
        return Err(Error::NotQuantized((turns - rounded).abs()));
    }
    Ok(rounded as i64)
}

/// Winding number of `det u` around the whole circle.
pub fn winding_k1(u: &LoopElem) -> Result<i64> {
    let m = u.grid();
    if m == 0 {
        return Err(Error::InvalidInput("empty loop".into()));
    }
    let idx: Vec<usize> = (0..=m).map(|j| j % m).collect();
    winding_along(u, &idx)
}

/// Ideal of loops supported strictly inside the open arc `(start, end)` (radians).
pub fn arc_ideal(a: &LoopAlg, arc: (f64, f64)) -> Result<LoopAlg> {
    let (start, end) = arc;
    if !start.is_finite() || !end.is_finite() {
        return Err(Error::InvalidInput("non-finite arc endpoint".into()));
    }
    let len = end - start;
    let mask = (0..a.grid_size)
        .map(|j| {
            if len >= TAU - ARC_SLACK {
                return true;
            }
            if len <= 0.0 {
                return false;
            }
            let t = (a.theta(j) - start).rem_euclid(TAU);
            t > ARC_SLACK && t < len - ARC_SLACK
        })
        .collect::<Vec<bool>>();
    let mask = match &a.support_mask {
        None => mask,
        Some(old) => old.iter().zip(mask).map(|(x, y)| *x && y).collect(),
    };
    a.with_mask(mask)
}

/// Scalar bump: 1 on the closed plateau, 0 beyond `ramp` from it, linear in between.
pub fn bump(a: &LoopAlg, plateau: (f64, f64), ramp: f64) -> Result<Vec<f64>> {
    if ramp < 0.0 || !ramp.is_finite() {
        return Err(Error::InvalidInput("ramp must be non-negative".into()));
    }
    let (pa, pb) = plateau;
    let len = pb - pa;
    Ok((0..a.grid_size)
        .map(|j| {
            if len >= TAU - ARC_SLACK {
                return 1.0;
            }
            let t = (a.theta(j) - pa).rem_euclid(TAU);
            if t <= len + ARC_SLACK {
                return 1.0;
            }
            let d = (t - len).min(TAU - t);
            if ramp == 0.0 {
                return 0.0;
            }
            let v = 1.0 - d / ramp;
            if v < ARC_SLACK {
                0.0
            } else if v > 1.0 - ARC_SLACK {
                1.0
            } else {
                v
            }
        })
        .collect())
}

/// `h` as a loop element with samples `h_j 1_{n k}`.
pub fn scalar_loop(h: &[f64], dim: usize) -> LoopElem {
    LoopElem { samples: h.iter().map(|t| eye(dim) * c(*t, 0.0)).collect() }
}

/// Sup-norm distance from `x` to `M_n(I)` (or its unitization) with the projected witness.
pub fn loop_eps_in(x: &LoopElem, ideal: &LoopAlg, eps: f64, unitized: bool) -> Result<(bool, LoopElem, f64)> {
    let w = ideal.project(x, unitized)?;
    let r = x.sub(&w).norm();
    Ok((r <= eps, w, r))
}

#[derive(Debug, Clone)]
pub struct ArcTrivialization {
    /// Rank of the constant value outside the support, in units of the fiber.
    pub scalar_rank: usize,
    /// Constant idempotent outside the support.
    pub constant: CMatrix,
    /// `w` with `w e w^-1 = constant` at every sample and `w = 1` outside the support.
    pub conjugator: LoopElem,
    pub residual: f64,
}

/// Conjugates an idempotent over the unitized arc ideal to its constant value.
///
/// Along each arc the idempotents are transported by telescoping reflections,
/// and the holonomy picked up at the far end is unwound inside the commutant of
/// the constant value.
pub fn arc_k0_trivialize(e: &LoopElem, ideal: &LoopAlg, tol: &Tol) -> Result<ArcTrivialization> {
    let class = ideal.k0(e)?;
    if ideal.is_full() {
        return Err(Error::NoWitness("ideal has no points outside its support".into()));
    }
    let m = ideal.grid_size;
    let d = e.dim();
    let one = eye(d);
    let outside = (0..m).find(|&j| !ideal.in_support(j)).unwrap();
    let constant = e.samples[outside].clone();
    let refl: Vec<CMatrix> = e.samples.iter().map(|s| s * c(2.0, 0.0) - &one).collect();
    let bound = refl.iter().map(norm).fold(0.0, f64::max);
    let mut w = ideal.identity(d / ideal.fiber_dim);
    for run in ideal.arcs() {
        let before = (run[0] + m - 1) % m;
        let after = (run[run.len() - 1] + 1) % m;
        let mut path = vec![before];
        path.extend(run.iter().copied());
        path.push(after);
        let mut z = one.clone();
        let mut zs = Vec::with_capacity(run.len());
        for win in path.windows(2) {
            let (p, q) = (win[0], win[1]);
            if norm(&(&e.samples[q] - &e.samples[p])) >= 1.0 / (2.0 * bound) {
                return Err(Error::PathTooCoarse(p));
            }
            let t = (&refl[q] * &refl[p] + &one) * c(0.5, 0.0);
            z = t * z;
            zs.push(z.clone());
        }
        let holonomy = zs.pop().unwrap();
        let log_h = apply_fn(&holonomy, tol, |x| x.ln())?;
        let steps = run.len() + 1;
        for (i, &j) in run.iter().enumerate() {
            let s = (i + 1) as f64 / steps as f64;
            let corr = matrix::expm(&(&log_h * c(s, 0.0)));
            w.samples[j] = corr * matrix::invert(&zs[i], tol)?;
        }
    }
    let mut residual: f64 = 0.0;
    for (j, s) in e.samples.iter().enumerate() {
        let wj = &w.samples[j];
        let r = norm(&(wj * s * matrix::invert(wj, tol)? - &constant));
        residual = residual.max(r);
    }
    if residual > 1e-5 {
        return Err(Error::PathTooCoarse(m));
    }
    Ok(ArcTrivialization {
        scalar_rank: class.entries[0].max(0) as usize,
        constant,
        conjugator: w,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{diag_real, rotation};

    fn grid(m: usize) -> LoopAlg {
        LoopAlg::new(m, 1).unwrap()
    }

    #[test]
    fn winding_examples() {
        let a = grid(64);
        assert_eq!(winding_k1(&a.identity(1)).unwrap(), 0);
        assert_eq!(winding_k1(&a.power_z(1)).unwrap(), 1);
        let u = a.from_fn(|t| matrix::diag(&[C64::from_polar(1.0, -2.0 * t), c(1.0, 0.0)]));
        assert_eq!(winding_k1(&u).unwrap(), -2);
    }

    #[test]
    fn winding_grid_too_coarse() {
        let a = grid(16);
        assert!(matches!(winding_k1(&a.power_z(5)), Err(Error::GridTooCoarse { .. })));
    }

    #[test]
    fn arc_counts() {
        let a = grid(720);
        let c_arc = arc_ideal(&a, (-0.6 * PI, 0.6 * PI)).unwrap();
        assert_eq!(c_arc.support_count(), 431);
        assert!(arc_ideal(&a, (0.0, TAU)).unwrap().is_full());
        assert!(arc_ideal(&a, (1.0, 1.0)).unwrap().is_zero());
    }

    #[test]
    fn intersection_has_two_arcs() {
        let a = grid(720);
        let c_arc = arc_ideal(&a, (-0.6 * PI, 0.6 * PI)).unwrap();
        let d_arc = arc_ideal(&a, (0.4 * PI, 1.6 * PI)).unwrap();
        let i = c_arc.intersect(&d_arc).unwrap();
        assert_eq!(i.arcs().len(), 2);
        assert_eq!(i.support_count(), 2 * 71);
    }

    #[test]
    fn bump_values() {
        let a = grid(720);
        let h = bump(&a, (-0.4 * PI, 0.4 * PI), 0.2 * PI).unwrap();
        assert_eq!(h[0], 1.0);
        assert_eq!(h[360], 0.0);
        assert!((h[180] - 0.5).abs() < 1e-12);
        assert!(h.iter().all(|x| (0.0..=1.0).contains(x)));
        let full = bump(&a, (0.0, TAU), 0.0).unwrap();
        assert!(full.iter().all(|x| *x == 1.0));
    }

    #[test]
    fn eps_in_examples() {
        let a = grid(720);
        let c_arc = arc_ideal(&a, (-0.6 * PI, 0.6 * PI)).unwrap();
        let (ok, _, r) = loop_eps_in(&a.identity(1), &c_arc, 0.5, false).unwrap();
        assert!(!ok);
        assert_eq!(r, 1.0);
        let h = bump(&a, (-0.4 * PI, 0.4 * PI), 0.2 * PI).unwrap();
        let x = a.power_z(1).scalar_mul(&h);
        let (ok, _, r) = loop_eps_in(&x, &c_arc, 0.0, false).unwrap();
        assert!(ok);
        assert_eq!(r, 0.0);
        let (_, _, r) = loop_eps_in(&a.identity(1), &c_arc, 0.0, true).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn k1_per_arc() {
        let a = grid(720);
        let c_arc = arc_ideal(&a, (-0.6 * PI, 0.6 * PI)).unwrap();
        let h = bump(&a, (-0.4 * PI, 0.4 * PI), 0.2 * PI).unwrap();
        // phase running from 0 to 2 pi across the arc and constant 1 outside
        let u = a.scalar_fn(|t| {
            let s = ((t + PI).rem_euclid(TAU) - PI).clamp(-0.6 * PI, 0.6 * PI);
            C64::from_polar(1.0, (s + 0.6 * PI) / 1.2 * 2.0)
        });
        assert_eq!(c_arc.k1(&u).unwrap(), vec![1]);
        assert_eq!(winding_k1(&u).unwrap(), 1);
        let _ = h;
    }

    #[test]
    fn k0_of_constant_and_zero() {
        let a = LoopAlg::new(64, 1).unwrap();
        let i = arc_ideal(&a, (0.2, 1.5)).unwrap();
        let e = a.constant(&diag_real(&[1.0, 0.0]));
        let cls = i.k0(&e).unwrap();
        assert_eq!(cls.entries, vec![1]);
        let t = arc_k0_trivialize(&e, &i, &Tol::default()).unwrap();
        assert_eq!(t.scalar_rank, 1);
        assert!(t.conjugator.sub(&a.identity(2)).norm() < 1e-14);
        let z = a.constant(&matrix::zeros(2, 2));
        assert_eq!(arc_k0_trivialize(&z, &i, &Tol::default()).unwrap().scalar_rank, 0);
    }

    #[test]
    fn trivialize_deformed_projection() {
        let a = LoopAlg::new(720, 1).unwrap();
        let i = arc_ideal(&a, (0.4 * PI, 0.6 * PI)).unwrap();
        let h = bump(&a, (0.5 * PI, 0.5 * PI), 0.1 * PI).unwrap();
        let p = diag_real(&[1.0, 0.0]);
        let e = LoopElem {
            samples: h
                .iter()
                .map(|t| {
                    let w = rotation(1.3 * t) * (eye(2) + matrix::unit(2, 0, 1) * c(0.4 * t, 0.0));
                    &w * &p * w.clone().try_inverse().unwrap()
                })
                .collect(),
        };
        let t = arc_k0_trivialize(&e, &i, &Tol::default()).unwrap();
        assert_eq!(t.scalar_rank, 1);
        assert!(t.residual < 1e-5);
        for j in 0..720 {
            if !i.in_support(j) {
                assert!(norm(&(&t.conjugator.samples[j] - eye(2))) < 1e-12);
            }
        }
    }

    #[test]
    fn validate_rejects_three_arcs() {
        let a = grid(64);
        let mut mask = vec![false; 64];
        for j in [2, 3, 20, 21, 40, 41] {
            mask[j] = true;
        }
        assert!(a.with_mask(mask).is_err());
    }
}
