//! Empirical uniformity moduli of pairs of subalgebras.

use serde::Serialize;

use super::lift::Pair;
use super::region::{MatRegion, Region};
use crate::elem::Elem;
use crate::error::Result;
use crate::loop_algebra::{arc_ideal, LoopAlg};
use crate::matrix::{self, c, CMatrix, Tol};
use crate::random::{self, uniform};
use crate::star_algebra::Subalg;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformityPoint {
    pub m: usize,
    pub delta_in: f64,
    pub achieved: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformityReport {
    pub points: Vec<UniformityPoint>,
    /// Largest observed `achieved / delta_in`.
    pub fitted_constant: f64,
    /// Achieved distances grow with the input distance (positive Kendall tau).
    pub monotone: bool,
}

/// Joint approximation of `c` and `d` from `M_m(C ∩ D)`: the HS least-squares point.
pub fn joint_approximant<R: Region>(pair: Pair<'_, R>, cm: &R::E, dm: &R::E) -> Result<(R::E, f64)> {
    let x = pair.cd.project(&cm.add(dm).scale(c(0.5, 0.0)), false)?;
    let achieved = x.sub(cm).norm().max(x.sub(dm).norm());
    Ok((x, achieved))
}

fn kendall_positive(points: &[UniformityPoint]) -> bool {
    let mut score = 0i64;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            let s = (p.delta_in - q.delta_in) * (p.achieved - q.achieved);
            score += if s > 0.0 {
                1
            } else if s < 0.0 {
                -1
            } else {
                0
            };
        }
    }
    score > 0
}

/// Samples `c` near `M_m(C ∩ D)` inside `M_m(C)`, sets `d` to its projection onto `M_m(D)`,
/// and records how well `M_m(C ∩ D)` approximates both.
pub fn uniformity_probe<R: Region>(
    pair: Pair<'_, R>,
    sample_count: usize,
    b_dims: &[usize],
    seed: u64,
) -> Result<UniformityReport> {
    let mut points = vec![];
    let mut r = random::rng(seed);
    for i in 0..sample_count {
        let m = b_dims[i % b_dims.len()];
        let base = pair.cd.project(&pair.c.random_ambient(m, &mut r), false)?;
        let pert = pair.c.project(&pair.c.random_ambient(m, &mut r), false)?;
        let t = 10f64.powf(uniform(&mut r, -4.0, 0.0));
        let pn = pert.norm();
        if pn == 0.0 {
            continue;
        }
        let cm = base.add(&pert.scale(c(t / pn, 0.0)));
        let dm = pair.d.project(&cm, false)?;
        let delta_in = cm.sub(&dm).norm();
        if delta_in < 1e-13 {
            continue;
        }
        let (_, achieved) = joint_approximant(pair, &cm, &dm)?;
        points.push(UniformityPoint { m, delta_in, achieved, ratio: achieved / delta_in });
    }
    let fitted_constant = points.iter().map(|p| p.ratio).fold(0.0, f64::max);
    let monotone = kendall_positive(&points);
    Ok(UniformityReport { points, fitted_constant, monotone })
}

/// The three algebras of a pair, owned.
pub struct OwnedPair<R: Region> {
    pub c: R,
    pub d: R,
    pub cd: R,
}

impl<R: Region> OwnedPair<R> {
    pub fn pair(&self) -> Pair<'_, R> {
        Pair { c: &self.c, d: &self.d, cd: &self.cd }
    }
}

/// Two overlapping open arcs of the circle.
pub fn arc_pair(grid: usize, fiber: usize, arc_c: (f64, f64), arc_d: (f64, f64)) -> Result<OwnedPair<LoopAlg>> {
    let a = LoopAlg::new(grid, fiber)?;
    let cc = arc_ideal(&a, arc_c)?;
    let d = arc_ideal(&a, arc_d)?;
    let cd = cc.intersect(&d)?;
    Ok(OwnedPair { c: cc, d, cd })
}

/// Corners `p M_4 p` and `q M_4 q` for rank-2 projections at principal angle `theta`.
pub fn hereditary_pair(theta: f64, tol: &Tol, seed: u64) -> Result<OwnedPair<MatRegion>> {
    let e = |i: usize| {
        let mut v = matrix::zeros(4, 1);
        v[(i, 0)] = c(1.0, 0.0);
        v
    };
    let corner = |vs: &[CMatrix]| -> Result<Subalg> {
        let mats: Vec<CMatrix> = vs.iter().flat_map(|a| vs.iter().map(move |b| a * b.adjoint())).collect();
        Subalg::from_basis(4, &mats, tol)
    };
    let tilted = e(1) * c(theta.cos(), 0.0) + e(2) * c(theta.sin(), 0.0);
    let ca = corner(&[e(0), e(1)])?;
    let da = corner(&[e(0), tilted])?;
    let cda = ca.intersect(&da, tol)?;
    Ok(OwnedPair {
        c: MatRegion::new(ca, tol, seed)?,
        d: MatRegion::new(da, tol, random::substream(seed, 1))?,
        cd: MatRegion::new(cda, tol, random::substream(seed, 2))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::homotopy::sigma_reconstruct;
    use std::f64::consts::PI;

    #[test]
    fn ideal_pair_constant_is_small() {
        let p = arc_pair(360, 1, (-0.6 * PI, 0.6 * PI), (0.4 * PI, 1.6 * PI)).unwrap();
        let rep = uniformity_probe(p.pair(), 30, &[1, 2, 3], 5).unwrap();
        assert_eq!(rep.points.len(), 30);
        assert!(rep.fitted_constant <= 3.0, "{}", rep.fitted_constant);
    }

    #[test]
    fn equal_algebras_ratio_at_most_one() {
        let tol = Tol::default();
        let r = MatRegion::new(Subalg::diagonal(3), &tol, 0).unwrap();
        let rep = uniformity_probe(Pair { c: &r, d: &r, cd: &r }, 10, &[1, 2], 1).unwrap();
        assert!(rep.points.iter().all(|p| p.ratio <= 1.0));
    }

    #[test]
    fn hereditary_pair_blocks_reconstruction() {
        let tol = Tol::default();
        let theta = 0.03;
        let p = hereditary_pair(theta, &tol, 4).unwrap();
        let e = |i: usize| {
            let mut v = matrix::zeros(4, 1);
            v[(i, 0)] = c(1.0, 0.0);
            v
        };
        let q2 = e(1) * c(theta.cos(), 0.0) + e(2) * c(theta.sin(), 0.0);
        let uc = matrix::eye(4) + e(0) * e(1).adjoint();
        let ud = matrix::eye(4) - e(0) * q2.adjoint();
        let gap = e(0) * (e(1) - &q2).adjoint();
        let path: Vec<CMatrix> = (0..=8).map(|j| matrix::eye(4) + &gap * c(1.0 - j as f64 / 8.0, 0.0)).collect();
        let h = matrix::eye(4) * c(0.5, 0.0);
        let r = sigma_reconstruct(p.pair(), &path, &uc, &ud, &h, 3.0, &tol);
        assert!(matches!(r, Err(crate::error::Error::PairNotUniform { .. })), "{r:?}");
    }

    #[test]
    fn hereditary_ratio_grows_as_angle_shrinks() {
        let tol = Tol::default();
        let mut last = 0.0;
        for theta in [0.3, 0.1, 0.03] {
            let p = hereditary_pair(theta, &tol, 9).unwrap();
            assert_eq!(p.cd.alg.dim(), 1);
            let rep = uniformity_probe(p.pair(), 20, &[1, 2], 9).unwrap();
            assert!(rep.fitted_constant > last);
            last = rep.fitted_constant;
        }
        assert!(last > 3.0);
    }
}
