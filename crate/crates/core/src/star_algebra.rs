//! Finite-dimensional *-subalgebras and subspaces of an ambient `M_N`.
//!
//! A subspace carries a basis that is orthonormal for the Hilbert-Schmidt
//! inner product `<a, b> = tr(a* b)`. Nearest points are HS projections and
//! distances are the operator norm of the residual, which bounds the true
//! operator-norm distance from above.

use crate::error::{Error, Result};
use crate::matrix::{
    self, c, eye, hs_norm, kron, norm, range_basis, svd_right, unit, CMatrix, Tol, C64,
};

#[derive(Debug, Clone)]
pub struct Subspace {
    ambient: usize,
    basis: Vec<CMatrix>,
    // N^2 x dim matrix of vectorized basis elements
    stacked: CMatrix,
}

#[derive(Debug, Clone)]
pub struct Subalg {
    space: Subspace,
    unital: bool,
}

fn stack(ambient: usize, mats: &[CMatrix]) -> CMatrix {
    let mut s = matrix::zeros(ambient * ambient, mats.len());
    for (k, m) in mats.iter().enumerate() {
        for (r, z) in m.iter().enumerate() {
            s[(r, k)] = *z;
        }
    }
    s
}

impl Subspace {
    /// Orthonormal basis of the span of `mats`.
    pub fn from_spanning(ambient: usize, mats: &[CMatrix], tol: &Tol) -> Result<Self> {
        if ambient == 0 {
            return Err(Error::InvalidInput("ambient dimension must be positive".into()));
        }
        for m in mats {
            if m.shape() != (ambient, ambient) {
                return Err(Error::InvalidInput(format!(
                    "element of shape {:?} outside M_{ambient}",
                    m.shape()
                )));
            }
            matrix::ensure_finite(m)?;
        }
        let nonzero: Vec<CMatrix> = mats.iter().filter(|m| hs_norm(m) > 1e-14).cloned().collect();
        if nonzero.is_empty() {
            return Ok(Self::zero(ambient));
        }
        let q = range_basis(&stack(ambient, &nonzero), tol.rank_rel_tol);
        Ok(Self::from_orthonormal_columns(ambient, q))
    }

    fn from_orthonormal_columns(ambient: usize, q: CMatrix) -> Self {
        let basis = (0..q.ncols())
            .map(|k| CMatrix::from_column_slice(ambient, ambient, q.column(k).as_slice()))
            .collect();
        Subspace { ambient, basis, stacked: q }
    }

    /// Wraps a basis that is already HS-orthonormal.
    pub fn from_orthonormal(ambient: usize, basis: Vec<CMatrix>) -> Self {
        let stacked = stack(ambient, &basis);
        Subspace { ambient, basis, stacked }
    }

    pub fn zero(ambient: usize) -> Self {
        Subspace { ambient, basis: vec![], stacked: matrix::zeros(ambient * ambient, 0) }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    fn check_shape(&self, x: &CMatrix) -> Result<()> {
        if x.shape() != (self.ambient, self.ambient) {
            return Err(Error::InvalidInput(format!(
                "element of shape {:?} outside M_{}",
                x.shape(),
                self.ambient
            )));
        }
        Ok(())
    }

    /// HS coordinates of the projection of `x`.
    pub fn coords(&self, x: &CMatrix) -> Vec<C64> {
        self.basis.iter().map(|b| matrix::hs_inner(b, x)).collect()
    }

    pub fn combine(&self, coords: &[C64]) -> CMatrix {
        let mut out = matrix::zeros(self.ambient, self.ambient);
        for (b, k) in self.basis.iter().zip(coords) {
            out += b * *k;
        }
        out
    }

    /// HS projection onto the span; no shape validation.
    pub fn project(&self, x: &CMatrix) -> CMatrix {
        if self.basis.is_empty() {
            return matrix::zeros(self.ambient, self.ambient);
        }
        let v = nalgebra::DVector::from_iterator(x.len(), x.iter().copied());
        let coeffs = self.stacked.adjoint() * &v;
        let p = &self.stacked * coeffs;
        CMatrix::from_column_slice(self.ambient, self.ambient, p.as_slice())
    }

    /// Blockwise HS projection of `x` in `M_k(M_N)` onto `M_k(span)`.
    pub fn project_blocks(&self, x: &CMatrix) -> CMatrix {
        let n = self.ambient;
        let k = x.nrows() / n;
        let mut out = matrix::zeros(x.nrows(), x.ncols());
        for a in 0..k {
            for b in 0..k {
                let blk = x.view((a * n, b * n), (n, n)).into_owned();
                out.view_mut((a * n, b * n), (n, n)).copy_from(&self.project(&blk));
            }
        }
        out
    }

    pub fn hs_residual(&self, x: &CMatrix) -> f64 {
        hs_norm(&(x - self.project(x)))
    }

    pub fn contains(&self, x: &CMatrix, tol: &Tol) -> bool {
        self.hs_residual(x) <= tol.membership_tol * hs_norm(x).max(1.0)
    }

    pub fn scaled_identity_in_span(&self, tol: &Tol) -> bool {
        self.contains(&eye(self.ambient), tol)
    }
}

/// HS projection of `x` onto `s` and the operator norm of the residual.
pub fn nearest(x: &CMatrix, s: &Subspace) -> Result<(CMatrix, f64)> {
    s.check_shape(x)?;
    let p = s.project(x);
    let r = norm(&(x - &p));
    Ok((p, r))
}

/// One-sided membership test: true when the HS witness lies within `eps`.
pub fn eps_in(x: &CMatrix, s: &Subspace, eps: f64) -> Result<(bool, CMatrix, f64)> {
    let (p, r) = nearest(x, s)?;
    Ok((r <= eps, p, r))
}

/// Subspace containing `x0`, adjoining m-th roots of the positive parts of each basis element.
pub fn enlarge_subspace(x0: &Subspace, n_pow: usize, tol: &Tol) -> Result<Subspace> {
    if n_pow < 2 {
        return Err(Error::InvalidInput("root degree bound must be at least 2".into()));
    }
    let mut mats: Vec<CMatrix> = x0.basis().to_vec();
    for x in x0.basis() {
        let xs = x / c(norm(x), 0.0);
        let re = (&xs + xs.adjoint()) * c(0.5, 0.0);
        let im = (&xs - xs.adjoint()) * c(0.0, -0.5);
        let (rp, rn) = matrix::pos_neg_parts(&re);
        let (ip, inn) = matrix::pos_neg_parts(&im);
        for part in [rp, rn, ip, inn] {
            let s = norm(&part);
            if s <= 1e-14 {
                continue;
            }
            let a = part / c(s, 0.0);
            for m in 1..=(n_pow + 1) {
                let r = matrix::psd_root(&a, m as u32);
                if !matrix::is_finite(&r) {
                    return Err(Error::DefectiveMatrix(f64::INFINITY));
                }
                mats.push(r);
            }
        }
    }
    Subspace::from_spanning(x0.ambient_dim(), &mats, tol)
}

impl Subalg {
    /// The *-algebra generated by `generators`.
    pub fn from_basis(ambient: usize, generators: &[CMatrix], tol: &Tol) -> Result<Self> {
        let mut gens: Vec<CMatrix> = generators.to_vec();
        gens.extend(generators.iter().map(|g| g.adjoint()));
        let mut space = Subspace::from_spanning(ambient, &gens, tol)?;
        let limit = ambient * ambient + 1;
        for _ in 0..limit {
            let mut mats = space.basis().to_vec();
            for a in space.basis() {
                for b in space.basis() {
                    mats.push(a * b);
                }
            }
            let next = Subspace::from_spanning(ambient, &mats, tol)?;
            if next.dim() == space.dim() {
                return Self::checked(next, tol);
            }
            space = next;
        }
        Err(Error::ClosureFailure(format!("dimension still growing after {limit} rounds")))
    }

    /// Wraps a subspace after verifying closure under adjoint and product.
    pub fn checked(space: Subspace, tol: &Tol) -> Result<Self> {
        let unital = space.scaled_identity_in_span(tol);
        let alg = Subalg { space, unital };
        let r = alg.closure_residual();
        if r > tol.membership_tol.max(1e-9) * 10.0 {
            return Err(Error::ClosureFailure(format!("closure residual {r:e}")));
        }
        Ok(alg)
    }

    pub fn full(n: usize) -> Self {
        let basis = (0..n).flat_map(|i| (0..n).map(move |j| unit(n, i, j))).collect();
        Subalg { space: Subspace::from_orthonormal(n, basis), unital: true }
    }

    pub fn diagonal(n: usize) -> Self {
        let basis = (0..n).map(|i| unit(n, i, i)).collect();
        Subalg { space: Subspace::from_orthonormal(n, basis), unital: true }
    }

    pub fn zero(n: usize) -> Self {
        Subalg { space: Subspace::zero(n), unital: false }
    }

    /// M_a tensor 1_b inside M_{ab}.
    pub fn left_tensor_factor(a: usize, b: usize) -> Self {
        let s = c(1.0 / (b as f64).sqrt(), 0.0);
        let basis = (0..a)
            .flat_map(|i| (0..a).map(move |j| (i, j)))
            .map(|(i, j)| kron(&unit(a, i, j), &eye(b)) * s)
            .collect();
        Subalg { space: Subspace::from_orthonormal(a * b, basis), unital: true }
    }

    /// w S w^-1 for an invertible w.
    pub fn conjugated(&self, w: &CMatrix, tol: &Tol) -> Result<Self> {
        let winv = matrix::invert(w, tol)?;
        let mats: Vec<CMatrix> = self.basis().iter().map(|b| w * b * &winv).collect();
        let space = Subspace::from_spanning(self.ambient_dim(), &mats, tol)?;
        Self::checked(space, tol)
    }

    pub fn space(&self) -> &Subspace {
        &self.space
    }

    pub fn ambient_dim(&self) -> usize {
        self.space.ambient
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn basis(&self) -> &[CMatrix] {
        self.space.basis()
    }

    pub fn is_unital_in_ambient(&self) -> bool {
        self.unital
    }

    /// Largest HS distance of adjoints and pairwise products of basis elements to the span.
    pub fn closure_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in self.basis() {
            worst = worst.max(self.space.hs_residual(&a.adjoint()));
            for b in self.basis() {
                worst = worst.max(self.space.hs_residual(&(a * b)));
            }
        }
        worst
    }

    pub fn unitize(&self, tol: &Tol) -> Result<Self> {
        if self.unital {
            return Ok(self.clone());
        }
        let mut mats = self.basis().to_vec();
        mats.push(eye(self.ambient_dim()));
        let space = Subspace::from_spanning(self.ambient_dim(), &mats, tol)?;
        Self::checked(space, tol)
    }

    /// M_n(S) inside M_{nN}.
    pub fn amplify(&self, n: usize) -> Self {
        let basis = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .flat_map(|(i, j)| self.basis().iter().map(move |b| kron(&unit(n, i, j), b)))
            .collect();
        Subalg {
            space: Subspace::from_orthonormal(n * self.ambient_dim(), basis),
            unital: self.unital,
        }
    }

    /// S tensor M_m inside M_{Nm}.
    pub fn tensor_with_full(&self, m: usize) -> Self {
        let basis = self
            .basis()
            .iter()
            .flat_map(|b| {
                (0..m)
                    .flat_map(move |i| (0..m).map(move |j| (i, j)))
                    .map(move |(i, j)| kron(b, &unit(m, i, j)))
            })
            .collect();
        Subalg {
            space: Subspace::from_orthonormal(m * self.ambient_dim(), basis),
            unital: self.unital,
        }
    }

    /// Subspace intersection, refusing singular values close to the cutoff.
    pub fn intersect(&self, other: &Subalg, tol: &Tol) -> Result<Self> {
        if self.ambient_dim() != other.ambient_dim() {
            return Err(Error::InvalidInput("intersection of algebras in different ambients".into()));
        }
        let n = self.ambient_dim();
        if self.dim() == 0 || other.dim() == 0 {
            return Ok(Subalg::zero(n));
        }
        let comp: Vec<CMatrix> = self.basis().iter().map(|b| b - other.space.project(b)).collect();
        let m = stack(n, &comp);
        let (s, v) = svd_right(&m);
        let cutoff = tol.rank_rel_tol;
        let mut keep = vec![];
        for (k, sv) in s.iter().enumerate() {
            if *sv > cutoff / 10.0 && *sv < cutoff * 10.0 {
                return Err(Error::AmbiguousIntersection { value: *sv, cutoff });
            }
            if *sv <= cutoff {
                keep.push(k);
            }
        }
        let mats: Vec<CMatrix> = keep
            .iter()
            .map(|&k| {
                let coeffs: Vec<C64> = v.column(k).iter().copied().collect();
                self.space.combine(&coeffs)
            })
            .collect();
        let space = Subspace::from_spanning(n, &mats, tol)?;
        Self::checked(space, tol)
    }

    pub fn contains(&self, x: &CMatrix, tol: &Tol) -> bool {
        self.space.contains(x, tol)
    }
}

/// HS Gram matrix of a list of matrices.
pub fn gram(mats: &[CMatrix]) -> CMatrix {
    CMatrix::from_fn(mats.len(), mats.len(), |i, j| matrix::hs_inner(&mats[i], &mats[j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{approx_eq, diag_real, real, rotation};

    fn tol() -> Tol {
        Tol::default()
    }

    #[test]
    fn from_basis_examples() {
        let s = Subalg::from_basis(2, &[unit(2, 0, 0)], &tol()).unwrap();
        assert_eq!(s.dim(), 1);
        let s = Subalg::from_basis(2, &[unit(2, 0, 1)], &tol()).unwrap();
        assert_eq!(s.dim(), 4);
        let s = Subalg::from_basis(2, &[eye(2)], &tol()).unwrap();
        assert_eq!(s.dim(), 1);
        assert!(s.is_unital_in_ambient());
    }

    #[test]
    fn nearest_examples() {
        let diag = Subalg::diagonal(2);
        let (p, r) = nearest(&unit(2, 0, 0), diag.space()).unwrap();
        assert!(approx_eq(&p, &unit(2, 0, 0), 1e-15) && r < 1e-15);
        let (p, r) = nearest(&unit(2, 0, 1), diag.space()).unwrap();
        assert!(approx_eq(&p, &matrix::zeros(2, 2), 1e-15) && (r - 1.0).abs() < 1e-14);
        let x = unit(2, 0, 0) + unit(2, 0, 1) * c(0.1, 0.0);
        let (p, r) = nearest(&x, diag.space()).unwrap();
        assert!(approx_eq(&p, &unit(2, 0, 0), 1e-15) && (r - 0.1).abs() < 1e-14);
        assert!(eps_in(&x, diag.space(), 0.5).unwrap().0);
        assert!(!eps_in(&x, diag.space(), 0.05).unwrap().0);
    }

    #[test]
    fn nearest_rejects_wrong_shape() {
        let diag = Subalg::diagonal(2);
        assert!(matches!(nearest(&eye(3), diag.space()), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn unitize_examples() {
        let s = Subalg::from_basis(2, &[unit(2, 0, 0)], &tol()).unwrap();
        let u = s.unitize(&tol()).unwrap();
        assert_eq!(u.dim(), 2);
        assert!(u.contains(&unit(2, 1, 1), &tol()));
        assert_eq!(Subalg::full(2).unitize(&tol()).unwrap().dim(), 4);
        let scal = Subalg::from_basis(2, &[eye(2)], &tol()).unwrap();
        assert_eq!(scal.unitize(&tol()).unwrap().dim(), 1);
    }

    #[test]
    fn amplify_examples() {
        let scal = Subalg::from_basis(1, &[eye(1)], &tol()).unwrap();
        assert_eq!(scal.amplify(2).dim(), 4);
        assert_eq!(Subalg::full(2).amplify(1).dim(), 4);
        let a = Subalg::diagonal(2).amplify(2);
        assert_eq!(a.dim(), 8);
        assert!(a.closure_residual() < 1e-12);
    }

    fn twisted_w() -> CMatrix {
        kron(&unit(2, 0, 0), &eye(2)) + kron(&unit(2, 1, 1), &rotation(std::f64::consts::PI / 5.0))
    }

    #[test]
    fn intersect_examples() {
        let d = Subalg::diagonal(2);
        assert_eq!(d.intersect(&d, &tol()).unwrap().dim(), 2);
        let scal = Subalg::from_basis(2, &[eye(2)], &tol()).unwrap();
        let i = d.intersect(&scal, &tol()).unwrap();
        assert_eq!(i.dim(), 1);
        assert!(i.contains(&eye(2), &tol()));

        let cc = Subalg::left_tensor_factor(2, 2);
        let dd = cc.conjugated(&twisted_w(), &tol()).unwrap();
        let cd = cc.intersect(&dd, &tol()).unwrap();
        assert_eq!(cd.dim(), 2);
        assert!(cd.contains(&kron(&unit(2, 0, 0), &eye(2)), &tol()));
        assert!(cd.contains(&kron(&unit(2, 1, 1), &eye(2)), &tol()));
    }

    #[test]
    fn intersection_oracle_by_containment_equations() {
        // x = A tensor 1 lies in w(M_2 tensor 1)w* iff its off-diagonal blocks
        // commute with R, which forces them to vanish for R = R(pi/5).
        let r = rotation(std::f64::consts::PI / 5.0);
        let comm = |b: &CMatrix| norm(&(b * &r - &r * b));
        assert!(comm(&eye(2)) < 1e-15);
        assert!(comm(&real(2, 2, &[0.0, 1.0, 0.0, 0.0])) > 0.1);
    }

    #[test]
    fn enlarge_examples() {
        let p = Subspace::from_spanning(2, &[unit(2, 0, 0)], &tol()).unwrap();
        let e = enlarge_subspace(&p, 2, &tol()).unwrap();
        assert!(e.contains(&unit(2, 0, 0), &tol()));
        let x = Subspace::from_spanning(2, &[diag_real(&[4.0, 1.0])], &tol()).unwrap();
        let e = enlarge_subspace(&x, 2, &tol()).unwrap();
        assert!(e.contains(&diag_real(&[2.0, 1.0]), &tol()));
        assert!(e.contains(&diag_real(&[4f64.powf(1.0 / 3.0), 1.0]), &tol()));
        let z = Subspace::zero(2);
        assert_eq!(enlarge_subspace(&z, 2, &tol()).unwrap().dim(), 0);
    }

    #[test]
    fn tensor_with_full_dims() {
        assert_eq!(Subalg::diagonal(2).tensor_with_full(2).dim(), 8);
        assert_eq!(Subalg::full(2).tensor_with_full(1).dim(), 4);
        let s = Subalg::from_basis(2, &[unit(2, 0, 0)], &tol()).unwrap().tensor_with_full(3);
        assert_eq!(s.dim(), 9);
    }

    #[test]
    fn project_blocks_matches_amplified_projection() {
        let s = Subalg::diagonal(2);
        let mut r = crate::random::rng(3);
        let x = crate::random::gaussian(&mut r, 4, 4);
        let a = s.amplify(2);
        assert!(approx_eq(&s.space().project_blocks(&x), &a.space().project(&x), 1e-13));
    }
}
