//! Block decomposition of *-subalgebras of `M_N` and K-theory classes of idempotents.
//!
//! Every finite-dimensional C*-algebra is a direct sum of full matrix
//! algebras. Inside `M_N` the i-th summand acts as `M_{d_i} tensor 1_{m_i}` on
//! the range of a minimal central projection `z_i`. An idempotent over the
//! algebra then has a class given by its normalized rank in each block.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{self, c, eye, herm_eig, kron, norm, range_basis, trace, CMatrix, Tol};
use crate::random;
use crate::star_algebra::{Subalg, Subspace};

#[derive(Debug, Clone)]
pub struct WedderburnData {
    pub ambient: usize,
    /// (matrix size d_i, multiplicity m_i) per block.
    pub blocks: Vec<(usize, usize)>,
    pub central_projections: Vec<CMatrix>,
    /// Isometry `U_i` of shape `N x (d_i m_i)` with `U_i* z_i b z_i U_i = beta(b) tensor 1_{m_i}`.
    pub block_isometries: Vec<CMatrix>,
    /// Index of the block adjoined by unitization, if any.
    pub augmentation: Option<usize>,
}

/// Normalized ranks per block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct K0Vec {
    pub blocks: Vec<(usize, usize)>,
    pub entries: Vec<i64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub augmentation: Option<usize>,
}

impl K0Vec {
    pub fn zero(blocks: Vec<(usize, usize)>, augmentation: Option<usize>) -> Self {
        let n = blocks.len();
        K0Vec { blocks, entries: vec![0; n], augmentation }
    }

    fn check_compatible(&self, other: &K0Vec) -> Result<()> {
        if self.entries.len() != other.entries.len() {
            return Err(Error::InvalidInput("K0 vectors over different block structures".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &K0Vec) -> Result<K0Vec> {
        self.check_compatible(other)?;
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect();
        Ok(K0Vec { entries, ..self.clone() })
    }

    pub fn sub(&self, other: &K0Vec) -> Result<K0Vec> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> K0Vec {
        K0Vec { entries: self.entries.iter().map(|a| -a).collect(), ..self.clone() }
    }

    pub fn scale(&self, k: i64) -> K0Vec {
        K0Vec { entries: self.entries.iter().map(|a| a * k).collect(), ..self.clone() }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|x| *x == 0)
    }

    /// Entry of the unitization block, zero when there is none.
    pub fn augmentation_entry(&self) -> i64 {
        self.augmentation.map(|i| self.entries[i]).unwrap_or(0)
    }

    /// The class with the unitization block removed.
    pub fn reduced(&self) -> K0Vec {
        match self.augmentation {
            None => self.clone(),
            Some(a) => K0Vec {
                blocks: self.blocks.iter().enumerate().filter(|(i, _)| *i != a).map(|(_, b)| *b).collect(),
                entries: self.entries.iter().enumerate().filter(|(i, _)| *i != a).map(|(_, e)| *e).collect(),
                augmentation: None,
            },
        }
    }
}

fn stack_hor(mats: &[CMatrix], n: usize) -> CMatrix {
    let mut s = matrix::zeros(n, n * mats.len());
    for (k, m) in mats.iter().enumerate() {
        s.view_mut((0, k * n), (n, n)).copy_from(m);
    }
    s
}

/// Groups ascending eigenvalues into clusters separated by gaps larger than `gap`.
fn clusters(vals: &[f64], gap: f64) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![];
    for (i, v) in vals.iter().enumerate() {
        match out.last_mut() {
            Some(cl) if (v - vals[*cl.last().unwrap()]).abs() <= gap => cl.push(i),
            _ => out.push(vec![i]),
        }
    }
    out
}

fn self_adjoint_parts(mats: &[CMatrix]) -> Vec<CMatrix> {
    let mut out = vec![];
    for z in mats {
        out.push((z + z.adjoint()) * c(0.5, 0.0));
        out.push((z - z.adjoint()) * c(0.0, -0.5));
    }
    out
}

fn random_combination(r: &mut random::Rng64, mats: &[CMatrix], n: usize) -> CMatrix {
    let mut x = matrix::zeros(n, n);
    for m in mats {
        let g: f64 = random::uniform(r, -1.0, 1.0);
        x += m * c(g, 0.0);
    }
    x
}

/// Center of `s` as a list of spanning matrices.
fn center(s: &Subalg) -> Vec<CMatrix> {
    let basis = s.basis();
    let n = s.ambient_dim();
    let d = basis.len();
    let mut m = matrix::zeros(d * n * n, d);
    for (i, bi) in basis.iter().enumerate() {
        for (j, bj) in basis.iter().enumerate() {
            let com = bi * bj - bj * bi;
            for (r, z) in com.iter().enumerate() {
                m[(j * n * n + r, i)] = *z;
            }
        }
    }
    let (sv, v) = matrix::svd_right(&m);
    let smax = sv.first().copied().unwrap_or(0.0).max(1.0);
    (0..d)
        .filter(|&k| sv[k] <= 1e-7 * smax)
        .map(|k| s.space().combine(&v.column(k).iter().copied().collect::<Vec<_>>()))
        .collect()
}

fn unit_of(s: &Subalg) -> CMatrix {
    let n = s.ambient_dim();
    let u = range_basis(&stack_hor(s.basis(), n), 1e-10);
    &u * u.adjoint()
}

/// Matrix-unit coordinates for one block with central projection `z`.
fn block_isometry(
    s: &Subalg,
    z: &CMatrix,
    d: usize,
    m: usize,
    r: &mut random::Rng64,
    tol: &Tol,
) -> Option<CMatrix> {
    let n = s.ambient_dim();
    let compressed: Vec<CMatrix> = s.basis().iter().map(|b| z * b * z).collect();
    let block = Subspace::from_spanning(n, &compressed, tol).ok()?;
    let zr = range_basis(z, 1e-8);
    let parts = self_adjoint_parts(block.basis());
    for _ in 0..5 {
        let y = random_combination(r, &parts, n);
        let yh = zr.adjoint() * &y * &zr;
        let (vals, vecs) = herm_eig(&yh);
        let scale = norm(&yh).max(1e-12);
        let cl = clusters(&vals, 1e-7 * scale);
        if cl.len() != d || cl.iter().any(|c| c.len() != m) {
            continue;
        }
        let f: Vec<CMatrix> = cl
            .iter()
            .map(|idx| &zr * CMatrix::from_fn(vecs.nrows(), idx.len(), |i, k| vecs[(i, idx[k])]))
            .collect();
        let xi = &f[0];
        let f1 = xi * xi.adjoint();
        let g = random_combination(r, block.basis(), n) + random_combination(r, &parts, n) * c(0.0, 1.0);
        let mut cols = matrix::zeros(n, d * m);
        let mut ok = true;
        for (j, fj) in f.iter().enumerate() {
            let pj = fj * fj.adjoint();
            let x = if j == 0 { f1.clone() } else { &pj * &g * &f1 };
            let nx = norm(&x);
            if nx < 1e-6 {
                ok = false;
                break;
            }
            let e = x / c(nx, 0.0);
            let img = e * xi;
            cols.view_mut((0, j * m), (n, m)).copy_from(&img);
        }
        if !ok {
            continue;
        }
        if norm(&(cols.adjoint() * &cols - eye(d * m))) > 1e-8 {
            continue;
        }
        return Some(cols);
    }
    None
}

/// Central decomposition of `s`; reseeds up to five times on near-degenerate spectra.
pub fn decompose(s: &Subalg, tol: &Tol, seed: u64) -> Result<WedderburnData> {
    let n = s.ambient_dim();
    if s.dim() == 0 {
        return Ok(WedderburnData {
            ambient: n,
            blocks: vec![],
            central_projections: vec![],
            block_isometries: vec![],
            augmentation: None,
        });
    }
    let cen = center(s);
    let r = cen.len();
    let parts = self_adjoint_parts(&cen);
    let one_s = unit_of(s);
    let rest = eye(n) - &one_s;
    let mut last_reason = String::new();
    for attempt in 0..6u64 {
        let mut rng = random::rng(random::substream(seed, attempt));
        let x = random_combination(&mut rng, &parts, n);
        let kappa = 3.0 * (norm(&x) + 1.0);
        let xk = &x + &rest * c(kappa, 0.0);
        let (vals, vecs) = herm_eig(&xk);
        let scale = norm(&xk).max(1.0);
        let cl: Vec<Vec<usize>> = clusters(&vals, 1e-6 * scale)
            .into_iter()
            .filter(|idx| (vals[idx[0]] - kappa).abs() > 0.5)
            .collect();
        if cl.len() != r {
            last_reason = format!("{} spectral clusters for a center of dimension {r}", cl.len());
            continue;
        }
        let spread = cl
            .iter()
            .map(|idx| vals[*idx.last().unwrap()] - vals[idx[0]])
            .fold(0.0, f64::max);
        let mut gaps = vec![];
        for w in cl.windows(2) {
            gaps.push(vals[w[1][0]] - vals[*w[0].last().unwrap()]);
        }
        let min_gap = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_gap.is_finite() && min_gap < 1e3 * spread.max(1e-14) {
            last_reason = format!("eigenvalue gap {min_gap:e} against spread {spread:e}");
            continue;
        }
        let mut blocks = vec![];
        let mut projs = vec![];
        let mut isos = vec![];
        let mut failed = None;
        for idx in &cl {
            let v = CMatrix::from_fn(n, idx.len(), |i, k| vecs[(i, idx[k])]);
            let z = &v * v.adjoint();
            let rank = trace(&z).re.round() as usize;
            let compressed: Vec<CMatrix> = s.basis().iter().map(|b| &z * b * &z).collect();
            let bdim = Subspace::from_spanning(n, &compressed, tol)?.dim();
            let d = (bdim as f64).sqrt().round() as usize;
            if d == 0 || d * d != bdim || !rank.is_multiple_of(d) {
                failed = Some(format!("block of dimension {bdim} and rank {rank}"));
                break;
            }
            let m = rank / d;
            match block_isometry(s, &z, d, m, &mut rng, tol) {
                Some(u) => isos.push(u),
                None => {
                    failed = Some("matrix units not found".into());
                    break;
                }
            }
            blocks.push((d, m));
            projs.push(z);
        }
        if let Some(reason) = failed {
            last_reason = reason;
            continue;
        }
        let w = WedderburnData { ambient: n, blocks, central_projections: projs, block_isometries: isos, augmentation: None };
        let recon = w.reconstruction_residual(s);
        if recon > 1e-8 {
            last_reason = format!("reconstruction residual {recon:e}");
            continue;
        }
        return Ok(w);
    }
    Err(Error::DecompositionFailure(last_reason))
}

/// Decomposition of the unitization, tagging the adjoined block.
pub fn decompose_unitized(s: &Subalg, tol: &Tol, seed: u64) -> Result<WedderburnData> {
    let mut w = decompose(s, tol, seed)?;
    let n = s.ambient_dim();
    let mut rest = eye(n);
    for z in &w.central_projections {
        rest -= z;
    }
    let rank = trace(&rest).re.round() as usize;
    if rank > 0 {
        let iso = range_basis(&rest, 1e-8);
        w.blocks.push((1, rank));
        w.central_projections.push(rest);
        w.block_isometries.push(iso);
        w.augmentation = Some(w.blocks.len() - 1);
    }
    Ok(w)
}

impl WedderburnData {
    pub fn reconstruction_residual(&self, s: &Subalg) -> f64 {
        s.basis()
            .iter()
            .map(|b| {
                let mut sum = matrix::zeros(self.ambient, self.ambient);
                for z in &self.central_projections {
                    sum += z * b * z;
                }
                norm(&(b - sum))
            })
            .fold(0.0, f64::max)
    }

    /// Decomposition data for `M_k` over the algebra.
    pub fn amplify(&self, k: usize) -> WedderburnData {
        if k == 1 {
            return self.clone();
        }
        let ik = eye(k);
        WedderburnData {
            ambient: self.ambient * k,
            blocks: self.blocks.iter().map(|(d, m)| (d * k, *m)).collect(),
            central_projections: self.central_projections.iter().map(|z| kron(&ik, z)).collect(),
            block_isometries: self.block_isometries.iter().map(|u| kron(&ik, u)).collect(),
            augmentation: self.augmentation,
        }
    }

    /// Block signature of the unamplified algebra.
    pub fn signature(&self) -> Vec<(usize, usize)> {
        self.blocks.clone()
    }

    fn at_size(&self, size: usize) -> Result<WedderburnData> {
        if !size.is_multiple_of(self.ambient) {
            return Err(Error::InvalidInput(format!(
                "matrix of size {size} is not over M_{}",
                self.ambient
            )));
        }
        Ok(self.amplify(size / self.ambient))
    }

    /// `beta_i(x)` for an element of the (amplified) algebra.
    fn block_part(&self, i: usize, x: &CMatrix) -> CMatrix {
        let (d, m) = self.blocks[i];
        let u = &self.block_isometries[i];
        let full = u.adjoint() * x * u;
        CMatrix::from_fn(d, d, |a, b| full[(a * m, b * m)])
    }
}

/// Normalized rank per block of an idempotent over `M_k` of the algebra described by `w`.
///
/// The block signature reported is that of the unamplified algebra.
pub fn k0_class(e: &CMatrix, w: &WedderburnData) -> Result<K0Vec> {
    let wk = w.at_size(e.nrows())?;
    let defect = norm(&(e * e - e));
    if defect > 1e-6 {
        return Err(Error::NotAClass(format!("idempotent defect {defect:e}")));
    }
    let mut block_sum = matrix::zeros(e.nrows(), e.ncols());
    for z in &wk.central_projections {
        block_sum += z * e * z;
    }
    let off = norm(&(e - &block_sum));
    if off > 1e-6 * norm(e).max(1.0) {
        return Err(Error::NotAClass(format!("idempotent leaves the block structure by {off:e}")));
    }
    let mut entries = vec![];
    for (i, z) in wk.central_projections.iter().enumerate() {
        let t = trace(&(z * e * z));
        let rounded = t.re.round();
        if (t.re - rounded).abs() > 1e-6 || t.im.abs() > 1e-6 {
            return Err(Error::NotAClass(format!("non-integral rank {} in block {i}", t.re)));
        }
        let rank = rounded as i64;
        let m = wk.blocks[i].1 as i64;
        if rank % m != 0 {
            return Err(Error::NotAClass(format!("rank {rank} not divisible by multiplicity {m}")));
        }
        entries.push(rank / m);
    }
    Ok(K0Vec { blocks: w.blocks.clone(), entries, augmentation: w.augmentation })
}

/// Range and kernel basis adapted to an idempotent.
fn adapted_basis(e: &CMatrix) -> Result<CMatrix> {
    let n = e.nrows();
    let r = range_basis(e, 1e-9);
    let k = range_basis(&(eye(n) - e), 1e-9);
    if r.ncols() + k.ncols() != n {
        return Err(Error::NotAClass("range and kernel do not span".into()));
    }
    let mut s = matrix::zeros(n, n);
    s.view_mut((0, 0), r.shape()).copy_from(&r);
    s.view_mut((0, r.ncols()), k.shape()).copy_from(&k);
    Ok(s)
}

/// Invertible `w` in `M_{k+l}` of the algebra with `w (e + 1_l) w^-1 = f + 1_l`.
///
/// `w` must describe the unitized algebra. Returns the witness and `l`.
pub fn similarity_witness(e: &CMatrix, f: &CMatrix, w: &WedderburnData, tol: &Tol) -> Result<(CMatrix, usize)> {
    if e.shape() != f.shape() {
        return Err(Error::InvalidInput("idempotents of different sizes".into()));
    }
    let ce = k0_class(e, w)?;
    let cf = k0_class(f, w)?;
    if ce != cf {
        return Err(Error::NotEquivalent(format!("classes {:?} and {:?}", ce.entries, cf.entries)));
    }
    let wk = w.at_size(e.nrows())?;
    let l = ce
        .entries
        .iter()
        .zip(&cf.entries)
        .zip(&wk.blocks)
        .map(|((a, b), (_, m))| {
            let deficit = ((a - b) * *m as i64).unsigned_abs() as usize;
            deficit.div_ceil(*m)
        })
        .max()
        .unwrap_or(0);
    let (e, f, wk) = if l > 0 {
        let el = matrix::dsum(e, &eye(l * w.ambient));
        let fl = matrix::dsum(f, &eye(l * w.ambient));
        let wl = w.at_size(el.nrows())?;
        (el, fl, wl)
    } else {
        (e.clone(), f.clone(), wk)
    };
    let size = e.nrows();
    let mut out = matrix::zeros(size, size);
    let mut covered = matrix::zeros(size, size);
    for i in 0..wk.blocks.len() {
        let (d, m) = wk.blocks[i];
        let se = adapted_basis(&wk.block_part(i, &e))?;
        let sf = adapted_basis(&wk.block_part(i, &f))?;
        let wb = &sf * matrix::invert(&se, tol)?;
        let u = &wk.block_isometries[i];
        out += u * kron(&wb, &eye(m)) * u.adjoint();
        covered += &wk.central_projections[i];
        debug_assert_eq!(u.ncols(), d * m);
    }
    out += eye(size) - covered;
    let winv = matrix::invert(&out, tol)?;
    let resid = norm(&(&out * &e * &winv - &f));
    if resid > 1e-8 * norm(&f).max(1.0) {
        return Err(Error::NotEquivalent(format!("similarity residual {resid:e}")));
    }
    Ok((out, l))
}

/// Telescoping conjugator carrying the first idempotent of a fine path to the last.
pub fn path_to_similarity(path: &[CMatrix], tol: &Tol) -> Result<CMatrix> {
    let first = path.first().ok_or_else(|| Error::InvalidInput("empty idempotent path".into()))?;
    let n = first.nrows();
    let one = eye(n);
    let reflections: Vec<CMatrix> = path.iter().map(|e| e * c(2.0, 0.0) - &one).collect();
    let bound = reflections.iter().map(norm).fold(0.0, f64::max);
    let mut z = one.clone();
    for i in 0..path.len().saturating_sub(1) {
        let step = norm(&(&path[i + 1] - &path[i]));
        if step >= 1.0 / (2.0 * bound) {
            return Err(Error::PathTooCoarse(i));
        }
        let zi = (&reflections[i + 1] * &reflections[i] + &one) * c(0.5, 0.0);
        z = zi * z;
    }
    let zinv = matrix::invert(&z, tol)?;
    let last = path.last().unwrap();
    let resid = norm(&(&z * first * zinv - last));
    if resid > 1e-6 {
        return Err(Error::PathTooCoarse(path.len() - 1));
    }
    Ok(z)
}
