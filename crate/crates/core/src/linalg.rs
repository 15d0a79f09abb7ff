//! Complex linear algebra on the fibre `C^d (f-slot) ⊕ C^d (g-slot)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Relative singular-value threshold used to decide numerical rank.
pub const RANK_TOL: f64 = 1e-9;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `J(f, g) = (-g, f)` on `C^d ⊕ C^d`.
pub fn j_matrix(d: usize) -> CMat {
    let mut m = CMat::zeros(2 * d, 2 * d);
    for i in 0..d {
        m[(i, d + i)] = real(-1.0);
        m[(d + i, i)] = real(1.0);
    }
    m
}

/// Kronecker product `a ⊗ I_d` for a 2x2 block pattern, in (f-block, g-block) ordering.
pub fn block_tensor(a: &CMat, d: usize) -> CMat {
    let (n, m) = a.shape();
    let mut out = CMat::zeros(n * d, m * d);
    for i in 0..n {
        for j in 0..m {
            for k in 0..d {
                out[(i * d + k, j * d + k)] = a[(i, j)];
            }
        }
    }
    out
}

/// Thin singular value decomposition `A = U diag(σ) V^H`, `σ` descending.
/// Columns of `U` belonging to zero singular values are zero.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMat,
    pub sigma: Vec<f64>,
    pub v: CMat,
}

/// One-sided Jacobi SVD. Accurate for rank-deficient input, where the
/// closed-form 2x2 step of the bidiagonal solver in nalgebra 0.33 is not.
pub fn svd(a: &CMat) -> Svd {
    let (m, n) = a.shape();
    if m < n {
        let t = svd(&a.adjoint());
        return Svd { u: t.v, sigma: t.sigma, v: t.u };
    }
    let mut g = a.clone();
    let mut v = CMat::identity(n, n);
    for _ in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = g.column(p).norm_squared();
                let beta = g.column(q).norm_squared();
                let gamma = g.column(p).dotc(&g.column(q));
                let gn = gamma.norm();
                if gn == 0.0 || gn <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // make the pairing real, then rotate
                let ph = gamma.conj() / gn;
                let gq = g.column(q) * ph;
                g.set_column(q, &gq);
                let vq = v.column(q) * ph;
                v.set_column(q, &vq);
                let zeta = (beta - alpha) / (2.0 * gn);
                let t = if zeta >= 0.0 { 1.0 } else { -1.0 } / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for mat in [&mut g, &mut v] {
                    for i in 0..mat.nrows() {
                        let (x, y) = (mat[(i, p)], mat[(i, q)]);
                        mat[(i, p)] = x * cs - y * sn;
                        mat[(i, q)] = x * sn + y * cs;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| g.column(j).norm()).collect();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap());
    let mut u = CMat::zeros(m, n);
    let mut vs = CMat::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (j, &i) in idx.iter().enumerate() {
        sigma.push(norms[i]);
        if norms[i] > 0.0 {
            u.set_column(j, &(g.column(i) / real(norms[i])));
        }
        vs.set_column(j, &v.column(i));
    }
    Svd { u, sigma, v: vs }
}

/// Number of singular values above `tol * max(1, σ_max)`.
pub fn numerical_rank(m: &CMat, tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = svd(m).sigma;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > tol * smax.max(1e-300)).count()
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    svd(m).sigma
}

/// A subspace of `C^n` stored as an orthonormal column basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: CMat,
}

impl Subspace {
    pub fn zero(n: usize) -> Self {
        Subspace { basis: CMat::zeros(n, 0) }
    }

    pub fn full(n: usize) -> Self {
        Subspace { basis: CMat::identity(n, n) }
    }

    /// Column span of `vectors`, orthonormalised by SVD.
    pub fn span(vectors: &CMat) -> Self {
        let n = vectors.nrows();
        if vectors.ncols() == 0 || n == 0 {
            return Subspace::zero(n);
        }
        let scale = vectors.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return Subspace::zero(n);
        }
        let dec = svd(vectors);
        let smax = dec.sigma.first().cloned().unwrap_or(0.0);
        let k = dec.sigma.iter().filter(|&&s| s > RANK_TOL * smax).count();
        let basis = dec.u.columns(0, k).into_owned();
        Subspace { basis }.canonical()
    }

    /// Accepts an already orthonormal basis (checked to 1e-12).
    pub fn from_orthonormal(basis: CMat) -> Result<Self> {
        let k = basis.ncols();
        let gram = basis.adjoint() * &basis;
        let err = (gram - CMat::identity(k, k)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if err > 1e-12 {
            return Err(Error::InvalidConfig(format!("basis not orthonormal (defect {err:.2e})")));
        }
        Ok(Subspace { basis })
    }

    pub fn from_vector(v: &CVec) -> Self {
        Subspace::span(&CMat::from_column_slice(v.len(), 1, v.as_slice()))
    }

    pub fn ambient(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    pub fn projector(&self) -> CMat {
        &self.basis * self.basis.adjoint()
    }

    /// Orthogonal complement.
    pub fn complement(&self) -> Self {
        let n = self.ambient();
        if self.dim() == 0 {
            return Subspace::full(n);
        }
        if self.dim() == n {
            return Subspace::zero(n);
        }
        let q = CMat::identity(n, n) - self.projector();
        let sub = Subspace::span(&q);
        // the span may pick up round-off directions; keep exactly n - k
        if sub.dim() != n - self.dim() {
            let basis = svd(&q).u.columns(0, n - self.dim()).into_owned();
            return Subspace { basis }.canonical();
        }
        sub
    }

    pub fn sum(&self, other: &Subspace) -> Self {
        let n = self.ambient();
        let mut m = CMat::zeros(n, self.dim() + other.dim());
        for j in 0..self.dim() {
            m.set_column(j, &self.basis.column(j));
        }
        for j in 0..other.dim() {
            m.set_column(self.dim() + j, &other.basis.column(j));
        }
        Subspace::span(&m)
    }

    pub fn intersection(&self, other: &Subspace) -> Self {
        self.complement().sum(&other.complement()).complement()
    }

    /// Image under a linear map.
    pub fn map(&self, m: &CMat) -> Self {
        Subspace::span(&(m * &self.basis))
    }

    pub fn contains(&self, v: &CVec, tol: f64) -> bool {
        let r = v - self.projector() * v;
        r.norm() <= tol * v.norm().max(1e-300)
    }

    /// Equality of subspaces through their projectors.
    pub fn approx_eq(&self, other: &Subspace, tol: f64) -> bool {
        if self.ambient() != other.ambient() || self.dim() != other.dim() {
            return false;
        }
        let d = self.projector() - other.projector();
        d.iter().map(|z| z.norm()).fold(0.0, f64::max) <= tol
    }

    /// `V ⊗ C^d` for `V ⊂ C^2`, in (f-block, g-block) ordering.
    pub fn tensor(&self, d: usize) -> Self {
        Subspace::span(&block_tensor(&self.basis, d))
    }

    /// Recovers `V ⊂ C^2` if `self = V ⊗ C^d`.
    pub fn fiber_factor(&self, d: usize) -> Option<Subspace> {
        if self.ambient() != 2 * d {
            return None;
        }
        let p = self.projector();
        let mut pv = CMat::zeros(2, 2);
        for a in 0..2 {
            for b in 0..2 {
                pv[(a, b)] = p[(a * d, b * d)];
            }
        }
        let err = (block_tensor(&pv, d) - &p).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if err > 1e-10 {
            return None;
        }
        let v = Subspace::span(&pv);
        if v.dim() * d != self.dim() {
            return None;
        }
        Some(v)
    }

    /// Fixes the phase of each column so its largest entry is real and positive.
    fn canonical(self) -> Self {
        let mut basis = self.basis;
        for j in 0..basis.ncols() {
            let col = basis.column(j);
            let mut best = 0;
            for i in 0..col.len() {
                if col[i].norm() > col[best].norm() + 1e-12 {
                    best = i;
                }
            }
            let p = col[best];
            if p.norm() > 0.0 {
                let phase = p.conj() / p.norm();
                let scaled = basis.column(j) * phase;
                basis.set_column(j, &scaled);
            }
        }
        Subspace { basis }
    }
}

/// Column-normalises a matrix (zero columns are left alone).
pub fn normalize_columns(m: &CMat) -> CMat {
    let mut out = m.clone();
    for j in 0..m.ncols() {
        let n = m.column(j).norm();
        if n > 0.0 {
            let c = m.column(j) / real(n);
            out.set_column(j, &c);
        }
    }
    out
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v2(a: C64, b: C64) -> CVec {
        CVec::from_vec(vec![a, b])
    }

    #[test]
    fn j_squares_to_minus_one() {
        let j = j_matrix(3);
        let jj = &j * &j;
        assert!(max_abs(&(jj + CMat::identity(6, 6))) < 1e-15);
    }

    #[test]
    fn complement_and_intersection() {
        let a = Subspace::from_vector(&v2(real(1.0), real(1.0)));
        let b = Subspace::from_vector(&v2(real(1.0), real(-1.0)));
        assert!(a.complement().approx_eq(&b, 1e-14));
        assert_eq!(a.intersection(&b).dim(), 0);
        assert_eq!(a.sum(&b).dim(), 2);
        assert_eq!(a.intersection(&a).dim(), 1);
    }

    #[test]
    fn fiber_factor_recovers_line() {
        let v = Subspace::from_vector(&v2(real(0.6), c(0.0, 0.8)));
        let t = v.tensor(3);
        assert_eq!(t.dim(), 3);
        assert!(t.fiber_factor(3).unwrap().approx_eq(&v, 1e-12));
        let mixed = Subspace::from_vector(&CVec::from_vec(vec![real(1.0), real(0.0), real(0.0), real(1.0)]));
        assert!(mixed.fiber_factor(2).is_none());
    }
}
