//! Brute-force eigenvalues of a single mode by finite differences.
//!
//! In `(u, v) = r^{1/2} (f, g)` the mode operator reads
//! `μ σ_z + J ∂ - (ν/r) σ_x` with `ν = λ + 1/2`, acting on `L²(dr)`. A gauge
//! rotation `(u, v) = R(θ(r)) (ũ, ṽ)` with `θ` affine turns the inner and outer
//! line conditions into `ũ = 0` at both ends, at the price of `-θ'` on the
//! diagonal. For `λ ≥ 1/2` the inner condition is `v(0) = 0`, which selects the
//! regular branch. The system is discretised on a staggered grid (`ũ` on integer
//! nodes, `ṽ` on half nodes), giving a symmetric tridiagonal matrix whose
//! eigenvalues are isolated by Sturm bisection.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{CMat, Subspace};
use crate::model::{ModeIndex, OuterBoundaryCondition};

/// Angle `t` with `v ∝ (cos t, sin t)` up to a complex phase.
pub fn real_line_angle(v: &CMat) -> Option<f64> {
    if v.nrows() != 2 || v.ncols() != 1 {
        return None;
    }
    let (a, b) = (v[(0, 0)], v[(1, 0)]);
    let p = if a.norm() >= b.norm() { a } else { b };
    if p.norm() == 0.0 {
        return None;
    }
    let ph = p.conj() / p.norm();
    let (a, b) = (a * ph, b * ph);
    if a.im.abs() > 1e-10 || b.im.abs() > 1e-10 {
        return None;
    }
    Some(b.re.atan2(a.re))
}

fn line_of(s: &Subspace, d: usize, what: &str) -> Result<f64> {
    let v = s
        .fiber_factor(d)
        .ok_or_else(|| Error::IllPosed(format!("{what} condition does not factor over the fibre")))?;
    if v.dim() != 1 {
        return Err(Error::IllPosed(format!("{what} condition has fibre dimension {} (need a line)", v.dim())));
    }
    real_line_angle(v.basis()).ok_or_else(|| Error::IllPosed(format!("{what} condition is not a real line")))
}

struct Tridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl Tridiagonal {
    /// Number of eigenvalues strictly below `x`.
    fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.diag.len() {
            let b2 = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] };
            q = self.diag[i] - x - if i == 0 { 0.0 } else { b2 / q };
            if q == 0.0 {
                q = -1e-300;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn eigen_by_index(&self, j: usize, lo: f64, hi: f64) -> f64 {
        let (mut lo, mut hi) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > j {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// All eigenvalues in `[-k, k)`, ascending.
    fn eigen_in(&self, k: f64) -> Vec<f64> {
        let (a, b) = (self.count_below(-k), self.count_below(k));
        (a..b).map(|j| self.eigen_by_index(j, -k, k)).collect()
    }
}

fn rotation(t: f64) -> [[f64; 2]; 2] {
    let (s, c) = t.sin_cos();
    [[c, -s], [s, c]]
}

/// `R(θ)ᵀ (μ σ_z - (ν/r) σ_x) R(θ) - θ'`.
fn potential(mu: f64, nu: f64, r: f64, theta: f64, dtheta: f64) -> [[f64; 2]; 2] {
    let m = [[mu, -nu / r], [-nu / r, -mu]];
    let q = rotation(theta);
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    acc += q[a][i] * m[a][b] * q[b][j];
                }
            }
            out[i][j] = acc - if i == j { dtheta } else { 0.0 };
        }
    }
    out
}

fn assemble(mu: f64, nu: f64, theta0: f64, theta1: f64, n: usize) -> Tridiagonal {
    let h = 1.0 / n as f64;
    let dt = theta1 - theta0;
    let th = |r: f64| theta0 + dt * r;
    // order: v_{1/2}, u_1, v_{3/2}, ..., u_{n-1}, v_{n-1/2}
    let size = 2 * n - 1;
    let mut diag = vec![0.0; size];
    let mut off = vec![0.0; size - 1];
    for (k, slot) in diag.iter_mut().enumerate() {
        if k % 2 == 0 {
            let r = (k / 2) as f64 * h + 0.5 * h;
            *slot = potential(mu, nu, r, th(r), dt)[1][1];
        } else {
            let r = (k / 2 + 1) as f64 * h;
            *slot = potential(mu, nu, r, th(r), dt)[0][0];
        }
    }
    for (k, slot) in off.iter_mut().enumerate() {
        // entries between positions k and k+1; one is u_i, the other v_{i±1/2}
        let (u_pos, v_pos) = if k % 2 == 0 { (k + 1, k) } else { (k, k + 1) };
        let ru = (u_pos / 2 + 1) as f64 * h;
        let rv = (v_pos / 2) as f64 * h + 0.5 * h;
        let rm = 0.5 * (ru + rv);
        let deriv = if rv > ru { -1.0 / h } else { 1.0 / h };
        *slot = deriv + 0.5 * potential(mu, nu, rm, th(rm), dt)[0][1];
    }
    Tridiagonal { diag, off }
}

fn smallest(t: &Tridiagonal, count: usize, extra: f64) -> Vec<f64> {
    let mut k = 4.0;
    while t.count_below(k) - t.count_below(-k) < count {
        k *= 2.0;
        if k > 1e8 {
            break;
        }
    }
    let mut e = t.eigen_in(k * extra);
    e.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap());
    e
}

/// The `count` eigenvalues of smallest magnitude of mode `mode` with the inner
/// residue subspace `inner` (ignored for `λ ≠ -1/2`, where regularity applies)
/// and the outer condition, from grids of `n_points` and `2 n_points` cells
/// combined by Richardson extrapolation. Eigenvalues repeat `d` times.
pub fn fd_eigen_oracle(
    mode: ModeIndex,
    inner: &Subspace,
    outer: Option<&OuterBoundaryCondition>,
    n_points: usize,
    count: usize,
) -> Result<Vec<f64>> {
    if n_points < 256 {
        return Err(Error::MeshTooCoarse(format!("oracle needs at least 256 points, got {n_points}")));
    }
    let d = mode.mult;
    let outer = outer.ok_or_else(|| Error::IllPosed("no outer condition: the spectrum is not discrete".into()))?;
    let beta = line_of(outer.subspace(), d, "outer")?;
    let theta0 = if mode.is_residue_mode() {
        if inner.dim() == 2 * d {
            return Err(Error::IllPosed("maximal inner condition is under-determined".into()));
        }
        line_of(inner, d, "inner")? - PI / 2.0
    } else {
        // v(0) = 0 excludes the singular branch v ~ r^{-ν}
        PI / 2.0
    };
    let mut theta1 = beta - PI / 2.0;
    theta1 += ((theta0 - theta1) / PI).round() * PI;
    let nu = mode.lambda.value() + 0.5;
    let distinct = count.div_ceil(d);
    let coarse = smallest(&assemble(mode.mu, nu, theta0, theta1, n_points), distinct, 1.5);
    let fine = smallest(&assemble(mode.mu, nu, theta0, theta1, 2 * n_points), distinct, 1.0);
    let mut out = Vec::new();
    for &k2 in fine.iter().take(distinct) {
        let k1 = coarse
            .iter()
            .cloned()
            .min_by(|a, b| (a - k2).abs().partial_cmp(&(b - k2).abs()).unwrap())
            .ok_or_else(|| Error::ConvergenceError("coarse grid lost an eigenvalue".into()))?;
        if (k2 - k1).abs() > 1e-3 * k2.abs().max(1.0) {
            return Err(Error::ConvergenceError(format!("eigenvalue moved from {k1} to {k2} on refinement")));
        }
        let k = k2 + (k2 - k1) / 3.0;
        out.extend(std::iter::repeat(k).take(d));
    }
    out.truncate(count);
    out.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap().then(a.partial_cmp(b).unwrap()));
    Ok(out)
}
