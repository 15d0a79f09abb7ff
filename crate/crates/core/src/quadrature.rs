//! Gauss–Legendre panels on a geometrically graded mesh of `(0, 1]`, with
//! panel-local differentiation and cumulative integration.

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::model::QuadratureParams;

/// Scalars the mesh operators act on (`f64` and `C64`).
pub trait Scalar: Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}
impl<T> Scalar for T where T: Copy + Default + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T> {}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Finite-difference weights for the first derivative at `x0` (Fornberg).
pub fn fornberg_first(x0: f64, xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let m = 1;
    let mut c = vec![vec![vec![0.0; n]; n]; m + 1];
    c[0][0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i][i] = c1 * (k as f64 * c[k - 1][i - 1][i - 1] - c5 * c[k][i - 1][i - 1]) / c2;
                }
                c[0][i][i] = -c1 * c5 * c[0][i - 1][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][i][j] = (c4 * c[k][i - 1][j] - k as f64 * c[k - 1][i - 1][j]) / c3;
            }
            c[0][i][j] = c4 * c[0][i - 1][j] / c3;
        }
        c1 = c2;
    }
    (0..n).map(|j| c[1][n - 1][j]).collect()
}

/// How sampled sections are differentiated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    /// Five-point stencils, centred where possible, one-sided at panel edges.
    Fourth,
    /// Derivative of the full panel interpolant.
    Panel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
    pub start: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradedMesh {
    pub nodes: Vec<f64>,
    /// Weights for `∫ f dr`.
    pub weights: Vec<f64>,
    pub panels: Vec<Panel>,
    pub per_panel: usize,
    pub r_min: f64,
    ref_nodes: Vec<f64>,
    ref_weights: Vec<f64>,
    diff_fourth: Vec<Vec<(usize, f64)>>,
    diff_panel: Vec<Vec<f64>>,
    cumulative: Vec<Vec<f64>>,
}

impl GradedMesh {
    pub fn new(q: &QuadratureParams) -> Result<Self> {
        let p = q.points_per_panel;
        if p < 4 {
            return Err(Error::MeshTooCoarse(format!("{p} points per panel (need at least 4)")));
        }
        let mut breaks = vec![0.0, q.r_min];
        let mut a = q.r_min;
        loop {
            let b = a * q.panel_ratio;
            if b - a > q.max_panel || b >= 1.0 {
                break;
            }
            breaks.push(b);
            a = b;
        }
        let n_uniform = ((1.0 - a) / q.max_panel).ceil().max(1.0) as usize;
        let h = (1.0 - a) / n_uniform as f64;
        for i in 1..=n_uniform {
            breaks.push(if i == n_uniform { 1.0 } else { a + h * i as f64 });
        }
        let (rx, rw) = gauss_legendre(p);
        let mut nodes = Vec::with_capacity(p * breaks.len());
        let mut weights = Vec::with_capacity(p * breaks.len());
        let mut panels = Vec::new();
        for win in breaks.windows(2) {
            let (a, b) = (win[0], win[1]);
            panels.push(Panel { a, b, start: nodes.len() });
            for k in 0..p {
                nodes.push(a + (b - a) * (rx[k] + 1.0) / 2.0);
                weights.push((b - a) / 2.0 * rw[k]);
            }
        }
        let diff_fourth = (0..p)
            .map(|j| {
                let lo = j.saturating_sub(2).min(p.saturating_sub(5));
                let hi = (lo + 5).min(p);
                let w = fornberg_first(rx[j], &rx[lo..hi]);
                (lo..hi).zip(w).collect()
            })
            .collect();
        let diff_panel = (0..p).map(|j| fornberg_first(rx[j], &rx)).collect();
        let cumulative = (0..p)
            .map(|j| {
                let xj = rx[j];
                (0..p)
                    .map(|k| {
                        (0..p)
                            .map(|q| {
                                let y = -1.0 + (xj + 1.0) * (rx[q] + 1.0) / 2.0;
                                (xj + 1.0) / 2.0 * rw[q] * lagrange(&rx, k, y)
                            })
                            .sum()
                    })
                    .collect()
            })
            .collect();
        Ok(GradedMesh {
            nodes,
            weights,
            panels,
            per_panel: p,
            r_min: q.r_min,
            ref_nodes: rx,
            ref_weights: rw,
            diff_fourth,
            diff_panel,
            cumulative,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫_0^1 f dr`.
    pub fn integrate<T: Scalar>(&self, f: &[T]) -> T {
        f.iter().zip(&self.weights).fold(T::default(), |acc, (v, w)| acc + *v * *w)
    }

    /// `∫_0^1 f r dr`.
    pub fn integrate_rdr<T: Scalar>(&self, f: &[T]) -> T {
        f.iter()
            .zip(self.weights.iter().zip(&self.nodes))
            .fold(T::default(), |acc, (v, (w, r))| acc + *v * (*w * *r))
    }

    /// Panel-local derivative of sampled values.
    pub fn differentiate<T: Scalar>(&self, f: &[T], stencil: Stencil) -> Vec<T> {
        let p = self.per_panel;
        let mut out = vec![T::default(); f.len()];
        for pan in &self.panels {
            let scale = 2.0 / (pan.b - pan.a);
            let s = pan.start;
            for j in 0..p {
                let mut acc = T::default();
                match stencil {
                    Stencil::Fourth => {
                        for &(k, w) in &self.diff_fourth[j] {
                            acc = acc + f[s + k] * w;
                        }
                    }
                    Stencil::Panel => {
                        for (k, w) in self.diff_panel[j].iter().enumerate() {
                            acc = acc + f[s + k] * *w;
                        }
                    }
                }
                out[s + j] = acc * scale;
            }
        }
        out
    }

    /// `∫_0^{r_i} f dr` at every node.
    pub fn cumulative_from_zero<T: Scalar>(&self, f: &[T]) -> Vec<T> {
        let p = self.per_panel;
        let mut out = vec![T::default(); f.len()];
        let mut base = T::default();
        for pan in &self.panels {
            let half = (pan.b - pan.a) / 2.0;
            let s = pan.start;
            for j in 0..p {
                let mut acc = T::default();
                for k in 0..p {
                    acc = acc + f[s + k] * self.cumulative[j][k];
                }
                out[s + j] = base + acc * half;
            }
            let mut full = T::default();
            for k in 0..p {
                full = full + f[s + k] * self.ref_weights[k];
            }
            base = base + full * half;
        }
        out
    }

    /// `∫_{r_i}^1 f dr` at every node.
    pub fn cumulative_to_one<T: Scalar>(&self, f: &[T]) -> Vec<T> {
        let from_zero = self.cumulative_from_zero(f);
        let total = self.integrate(f);
        from_zero.into_iter().map(|v| total - v).collect()
    }

    /// Node indices lying in `[lo, hi]`.
    pub fn nodes_in(&self, lo: f64, hi: f64) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i] >= lo && self.nodes[i] <= hi).collect()
    }

    /// Reference Gauss–Legendre nodes used on every panel.
    pub fn reference_nodes(&self) -> &[f64] {
        &self.ref_nodes
    }
}

fn lagrange(xs: &[f64], k: usize, y: f64) -> f64 {
    let mut v = 1.0;
    for (i, &xi) in xs.iter().enumerate() {
        if i != k {
            v *= (y - xi) / (xs[k] - xi);
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh() -> GradedMesh {
        GradedMesh::new(&QuadratureParams::default()).unwrap()
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(7);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert!((s - 2.0 / 13.0).abs() < 1e-14);
    }

    #[test]
    fn singular_integrand() {
        let m = mesh();
        // ∫ r^{-1/2} dr = 2; the first panel [0, r_min] limits the accuracy
        let f: Vec<f64> = m.nodes.iter().map(|r| r.powf(-0.5)).collect();
        assert!((m.integrate(&f) - 2.0).abs() < 1e-7);
        // ∫ |r^{-1/2} cos r|² r dr
        let g: Vec<f64> = m.nodes.iter().map(|r| r.cos().powi(2) / r).collect();
        let want = 0.5 + (2.0f64).sin() / 4.0;
        assert!((m.integrate_rdr(&g) - want).abs() < 1e-13);
    }

    #[test]
    fn cumulative_matches_antiderivative() {
        let m = mesh();
        let f: Vec<f64> = m.nodes.iter().map(|r| r.powf(0.5)).collect();
        let c = m.cumulative_from_zero(&f);
        for (i, r) in m.nodes.iter().enumerate() {
            assert!((c[i] - 2.0 / 3.0 * r.powf(1.5)).abs() < 1e-13);
        }
    }

    #[test]
    fn fourth_order_stencil() {
        let m = mesh();
        let f: Vec<f64> = m.nodes.iter().map(|r| (3.0 * r).sin()).collect();
        let d = m.differentiate(&f, Stencil::Fourth);
        let err = m.nodes.iter().zip(&d).map(|(r, d)| (d - 3.0 * (3.0 * r).cos()).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
        let d = m.differentiate(&f, Stencil::Panel);
        let err = m.nodes.iter().zip(&d).map(|(r, d)| (d - 3.0 * (3.0 * r).cos()).abs()).fold(0.0, f64::max);
        assert!(err < 1e-11, "{err}");
    }
}
