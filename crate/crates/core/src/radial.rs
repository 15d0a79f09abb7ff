//! Per-mode radial problem on `(0, 1]`.
//!
//! A section of mode `(λ, μ)` is a pair `(f, g)` of `C^d`-valued functions, `f`
//! in `E_{λ,μ}` and `g` in `E_{-(λ+1),-μ}`. The mode operator is
//!
//! `M(f, g) = (μ f - (∂ + (λ+1)/r) g, (∂ - λ/r) f - μ g)`,
//!
//! formally symmetric for `∫ ⟨·,·⟩ r dr`, and `J(f, g) = (-g, f)`.
//!
//! Eigen-solutions are written through the entire functions `E_ν(w, r)` with
//! `w = κ² - μ²`: the regular solution is `(E_λ, (μ-κ) E_{λ+1})` and the
//! singular one `((κ+μ) E_{-λ}, E_{-λ-1})`, both normalised to unit leading
//! coefficient. This covers `w > 0`, `w < 0` and `w = 0` without case splits.

use crate::bessel::gamma_half;
use crate::error::{Error, Result};
use crate::halfint::HalfInt;
use crate::jet::Jet;
use crate::linalg::{real, CMat, CVec, C64};
use crate::model::ModeIndex;
use crate::profile::Profile;
use crate::quadrature::{GradedMesh, Stencil};

/// `|κ² - μ²|` below which the pure-power system is used.
pub const DEGENERATE_W: f64 = 1e-10;

/// One closed-form term: `f = coeff · pf(r)`, `g = coeff · pg(r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedTerm {
    pub f: Profile,
    pub g: Profile,
    pub coeff: CVec,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    Closed(Vec<ClosedTerm>),
    /// Values on the nodes of a graded mesh, one row per node.
    Sampled(SampledPair),
}

/// Node values of `(f, g)`, each `n × d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPair {
    pub f: CMat,
    pub g: CMat,
}

impl SampledPair {
    pub fn zeros(n: usize, d: usize) -> Self {
        SampledPair { f: CMat::zeros(n, d), g: CMat::zeros(n, d) }
    }

    pub fn fiber_dim(&self) -> usize {
        self.f.ncols()
    }

    pub fn scaled(&self, s: C64) -> Self {
        SampledPair { f: &self.f * s, g: &self.g * s }
    }

    pub fn add(&self, o: &SampledPair) -> Self {
        SampledPair { f: &self.f + &o.f, g: &self.g + &o.g }
    }

    pub fn sub(&self, o: &SampledPair) -> Self {
        SampledPair { f: &self.f - &o.f, g: &self.g - &o.g }
    }

    /// `∫ Σ conj(a) b r dr` over both slots.
    pub fn inner(&self, mesh: &GradedMesh, o: &SampledPair) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..mesh.len() {
            let wr = mesh.weights[i] * mesh.nodes[i];
            let mut s = C64::new(0.0, 0.0);
            for k in 0..self.fiber_dim() {
                s += self.f[(i, k)].conj() * o.f[(i, k)] + self.g[(i, k)].conj() * o.g[(i, k)];
            }
            acc += s * wr;
        }
        acc
    }

    pub fn norm(&self, mesh: &GradedMesh) -> f64 {
        self.inner(mesh, self).re.max(0.0).sqrt()
    }

    /// Pointwise `Σ_k |f_k|² + |g_k|²`.
    pub fn density(&self) -> Vec<f64> {
        (0..self.f.nrows())
            .map(|i| self.f.row(i).iter().chain(self.g.row(i).iter()).map(|z| z.norm_sqr()).sum())
            .collect()
    }

    /// `(f(1), g(1))` by extrapolating the last panel's interpolant.
    pub fn boundary_value(&self, mesh: &GradedMesh) -> CVec {
        let d = self.fiber_dim();
        let pan = mesh.panels.last().expect("mesh has panels");
        let xs: Vec<f64> = (0..mesh.per_panel).map(|k| mesh.nodes[pan.start + k]).collect();
        let ws: Vec<f64> = (0..xs.len())
            .map(|k| {
                let mut v = 1.0;
                for (i, &xi) in xs.iter().enumerate() {
                    if i != k {
                        v *= (1.0 - xi) / (xs[k] - xi);
                    }
                }
                v
            })
            .collect();
        let mut out = CVec::zeros(2 * d);
        for k in 0..d {
            for (j, w) in ws.iter().enumerate() {
                out[k] += self.f[(pan.start + j, k)] * *w;
                out[d + k] += self.g[(pan.start + j, k)] * *w;
            }
        }
        out
    }
}

/// A section of a single mode.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSection {
    pub mode: ModeIndex,
    pub repr: Representation,
}

impl RadialSection {
    pub fn closed(mode: ModeIndex, terms: Vec<ClosedTerm>) -> Self {
        RadialSection { mode, repr: Representation::Closed(terms) }
    }

    pub fn sampled(mode: ModeIndex, values: SampledPair) -> Self {
        RadialSection { mode, repr: Representation::Sampled(values) }
    }

    pub fn zero(mode: ModeIndex) -> Self {
        RadialSection::closed(mode, Vec::new())
    }

    pub fn fiber_dim(&self) -> usize {
        self.mode.mult
    }

    /// Linear combination `Σ c_i s_i` of closed-form sections of the same mode.
    pub fn combine(mode: ModeIndex, parts: &[(C64, &RadialSection)]) -> Result<Self> {
        let mut terms = Vec::new();
        for (c, s) in parts {
            match &s.repr {
                Representation::Closed(ts) => {
                    terms.extend(ts.iter().map(|t| ClosedTerm { f: t.f.clone(), g: t.g.clone(), coeff: &t.coeff * *c }))
                }
                Representation::Sampled(_) => {
                    return Err(Error::InternalError("combine expects closed-form sections".into()))
                }
            }
        }
        Ok(RadialSection::closed(mode, terms))
    }

    /// Values on the mesh nodes.
    pub fn samples(&self, mesh: &GradedMesh) -> SampledPair {
        match &self.repr {
            Representation::Sampled(s) => s.clone(),
            Representation::Closed(terms) => {
                let d = self.fiber_dim();
                let mut out = SampledPair::zeros(mesh.len(), d);
                for t in terms {
                    for (i, &r) in mesh.nodes.iter().enumerate() {
                        let (pf, pg) = (t.f.value(r), t.g.value(r));
                        for k in 0..d {
                            out.f[(i, k)] += t.coeff[k] * pf;
                            out.g[(i, k)] += t.coeff[k] * pg;
                        }
                    }
                }
                out
            }
        }
    }

    /// `Mφ` on the mesh nodes; closed forms are differentiated analytically.
    pub fn operator_samples(&self, mesh: &GradedMesh, stencil: Stencil) -> SampledPair {
        match &self.repr {
            Representation::Sampled(s) => mode_operator_sampled(self.mode, s, mesh, stencil),
            Representation::Closed(terms) => {
                let d = self.fiber_dim();
                let lam = self.mode.lambda.value();
                let mu = self.mode.mu;
                let mut out = SampledPair::zeros(mesh.len(), d);
                for t in terms {
                    for (i, &r) in mesh.nodes.iter().enumerate() {
                        let (mf, mg) = closed_operator(lam, mu, t.f.jet(r), t.g.jet(r), r);
                        for k in 0..d {
                            out.f[(i, k)] += t.coeff[k] * mf;
                            out.g[(i, k)] += t.coeff[k] * mg;
                        }
                    }
                }
                out
            }
        }
    }

    /// `(f(1), g(1))`.
    pub fn boundary_value(&self, mesh: &GradedMesh) -> CVec {
        match &self.repr {
            Representation::Sampled(s) => s.boundary_value(mesh),
            Representation::Closed(terms) => {
                let d = self.fiber_dim();
                let mut out = CVec::zeros(2 * d);
                for t in terms {
                    let (pf, pg) = (t.f.value(1.0), t.g.value(1.0));
                    for k in 0..d {
                        out[k] += t.coeff[k] * pf;
                        out[d + k] += t.coeff[k] * pg;
                    }
                }
                out
            }
        }
    }

    /// `((Mφ)_f(1), (Mφ)_g(1))`.
    pub fn operator_boundary_value(&self, mesh: &GradedMesh) -> CVec {
        match &self.repr {
            Representation::Sampled(_) => self.operator_samples(mesh, Stencil::Panel).boundary_value(mesh),
            Representation::Closed(terms) => {
                let d = self.fiber_dim();
                let (lam, mu) = (self.mode.lambda.value(), self.mode.mu);
                let mut out = CVec::zeros(2 * d);
                for t in terms {
                    let (mf, mg) = closed_operator(lam, mu, t.f.jet(1.0), t.g.jet(1.0), 1.0);
                    for k in 0..d {
                        out[k] += t.coeff[k] * mf;
                        out[d + k] += t.coeff[k] * mg;
                    }
                }
                out
            }
        }
    }

    pub fn l2_norm(&self, mesh: &GradedMesh) -> f64 {
        self.samples(mesh).norm(mesh)
    }

    /// Graph norm `(‖φ‖² + ‖Mφ‖²)^{1/2}`.
    pub fn graph_norm(&self, mesh: &GradedMesh) -> f64 {
        let a = self.l2_norm(mesh);
        let b = self.operator_samples(mesh, Stencil::Panel).norm(mesh);
        (a * a + b * b).sqrt()
    }

    /// Round-off floor of `|Mφ|²` at each node, from the size of the terms
    /// that cancel inside the operator.
    fn operator_noise(&self, mesh: &GradedMesh) -> Vec<f64> {
        let (lam, mu) = (self.mode.lambda.value(), self.mode.mu);
        let mag = |f: f64, df: f64, g: f64, dg: f64, r: f64| {
            mu.abs() * (f.abs() + g.abs()) + df.abs() + dg.abs() + (lam * f / r).abs() + ((lam + 1.0) * g / r).abs()
        };
        let mut out = vec![0.0; mesh.len()];
        match &self.repr {
            Representation::Closed(terms) => {
                for t in terms {
                    let c = t.coeff.iter().map(|z| z.norm()).sum::<f64>();
                    for (i, &r) in mesh.nodes.iter().enumerate() {
                        let (jf, jg) = (t.f.jet(r), t.g.jet(r));
                        out[i] += c * mag(jf.v, jf.d1, jg.v, jg.d1, r);
                    }
                }
                out.iter().map(|m| (1e-13 * m).powi(2)).collect()
            }
            Representation::Sampled(s) => {
                for k in 0..s.fiber_dim() {
                    let f: Vec<f64> = s.f.column(k).iter().map(|z| z.norm()).collect();
                    let g: Vec<f64> = s.g.column(k).iter().map(|z| z.norm()).collect();
                    let df = twisted_derivative(mesh, &f, Stencil::Panel);
                    let dg = twisted_derivative(mesh, &g, Stencil::Panel);
                    for (i, &r) in mesh.nodes.iter().enumerate() {
                        out[i] += mag(f[i], df[i], g[i], dg[i], r);
                    }
                }
                out.iter().map(|m| (1e-9 * m).powi(2)).collect()
            }
        }
    }

    /// Checks `φ, Mφ ∈ L²(r dr)` near the origin.
    pub fn check_domain(&self, mesh: &GradedMesh) -> Result<()> {
        if l2_divergent(mesh, &self.samples(mesh).density()) {
            return Err(Error::NotInDomain(format!("section of mode {} is not square integrable", self.mode)));
        }
        let m = self.operator_samples(mesh, Stencil::Panel).density();
        let noise = self.operator_noise(mesh);
        if l2_divergent_above(mesh, &m, &noise) {
            return Err(Error::NotInDomain(format!("image under the mode operator of {} is not square integrable", self.mode)));
        }
        Ok(())
    }

    pub fn to_sampled(&self, mesh: &GradedMesh) -> RadialSection {
        RadialSection::sampled(self.mode, self.samples(mesh))
    }
}

/// The mode operator on jets of one closed-form term.
fn closed_operator(lam: f64, mu: f64, f: Jet, g: Jet, r: f64) -> (f64, f64) {
    let mf = mu * f.v - (g.d1 + (lam + 1.0) * g.v / r);
    let mg = (f.d1 - lam * f.v / r) - mu * g.v;
    (mf, mg)
}

fn mode_operator_sampled(mode: ModeIndex, s: &SampledPair, mesh: &GradedMesh, stencil: Stencil) -> SampledPair {
    let (lam, mu) = (mode.lambda.value(), mode.mu);
    let d = s.fiber_dim();
    let mut out = SampledPair::zeros(mesh.len(), d);
    for k in 0..d {
        let f: Vec<C64> = s.f.column(k).iter().cloned().collect();
        let g: Vec<C64> = s.g.column(k).iter().cloned().collect();
        let df = twisted_derivative(mesh, &f, stencil);
        let dg = twisted_derivative(mesh, &g, stencil);
        for (i, &r) in mesh.nodes.iter().enumerate() {
            out.f[(i, k)] = f[i] * mu - (dg[i] + g[i] * ((lam + 1.0) / r));
            out.g[(i, k)] = (df[i] - f[i] * (lam / r)) - g[i] * mu;
        }
    }
    out
}

/// `f'` computed as `r^{-1/2} (r^{1/2} f)' - f/(2r)`; the twisted function is
/// smooth at the origin for half-integer power series, including on `[0, r_min]`.
pub fn twisted_derivative<T: crate::quadrature::Scalar>(mesh: &GradedMesh, f: &[T], stencil: Stencil) -> Vec<T> {
    let u: Vec<T> = f.iter().zip(&mesh.nodes).map(|(x, r)| *x * r.sqrt()).collect();
    let du = mesh.differentiate(&u, stencil);
    du.iter()
        .zip(f)
        .zip(&mesh.nodes)
        .map(|((d, x), r)| *d * (1.0 / r.sqrt()) - *x * (0.5 / r))
        .collect()
}

/// Finite-difference application of the mode operator to a sampled section.
pub fn apply_mode_operator(mode: ModeIndex, phi: &RadialSection, mesh: &GradedMesh) -> Result<RadialSection> {
    if mesh.per_panel < 4 {
        return Err(Error::MeshTooCoarse(format!("{} points per panel (need at least 4)", mesh.per_panel)));
    }
    let s = phi.samples(mesh);
    Ok(RadialSection::sampled(mode, mode_operator_sampled(mode, &s, mesh, Stencil::Fourth)))
}

/// Decade-comparison divergence test for `∫_0 v r dr`, on the first six
/// geometric panels after `[0, r_min]`.
pub fn l2_divergent(mesh: &GradedMesh, density: &[f64]) -> bool {
    l2_divergent_above(mesh, density, &vec![0.0; density.len()])
}

/// As [`l2_divergent`], ignoring mass at or below a round-off floor.
pub fn l2_divergent_above(mesh: &GradedMesh, density: &[f64], noise: &[f64]) -> bool {
    let mass = |p: usize, v: &[f64]| -> f64 {
        let pan = &mesh.panels[p];
        (pan.start..pan.start + mesh.per_panel).map(|i| mesh.weights[i] * mesh.nodes[i] * v[i]).sum()
    };
    if mesh.panels.len() < 7 {
        return false;
    }
    let d1: f64 = (1..=3).map(|p| mass(p, density)).sum();
    let d2: f64 = (4..=6).map(|p| mass(p, density)).sum();
    let n1: f64 = (1..=3).map(|p| mass(p, noise)).sum();
    if !d1.is_finite() {
        return true;
    }
    d2 > 0.0 && d1 > (1.0 - 1e-3) * d2 && d1 > 1e4 * n1
}

/// Scalar eigen-solution pair `(f, g)` of the mode equation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSolution {
    pub f: Profile,
    pub g: Profile,
}

impl ScalarSolution {
    /// `r (f₁ g₂ - f₂ g₁)` at `r`.
    pub fn wronskian(&self, other: &ScalarSolution, r: f64) -> f64 {
        r * (self.f.value(r) * other.g.value(r) - other.f.value(r) * self.g.value(r))
    }
}

fn snap_w(mu: f64, kappa: f64) -> (f64, bool) {
    let w = kappa * kappa - mu * mu;
    if w.abs() < DEGENERATE_W {
        (0.0, true)
    } else {
        (w, false)
    }
}

/// Solution with `f ~ r^λ`; for `λ = -1/2` the one with residue `(1, 0)`.
pub fn regular_solution(lambda: HalfInt, mu: f64, kappa: f64) -> ScalarSolution {
    let (w, _) = snap_w(mu, kappa);
    let lam = lambda.value();
    let n = 2f64.powf(lam) * gamma_half(lambda.twice() + 2);
    ScalarSolution {
        f: Profile::Entire { c: n, nu: lambda, w },
        g: Profile::Entire { c: n * (mu - kappa), nu: lambda.shift(1), w },
    }
}

/// Solution with `g ~ r^{-λ-1}`; for `λ = -1/2` the one with residue `(0, 1)`.
pub fn singular_solution(lambda: HalfInt, mu: f64, kappa: f64) -> ScalarSolution {
    let (w, _) = snap_w(mu, kappa);
    let lam = lambda.value();
    let neg = HalfInt::from_twice(-lambda.twice()).expect("odd");
    let n = 2f64.powf(-lam - 1.0) * gamma_half(-lambda.twice());
    ScalarSolution {
        f: Profile::Entire { c: n * (kappa + mu), nu: neg, w },
        g: Profile::Entire { c: n, nu: neg.shift(-1), w },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalSystem {
    pub mode: ModeIndex,
    pub kappa: f64,
    /// `φ, Mφ ∈ L²` near 0: `d` sections, or `2d` when `λ = -1/2`
    /// (first the residue-`(e_i, 0)` family, then the `(0, e_i)` family).
    pub admissible: Vec<RadialSection>,
    pub singular: Vec<RadialSection>,
    /// `κ² = μ²` to within [`DEGENERATE_W`]: the pure-power system was used.
    pub degenerate: bool,
}

fn unit(d: usize, i: usize) -> CVec {
    let mut v = CVec::zeros(d);
    v[i] = real(1.0);
    v
}

fn per_fiber(mode: ModeIndex, s: &ScalarSolution) -> Vec<RadialSection> {
    (0..mode.mult)
        .map(|i| {
            RadialSection::closed(mode, vec![ClosedTerm { f: s.f.clone(), g: s.g.clone(), coeff: unit(mode.mult, i) }])
        })
        .collect()
}

/// Fundamental solutions of `Mφ = κφ` for each fibre index.
pub fn fundamental_system(mode: ModeIndex, kappa: f64) -> Result<FundamentalSystem> {
    let reg = regular_solution(mode.lambda, mode.mu, kappa);
    let sing = singular_solution(mode.lambda, mode.mu, kappa);
    let (_, degenerate) = snap_w(mode.mu, kappa);
    // the pairing is 1 at the origin for this normalisation
    let mut scale = 0.0f64;
    let mut ws = Vec::new();
    for &r in &[1e-6, 1e-3, 0.1, 0.5, 1.0] {
        ws.push(reg.wronskian(&sing, r));
        let t = r * (reg.f.value(r) * sing.g.value(r)).abs() + r * (sing.f.value(r) * reg.g.value(r)).abs();
        scale = scale.max(t);
    }
    if ws.iter().any(|w| (w - 1.0).abs() > 1e-10 * scale.max(1.0)) {
        return Err(Error::InternalError(format!("Wronskian not constant for mode {} at κ = {kappa}: {ws:?}", mode)));
    }
    let (admissible, singular) = if mode.is_residue_mode() {
        let mut a = per_fiber(mode, &reg);
        a.extend(per_fiber(mode, &sing));
        (a, Vec::new())
    } else {
        (per_fiber(mode, &reg), per_fiber(mode, &sing))
    };
    Ok(FundamentalSystem { mode, kappa, admissible, singular, degenerate })
}

/// A scalar radial function on `(0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarRadial {
    Closed(Profile),
    /// Values on the mesh nodes.
    Sampled(Vec<f64>),
}

impl ScalarRadial {
    pub fn values(&self, mesh: &GradedMesh) -> Vec<f64> {
        match self {
            ScalarRadial::Closed(p) => mesh.nodes.iter().map(|&r| p.value(r)).collect(),
            ScalarRadial::Sampled(v) => v.clone(),
        }
    }

    pub fn derivative(&self, mesh: &GradedMesh) -> Vec<f64> {
        match self {
            ScalarRadial::Closed(p) => mesh.nodes.iter().map(|&r| p.jet(r).d1).collect(),
            ScalarRadial::Sampled(v) => twisted_derivative(mesh, v, Stencil::Panel),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeadingCase {
    /// `λ ∈ (-1, 0)`: `φ - a r^λ → 0`.
    Power,
    /// `λ = 0`: `|φ| ≲ |log r|^{1/2}`.
    LogBounded,
    /// Otherwise `φ → 0`.
    Vanishing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadingTerm {
    pub case: LeadingCase,
    /// The coefficient of `r^λ` for [`LeadingCase::Power`], the fitted
    /// coefficient of `|log r|^{1/2}` for [`LeadingCase::LogBounded`], 0 otherwise.
    pub a: f64,
}

/// Least squares on the given node set; returns the coefficients and the
/// largest absolute residual.
pub(crate) fn fit(rows: &[Vec<f64>], data: &[f64]) -> Result<(Vec<f64>, f64)> {
    let (n, m) = (rows.len(), rows[0].len());
    let a = nalgebra::DMatrix::from_fn(n, m, |i, j| rows[i][j]);
    let b = nalgebra::DVector::from_column_slice(data);
    let svd = a.clone().svd(true, true);
    let x = svd.solve(&b, 1e-14).map_err(|e| Error::FitFailed(e.to_string()))?;
    let res = (&a * &x - &b).amax();
    Ok((x.iter().cloned().collect(), res))
}

/// The leading behaviour of `φ` at the origin, fitted on the smallest decade.
pub fn leading_coefficient(lambda: f64, phi: &ScalarRadial, mesh: &GradedMesh) -> Result<LeadingTerm> {
    let v = phi.values(mesh);
    let dv = phi.derivative(mesh);
    let lhs: Vec<f64> = v.iter().map(|x| x * x).collect();
    let psi: Vec<f64> = mesh.nodes.iter().zip(v.iter().zip(&dv)).map(|(r, (x, dx))| (dx - lambda * x / r).powi(2)).collect();
    let eps = if matches!(phi, ScalarRadial::Closed(_)) { 1e-13 } else { 1e-9 };
    let noise: Vec<f64> =
        mesh.nodes.iter().zip(v.iter().zip(&dv)).map(|(r, (x, dx))| (eps * (dx.abs() + (lambda * x / r).abs())).powi(2)).collect();
    if l2_divergent(mesh, &lhs) || l2_divergent_above(mesh, &psi, &noise) {
        return Err(Error::NotInDomain("φ or (∂ - λ/r)φ is not in L²(r dr)".into()));
    }
    let r0 = mesh.r_min;
    let idx = mesh.nodes_in(r0, 10.0 * r0);
    if lambda > -1.0 && lambda < 0.0 {
        // r^{-λ} φ = a + b r + ...
        let rows: Vec<Vec<f64>> = idx.iter().map(|&i| vec![1.0, mesh.nodes[i] / r0]).collect();
        let data: Vec<f64> = idx.iter().map(|&i| mesh.nodes[i].powf(-lambda) * v[i]).collect();
        let (x, _) = fit(&rows, &data)?;
        Ok(LeadingTerm { case: LeadingCase::Power, a: x[0] })
    } else if lambda == 0.0 {
        let idx = mesh.nodes_in(r0, 100.0 * r0);
        let rows: Vec<Vec<f64>> =
            idx.iter().map(|&i| vec![mesh.nodes[i].ln().abs().sqrt(), 1.0, mesh.nodes[i] / r0]).collect();
        let data: Vec<f64> = idx.iter().map(|&i| v[i]).collect();
        let (x, _) = fit(&rows, &data)?;
        Ok(LeadingTerm { case: LeadingCase::LogBounded, a: x[0] })
    } else {
        Ok(LeadingTerm { case: LeadingCase::Vanishing, a: 0.0 })
    }
}

/// Coefficient of `r^{-1/2}` in sampled values, fitted on the smallest decade
/// with the model `a r^{-1/2} + b r^{1/2}`.
pub fn fit_half_residue(mesh: &GradedMesh, values: &[C64]) -> Result<C64> {
    let r0 = mesh.r_min;
    let idx = mesh.nodes_in(r0, 10.0 * r0);
    let rows: Vec<Vec<f64>> = idx.iter().map(|&i| vec![1.0, mesh.nodes[i] / r0]).collect();
    let mut out = [0.0; 2];
    let mut scale = 0.0f64;
    let mut worst = 0.0f64;
    for (part, slot) in out.iter_mut().enumerate() {
        let data: Vec<f64> = idx
            .iter()
            .map(|&i| {
                let z = values[i] * mesh.nodes[i].sqrt();
                if part == 0 {
                    z.re
                } else {
                    z.im
                }
            })
            .collect();
        scale = scale.max(data.iter().fold(0.0, |m, x| m.max(x.abs())));
        let (x, res) = fit(&rows, &data)?;
        worst = worst.max(res);
        *slot = x[0];
    }
    if worst > 1e-4 * scale.max(1e-300) {
        return Err(Error::NotInDomain(format!("two-term residue model misfits by {worst:e}")));
    }
    Ok(C64::new(out[0], out[1]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    FromZero,
    FromOne,
}

/// Particular solution of `(∂ - λ/r) φ = ψ`:
/// `r^λ ∫_0^r s^{-λ} ψ ds` or `-r^λ ∫_r^1 s^{-λ} ψ ds`.
pub fn inhomogeneous_solve(lambda: f64, psi: &ScalarRadial, branch: Branch, mesh: &GradedMesh) -> ScalarRadial {
    let v = psi.values(mesh);
    let integrand: Vec<f64> = mesh.nodes.iter().zip(&v).map(|(r, p)| r.powf(-lambda) * p).collect();
    let out = match branch {
        Branch::FromZero => mesh.cumulative_from_zero(&integrand),
        Branch::FromOne => mesh.cumulative_to_one(&integrand).into_iter().map(|x| -x).collect(),
    };
    ScalarRadial::Sampled(mesh.nodes.iter().zip(out).map(|(r, x)| r.powf(lambda) * x).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::QuadratureParams;
    use std::f64::consts::PI;

    fn mesh() -> GradedMesh {
        GradedMesh::new(&QuadratureParams::default()).unwrap()
    }

    fn mode(t: i64, mu: f64) -> ModeIndex {
        ModeIndex::new(HalfInt::from_twice(t).unwrap(), mu, 1)
    }

    #[test]
    fn half_mode_solutions_are_trigonometric() {
        let k = 1.3;
        let reg = regular_solution(HalfInt::MINUS_HALF, 0.0, k);
        let sing = singular_solution(HalfInt::MINUS_HALF, 0.0, k);
        for &r in &[1e-8f64, 0.2, 0.9] {
            let s = r.powf(-0.5);
            assert!((reg.f.value(r) - s * (k * r).cos()).abs() < 1e-12 * s);
            assert!((reg.g.value(r) + s * (k * r).sin()).abs() < 1e-12 * s);
            assert!((sing.f.value(r) - s * (k * r).sin()).abs() < 1e-12 * s);
            assert!((sing.g.value(r) - s * (k * r).cos()).abs() < 1e-12 * s);
        }
    }

    #[test]
    fn zero_energy_half_mode_is_constant_in_uv() {
        let fs = fundamental_system(mode(-1, 0.0), 0.0).unwrap();
        assert!(fs.degenerate);
        assert_eq!(fs.admissible.len(), 2);
        let m = mesh();
        let b = fs.admissible[1].boundary_value(&m);
        assert!(b[0].norm() < 1e-15 && (b[1].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigen_solutions_solve_the_mode_equation() {
        let m = mesh();
        for &(t, mu, k) in &[(-1, 0.0, PI / 2.0), (-1, 2.0, 0.7), (1, 1.0, 3.0), (3, -2.0, 0.5), (5, 0.0, 6.0)] {
            let md = mode(t, mu);
            let fs = fundamental_system(md, k).unwrap();
            for s in fs.admissible.iter().chain(&fs.singular) {
                let v = s.samples(&m);
                let mv = s.operator_samples(&m, Stencil::Panel);
                let err = mv.sub(&v.scaled(real(k)));
                for i in (0..m.len()).filter(|&i| m.nodes[i] > 1e-3) {
                    let scale = v.f[(i, 0)].norm() + v.g[(i, 0)].norm() + 1.0;
                    assert!(err.f[(i, 0)].norm() < 1e-10 * scale * (1.0 + k), "{t} {mu} {k}");
                    assert!(err.g[(i, 0)].norm() < 1e-10 * scale * (1.0 + k));
                }
            }
        }
    }

    #[test]
    fn singular_half_mode_excluded() {
        let fs = fundamental_system(mode(1, 0.0), 2.0).unwrap();
        assert_eq!(fs.admissible.len(), 1);
        let m = mesh();
        assert!(fs.admissible[0].check_domain(&m).is_ok());
        assert!(fs.singular[0].check_domain(&m).is_err());
    }

    #[test]
    fn fd_operator_matches_eigenvalue() {
        let m = mesh();
        let k = PI / 2.0;
        let fs = fundamental_system(mode(-1, 0.0), k).unwrap();
        let s = fs.admissible[0].to_sampled(&m);
        let ms = apply_mode_operator(s.mode, &s, &m).unwrap();
        let diff = ms.samples(&m).sub(&s.samples(&m).scaled(real(k)));
        assert!(diff.norm(&m) < 1e-5 * s.l2_norm(&m), "{}", diff.norm(&m));
        let z = RadialSection::sampled(s.mode, SampledPair::zeros(m.len(), 1));
        assert_eq!(apply_mode_operator(s.mode, &z, &m).unwrap().l2_norm(&m), 0.0);
    }

    #[test]
    fn leading_coefficient_examples() {
        let m = mesh();
        let p = ScalarRadial::Closed(Profile::Power { c: 1.0, p: -0.5 });
        let l = leading_coefficient(-0.5, &p, &m).unwrap();
        assert_eq!(l.case, LeadingCase::Power);
        assert!((l.a - 1.0).abs() < 1e-12);
        let p = ScalarRadial::Closed(Profile::Power { c: 1.0, p: 0.5 });
        assert_eq!(leading_coefficient(0.5, &p, &m).unwrap(), LeadingTerm { case: LeadingCase::Vanishing, a: 0.0 });
        let p = ScalarRadial::Closed(Profile::Power { c: 2.0 / 3.0, p: 1.0 });
        assert!(leading_coefficient(-0.5, &p, &m).unwrap().a.abs() < 1e-12);
        // r^{-1} is not square integrable against r dr
        let p = ScalarRadial::Closed(Profile::Power { c: 1.0, p: -1.0 });
        assert!(matches!(leading_coefficient(-0.5, &p, &m), Err(Error::NotInDomain(_))));
    }

    #[test]
    fn variation_of_parameters() {
        let m = mesh();
        let one = ScalarRadial::Closed(Profile::Power { c: 1.0, p: 0.0 });
        let v = inhomogeneous_solve(-0.5, &one, Branch::FromZero, &m).values(&m);
        for (r, x) in m.nodes.iter().zip(&v) {
            assert!((x - 2.0 / 3.0 * r).abs() < 1e-13);
        }
        let psi = ScalarRadial::Closed(Profile::Power { c: 1.0, p: 0.5 });
        let v = inhomogeneous_solve(0.5, &psi, Branch::FromOne, &m).values(&m);
        for (r, x) in m.nodes.iter().zip(&v) {
            assert!((x - r.sqrt() * (r - 1.0)).abs() < 1e-13);
        }
        let zero = ScalarRadial::Sampled(vec![0.0; m.len()]);
        assert!(inhomogeneous_solve(0.5, &zero, Branch::FromOne, &m).values(&m).iter().all(|x| *x == 0.0));
    }

    #[test]
    fn residue_fit_reads_leading_term() {
        let m = mesh();
        let vals: Vec<C64> = m.nodes.iter().map(|r| C64::new(3.0, -1.0) * r.powf(-0.5) * (2.0 * r).cos()).collect();
        let a = fit_half_residue(&m, &vals).unwrap();
        assert!((a - C64::new(3.0, -1.0)).norm() < 1e-10);
        let bad: Vec<C64> = m.nodes.iter().map(|r| real(r.powf(-1.5))).collect();
        assert!(fit_half_residue(&m, &bad).is_err());
    }
}
