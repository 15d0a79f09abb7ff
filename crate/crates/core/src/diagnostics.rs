//! Numerical checks of the analytic inequalities and regularity structures:
//! Hardy constant, adapted Sobolev norms, elliptic-estimate ratios,
//! untwisting, polyhomogeneous fits, Weyl bounds and the uniform estimates
//! for residue and extension.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::conditions::ResidueCondition;
use crate::error::{Error, Result};
use crate::gelfand_robbin::{bracket, check_norm, extend, negative_projector, residue, ResidueVector};
use crate::halfint::HalfInt;
use crate::linalg::{c, real, CVec, C64};
use crate::model::{enumerate_modes, ModeIndex, ModelConfig};
use crate::profile::Profile;
use crate::quadrature::{GradedMesh, Stencil};
use crate::radial::{fit, fundamental_system, twisted_derivative, ClosedTerm, RadialSection, SampledPair};
use crate::spectral::{counting_function, MatchingProblem, SpectrumResult};

// ---------------------------------------------------------------- Hardy

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardyReport {
    /// `min ∫|∇s|² / ∫|s/r|²` over the trial space.
    pub ratio: f64,
    /// `1/ratio`; infinite when the ratio vanishes.
    pub best_constant_estimate: f64,
    /// False when the trial space contains a section with `∇s = 0`.
    pub bounded: bool,
}

/// Minimises the Rayleigh quotient `∫|∂_θ s|² / ∫|s|²` over Fourier
/// polynomials of degree `≤ M` on a circle, antiperiodic unless `periodic`.
/// The quotient is the Hardy ratio on every circle `r S¹`.
pub fn hardy_verify_with(fourier_cut: usize, periodic: bool) -> Result<HardyReport> {
    if fourier_cut == 0 {
        return Err(Error::DomainError("Fourier cutoff must be at least 1".into()));
    }
    let freqs: Vec<f64> = if periodic {
        (0..=fourier_cut).map(|m| m as f64).collect()
    } else {
        (0..=fourier_cut).map(|m| m as f64 + 0.5).collect()
    };
    // real basis cos(νθ), sin(νθ); sin(0θ) is dropped
    let mut basis: Vec<(f64, bool)> = Vec::new();
    for &nu in &freqs {
        basis.push((nu, true));
        if nu != 0.0 {
            basis.push((nu, false));
        }
    }
    let n_pts = 4 * (fourier_cut + 2);
    let h = 2.0 * PI / n_pts as f64;
    let n = basis.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DMatrix::<f64>::zeros(n, n);
    // trapezoid rule, exact for the trigonometric products involved
    for p in 0..n_pts {
        let th = p as f64 * h;
        let vals: Vec<(f64, f64)> = basis
            .iter()
            .map(|&(nu, cos)| {
                let (s, c) = (nu * th).sin_cos();
                if cos {
                    (c, -nu * s)
                } else {
                    (s, nu * c)
                }
            })
            .collect();
        for i in 0..n {
            for j in 0..n {
                b[(i, j)] += h * vals[i].0 * vals[j].0;
                a[(i, j)] += h * vals[i].1 * vals[j].1;
            }
        }
    }
    let l = b.cholesky().ok_or_else(|| Error::InternalError("trial mass matrix not positive".into()))?.l();
    let li = l.try_inverse().ok_or_else(|| Error::InternalError("singular Cholesky factor".into()))?;
    let s = &li * a * li.transpose();
    let eig = SymmetricEigen::new((&s + s.transpose()) * 0.5);
    let ratio = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0);
    let bounded = ratio > 1e-12;
    Ok(HardyReport { ratio, best_constant_estimate: if bounded { 1.0 / ratio } else { f64::INFINITY }, bounded })
}

pub fn hardy_verify(fourier_cut: usize) -> Result<HardyReport> {
    hardy_verify_with(fourier_cut, false)
}

// ---------------------------------------------------------------- adapted norms

/// `‖(r∂_r)^i M^ℓ φ‖²` for each slot, `ℓ + i ≤ order`.
struct DerivativeTable {
    f: Vec<Vec<f64>>,
    g: Vec<Vec<f64>>,
    wf: f64,
    wg: f64,
}

fn slot_mass(m: &nalgebra::DMatrix<C64>) -> Vec<f64> {
    (0..m.nrows()).map(|i| m.row(i).iter().map(|z| z.norm_sqr()).sum()).collect()
}

/// Divergence at the origin that is not a round-off artefact of cancelling
/// terms; `floor` is the squared norm of the section being differentiated.
fn diverges(mesh: &GradedMesh, density: &[f64], floor: f64) -> bool {
    if !density.iter().all(|x| x.is_finite()) {
        return true;
    }
    if !crate::radial::l2_divergent(mesh, density) {
        return false;
    }
    let total: f64 = mesh.integrate_rdr(density);
    let near: f64 = (1..=3)
        .map(|p| {
            let pan = &mesh.panels[p];
            (pan.start..pan.start + mesh.per_panel).map(|i| mesh.weights[i] * mesh.nodes[i] * density[i]).sum::<f64>()
        })
        .sum();
    near > 1e-12 * total.max(floor).max(1e-300)
}

/// `∫_{cut}^1 v r dr`. Each sampled derivative amplifies round-off by about
/// `1/r` on the geometric panels, so terms with `n ≥ 2` derivatives start at
/// `(1e-13)^{1/n}`; a section of the adapted scale has density `O(1)` in `dr`
/// there, and the omitted mass is of relative size `cut`.
fn mass_above(mesh: &GradedMesh, v: &[f64], cut: f64) -> f64 {
    (0..mesh.len()).filter(|&i| mesh.nodes[i] >= cut).map(|i| mesh.weights[i] * mesh.nodes[i] * v[i]).sum()
}

fn r_dr(mesh: &GradedMesh, s: &SampledPair) -> SampledPair {
    let d = s.fiber_dim();
    let mut out = SampledPair::zeros(mesh.len(), d);
    for k in 0..d {
        let f: Vec<C64> = s.f.column(k).iter().cloned().collect();
        let g: Vec<C64> = s.g.column(k).iter().cloned().collect();
        let df = twisted_derivative(mesh, &f, Stencil::Panel);
        let dg = twisted_derivative(mesh, &g, Stencil::Panel);
        for (i, &r) in mesh.nodes.iter().enumerate() {
            out.f[(i, k)] = df[i] * r;
            out.g[(i, k)] = dg[i] * r;
        }
    }
    out
}

impl DerivativeTable {
    fn new(phi: &RadialSection, order: usize, mesh: &GradedMesh) -> Result<Self> {
        let (lam, mu) = (phi.mode.lambda.value(), phi.mode.mu);
        let mut f = vec![Vec::new(); order + 1];
        let mut g = vec![Vec::new(); order + 1];
        let mut current = phi.samples(mesh);
        let floor = mesh.integrate_rdr(&current.density());
        for l in 0..=order {
            let mut s = current.clone();
            for i in 0..=(order - l) {
                let (df, dg) = (slot_mass(&s.f), slot_mass(&s.g));
                let n = l + i;
                if n <= 1 && (diverges(mesh, &df, floor) || diverges(mesh, &dg, floor)) {
                    return Err(Error::NotInDomain(format!("a conormal derivative of M^{l} φ is not in L² (mode {})", phi.mode)));
                }
                let cut = if n <= 1 { 0.0 } else { 1e-13f64.powf(1.0 / n as f64) };
                let (mf, mg) = (mass_above(mesh, &df, cut), mass_above(mesh, &dg, cut));
                if !(mf.is_finite() && mg.is_finite()) {
                    return Err(Error::NotInDomain(format!("M^{l} φ has a non-finite conormal norm (mode {})", phi.mode)));
                }
                f[l].push(mf);
                g[l].push(mg);
                s = r_dr(mesh, &s);
            }
            if l < order {
                current = if l == 0 {
                    phi.operator_samples(mesh, Stencil::Panel)
                } else {
                    RadialSection::sampled(phi.mode, current).operator_samples(mesh, Stencil::Panel)
                };
            }
        }
        Ok(DerivativeTable { f, g, wf: bracket(lam) + bracket(mu), wg: bracket(lam + 1.0) + bracket(mu) })
    }

    /// `‖M^ℓ φ‖²_{H_b^j}`.
    fn hb(&self, l: usize, j: usize) -> f64 {
        (0..=j)
            .map(|i| self.wf.powi(2 * (j - i) as i32) * self.f[l][i] + self.wg.powi(2 * (j - i) as i32) * self.g[l][i])
            .sum()
    }

    /// `‖M^s φ‖²_{H_a^k}` for `s + k ≤ order`.
    fn ha(&self, s: usize, k: usize) -> f64 {
        (0..=k).map(|l| self.hb(s + l, k - l)).sum()
    }
}

/// `‖φ‖_{H_a^k}` with `‖φ‖²_{H_a^k} = Σ_ℓ ‖M^ℓ φ‖²_{H_b^{k-ℓ}}` and the
/// conormal norm `Σ_i ∫ (⟨λ⟩+⟨μ⟩)^{2(j-i)} |(r∂_r)^i ψ|² r dr`; the `g` slot
/// lives in mode `(-(λ+1), -μ)` and carries its weight.
pub fn adapted_norm(phi: &RadialSection, k: usize, mesh: &GradedMesh) -> Result<f64> {
    Ok(DerivativeTable::new(phi, k, mesh)?.ha(0, k).sqrt())
}

/// `(‖φ‖_{H_a^{k+1}}, ‖Mφ‖_{H_a^k} + ‖φ‖_{L²})`.
pub fn elliptic_sides(phi: &RadialSection, k: usize, mesh: &GradedMesh) -> Result<(f64, f64)> {
    let t = DerivativeTable::new(phi, k + 1, mesh)?;
    let lhs = t.ha(0, k + 1).sqrt();
    let rhs = t.ha(1, k).sqrt() + (t.f[0][0] + t.g[0][0]).sqrt();
    Ok((lhs, rhs))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleSource {
    Eigen { kappa: f64 },
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormSample {
    pub mode: ModeIndex,
    pub source: SampleSource,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormSweep {
    pub k: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub samples: Vec<NormSample>,
}

impl NormSweep {
    /// `C/c`.
    pub fn spread(&self) -> f64 {
        self.max_ratio / self.min_ratio
    }

    /// Largest ratio at each `|μ|`, ascending.
    pub fn mu_profile(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for s in &self.samples {
            let m = s.mode.mu.abs();
            match out.iter_mut().find(|(x, _)| (*x - m).abs() < 1e-12) {
                Some(e) => e.1 = e.1.max(s.ratio),
                None => out.push((m, s.ratio)),
            }
        }
        out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        out
    }

    /// Ratio at the largest `|μ|` over the ratio at the smallest.
    pub fn mu_growth(&self) -> f64 {
        let p = self.mu_profile();
        match (p.first(), p.last()) {
            (Some(a), Some(b)) => b.1 / a.1,
            _ => 1.0,
        }
    }

    pub fn csv_rows(&self) -> Vec<String> {
        self.samples
            .iter()
            .map(|s| {
                let (src, kappa) = match s.source {
                    SampleSource::Eigen { kappa } => ("eigen", kappa.to_string()),
                    SampleSource::Random => ("random", String::new()),
                };
                format!("{},{},{},{src},{kappa},{}", self.k, s.mode.lambda, s.mode.mu, s.ratio)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub eigen_per_mode: usize,
    pub random_per_mode: usize,
    pub seed: u64,
    /// Restrict the battery to these modes instead of the whole truncation.
    pub modes: Option<Vec<ModeIndex>>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { eigen_per_mode: 5, random_per_mode: 5, seed: 0x5eed, modes: None }
    }
}

fn mode_seed(seed: u64, m: &ModeIndex) -> u64 {
    seed ^ (m.lambda.twice() as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ m.mu.to_bits().rotate_left(17)
}

fn random_coeffs(rng: &mut ChaCha8Rng, d: usize) -> CVec {
    CVec::from_fn(d, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// A smooth section respecting `block` at the origin (residue modes) or
/// regular there (other modes), supported away from `r = 1`. With `pure` a
/// residue mode gets the extension of a random residue alone, the direction
/// in which a non-regular condition loses the estimate.
fn random_section(mode: ModeIndex, block: Option<&crate::linalg::Subspace>, pure: bool, rng: &mut ChaCha8Rng) -> RadialSection {
    let d = mode.mult;
    let lam = mode.lambda.value();
    let mut terms = Vec::new();
    if mode.is_residue_mode() {
        if let Some(b) = block.filter(|b| b.dim() > 0) {
            let v = b.basis() * random_coeffs(rng, b.dim());
            if let crate::radial::Representation::Closed(ts) = extend(&v, mode).repr {
                terms.extend(ts);
            }
            if pure {
                return RadialSection::closed(mode, terms);
            }
        }
    } else {
        let chi = Profile::ext_cutoff();
        let e = Profile::PowerExp { c: 1.0, p: lam, a: mode.mu.abs() }.times(chi.clone());
        terms.push(ClosedTerm { f: e, g: Profile::Zero, coeff: random_coeffs(rng, d) });
        let e = Profile::PowerExp { c: 1.0, p: lam + 1.0, a: mode.mu.abs() }.times(chi);
        terms.push(ClosedTerm { f: Profile::Zero, g: e, coeff: random_coeffs(rng, d) });
    }
    let center = rng.gen_range(0.35..0.65);
    let bump = Profile::Bump { c: 1.0, center, width: 0.25 };
    terms.push(ClosedTerm { f: bump.clone(), g: Profile::Zero, coeff: random_coeffs(rng, d) });
    terms.push(ClosedTerm { f: Profile::Zero, g: bump, coeff: random_coeffs(rng, d) });
    RadialSection::closed(mode, terms)
}

/// The `count` eigenfunctions of smallest `|κ|`.
fn lowest_eigenfunctions(
    mode: ModeIndex,
    block: Option<&crate::linalg::Subspace>,
    cfg: &ModelConfig,
    count: usize,
) -> Result<Vec<(f64, RadialSection)>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    if mode.is_residue_mode() && block.map_or(true, |b| b.dim() != mode.mult) {
        return Ok(Vec::new());
    }
    let p = MatchingProblem::new(mode, block, cfg.outer_for(&mode))?;
    if !p.is_lagrangian() {
        return Ok(Vec::new());
    }
    let reach = 1.0 + mode.mu.abs() + mode.lambda.value().abs() + (count as f64 + 1.0) * PI;
    let mut roots = p.eigenvalues((-reach, reach), cfg.tol.root)?;
    roots.sort_by(|a, b| a.0.abs().partial_cmp(&b.0.abs()).unwrap());
    let mut out = Vec::new();
    for (kappa, mult, _) in roots {
        for phi in p.eigenfunctions(kappa, mult) {
            if out.len() < count {
                out.push((kappa, phi));
            }
        }
    }
    Ok(out)
}

/// Extremal ratios `‖φ‖_{H_a^{k+1}} / (‖Mφ‖_{H_a^k} + ‖φ‖_{L²})` over the
/// default battery: the lowest eigenfunctions and seeded random sections of
/// every mode.
pub fn norm_equivalence_sweep(cfg: &ModelConfig, r: &ResidueCondition, k: usize) -> Result<NormSweep> {
    norm_equivalence_sweep_with(cfg, r, k, &SweepOptions::default())
}

pub fn norm_equivalence_sweep_with(cfg: &ModelConfig, r: &ResidueCondition, k: usize, opts: &SweepOptions) -> Result<NormSweep> {
    let mesh = GradedMesh::new(&cfg.quadrature)?;
    let modes = opts.modes.clone().unwrap_or_else(|| enumerate_modes(cfg));
    let per_mode: Vec<Result<Vec<NormSample>>> = modes
        .par_iter()
        .map(|&mode| {
            let block = if mode.is_residue_mode() { r.get(mode.mu) } else { None };
            let mut out = Vec::new();
            for (kappa, phi) in lowest_eigenfunctions(mode, block, cfg, opts.eigen_per_mode)? {
                let (lhs, rhs) = elliptic_sides(&phi, k, &mesh)?;
                out.push(NormSample { mode, source: SampleSource::Eigen { kappa }, ratio: lhs / rhs });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(mode_seed(opts.seed, &mode));
            for j in 0..opts.random_per_mode {
                let phi = random_section(mode, block, j % 2 == 1, &mut rng);
                let (lhs, rhs) = elliptic_sides(&phi, k, &mesh)?;
                out.push(NormSample { mode, source: SampleSource::Random, ratio: lhs / rhs });
            }
            Ok(out)
        })
        .collect();
    let mut samples = Vec::new();
    for s in per_mode {
        samples.extend(s?);
    }
    let min_ratio = samples.iter().map(|s| s.ratio).fold(f64::INFINITY, f64::min);
    let max_ratio = samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
    Ok(NormSweep { k, min_ratio, max_ratio, samples })
}

// ---------------------------------------------------------------- untwisting

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    F,
    G,
}

/// Coefficient of `z̄^{k-1/2} z^ℓ` in one slot and fibre direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionEntry {
    pub slot: Slot,
    pub fiber: usize,
    pub k: usize,
    pub l: usize,
    pub coeff: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionTable {
    pub entries: Vec<ExpansionEntry>,
    /// Relative misfit of the truncated expansion on the fit window.
    pub residual: f64,
}

impl ExpansionTable {
    /// Entries of lowest total order `k + ℓ` among coefficients above
    /// `rel_tol` times the largest one.
    pub fn leading(&self, rel_tol: f64) -> Vec<ExpansionEntry> {
        let big = self.entries.iter().map(|e| e.coeff.norm()).fold(0.0, f64::max);
        let live: Vec<&ExpansionEntry> = self.entries.iter().filter(|e| e.coeff.norm() > rel_tol * big).collect();
        let j = match live.iter().map(|e| e.k + e.l).min() {
            Some(j) => j,
            None => return Vec::new(),
        };
        live.into_iter().filter(|e| e.k + e.l == j).cloned().collect()
    }

    pub fn csv_rows(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|e| {
                let s = if e.slot == Slot::F { "f" } else { "g" };
                format!("{s},{},{},{},{},{}", e.fiber, e.k, e.l, e.coeff.re, e.coeff.im)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UntwistReport {
    pub integer_power_part: ExpansionTable,
    /// Relative mass not captured by integer powers of `r` after untwisting.
    pub half_power_residual: f64,
    /// Relative size of integer-power coefficients not of the form
    /// `z̄^{k} z^ℓ` for the slot's angular degree.
    pub off_lattice: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionParams {
    /// Fit on `(0, window]`.
    pub window: f64,
    /// Degree of the Chebyshev fit.
    pub degree: usize,
    /// Table orders `K`, `L`.
    pub orders: (usize, usize),
}

impl Default for ExpansionParams {
    fn default() -> Self {
        ExpansionParams { window: 0.25, degree: 16, orders: (6, 6) }
    }
}

impl ExpansionParams {
    /// Window adapted to the oscillation or growth scale `s` of the section.
    pub fn for_scale(s: f64) -> Self {
        ExpansionParams { window: (2.0 / (1.0 + s.abs())).min(0.25), ..Default::default() }
    }
}

/// Angular degrees of the untwisted slots: `z̄^k z^ℓ` with `k - ℓ = n`.
/// Both parities occur on `λ = -1/2`, where the mode and its conjugate meet.
fn slot_degrees(lambda: HalfInt, slot: Slot) -> Vec<i64> {
    let t = lambda.twice();
    let n = (t + 1) / 2;
    if t == -1 {
        match slot {
            Slot::F => vec![0, -1],
            Slot::G => vec![1, 0],
        }
    } else {
        match slot {
            Slot::F => vec![n],
            Slot::G => vec![n + 1],
        }
    }
}

/// Monomial coefficients in `s ∈ [0, 1]` of `Σ c_n T_n(2s - 1)`.
fn chebyshev_to_monomial(cs: &[f64]) -> Vec<f64> {
    let n = cs.len();
    let mut out = vec![0.0; n];
    let mut t_prev = vec![0.0; n];
    let mut t_cur = vec![0.0; n];
    t_prev[0] = 1.0;
    if n > 1 {
        t_cur[0] = -1.0;
        t_cur[1] = 2.0;
    }
    for (j, &c) in cs.iter().enumerate() {
        let t = match j {
            0 => t_prev.clone(),
            1 => t_cur.clone(),
            _ => {
                let mut next = vec![0.0; n];
                for i in 0..n {
                    next[i] = -2.0 * t_cur[i] - t_prev[i];
                    if i > 0 {
                        next[i] += 4.0 * t_cur[i - 1];
                    }
                }
                t_prev = std::mem::replace(&mut t_cur, next);
                t_cur.clone()
            }
        };
        for i in 0..n {
            out[i] += c * t[i];
        }
    }
    out
}

/// Untwists `φ` by `r^{1/2}` and fits each slot by a polynomial in `r`; a
/// section of the adapted scale leaves no half-integer powers behind.
pub fn untwist_coefficients(phi: &RadialSection, mesh: &GradedMesh, params: &ExpansionParams) -> Result<UntwistReport> {
    let rho = params.window;
    if !(rho > 0.0 && rho <= 1.0) || params.degree < 2 {
        return Err(Error::FitFailed(format!("bad fit window {rho} or degree {}", params.degree)));
    }
    let idx = mesh.nodes_in(0.0, rho);
    if idx.len() < 2 * (params.degree + 1) {
        return Err(Error::FitFailed(format!("{} nodes in the fit window", idx.len())));
    }
    let rows: Vec<Vec<f64>> = idx
        .iter()
        .map(|&i| {
            let x = 2.0 * mesh.nodes[i] / rho - 1.0;
            let mut t = vec![1.0, x];
            while t.len() <= params.degree {
                let n = t.len();
                t.push(2.0 * x * t[n - 1] - t[n - 2]);
            }
            t.truncate(params.degree + 1);
            t
        })
        .collect();
    let s = phi.samples(mesh);
    let d = s.fiber_dim();
    let (kk, ll) = params.orders;
    let mut entries = Vec::new();
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    let mut off = 0.0f64;
    let mut biggest = 0.0f64;
    for (slot, m) in [(Slot::F, &s.f), (Slot::G, &s.g)] {
        let degrees = slot_degrees(phi.mode.lambda, slot);
        for fib in 0..d {
            let mut mono = vec![C64::new(0.0, 0.0); params.degree + 1];
            for part in 0..2 {
                let data: Vec<f64> = idx
                    .iter()
                    .map(|&i| {
                        let z = m[(i, fib)] * mesh.nodes[i].sqrt();
                        if part == 0 {
                            z.re
                        } else {
                            z.im
                        }
                    })
                    .collect();
                scale = scale.max(data.iter().fold(0.0, |a, x| a.max(x.abs())));
                let (cs, res) = fit(&rows, &data)?;
                worst = worst.max(res);
                for (j, b) in chebyshev_to_monomial(&cs).into_iter().enumerate() {
                    let a = b / rho.powi(j as i32);
                    if part == 0 {
                        mono[j].re = a;
                    } else {
                        mono[j].im = a;
                    }
                }
            }
            for (j, a) in mono.iter().enumerate() {
                biggest = biggest.max(a.norm() * rho.powi(j as i32));
                let j = j as i64;
                let lattice = degrees.iter().find(|&&n| j >= n.abs() && (j - n).rem_euclid(2) == 0);
                match lattice {
                    Some(&n) => {
                        let (k, l) = (((j + n) / 2) as usize, ((j - n) / 2) as usize);
                        if k <= kk && l <= ll {
                            entries.push(ExpansionEntry { slot, fiber: fib, k, l, coeff: *a });
                        }
                    }
                    None => off = off.max(a.norm() * rho.powi(j as i32)),
                }
            }
        }
    }
    let residual = if scale > 0.0 { worst / scale } else { 0.0 };
    let off_lattice = if biggest > 0.0 { off / biggest } else { 0.0 };
    Ok(UntwistReport {
        integer_power_part: ExpansionTable { entries, residual },
        half_power_residual: residual,
        off_lattice,
    })
}

// ---------------------------------------------------------------- Weyl

#[derive(Debug, Clone, PartialEq)]
pub struct WeylReport {
    pub k: u32,
    pub sup_ratio: f64,
    /// `(Λ, N(Λ), N(Λ)/⟨Λ⟩^{2k})`.
    pub table: Vec<(f64, usize, f64)>,
}

impl WeylReport {
    pub fn csv_rows(&self) -> Vec<String> {
        self.table.iter().map(|(l, n, q)| format!("{l},{n},{q}")).collect()
    }
}

/// `sup N(Λ)/⟨Λ⟩^{2k}` on a grid of step at most 1/2 up to the window edge.
pub fn weyl_check(spec: &SpectrumResult, k: u32) -> Result<WeylReport> {
    let lmax = (-spec.window.0).min(spec.window.1);
    if lmax < 0.0 {
        return Err(Error::WindowTooSmall("window does not contain 0".into()));
    }
    let n = ((lmax / 0.5).ceil() as usize).max(1);
    let mut table = Vec::with_capacity(n + 1);
    let mut sup = 0.0f64;
    for j in 0..=n {
        let l = lmax * j as f64 / n as f64;
        let count = counting_function(spec, l)?;
        let q = count as f64 / bracket(l).powi(2 * k as i32);
        sup = sup.max(q);
        table.push((l, count, q));
    }
    Ok(WeylReport { k, sup_ratio: sup, table })
}

// ---------------------------------------------------------------- res / ext

/// `μ ∈ {0, 1, 2, 4, ..., 64}`.
pub const UNIFORMITY_MUS: [f64; 8] = [0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0];

#[derive(Debug, Clone, PartialEq)]
pub struct UniformityStats {
    /// `max ‖ext_μ v‖_D / ‖v‖_Ȟ` at each `μ`.
    pub ext_by_mu: Vec<(f64, f64)>,
    pub ext_max: f64,
    /// Relative growth of the extension ratio over the last octave.
    pub final_octave_growth: f64,
    /// `max |res(ext v) - v| / |v|`.
    pub res_ext_deviation: f64,
    /// `max ‖ext_μ v‖_{L²} (1+|μ|)^{1/2} / |v|`.
    pub l2_constant: f64,
    /// `max ‖res φ‖_Ȟ / ‖φ‖_D` over eigen-solutions at fixed `κ`, per `μ`.
    pub res_by_mu: Vec<(f64, f64)>,
    pub res_max: f64,
}

impl UniformityStats {
    pub fn csv_rows(&self) -> Vec<String> {
        self.ext_by_mu
            .iter()
            .zip(&self.res_by_mu)
            .map(|((m, e), (_, r))| format!("{m},{e},{r}"))
            .collect()
    }
}

/// Battery for the uniform estimates of `res_μ` and `ext_μ`: the eigenvectors
/// of `A_μ` and seeded random vectors for `ext`, the fundamental solutions at
/// `κ = 1` for `res`.
pub fn res_ext_uniformity_sweep(cfg: &ModelConfig) -> Result<UniformityStats> {
    let mesh = GradedMesh::new(&cfg.quadrature)?;
    let d = cfg.fiber_dim;
    type Row = (f64, f64, f64, f64, f64);
    let rows: Vec<Result<Row>> = UNIFORMITY_MUS
        .par_iter()
        .map(|&mu| {
            let mode = ModeIndex::new(HalfInt::MINUS_HALF, mu, d);
            let mut rng = ChaCha8Rng::seed_from_u64(mode_seed(0xe77, &mode));
            let neg = negative_projector(if mu == 0.0 { 1.0 } else { mu }, d);
            let mut battery: Vec<CVec> = Vec::new();
            for j in 0..2 * d {
                let mut e = CVec::zeros(2 * d);
                e[j] = real(1.0);
                let n = &neg * &e;
                battery.push(&e - &n);
                battery.push(n);
            }
            for _ in 0..5 {
                battery.push(random_coeffs(&mut rng, 2 * d));
            }
            let (mut ext_max, mut dev, mut l2c) = (0.0f64, 0.0f64, 0.0f64);
            for v in battery.iter().filter(|v| v.norm() > 1e-12) {
                let phi = extend(v, mode);
                let hv = check_norm(&ResidueVector::single(mu, v.clone()));
                ext_max = ext_max.max(phi.graph_norm(&mesh) / hv);
                dev = dev.max((residue(&phi, &mesh)? - v).norm() / v.norm());
                l2c = l2c.max(phi.l2_norm(&mesh) * (1.0 + mu).sqrt() / v.norm());
            }
            let fs = fundamental_system(mode, 1.0)?;
            let mut res_max = 0.0f64;
            for phi in &fs.admissible {
                let v = residue(phi, &mesh)?;
                res_max = res_max.max(check_norm(&ResidueVector::single(mu, v)) / phi.graph_norm(&mesh));
            }
            Ok((mu, ext_max, dev, l2c, res_max))
        })
        .collect();
    let mut ext_by_mu = Vec::new();
    let mut res_by_mu = Vec::new();
    let (mut dev, mut l2c) = (0.0f64, 0.0f64);
    for r in rows {
        let (mu, e, dv, l, rs) = r?;
        ext_by_mu.push((mu, e));
        res_by_mu.push((mu, rs));
        dev = dev.max(dv);
        l2c = l2c.max(l);
    }
    let ext_max = ext_by_mu.iter().map(|x| x.1).fold(0.0, f64::max);
    let res_max = res_by_mu.iter().map(|x| x.1).fold(0.0, f64::max);
    let n = ext_by_mu.len();
    let final_octave_growth = ext_by_mu[n - 1].1 / ext_by_mu[n - 2].1 - 1.0;
    Ok(UniformityStats { ext_by_mu, ext_max, final_octave_growth, res_ext_deviation: dev, l2_constant: l2c, res_by_mu, res_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditions::{make_aps, make_local};
    use crate::linalg::Subspace;
    use crate::model::QuadratureParams;
    use crate::radial::regular_solution;
    use crate::spectral::assemble_spectrum;

    fn mesh() -> GradedMesh {
        GradedMesh::new(&QuadratureParams::default()).unwrap()
    }

    fn mode(t: i64, mu: f64) -> ModeIndex {
        ModeIndex::new(HalfInt::from_twice(t).unwrap(), mu, 1)
    }

    fn line(a: f64, b: f64) -> Subspace {
        Subspace::span(&crate::linalg::CMat::from_column_slice(2, 1, &[real(a), real(b)]))
    }

    #[test]
    fn hardy_constant() {
        for m in [1, 4, 16, 64] {
            let h = hardy_verify(m).unwrap();
            assert!((h.best_constant_estimate - 4.0).abs() < 1e-10, "{m}: {h:?}");
            assert!(h.bounded);
        }
        let p = hardy_verify_with(8, true).unwrap();
        assert!(!p.bounded && p.best_constant_estimate.is_infinite());
        assert!(hardy_verify(0).is_err());
    }

    #[test]
    fn adapted_norm_k0_is_l2() {
        let m = mesh();
        let phi = extend(&CVec::from_vec(vec![real(0.6), c(0.0, 0.8)]), mode(-1, 3.0));
        let a = adapted_norm(&phi, 0, &m).unwrap();
        assert!((a - phi.l2_norm(&m)).abs() < 1e-14 * a);
    }

    #[test]
    fn adapted_norm_on_eigenfunction() {
        // M^ℓ φ = κ^ℓ φ, so the k = 2 norm follows from the conormal table of φ
        let m = mesh();
        let md = mode(1, 2.0);
        let kappa = 3.7;
        let s = regular_solution(md.lambda, md.mu, kappa);
        let phi = RadialSection::closed(md, vec![ClosedTerm { f: s.f, g: s.g, coeff: CVec::from_element(1, real(1.0)) }]);
        let t = DerivativeTable::new(&phi, 2, &m).unwrap();
        let k2 = kappa * kappa;
        let want = t.hb(0, 2) + k2 * t.hb(0, 1) + k2 * k2 * t.hb(0, 0);
        let got = t.ha(0, 2);
        assert!((got - want).abs() < 1e-8 * want, "{got} {want}");
    }

    #[test]
    fn adapted_norm_is_a_norm() {
        let m = mesh();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let md = mode(-1, 2.0);
        let r = line(1.0, 1.0);
        for _ in 0..4 {
            let a = random_section(md, Some(&r), false, &mut rng);
            let b = random_section(md, Some(&r), false, &mut rng);
            let sum = RadialSection::combine(md, &[(real(1.0), &a), (real(1.0), &b)]).unwrap();
            let na = adapted_norm(&a, 1, &m).unwrap();
            let nb = adapted_norm(&b, 1, &m).unwrap();
            assert!(adapted_norm(&sum, 1, &m).unwrap() <= na + nb + 1e-10 * (na + nb));
            let scaled = RadialSection::combine(md, &[(c(0.0, -2.5), &a)]).unwrap();
            assert!((adapted_norm(&scaled, 1, &m).unwrap() - 2.5 * na).abs() < 1e-10 * na);
        }
    }

    #[test]
    fn extension_h1_norm_scales_like_bracket_mu() {
        let m = mesh();
        let v = CVec::from_vec(vec![real(0.6), real(0.8)]);
        let q: Vec<f64> = [0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0]
            .iter()
            .map(|&mu| adapted_norm(&extend(&v, mode(-1, mu)), 1, &m).unwrap().powi(2) / bracket(mu))
            .collect();
        let hi = q.iter().cloned().fold(0.0, f64::max);
        let lo = q.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(hi / lo <= 8.0, "{q:?}");
    }

    #[test]
    fn untwisted_cosine_is_entire() {
        let m = mesh();
        let kappa = 2.3;
        let md = mode(-1, 0.0);
        let s = regular_solution(md.lambda, 0.0, kappa);
        let phi = RadialSection::closed(md, vec![ClosedTerm { f: s.f, g: s.g, coeff: CVec::from_element(1, real(1.0)) }]);
        let rep = untwist_coefficients(&phi, &m, &ExpansionParams::for_scale(kappa)).unwrap();
        assert!(rep.half_power_residual < 1e-10, "{rep:?}");
        assert!(rep.off_lattice < 1e-8);
        // cos κr = 1 - κ²r²/2 + ..., -sin κr = -κ r + ...
        let t = &rep.integer_power_part;
        let get = |slot, k, l| t.entries.iter().find(|e| e.slot == slot && e.k == k && e.l == l).unwrap().coeff.re;
        assert!((get(Slot::F, 0, 0) - 1.0).abs() < 1e-9);
        assert!((get(Slot::F, 1, 1) + kappa * kappa / 2.0).abs() < 1e-7);
        assert!((get(Slot::G, 1, 0) + kappa).abs() < 1e-8);
    }

    #[test]
    fn untwisting_flags_unshifted_terms() {
        let m = mesh();
        let md = mode(-1, 0.0);
        let phi = RadialSection::closed(
            md,
            vec![ClosedTerm {
                f: Profile::Sum(vec![Profile::Power { c: 1.0, p: -0.5 }, Profile::Power { c: 0.3, p: 0.0 }]),
                g: Profile::Zero,
                coeff: CVec::from_element(1, real(1.0)),
            }],
        );
        let rep = untwist_coefficients(&phi, &m, &ExpansionParams::default()).unwrap();
        assert!(rep.half_power_residual > 1e-4, "{}", rep.half_power_residual);
    }

    #[test]
    fn untwist_residual_stable_under_smooth_factor() {
        let m = mesh();
        let md = mode(3, 1.0);
        let s = regular_solution(md.lambda, 1.0, 2.0);
        let base = RadialSection::closed(md, vec![ClosedTerm { f: s.f.clone(), g: s.g.clone(), coeff: CVec::from_element(1, real(1.0)) }]);
        let w = Profile::Polynomial(vec![1.0, 0.0, 0.5]);
        let tilted = RadialSection::closed(
            md,
            vec![ClosedTerm { f: s.f.times(w.clone()), g: s.g.times(w), coeff: CVec::from_element(1, real(1.0)) }],
        );
        let p = ExpansionParams::for_scale(3.0);
        let a = untwist_coefficients(&base, &m, &p).unwrap().half_power_residual;
        let b = untwist_coefficients(&tilted, &m, &p).unwrap().half_power_residual;
        assert!(a < 1e-10 && b < 1e-10, "{a} {b}");
    }

    #[test]
    fn harmonic_leading_block() {
        let m = mesh();
        for &(t, mu) in &[(-1, 0.0), (-1, 2.0), (1, 0.0), (3, 1.5)] {
            let md = mode(t, mu);
            let fs = fundamental_system(md, 0.0).unwrap();
            for phi in &fs.admissible {
                let rep = untwist_coefficients(phi, &m, &ExpansionParams::for_scale(mu)).unwrap();
                let lead = rep.integer_power_part.leading(1e-8);
                assert!(!lead.is_empty() && lead.iter().all(|e| e.l == 0), "{t} {mu} {lead:?}");
            }
        }
    }

    #[test]
    fn weyl_on_cosine_spectrum() {
        let mut cfg = ModelConfig { lambda_cut: 0.5, mu_cut: 0.0, ..Default::default() };
        cfg.outer_bc = crate::model::OuterBoundaryCondition::type_i(1);
        let r = make_local(&cfg, &line(1.0, 0.0)).unwrap();
        let spec = assemble_spectrum(&cfg, &r, (-30.0, 30.0)).unwrap();
        // keep the cosine mode only
        let mut cos = spec.clone();
        cos.entries.retain(|e| e.mode.is_residue_mode());
        let w1 = weyl_check(&cos, 1).unwrap();
        assert!(w1.sup_ratio <= 2.0 / PI * 1.05, "{}", w1.sup_ratio);
        let w0 = weyl_check(&cos, 0).unwrap();
        assert!(w0.sup_ratio >= 18.0);
        let w2 = weyl_check(&spec, 2).unwrap();
        assert!(w2.sup_ratio <= weyl_check(&spec, 1).unwrap().sup_ratio);
        assert!(w2.table.windows(2).all(|p| p[0].1 <= p[1].1));
    }

    #[test]
    fn uniformity() {
        let s = res_ext_uniformity_sweep(&ModelConfig::default()).unwrap();
        assert!(s.res_ext_deviation < 1e-14);
        assert!(s.ext_max.is_finite() && s.final_octave_growth <= 0.05, "{s:?}");
        assert!(s.res_max.is_finite());
        assert!(s.l2_constant < 2.0, "{}", s.l2_constant);
    }

    #[test]
    fn elliptic_ratios_small_battery() {
        let cfg = ModelConfig { lambda_cut: 1.5, mu_cut: 2.0, ..Default::default() };
        let aps = make_aps(&cfg);
        let s = norm_equivalence_sweep(&cfg, &aps, 0).unwrap();
        assert!(s.min_ratio > 0.0 && s.max_ratio.is_finite());
        assert!(s.spread() <= 50.0, "{}", s.spread());
        let one = SweepOptions { modes: Some(vec![mode(-1, 1.0)]), ..Default::default() };
        let t = norm_equivalence_sweep_with(&cfg, &aps, 0, &one).unwrap();
        assert!(t.min_ratio >= s.min_ratio && t.max_ratio <= s.max_ratio);
    }
}
