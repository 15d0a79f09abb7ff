//! Global eigenvalue problem on the model by per-mode matching, together with
//! Calderón data, index bookkeeping, heat supertraces and the second-order
//! resolvent.
//!
//! For a mode the admissible solutions of `Mφ = κφ` are written through the
//! regular and singular solutions; evaluating them at `r = 1` gives a frame
//! `Φ(κ)` of boundary values, and `κ` is an eigenvalue exactly when
//! `span Φ(κ)` meets the outer subspace `W`, i.e. when `N(κ) = (JW)^H Φ(κ)`
//! drops rank (`JW = W^⊥` for Lagrangian `W`).
//!
//! When both the residue condition and `W` are real lines tensored with
//! `C^d`, `N = n(κ) I_d` with `n` a real analytic function, and the search
//! runs on `n`. Otherwise both subspaces are written as graphs of unitaries
//! `U` between the `±1` eigenspaces of `iJ` and the search runs on
//! `Π sin(θ_j / 2) = det(1 - V) / ((-2i)^d (det V)^{1/2})` over the
//! eigenphases of `V = U_W^H U_L`, with the square root continued along
//! the search grid.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;

use crate::bessel::{entire, spherical_bessel, Kind};
use crate::conditions::{
    bag_block, block_is_lagrangian, fredholm_delta_index, kernel_block, aps_block, ChiralityOperator,
    ConditionKind, ResidueCondition,
};
use crate::error::{Error, Result};
use crate::halfint::HalfInt;
use crate::linalg::{c, j_matrix, real, singular_values, svd, CMat, CVec, Subspace, C64};
use crate::model::{enumerate_modes, residue_modes, ModeIndex, ModelConfig, OuterBoundaryCondition, QuadratureParams};
use crate::oracle::real_line_angle;
use crate::quadrature::{GradedMesh, Stencil};
use crate::radial::{regular_solution, singular_solution, ClosedTerm, RadialSection, Representation, SampledPair};

/// Default absolute tolerance on refined roots.
pub const ROOT_TOL: f64 = 1e-12;
/// Relative singular-value threshold for multiplicities.
pub const RANK_DROP_TOL: f64 = 1e-8;
/// Largest `|D|` accepted at a refined root; anything larger is a pole or
/// a jump, not a zero.
const FALSE_ROOT_LEVEL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    Determinant,
    Oracle,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::ClosedForm => "closed-form",
            Method::Determinant => "determinant",
            Method::Oracle => "oracle",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEntry {
    pub kappa: f64,
    pub mode: ModeIndex,
    pub mult: usize,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    /// Sorted by `κ`, then by mode.
    pub entries: Vec<SpectrumEntry>,
    pub window: (f64, f64),
    pub condition: ResidueCondition,
    pub outer: OuterBoundaryCondition,
    pub outer_residue: Option<OuterBoundaryCondition>,
    /// Residue modes left out because `dim R_μ < d`, with the reason.
    pub skipped: Vec<(ModeIndex, String)>,
}

impl SpectrumResult {
    pub fn outer_for(&self, mode: &ModeIndex) -> &OuterBoundaryCondition {
        match (&self.outer_residue, mode.is_residue_mode()) {
            (Some(w), true) => w,
            _ => &self.outer,
        }
    }

    /// Eigenvalues repeated by multiplicity.
    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().flat_map(|e| std::iter::repeat(e.kappa).take(e.mult)).collect()
    }

    pub fn total_count(&self) -> usize {
        self.entries.iter().map(|e| e.mult).sum()
    }

    /// Rows `kappa,lambda,mu,mult,method`.
    pub fn csv_rows(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|e| format!("{:.15e},{},{},{},{}", e.kappa, e.mode.lambda, e.mode.mu, e.mult, e.method))
            .collect()
    }
}

/// Boundary values at `r = 1` of the regular and singular scalar solutions:
/// columns `(f, g)` of each.
fn scalar_boundary(mode: &ModeIndex, kappa: f64) -> [[f64; 2]; 2] {
    let reg = regular_solution(mode.lambda, mode.mu, kappa);
    let sing = singular_solution(mode.lambda, mode.mu, kappa);
    [[reg.f.value(1.0), sing.f.value(1.0)], [reg.g.value(1.0), sing.g.value(1.0)]]
}

/// `[[a I, b I], [c I, e I]]`.
fn block2(m: [[f64; 2]; 2], d: usize) -> CMat {
    let mut out = CMat::zeros(2 * d, 2 * d);
    for i in 0..d {
        out[(i, i)] = real(m[0][0]);
        out[(i, d + i)] = real(m[0][1]);
        out[(d + i, i)] = real(m[1][0]);
        out[(d + i, d + i)] = real(m[1][1]);
    }
    out
}

/// `(1, ±i)/√2 ⊗ I_d`.
fn bag_frame(plus: bool, d: usize) -> CMat {
    let s = if plus { 1.0 } else { -1.0 };
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = CMat::zeros(2 * d, d);
    for i in 0..d {
        out[(i, i)] = real(h);
        out[(d + i, i)] = c(0.0, s * h);
    }
    out
}

/// `(P₋^H X)(P₊^H X)^{-1}` for a Lagrangian frame `X`.
fn cayley(x: &CMat, d: usize) -> Result<CMat> {
    let a = bag_frame(true, d).adjoint() * x;
    let b = bag_frame(false, d).adjoint() * x;
    let inv = a
        .try_inverse()
        .ok_or_else(|| Error::IllPosed("subspace meets the negative bag space; it is not Lagrangian".into()))?;
    Ok(b * inv)
}

fn real_line(s: &Subspace, d: usize) -> Option<f64> {
    let v = s.fiber_factor(d)?;
    if v.dim() != 1 {
        return None;
    }
    real_line_angle(v.basis())
}

#[derive(Debug, Clone, PartialEq)]
enum Path {
    /// Inner angle (residue modes only) and outer angle.
    RealLines { alpha: Option<f64>, beta: f64 },
    Unitary,
    NonLagrangian,
}

/// The matching problem of one mode with a fixed residue subspace and outer condition.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingProblem {
    pub mode: ModeIndex,
    /// Basis of `R_μ` (residue modes only).
    inner: Option<CMat>,
    /// `JW`, orthonormal.
    jw: CMat,
    w: CMat,
    path: Path,
}

impl MatchingProblem {
    /// `inner` is `R_μ` on residue modes and ignored elsewhere, where
    /// regularity at the origin replaces it.
    pub fn new(mode: ModeIndex, inner: Option<&Subspace>, outer: &OuterBoundaryCondition) -> Result<Self> {
        let d = mode.mult;
        if outer.fiber_dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "outer condition has fibre dimension {}, mode has {d}",
                outer.fiber_dim()
            )));
        }
        let w = outer.subspace().basis().clone();
        let jw = j_matrix(d) * &w;
        let beta = real_line(outer.subspace(), d);
        if !mode.is_residue_mode() {
            let path = match beta {
                Some(beta) => Path::RealLines { alpha: None, beta },
                None => Path::Unitary,
            };
            return Ok(MatchingProblem { mode, inner: None, jw, w, path });
        }
        let r = inner.ok_or_else(|| Error::IllPosed(format!("mode {mode} carries residues but no condition was given")))?;
        if r.ambient() != 2 * d || r.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "residue subspace has dimension {} in C^{}; the matching matrix needs dimension {d}",
                r.dim(),
                r.ambient()
            )));
        }
        let path = if !block_is_lagrangian(r) {
            Path::NonLagrangian
        } else {
            match (real_line(r, d), beta) {
                (Some(alpha), Some(beta)) => Path::RealLines { alpha: Some(alpha), beta },
                _ => Path::Unitary,
            }
        };
        Ok(MatchingProblem { mode, inner: Some(r.basis().clone()), jw, w, path })
    }

    pub fn fiber_dim(&self) -> usize {
        self.mode.mult
    }

    pub fn is_lagrangian(&self) -> bool {
        self.path != Path::NonLagrangian
    }

    /// Boundary values `(f(1), g(1))` of a basis of admissible solutions, `2d × d`.
    pub fn frame(&self, kappa: f64) -> CMat {
        let d = self.fiber_dim();
        let b = scalar_boundary(&self.mode, kappa);
        match &self.inner {
            Some(r) => block2(b, d) * r,
            None => block2([[b[0][0], 0.0], [b[1][0], 0.0]], d).columns(0, d).into_owned(),
        }
    }

    /// `(JW)^H Φ(κ)`.
    pub fn matching_matrix(&self, kappa: f64) -> CMat {
        self.jw.adjoint() * self.frame(kappa)
    }

    /// `det((JW)^H Q)` with `Q` an orthonormal basis of the frame: the product
    /// of sines of the principal angles between the solution space and `W`
    /// up to a phase, so `|·| ≤ 1`.
    pub fn normalized_determinant(&self, kappa: f64) -> C64 {
        let q = self.frame(kappa).qr().q();
        (self.jw.adjoint() * q).determinant()
    }

    /// Real function of `κ` whose zeros are the eigenvalues.
    pub fn determinant(&self, kappa: f64) -> Result<f64> {
        match &self.path {
            Path::RealLines { alpha, beta } => {
                let b = scalar_boundary(&self.mode, kappa);
                let (x, y) = match alpha {
                    Some(a) => {
                        let (s, c) = a.sin_cos();
                        (b[0][0] * c + b[0][1] * s, b[1][0] * c + b[1][1] * s)
                    }
                    None => (b[0][0], b[1][0]),
                };
                // J(cos β, sin β) = (-sin β, cos β)
                let (s, c) = beta.sin_cos();
                Ok((-s * x + c * y) / x.hypot(y))
            }
            Path::Unitary => {
                let (num, det_v) = self.unitary_parts(kappa)?;
                Ok((num / det_v.sqrt()).re)
            }
            Path::NonLagrangian => Err(Error::IllPosed(format!(
                "residue condition on mode {} is not Lagrangian; the spectrum need not be real",
                self.mode
            ))),
        }
    }

    /// `(det(1 - V)/(-2i)^d, det V)` with `V = U_W^H U_L`.
    fn unitary_parts(&self, kappa: f64) -> Result<(C64, C64)> {
        let d = self.fiber_dim();
        let ul = cayley(&self.frame(kappa), d)?;
        let uw = cayley(&self.w, d)?;
        let v = uw.adjoint() * ul;
        let num = (CMat::identity(d, d) - &v).determinant() / c(0.0, -2.0).powi(d as i32);
        Ok((num, v.determinant()))
    }

    /// [`Self::determinant`] with the phase of `det V` continued from `psi`
    /// instead of the principal branch; returns the new phase. Along a grid
    /// fine enough that `arg det V` moves by less than `π` per step this is
    /// a real analytic function of `κ`.
    fn tracked(&self, kappa: f64, psi: f64) -> Result<(f64, f64)> {
        match self.path {
            Path::Unitary => {
                let (num, det_v) = self.unitary_parts(kappa)?;
                let mut dpsi = det_v.arg() - psi;
                dpsi -= (dpsi / (2.0 * PI)).round() * 2.0 * PI;
                let psi = psi + dpsi;
                Ok(((num * C64::from_polar(1.0, -psi / 2.0)).re, psi))
            }
            _ => Ok((self.determinant(kappa)?, 0.0)),
        }
    }

    /// `κ = α - β + nπ` on the self-conjugate mode with real lines.
    pub fn closed_form_roots(&self, window: (f64, f64)) -> Option<Vec<f64>> {
        if !self.mode.is_self_conjugate() {
            return None;
        }
        let Path::RealLines { alpha: Some(a), beta } = self.path else { return None };
        let base = a - beta;
        let n0 = ((window.0 - base) / PI).ceil() as i64;
        let n1 = ((window.1 - base) / PI).floor() as i64;
        Some((n0..=n1).map(|n| base + n as f64 * PI).collect())
    }

    fn multiplicity(&self, kappa: f64) -> usize {
        let d = self.fiber_dim();
        if matches!(self.path, Path::RealLines { .. }) {
            return d;
        }
        let q = self.frame(kappa).qr().q();
        let sv = singular_values(&(self.jw.adjoint() * q));
        sv.iter().filter(|&&s| s <= RANK_DROP_TOL).count().max(1)
    }

    /// Roots of [`Self::determinant`] in `window` by grid bracketing and Brent.
    pub fn search_roots(&self, window: (f64, f64), root_tol: f64) -> Result<Vec<(f64, usize)>> {
        let (lo, hi) = check_window(window)?;
        let width = hi - lo;
        if width == 0.0 {
            let v = self.determinant(lo)?;
            return Ok(if v.abs() <= 1e-10 { vec![(lo, self.multiplicity(lo))] } else { Vec::new() });
        }
        let nodes = grid(lo, hi, (width / 16.0).min(0.05));
        let mut vals = Vec::with_capacity(nodes.len());
        let mut phases = Vec::with_capacity(nodes.len());
        let mut psi = 0.0;
        for &k in &nodes {
            let (v, p) = self.tracked(k, psi)?;
            psi = p;
            vals.push(v);
            phases.push(p);
        }
        let mut roots = Vec::new();
        for (i, (&k, &v)) in nodes.iter().zip(&vals).enumerate() {
            if v == 0.0 || (k == 0.0 && v.abs() <= 1e-10) {
                roots.push(k);
            }
            if i + 1 < nodes.len() && v * vals[i + 1] < 0.0 {
                let f = |x: f64| self.tracked(x, phases[i]).map(|p| p.0).unwrap_or(f64::NAN);
                let r = brent(f, k, nodes[i + 1], v, vals[i + 1], root_tol);
                if f(r).abs() <= FALSE_ROOT_LEVEL {
                    roots.push(r);
                }
            }
        }
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // a root found at the κ = 0 node can also be bracketed next to it
        roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9 && (*a == 0.0 || *b == 0.0));
        for pair in roots.windows(2) {
            if pair[1] - pair[0] < 10.0 * root_tol {
                return Err(Error::ClusterUnresolved(format!(
                    "roots {} and {} of mode {}",
                    pair[0], pair[1], self.mode
                )));
            }
        }
        Ok(roots.into_iter().map(|k| (k, self.multiplicity(k))).collect())
    }

    /// Eigenvalues with multiplicity and the method that produced them.
    pub fn eigenvalues(&self, window: (f64, f64), root_tol: f64) -> Result<Vec<(f64, usize, Method)>> {
        check_window(window)?;
        if !self.is_lagrangian() {
            return Err(Error::IllPosed(format!(
                "residue condition on mode {} is not Lagrangian; use the index path",
                self.mode
            )));
        }
        if let Some(ks) = self.closed_form_roots(window) {
            return Ok(ks.into_iter().map(|k| (k, self.fiber_dim(), Method::ClosedForm)).collect());
        }
        Ok(self.search_roots(window, root_tol)?.into_iter().map(|(k, m)| (k, m, Method::Determinant)).collect())
    }

    /// Coefficient vectors spanning the kernel of the matching matrix at `κ`.
    fn null_vectors(&self, kappa: f64, count: usize) -> CMat {
        let dec = svd(&self.matching_matrix(kappa));
        let d = self.fiber_dim();
        dec.v.columns(d - count, count).into_owned()
    }

    /// Residue vectors of the eigenfunctions at `κ` (residue modes only).
    pub fn kernel_residues(&self, kappa: f64, mult: usize) -> Option<CMat> {
        self.inner.as_ref().map(|r| r * self.null_vectors(kappa, mult))
    }

    /// Closed-form eigenfunctions at a root `κ` of multiplicity `mult`.
    pub fn eigenfunctions(&self, kappa: f64, mult: usize) -> Vec<RadialSection> {
        let d = self.fiber_dim();
        let nv = self.null_vectors(kappa, mult);
        let reg = regular_solution(self.mode.lambda, self.mode.mu, kappa);
        let sing = singular_solution(self.mode.lambda, self.mode.mu, kappa);
        (0..mult)
            .map(|j| {
                let cvec: CVec = nv.column(j).into_owned();
                let terms = match &self.inner {
                    Some(r) => {
                        let v = r * &cvec;
                        vec![
                            ClosedTerm { f: reg.f.clone(), g: reg.g.clone(), coeff: v.rows(0, d).into_owned() },
                            ClosedTerm { f: sing.f.clone(), g: sing.g.clone(), coeff: v.rows(d, d).into_owned() },
                        ]
                    }
                    None => vec![ClosedTerm { f: reg.f.clone(), g: reg.g.clone(), coeff: cvec }],
                };
                RadialSection::closed(self.mode, terms)
            })
            .collect()
    }
}

fn check_window(window: (f64, f64)) -> Result<(f64, f64)> {
    let (lo, hi) = window;
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(Error::DomainError(format!("window [{lo}, {hi}] is not a finite interval")));
    }
    Ok((lo, hi))
}

/// Nodes of step at most `h` covering `[lo, hi]`, always containing 0 when it lies inside.
fn grid(lo: f64, hi: f64, h: f64) -> Vec<f64> {
    let anchor = if lo <= 0.0 && hi >= 0.0 { 0.0 } else { lo };
    let k0 = ((lo - anchor) / h).ceil() as i64;
    let k1 = ((hi - anchor) / h).floor() as i64;
    let mut out = vec![lo];
    for k in k0..=k1 {
        let x = anchor + k as f64 * h;
        if x > lo && x < hi {
            out.push(x);
        }
    }
    if hi > lo {
        out.push(hi);
    }
    if anchor == 0.0 && !out.contains(&0.0) {
        out.push(0.0);
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    out
}

/// Brent's method on a bracket with `f(a) f(b) < 0`.
pub fn brent(f: impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fb: f64, tol: f64) -> f64 {
    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut bisected = true;
    for _ in 0..200 {
        if fb == 0.0 || (b - a).abs() <= tol {
            return b;
        }
        let mut s = if fa != fc && fb != fc {
            a * fb * fc / ((fa - fb) * (fa - fc)) + b * fa * fc / ((fb - fa) * (fb - fc)) + c * fa * fb / ((fc - fa) * (fc - fb))
        } else {
            b - fb * (b - a) / (fb - fa)
        };
        let q = (3.0 * a + b) / 4.0;
        let outside = !((s > q.min(b) && s < q.max(b)) || s == b);
        let slow = if bisected { (s - b).abs() >= (b - c).abs() / 2.0 } else { (s - b).abs() >= (c - d).abs() / 2.0 };
        let tiny = if bisected { (b - c).abs() < tol } else { (c - d).abs() < tol };
        if outside || slow || tiny {
            s = (a + b) / 2.0;
            bisected = true;
        } else {
            bisected = false;
        }
        let fs = f(s);
        d = c;
        c = b;
        fc = fb;
        if fa * fs < 0.0 {
            b = s;
            fb = fs;
        } else {
            a = s;
            fa = fs;
        }
        if fa.abs() < fb.abs() {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
    }
    b
}

/// Real determinant of one mode; zeros are eigenvalues.
pub fn mode_matching_determinant(
    mode: ModeIndex,
    r_mode: Option<&Subspace>,
    outer: &OuterBoundaryCondition,
    kappa: f64,
) -> Result<f64> {
    MatchingProblem::new(mode, r_mode, outer)?.determinant(kappa)
}

pub fn eigenvalues_in_window(
    mode: ModeIndex,
    r_mode: Option<&Subspace>,
    outer: &OuterBoundaryCondition,
    window: (f64, f64),
) -> Result<Vec<(f64, usize)>> {
    let p = MatchingProblem::new(mode, r_mode, outer)?;
    Ok(p.eigenvalues(window, ROOT_TOL)?.into_iter().map(|(k, m, _)| (k, m)).collect())
}

enum ModeOutcome {
    Solved(Vec<SpectrumEntry>),
    Skipped(ModeIndex, String),
}

fn solve_mode(cfg: &ModelConfig, r: &ResidueCondition, mode: ModeIndex, window: (f64, f64)) -> Result<ModeOutcome> {
    let outer = cfg.outer_for(&mode);
    let inner = if mode.is_residue_mode() {
        let s = r
            .get(mode.mu)
            .ok_or_else(|| Error::DimensionMismatch(format!("condition has no block for mu = {}", mode.mu)))?;
        if s.dim() < mode.mult {
            return Ok(ModeOutcome::Skipped(
                mode,
                format!("dim R = {} < {}: under-determined, counted by the index", s.dim(), mode.mult),
            ));
        }
        Some(s)
    } else {
        None
    };
    let p = MatchingProblem::new(mode, inner, outer)?;
    let found = p.eigenvalues(window, cfg.tol.root)?;
    Ok(ModeOutcome::Solved(found.into_iter().map(|(kappa, mult, method)| SpectrumEntry { kappa, mode, mult, method }).collect()))
}

/// Spectrum of `D_R` in `window` over every mode of the truncation.
pub fn assemble_spectrum(cfg: &ModelConfig, r: &ResidueCondition, window: (f64, f64)) -> Result<SpectrumResult> {
    check_window(window)?;
    if r.fiber_dim != cfg.fiber_dim {
        return Err(Error::DimensionMismatch("condition and model have different fibre dimensions".into()));
    }
    let modes = enumerate_modes(cfg);
    let outcomes: Vec<Result<ModeOutcome>> = modes
        .par_iter()
        .map(|m| solve_mode(cfg, r, *m, window).map_err(|e| e.context(&format!("mode {m}"))))
        .collect();
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for o in outcomes {
        match o? {
            ModeOutcome::Solved(es) => entries.extend(es),
            ModeOutcome::Skipped(m, why) => skipped.push((m, why)),
        }
    }
    entries.sort_by(|a, b| {
        a.kappa
            .partial_cmp(&b.kappa)
            .unwrap()
            .then(a.mode.lambda.cmp(&b.mode.lambda))
            .then(a.mode.mu.partial_cmp(&b.mode.mu).unwrap())
    });
    Ok(SpectrumResult {
        entries,
        window,
        condition: r.clone(),
        outer: cfg.outer_bc.clone(),
        outer_residue: cfg.outer_residue_bc.clone(),
        skipped,
    })
}

/// `N(Λ)`: eigenvalues with `|κ| ≤ Λ`, with multiplicity.
pub fn counting_function(spec: &SpectrumResult, lambda: f64) -> Result<usize> {
    if spec.window.0 > -lambda || spec.window.1 < lambda {
        return Err(Error::WindowTooSmall(format!(
            "window [{}, {}] does not contain [-{lambda}, {lambda}]",
            spec.window.0, spec.window.1
        )));
    }
    Ok(spec.entries.iter().filter(|e| e.kappa.abs() <= lambda).map(|e| e.mult).sum())
}

/// Boundary residues of the Calderón subspace of a residue mode: residues of
/// solutions of `Mφ = 0` whose boundary values lie in `W`.
pub fn calderon_subspace(mode: ModeIndex, outer: &OuterBoundaryCondition) -> Result<Subspace> {
    if !mode.is_residue_mode() {
        return Err(Error::DomainError(format!("mode {mode} carries no residues")));
    }
    let d = mode.mult;
    if outer.fiber_dim() != d {
        return Err(Error::DimensionMismatch("outer condition and mode have different fibre dimensions".into()));
    }
    let b = block2(scalar_boundary(&mode, 0.0), d);
    // det b = 1 (the Wronskian)
    let inv = b.try_inverse().ok_or_else(|| Error::InternalError("boundary map at κ = 0 is singular".into()))?;
    Ok(Subspace::span(&(inv * outer.subspace().basis())))
}

/// Calderón data on every residue mode of the truncation.
pub fn calderon_condition(cfg: &ModelConfig) -> Result<ResidueCondition> {
    let mut per_mode = Vec::new();
    for m in residue_modes(cfg) {
        per_mode.push((m.mu, calderon_subspace(m, cfg.outer_for(&m))?));
    }
    Ok(ResidueCondition { kind: ConditionKind::Custom, fiber_dim: cfg.fiber_dim, per_mode, regularity: Some(f64::INFINITY) })
}

/// `ind D_R` as the index of the Fredholm pair `(Λ, R)`.
pub fn index(cfg: &ModelConfig, r: &ResidueCondition) -> Result<i64> {
    fredholm_delta_index(r, &calderon_condition(cfg)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BordismReport {
    /// `dim(ker A ∩ bag⁺) - dim(ker A ∩ bag⁻)` summed over the truncation.
    pub ind_a_plus: i64,
    pub ind_a_minus: i64,
    /// Index of `D` with `R = (ker A ∩ bag⁺) ⊕ APS`.
    pub ind_r0_plus: i64,
}

impl BordismReport {
    pub fn holds(&self) -> bool {
        self.ind_a_plus == 0 && self.ind_a_minus == 0 && self.ind_a_plus == 2 * self.ind_r0_plus
    }
}

/// Index of `A` split by the bag grading, which `A` reverses.
pub fn bordism_check(cfg: &ModelConfig) -> Result<BordismReport> {
    let d = cfg.fiber_dim;
    let (bp, bm) = (bag_block(true, d), bag_block(false, d));
    let mut plus = 0i64;
    let mut minus = 0i64;
    for m in residue_modes(cfg) {
        let k = kernel_block(m.mu, d);
        plus += k.intersection(&bp).dim() as i64;
        minus += k.intersection(&bm).dim() as i64;
    }
    let r0 = ResidueCondition::from_fn(cfg, ConditionKind::Custom, |mu| {
        kernel_block(mu, d).intersection(&bp).sum(&aps_block(mu, d))
    });
    let ind_r0_plus = index(cfg, &r0)?;
    Ok(BordismReport { ind_a_plus: plus - minus, ind_a_minus: minus - plus, ind_r0_plus })
}

/// Splits a spectrum of an `ε`-graded problem into the spectra (as `|κ|`) of
/// the two chiral halves of `D²`. Zero modes on residue modes are sorted by
/// the signature of `ε` on their residues; regular zero modes by the sign of `μ`,
/// which `ε` flips.
pub fn chiral_sectors(spec: &SpectrumResult, eps: &ChiralityOperator) -> Result<(SpectrumResult, SpectrumResult)> {
    let k = (-spec.window.0).min(spec.window.1);
    if !(k > 0.0) {
        return Err(Error::WindowTooSmall("chiral sectors need a window around 0".into()));
    }
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for e in spec.entries.iter().filter(|e| e.kappa.abs() <= k) {
        let mut entry = e.clone();
        entry.kappa = e.kappa.abs();
        if e.kappa > 1e-9 {
            plus.push(entry);
        } else if e.kappa < -1e-9 {
            minus.push(entry);
        } else if e.mode.is_residue_mode() {
            let r = spec.condition.get(e.mode.mu).ok_or_else(|| Error::InternalError("missing block".into()))?;
            let p = MatchingProblem::new(e.mode, Some(r), spec.outer_for(&e.mode))?;
            let res = p.kernel_residues(e.kappa, e.mult).expect("residue mode");
            let q = res.qr().q();
            let eq = &eps.matrix * &q;
            if (&eq - &q * (q.adjoint() * &eq)).norm() > 1e-8 {
                return Err(Error::NotEpsInvariant(format!("kernel of mode {} is not ε-invariant", e.mode)));
            }
            let h = q.adjoint() * eq;
            // H is a Hermitian involution, so (1 ± H)/2 are projectors: a relative
            // rank test would count a roundoff-sized 1x1 block as rank one
            let id = CMat::identity(h.nrows(), h.nrows());
            let proj_rank =
                |m: CMat| singular_values(&m).iter().filter(|&&s| s > 0.5).count();
            let np = proj_rank((&id + &h) * real(0.5));
            let nm = proj_rank((&id - &h) * real(0.5));
            if np > 0 {
                plus.push(SpectrumEntry { mult: np, ..entry.clone() });
            }
            if nm > 0 {
                minus.push(SpectrumEntry { mult: nm, ..entry });
            }
        } else if e.mode.mu >= 0.0 {
            plus.push(entry);
        } else {
            minus.push(entry);
        }
    }
    let make = |entries: Vec<SpectrumEntry>| {
        let mut entries = entries;
        entries.sort_by(|a, b| a.kappa.partial_cmp(&b.kappa).unwrap());
        SpectrumResult { entries, window: (-k, k), skipped: spec.skipped.clone(), ..spec.clone() }
    };
    Ok((make(plus), make(minus)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatSupertrace {
    pub value: f64,
    /// Bound on the contribution of eigenvalues beyond the window.
    pub tail: f64,
}

/// `sup N(Λ)/⟨Λ⟩²` over the window, with `N` counting `|κ| ≤ Λ`.
fn weyl_constant(spec: &SpectrumResult, k: f64) -> f64 {
    let mut ks: Vec<f64> = spec.entries.iter().map(|e| e.kappa.abs()).filter(|&x| x <= k).collect();
    ks.push(k);
    ks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ks.iter()
        .map(|&l| {
            let n: usize = spec.entries.iter().filter(|e| e.kappa.abs() <= l).map(|e| e.mult).sum();
            n as f64 / (1.0 + l * l)
        })
        .fold(0.0, f64::max)
}

/// `Σ_+ e^{-tκ²} - Σ_- e^{-tκ²}`. Beyond the window edge `K` each sector
/// is bounded through `N(Λ) ≤ C⟨Λ⟩²` by `C e^{-tK²}(1 + K² + 1/t)`.
pub fn heat_supertrace(plus: &SpectrumResult, minus: &SpectrumResult, t: f64, tail_bound: f64) -> Result<HeatSupertrace> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::DomainError(format!("heat time must be positive, got {t}")));
    }
    let mut value = 0.0;
    let mut tail = 0.0;
    for (spec, sign) in [(plus, 1.0), (minus, -1.0)] {
        let k = (-spec.window.0).min(spec.window.1).max(0.0);
        value += sign * spec.entries.iter().map(|e| e.mult as f64 * (-t * e.kappa * e.kappa).exp()).sum::<f64>();
        tail += weyl_constant(spec, k) * (-t * k * k).exp() * (1.0 + k * k + 1.0 / t);
    }
    if tail > tail_bound {
        return Err(Error::TailTooLarge(format!("tail estimate {tail:.3e} exceeds {tail_bound:.3e}")));
    }
    Ok(HeatSupertrace { value, tail })
}

/// Modified Bessel `I_ν(x)`, from the entire series at small `x`.
fn bessel_i(nu: HalfInt, x: f64) -> f64 {
    entire(nu, -1.0, x)
}

fn bessel_k(nu: HalfInt, x: f64) -> f64 {
    spherical_bessel(Kind::K, nu, x).expect("positive argument")
}

/// `(I_ν(x), I_ν'(x))`.
fn i_pair(nu: HalfInt, x: f64) -> (f64, f64) {
    let v = bessel_i(nu, x);
    (v, bessel_i(nu.shift(-1), x) - nu.value() / x * v)
}

fn k_pair(nu: HalfInt, x: f64) -> (f64, f64) {
    let v = bessel_k(nu, x);
    (v, -bessel_k(nu.shift(-1), x) - nu.value() / x * v)
}

#[derive(Debug, Clone)]
pub struct SecondOrderSolution {
    pub section: RadialSection,
    pub mesh: GradedMesh,
    /// `‖(M²+1)φ - ψ‖ / ‖ψ‖`.
    pub residual: f64,
}

/// Values and derivatives of `y = K(ηr)∫_0^r I(ηs)ψ s ds + I(ηr)∫_r^1 K(ηs)ψ s ds`,
/// the solution of `-(y'' + y'/r - ν²y/r²) + η²y = ψ` regular at 0 and
/// with `y(1) = K(η)A(1)`.
fn green_particular(nu: HalfInt, eta: f64, psi: &[C64], mesh: &GradedMesh) -> (Vec<C64>, Vec<C64>) {
    let n = mesh.len();
    let mut ip = Vec::with_capacity(n);
    let mut kp = Vec::with_capacity(n);
    for &r in &mesh.nodes {
        ip.push(i_pair(nu, eta * r));
        kp.push(k_pair(nu, eta * r));
    }
    let ia: Vec<C64> = (0..n).map(|i| psi[i] * (ip[i].0 * mesh.nodes[i])).collect();
    let kb: Vec<C64> = (0..n).map(|i| psi[i] * (kp[i].0 * mesh.nodes[i])).collect();
    let a = mesh.cumulative_from_zero(&ia);
    let b = mesh.cumulative_to_one(&kb);
    let y = (0..n).map(|i| a[i] * kp[i].0 + b[i] * ip[i].0).collect();
    let dy = (0..n).map(|i| (a[i] * kp[i].1 + b[i] * ip[i].1) * eta).collect();
    (y, dy)
}

fn solve_on_mesh(mode: ModeIndex, outer: &OuterBoundaryCondition, psi: &SampledPair, mesh: &GradedMesh) -> Result<(RadialSection, f64)> {
    let d = mode.mult;
    let lam = mode.lambda.value();
    let mu = mode.mu;
    let eta = (mu * mu + 1.0).sqrt();
    let nu_f = mode.lambda.abs();
    let nu_g = mode.lambda.shift(1).abs();
    let n = mesh.len();
    let col = |m: &CMat, k: usize| -> Vec<C64> { m.column(k).iter().cloned().collect() };
    let (if1, dif1) = i_pair(nu_f, eta);
    let (ig1, dig1) = i_pair(nu_g, eta);
    // particular solutions and their boundary data
    let mut yf = Vec::new();
    let mut yg = Vec::new();
    let mut a0 = CVec::zeros(2 * d);
    let mut a1 = CVec::zeros(2 * d);
    for k in 0..d {
        let (f, df) = green_particular(nu_f, eta, &col(&psi.f, k), mesh);
        let (g, dg) = green_particular(nu_g, eta, &col(&psi.g, k), mesh);
        // values at r = 1 from B(1) = 0
        let kf = k_pair(nu_f, eta);
        let kg = k_pair(nu_g, eta);
        let af: C64 = mesh.integrate(&(0..n).map(|i| psi.f[(i, k)] * (bessel_i(nu_f, eta * mesh.nodes[i]) * mesh.nodes[i])).collect::<Vec<_>>());
        let ag: C64 = mesh.integrate(&(0..n).map(|i| psi.g[(i, k)] * (bessel_i(nu_g, eta * mesh.nodes[i]) * mesh.nodes[i])).collect::<Vec<_>>());
        let (f1, df1) = (af * kf.0, af * kf.1 * eta);
        let (g1, dg1) = (ag * kg.0, ag * kg.1 * eta);
        a0[k] = f1;
        a0[d + k] = g1;
        a1[k] = f1 * mu - (dg1 + g1 * (lam + 1.0));
        a1[d + k] = (df1 - f1 * lam) - g1 * mu;
        yf.push((f, df));
        yg.push((g, dg));
    }
    // homogeneous parts c_f I_{ν_f}(ηr), c_g I_{ν_g}(ηr)
    let mut h0 = CMat::zeros(2 * d, 2 * d);
    let mut h1 = CMat::zeros(2 * d, 2 * d);
    for k in 0..d {
        h0[(k, k)] = real(if1);
        h0[(d + k, d + k)] = real(ig1);
        h1[(k, k)] = real(mu * if1);
        h1[(d + k, k)] = real(eta * dif1 - lam * if1);
        h1[(k, d + k)] = real(-(eta * dig1 + (lam + 1.0) * ig1));
        h1[(d + k, d + k)] = real(-mu * ig1);
    }
    let p = (j_matrix(d) * outer.subspace().basis()).adjoint();
    let mut sys = CMat::zeros(2 * d, 2 * d);
    sys.rows_mut(0, d).copy_from(&(&p * &h0));
    sys.rows_mut(d, d).copy_from(&(&p * &h1));
    let mut rhs = CVec::zeros(2 * d);
    rhs.rows_mut(0, d).copy_from(&(-(&p * &a0)));
    rhs.rows_mut(d, d).copy_from(&(-(&p * &a1)));
    let coef = sys
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SolveFailed(format!("boundary system of mode {mode} is singular")))?;
    // assemble φ and Mφ on the nodes
    let mut phi = SampledPair::zeros(n, d);
    let mut mphi = SampledPair::zeros(n, d);
    for (i, &r) in mesh.nodes.iter().enumerate() {
        let (ifr, difr) = i_pair(nu_f, eta * r);
        let (igr, digr) = i_pair(nu_g, eta * r);
        for k in 0..d {
            let f = yf[k].0[i] + coef[k] * ifr;
            let df = yf[k].1[i] + coef[k] * (difr * eta);
            let g = yg[k].0[i] + coef[d + k] * igr;
            let dg = yg[k].1[i] + coef[d + k] * (digr * eta);
            phi.f[(i, k)] = f;
            phi.g[(i, k)] = g;
            mphi.f[(i, k)] = f * mu - (dg + g * ((lam + 1.0) / r));
            mphi.g[(i, k)] = (df - f * (lam / r)) - g * mu;
        }
    }
    let m2 = RadialSection::sampled(mode, mphi).operator_samples(mesh, Stencil::Panel);
    let resid = m2.add(&phi).sub(psi);
    let pn = psi.norm(mesh);
    let rel = if pn > 0.0 { resid.norm(mesh) / pn } else { resid.norm(mesh) };
    Ok((RadialSection::sampled(mode, phi), rel))
}

/// Solves `(M² + 1)φ = ψ` with zero residue (regularity off the residue
/// modes) at the origin and `φ(1), (Mφ)(1) ∈ W`, via the modified-Bessel
/// Green's function at `κ = ±i`. A closed-form `ψ` is retried once on a
/// refined mesh; a sampled `ψ` must live on the mesh of `quad`.
pub fn second_order_solve(
    mode: ModeIndex,
    outer: &OuterBoundaryCondition,
    psi: &RadialSection,
    quad: &QuadratureParams,
) -> Result<SecondOrderSolution> {
    if outer.fiber_dim() != mode.mult || psi.mode != mode {
        return Err(Error::DimensionMismatch("ψ, mode and outer condition disagree".into()));
    }
    let mut params = quad.clone();
    let closed = matches!(psi.repr, Representation::Closed(_));
    let attempts = if closed { 2 } else { 1 };
    let mut last = f64::NAN;
    for _ in 0..attempts {
        let mesh = GradedMesh::new(&params)?;
        let samples = psi.samples(&mesh);
        if samples.f.nrows() != mesh.len() {
            return Err(Error::DimensionMismatch(format!(
                "sampled ψ has {} nodes, the mesh {}",
                samples.f.nrows(),
                mesh.len()
            )));
        }
        if samples.norm(&mesh) == 0.0 {
            return Ok(SecondOrderSolution { section: RadialSection::sampled(mode, samples), mesh, residual: 0.0 });
        }
        let (section, residual) = solve_on_mesh(mode, outer, &samples, &mesh)?;
        if residual <= 1e-6 {
            return Ok(SecondOrderSolution { section, mesh, residual });
        }
        last = residual;
        params.max_panel /= 2.0;
    }
    Err(Error::SolveFailed(format!("relative residual {last:.3e} on mode {mode}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditions::make_aps;
    use crate::oracle::fd_eigen_oracle;
    use crate::profile::Profile;

    fn line(t: f64) -> Subspace {
        Subspace::from_vector(&CVec::from_vec(vec![real(t.cos()), real(t.sin())]))
    }

    fn half0() -> ModeIndex {
        ModeIndex::new(HalfInt::MINUS_HALF, 0.0, 1)
    }

    #[test]
    fn cosine_and_sine_determinants() {
        let ti = OuterBoundaryCondition::type_i(1);
        for &k in &[0.3, 1.1, 2.7] {
            let dc = mode_matching_determinant(half0(), Some(&line(0.0)), &ti, k).unwrap();
            let ds = mode_matching_determinant(half0(), Some(&line(PI / 2.0)), &ti, k).unwrap();
            assert!((dc.abs() - k.cos().abs()).abs() < 1e-13);
            assert!((ds.abs() - k.sin().abs()).abs() < 1e-13);
        }
    }

    #[test]
    fn regular_mode_determinant_is_bessel() {
        // λ = 1/2, μ = 0: f = 2^{1/2}Γ(3/2) E_{1/2}(κ², r) ∝ J_{1/2}(κr) κ^{-1/2}
        let m = ModeIndex::new(HalfInt::HALF, 0.0, 1);
        let ti = OuterBoundaryCondition::type_i(1);
        let p = MatchingProblem::new(m, None, &ti).unwrap();
        for &k in &[0.5, 2.0, 4.0] {
            let want = spherical_bessel(Kind::J, HalfInt::HALF, k).unwrap();
            let got = p.determinant(k).unwrap();
            // D = -f(1)/|(f(1), g(1))| and f(1) is a positive multiple of J_{1/2}(κ)
            assert!(got * want < 0.0, "{k}: {got} vs {want}");
        }
        let roots = p.search_roots((0.1, 10.0), ROOT_TOL).unwrap();
        let ks: Vec<f64> = roots.iter().map(|r| r.0).collect();
        assert_eq!(ks.len(), 3, "{ks:?}");
        for (i, k) in ks.iter().enumerate() {
            assert!((k - (i + 1) as f64 * PI).abs() < 1e-10);
        }
    }

    #[test]
    fn search_matches_closed_form() {
        let ti = OuterBoundaryCondition::type_i(1);
        let p = MatchingProblem::new(half0(), Some(&line(0.0)), &ti).unwrap();
        let cf = p.closed_form_roots((-5.0, 5.0)).unwrap();
        let s = p.search_roots((-5.0, 5.0), ROOT_TOL).unwrap();
        assert_eq!(cf.len(), 4);
        assert_eq!(s.len(), 4);
        for (a, (b, m)) in cf.iter().zip(&s) {
            assert!((a - b).abs() < 1e-10);
            assert_eq!(*m, 1);
        }
        let p = MatchingProblem::new(half0(), Some(&line(PI / 2.0)), &ti).unwrap();
        let s: Vec<f64> = p.search_roots((-5.0, 5.0), ROOT_TOL).unwrap().iter().map(|r| r.0).collect();
        assert_eq!(s.len(), 3, "{s:?}");
        assert!(s[1].abs() < 1e-12 && (s[2] - PI).abs() < 1e-10);
        assert!(p.search_roots((0.5, 1.5), ROOT_TOL).unwrap().is_empty());
    }

    #[test]
    fn unitary_path_agrees_with_real_path() {
        // a non-factoring Lagrangian for d = 2: different real lines on the two fibres
        let d = 2;
        let mut b = CMat::zeros(4, 2);
        b[(0, 0)] = real(1.0);
        b[(3, 1)] = real(1.0);
        let r = Subspace::span(&b);
        let m = ModeIndex::new(HalfInt::MINUS_HALF, 0.0, d);
        let p = MatchingProblem::new(m, Some(&r), &OuterBoundaryCondition::type_i(d)).unwrap();
        assert_eq!(p.path, Path::Unitary);
        let ks: Vec<f64> = p.search_roots((-4.0, 4.0), ROOT_TOL).unwrap().iter().map(|r| r.0).collect();
        let mut want = vec![-PI, -PI / 2.0, 0.0, PI / 2.0, PI];
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(ks.len(), want.len(), "{ks:?}");
        for (a, b) in ks.iter().zip(&want) {
            assert!((a - b).abs() < 1e-9, "{ks:?}");
        }
    }

    #[test]
    fn regular_mode_matches_oracle() {
        let ti = OuterBoundaryCondition::type_i(1);
        for &(t, mu) in &[(1, 1.0), (3, -2.0), (1, 3.0)] {
            let m = ModeIndex::new(HalfInt::from_twice(t).unwrap(), mu, 1);
            let p = MatchingProblem::new(m, None, &ti).unwrap();
            let det: Vec<f64> = p.search_roots((-12.0, 12.0), ROOT_TOL).unwrap().iter().map(|r| r.0).collect();
            let or = fd_eigen_oracle(m, &Subspace::zero(2), Some(&ti), 4096, 4).unwrap();
            for b in &or {
                let a = det.iter().cloned().min_by(|x, y| (x - b).abs().partial_cmp(&(y - b).abs()).unwrap()).unwrap();
                assert!((a - b).abs() <= 1e-4 * a.abs().max(1.0), "{m}: {det:?} vs {or:?}");
            }
        }
    }

    #[test]
    fn calderon_examples() {
        let ti = OuterBoundaryCondition::type_i(1);
        let l0 = calderon_subspace(half0(), &ti).unwrap();
        assert!(l0.approx_eq(&line(PI / 2.0), 1e-12));
        let m1 = ModeIndex::new(HalfInt::MINUS_HALF, 1.0, 1);
        let l1 = calderon_subspace(m1, &ti).unwrap();
        let e2 = 1f64.exp().powi(2);
        let want = Subspace::from_vector(&CVec::from_vec(vec![real(1.0 - e2), real(1.0 + e2)]));
        assert!(l1.approx_eq(&want, 1e-12));
        assert!(block_is_lagrangian(&l1));
    }

    #[test]
    fn aps_index() {
        for d in [1, 2] {
            let cfg = ModelConfig { lambda_cut: 1.5, mu_cut: 10.0, ..ModelConfig::default() }.with_fiber_dim(d);
            assert_eq!(index(&cfg, &make_aps(&cfg)).unwrap(), -(d as i64));
            let cfg = ModelConfig { holonomy_h0: 0.5, ..cfg };
            assert_eq!(index(&cfg, &make_aps(&cfg)).unwrap(), 0);
        }
    }

    #[test]
    fn spectrum_of_single_mode() {
        let cfg = ModelConfig { lambda_cut: 0.5, mu_cut: 0.0, ..ModelConfig::default() };
        let r = ResidueCondition::uniform(&cfg, ConditionKind::LocalSubspace, &line(0.0));
        // the (1/2, 0) mode is also present; keep only residue entries
        let s = assemble_spectrum(&cfg, &r, (0.0, 10.0)).unwrap();
        let ks: Vec<f64> = s.entries.iter().filter(|e| e.mode.is_residue_mode()).map(|e| e.kappa).collect();
        assert_eq!(ks.len(), 3);
        for (i, k) in ks.iter().enumerate() {
            assert!((k - (2 * i + 1) as f64 * PI / 2.0).abs() < 1e-12);
        }
        assert_eq!(counting_function(&assemble_spectrum(&cfg, &r, (-10.0, 10.0)).unwrap(), 2.0).unwrap(), 2);
        assert!(matches!(counting_function(&s, 2.0), Err(Error::WindowTooSmall(_))));
    }

    #[test]
    fn heat_examples() {
        let cfg = ModelConfig { lambda_cut: 0.5, mu_cut: 0.0, ..ModelConfig::default() };
        let r = ResidueCondition::uniform(&cfg, ConditionKind::LocalSubspace, &line(0.0));
        let s = assemble_spectrum(&cfg, &r, (-40.0, 40.0)).unwrap();
        let (p, m) = chiral_sectors(&s, &ChiralityOperator::standard(1)).unwrap();
        let h = heat_supertrace(&p, &m, 0.1, 1e-6).unwrap();
        assert!(h.value.abs() < 1e-12, "{h:?}");
        assert!(matches!(heat_supertrace(&p, &m, 1e-4, 1e-6), Err(Error::TailTooLarge(_))));
    }

    #[test]
    fn graded_heat_supertrace() {
        let base = ModelConfig { lambda_cut: 1.5, mu_cut: 2.0, ..ModelConfig::default() };
        let cfg = ModelConfig { outer_residue_bc: Some(OuterBoundaryCondition::line(-PI / 4.0, 1)), ..base };
        let eps = ChiralityOperator::standard(1);
        let aps = make_aps(&cfg);
        let (ap, _) = crate::conditions::chirality_split(&aps, &eps).unwrap();
        let r = crate::conditions::complete_plus(&ap, &eps).unwrap();
        let s = assemble_spectrum(&cfg, &r, (-30.0, 30.0)).unwrap();
        let (p, m) = chiral_sectors(&s, &eps).unwrap();
        let a = heat_supertrace(&p, &m, 0.05, 1e-6).unwrap();
        let b = heat_supertrace(&p, &m, 0.1, 1e-6).unwrap();
        assert!((a.value + 1.0).abs() < 1e-8, "{a:?}");
        assert!((a.value - b.value).abs() <= a.tail + b.tail + 1e-8);
    }

    #[test]
    fn bordism_holds() {
        for (h0, h1) in [(0.0, 0.0), (0.25, 0.5), (0.5, 0.0)] {
            let cfg = ModelConfig { holonomy_h0: h0, holonomy_h1: h1, mu_cut: 6.0, ..ModelConfig::default() };
            let rep = bordism_check(&cfg).unwrap();
            assert!(rep.holds(), "{rep:?}");
        }
    }

    #[test]
    fn bag_has_no_zero_mode() {
        let cfg = ModelConfig::default();
        for plus in [true, false] {
            let b = bag_block(plus, 1);
            for m in residue_modes(&cfg) {
                let p = MatchingProblem::new(m, Some(&b), cfg.outer_for(&m)).unwrap();
                assert!(p.normalized_determinant(0.0).norm() > 1e-8);
                assert!(matches!(p.eigenvalues((-1.0, 1.0), ROOT_TOL), Err(Error::IllPosed(_))));
            }
        }
    }

    #[test]
    fn eigenfunctions_satisfy_the_problem() {
        let ti = OuterBoundaryCondition::type_i(1);
        let mesh = GradedMesh::new(&QuadratureParams::default()).unwrap();
        let m = ModeIndex::new(HalfInt::MINUS_HALF, 2.0, 1);
        let r = line(0.3);
        let p = MatchingProblem::new(m, Some(&r), &ti).unwrap();
        let roots = p.search_roots((-8.0, 8.0), ROOT_TOL).unwrap();
        assert!(!roots.is_empty());
        let (k, mult) = roots[0];
        let phi = &p.eigenfunctions(k, mult)[0];
        let bv = phi.boundary_value(&mesh);
        assert!(bv[0].norm() < 1e-10 * bv.norm());
        let res = crate::gelfand_robbin::residue(phi, &mesh).unwrap();
        assert!(Subspace::from_vector(&res).approx_eq(&r, 1e-10));
    }

    #[test]
    fn second_order_on_eigenfunction() {
        let ti = OuterBoundaryCondition::type_i(1);
        let m = ModeIndex::new(HalfInt::HALF, 1.0, 1);
        let p = MatchingProblem::new(m, None, &ti).unwrap();
        let (k, mult) = p.search_roots((0.5, 8.0), ROOT_TOL).unwrap()[0];
        let psi = &p.eigenfunctions(k, mult)[0];
        let sol = second_order_solve(m, &ti, psi, &QuadratureParams::default()).unwrap();
        let want = psi.samples(&sol.mesh).scaled(real(1.0 / (k * k + 1.0)));
        let err = sol.section.samples(&sol.mesh).sub(&want).norm(&sol.mesh) / want.norm(&sol.mesh);
        assert!(err < 1e-8, "{err}");
        let z = RadialSection::zero(m);
        assert_eq!(second_order_solve(m, &ti, &z, &QuadratureParams::default()).unwrap().section.l2_norm(&sol.mesh), 0.0);
    }

    fn manufactured(mode: ModeIndex, pf: Vec<f64>, pg: Vec<f64>, mesh: &GradedMesh) -> (RadialSection, RadialSection) {
        let lam = mode.lambda.value();
        let nf = lam.abs();
        let ng = (lam + 1.0).abs();
        let cut = Profile::Cutoff { a: 0.6, b: 0.9 };
        let f = Profile::Power { c: 1.0, p: nf }.times(Profile::Polynomial(pf)).times(cut.clone());
        let g = Profile::Power { c: 1.0, p: ng }.times(Profile::Polynomial(pg)).times(cut);
        let mu = mode.mu;
        let op = |p: &Profile, nu: f64, r: f64| {
            let j = p.jet(r);
            -(j.d2 + j.d1 / r - nu * nu * j.v / (r * r)) + (mu * mu + 1.0) * j.v
        };
        let n = mesh.len();
        let mut psi = SampledPair::zeros(n, 1);
        for (i, &r) in mesh.nodes.iter().enumerate() {
            psi.f[(i, 0)] = real(op(&f, nf, r));
            psi.g[(i, 0)] = real(op(&g, ng, r));
        }
        let phi0 = RadialSection::closed(mode, vec![
            ClosedTerm { f: f.clone(), g: Profile::Zero, coeff: CVec::from_element(1, real(1.0)) },
            ClosedTerm { f: Profile::Zero, g: g.clone(), coeff: CVec::from_element(1, real(1.0)) },
        ]);
        (phi0, RadialSection::sampled(mode, psi))
    }

    #[test]
    fn second_order_manufactured() {
        let q = QuadratureParams::default();
        let mesh = GradedMesh::new(&q).unwrap();
        let ti = OuterBoundaryCondition::type_i(1);
        for &(t, mu) in &[(-1, 0.0), (-1, 3.0), (1, -2.0), (5, 1.0)] {
            let m = ModeIndex::new(HalfInt::from_twice(t).unwrap(), mu, 1);
            let (phi0, psi) = manufactured(m, vec![1.0, -0.5, 2.0], vec![0.3, 1.0, 0.0, -1.0], &mesh);
            let sol = second_order_solve(m, &ti, &psi, &q).unwrap();
            let want = phi0.samples(&mesh);
            let err = sol.section.samples(&mesh).sub(&want).norm(&mesh) / want.norm(&mesh);
            assert!(err < 1e-6, "{m}: {err}, residual {}", sol.residual);
        }
    }
}
