//! Flat model geometry: a circle of length `L` times the unit disk, its modes
//! and the spectrum of the twisted circle operator.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::halfint::HalfInt;
use crate::linalg::{j_matrix, max_abs, real, CMat, Subspace};

/// Graded-mesh parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureParams {
    pub r_min: f64,
    pub points_per_panel: usize,
    pub panel_ratio: f64,
    /// Longest admissible panel.
    pub max_panel: f64,
}

impl Default for QuadratureParams {
    fn default() -> Self {
        QuadratureParams { r_min: 1e-12, points_per_panel: 16, panel_ratio: 2.0, max_panel: 1.0 / 32.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub root: f64,
    pub quadrature: f64,
    pub fit: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { root: 1e-12, quadrature: 1e-10, fit: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OuterKind {
    /// `f(1) = 0`.
    TypeI,
    /// `g(1) = 0`.
    TypeII,
    Custom,
}

/// A Lagrangian subspace `W` of boundary values `(f(1), g(1)) ∈ C^{2d}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterBoundaryCondition {
    pub kind: OuterKind,
    subspace: Subspace,
}

impl OuterBoundaryCondition {
    pub fn type_i(d: usize) -> Self {
        let mut b = CMat::zeros(2 * d, d);
        for i in 0..d {
            b[(d + i, i)] = real(1.0);
        }
        OuterBoundaryCondition { kind: OuterKind::TypeI, subspace: Subspace::span(&b) }
    }

    pub fn type_ii(d: usize) -> Self {
        let mut b = CMat::zeros(2 * d, d);
        for i in 0..d {
            b[(i, i)] = real(1.0);
        }
        OuterBoundaryCondition { kind: OuterKind::TypeII, subspace: Subspace::span(&b) }
    }

    /// Custom condition; rejected unless Lagrangian for `⟨Jw, w'⟩`.
    pub fn custom(w: Subspace) -> Result<Self> {
        let d = w.ambient() / 2;
        if w.ambient() % 2 != 0 || w.dim() != d {
            return Err(Error::InvalidConfig(format!(
                "outer subspace must have dimension {d} in C^{}",
                w.ambient()
            )));
        }
        let form = w.basis().adjoint() * j_matrix(d) * w.basis();
        if max_abs(&form) > 1e-12 {
            return Err(Error::InvalidConfig("outer subspace is not Lagrangian".into()));
        }
        Ok(OuterBoundaryCondition { kind: OuterKind::Custom, subspace: w })
    }

    /// The real line `span{(cos t, sin t)} ⊗ C^d`.
    pub fn line(angle: f64, d: usize) -> Self {
        let v = CMat::from_column_slice(2, 1, &[real(angle.cos()), real(angle.sin())]);
        let w = Subspace::span(&v).tensor(d);
        OuterBoundaryCondition { kind: OuterKind::Custom, subspace: w }
    }

    pub fn subspace(&self) -> &Subspace {
        &self.subspace
    }

    pub fn fiber_dim(&self) -> usize {
        self.subspace.ambient() / 2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub base_length: f64,
    pub holonomy_h0: f64,
    pub holonomy_h1: f64,
    pub fiber_dim: usize,
    /// Must be a positive half-integer; kept as a float so that invalid input
    /// can be represented and rejected.
    pub lambda_cut: f64,
    pub mu_cut: f64,
    pub outer_bc: OuterBoundaryCondition,
    /// Outer condition on the `λ = -1/2` modes when it differs from `outer_bc`.
    pub outer_residue_bc: Option<OuterBoundaryCondition>,
    pub quadrature: QuadratureParams,
    pub tol: Tolerances,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            base_length: 2.0 * PI,
            holonomy_h0: 0.0,
            holonomy_h1: 0.0,
            fiber_dim: 1,
            lambda_cut: 4.5,
            mu_cut: 8.0,
            outer_bc: OuterBoundaryCondition::type_i(1),
            outer_residue_bc: None,
            quadrature: QuadratureParams::default(),
            tol: Tolerances::default(),
        }
    }
}

impl ModelConfig {
    pub fn with_fiber_dim(mut self, d: usize) -> Self {
        self.fiber_dim = d;
        self.outer_bc = match self.outer_bc.kind {
            OuterKind::TypeII => OuterBoundaryCondition::type_ii(d),
            _ => OuterBoundaryCondition::type_i(d),
        };
        self.outer_residue_bc = None;
        self
    }

    /// The outer condition imposed on `mode`.
    pub fn outer_for(&self, mode: &ModeIndex) -> &OuterBoundaryCondition {
        match (&self.outer_residue_bc, mode.is_residue_mode()) {
            (Some(w), true) => w,
            _ => &self.outer_bc,
        }
    }

    pub fn lambda_cut_half(&self) -> HalfInt {
        HalfInt::from_f64(self.lambda_cut).unwrap_or(HalfInt::HALF)
    }
}

/// Returns `cfg` unchanged when every invariant holds.
pub fn validate_config(cfg: ModelConfig) -> Result<ModelConfig> {
    let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
    if !(cfg.base_length > 0.0) || !cfg.base_length.is_finite() {
        return bad("base_length must be positive");
    }
    if !(0.0..1.0).contains(&cfg.holonomy_h0) {
        return bad("holonomy_h0 must lie in [0,1)");
    }
    if !(0.0..1.0).contains(&cfg.holonomy_h1) {
        return bad("holonomy_h1 must lie in [0,1)");
    }
    let k = 2.0 * cfg.holonomy_h0 - cfg.holonomy_h1;
    if (k - k.round()).abs() > 1e-12 {
        return bad("2*holonomy_h0 - holonomy_h1 must be an integer for the spectrum to be symmetric under conjugation");
    }
    if cfg.fiber_dim == 0 {
        return bad("fiber_dim must be at least 1");
    }
    match HalfInt::from_f64(cfg.lambda_cut) {
        Ok(h) if h.twice() > 0 => {}
        _ => return bad("lambda_cut must be a positive half-integer"),
    }
    if !(cfg.mu_cut >= 0.0) || !cfg.mu_cut.is_finite() {
        return bad("mu_cut must be a nonnegative real");
    }
    let q = &cfg.quadrature;
    if !(q.r_min > 0.0 && q.r_min <= 1e-6) {
        return bad("r_min must lie in (0, 1e-6]");
    }
    if q.points_per_panel < 4 {
        return bad("points_per_panel must be at least 4");
    }
    if !(q.panel_ratio > 1.0) {
        return bad("panel_ratio must exceed 1");
    }
    if !(q.max_panel > 0.0) {
        return bad("max_panel must be positive");
    }
    let t = &cfg.tol;
    if !(t.root > 0.0 && t.quadrature > 0.0 && t.fit > 0.0) {
        return bad("all tolerances must be positive");
    }
    if cfg.outer_bc.fiber_dim() != cfg.fiber_dim {
        return bad("outer condition dimension does not match fiber_dim");
    }
    OuterBoundaryCondition::custom(cfg.outer_bc.subspace().clone())?;
    if let Some(w) = &cfg.outer_residue_bc {
        if w.fiber_dim() != cfg.fiber_dim {
            return bad("residue-mode outer condition dimension does not match fiber_dim");
        }
        OuterBoundaryCondition::custom(w.subspace().clone())?;
    }
    Ok(cfg)
}

/// A joint mode `(λ, μ)` with multiplicity `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeIndex {
    pub lambda: HalfInt,
    pub mu: f64,
    pub mult: usize,
}

impl ModeIndex {
    pub fn new(lambda: HalfInt, mu: f64, mult: usize) -> Self {
        ModeIndex { lambda, mu, mult }
    }

    /// The only mode fixed by conjugation.
    pub fn is_self_conjugate(&self) -> bool {
        self.lambda == HalfInt::MINUS_HALF && self.mu == 0.0
    }

    /// Modes carrying residues.
    pub fn is_residue_mode(&self) -> bool {
        self.lambda == HalfInt::MINUS_HALF
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lambda, self.mu)
    }
}

pub fn conjugate_mode(m: ModeIndex) -> ModeIndex {
    let mu = if m.mu == 0.0 { 0.0 } else { -m.mu };
    ModeIndex { lambda: m.lambda.conjugate(), mu, mult: m.mult }
}

/// `{(2π/L)(m + h0 + λ h1) : |μ| ≤ mu_cut}`, ascending, each with multiplicity `d`.
pub fn base_spectrum(cfg: &ModelConfig, lambda: HalfInt) -> Result<Vec<(f64, usize)>> {
    if lambda.value().abs() > cfg.lambda_cut + 1e-12 {
        return Err(Error::DomainError(format!("|λ| = {} exceeds lambda_cut", lambda.value().abs())));
    }
    Ok(base_spectrum_unchecked(cfg, lambda))
}

fn base_spectrum_unchecked(cfg: &ModelConfig, lambda: HalfInt) -> Vec<(f64, usize)> {
    let s = 2.0 * PI / cfg.base_length;
    let shift = cfg.holonomy_h0 + lambda.value() * cfg.holonomy_h1;
    let reach = cfg.mu_cut / s;
    let lo = (-reach - shift - 1.0).floor() as i64;
    let hi = (reach - shift + 1.0).ceil() as i64;
    let mut out = Vec::new();
    for m in lo..=hi {
        let mut x = m as f64 + shift;
        if x.abs() < 1e-12 {
            x = 0.0;
        }
        let mu = s * x;
        if mu.abs() <= cfg.mu_cut * (1.0 + 1e-12) + 1e-14 {
            out.push((mu, cfg.fiber_dim));
        }
    }
    out
}

/// One representative per conjugate pair within the cutoffs: `λ ≥ -1/2`, and
/// `μ ≥ 0` when `λ = -1/2`.
pub fn enumerate_modes(cfg: &ModelConfig) -> Vec<ModeIndex> {
    let top = cfg.lambda_cut_half().twice();
    let mut out = Vec::new();
    let mut t = -1;
    while t <= top {
        let lambda = HalfInt::from_twice(t).expect("odd");
        for (mu, mult) in base_spectrum_unchecked(cfg, lambda) {
            if lambda == HalfInt::MINUS_HALF && mu < 0.0 {
                continue;
            }
            out.push(ModeIndex { lambda, mu, mult });
        }
        t += 2;
    }
    out
}

/// The λ = -1/2 representatives, i.e. the modes that carry residues.
pub fn residue_modes(cfg: &ModelConfig) -> Vec<ModeIndex> {
    enumerate_modes(cfg).into_iter().filter(|m| m.is_residue_mode()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        let cfg = ModelConfig::default();
        assert_eq!(validate_config(cfg.clone()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_fields() {
        let cfg = ModelConfig { base_length: 0.0, ..ModelConfig::default() };
        assert!(matches!(validate_config(cfg), Err(Error::InvalidConfig(_))));
        let cfg = ModelConfig { lambda_cut: 1.0, ..ModelConfig::default() };
        assert!(matches!(validate_config(cfg), Err(Error::InvalidConfig(_))));
        let cfg = ModelConfig { holonomy_h0: 0.25, ..ModelConfig::default() };
        assert!(matches!(validate_config(cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn base_spectrum_examples() {
        let cfg = ModelConfig { mu_cut: 2.5, ..ModelConfig::default() };
        let mus: Vec<f64> = base_spectrum(&cfg, HalfInt::MINUS_HALF).unwrap().iter().map(|p| p.0).collect();
        assert_eq!(mus, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        let cfg = ModelConfig { mu_cut: 2.0, holonomy_h0: 0.5, ..ModelConfig::default() };
        let mus: Vec<f64> = base_spectrum(&cfg, HalfInt::MINUS_HALF).unwrap().iter().map(|p| p.0).collect();
        assert_eq!(mus, vec![-1.5, -0.5, 0.5, 1.5]);
        let cfg = ModelConfig { mu_cut: 0.0, ..ModelConfig::default() };
        assert_eq!(base_spectrum(&cfg, HalfInt::HALF).unwrap(), vec![(0.0, 1)]);
    }

    #[test]
    fn enumerate_small_window() {
        let cfg = ModelConfig { lambda_cut: 1.5, mu_cut: 1.0, ..ModelConfig::default() };
        let modes = enumerate_modes(&cfg);
        let keys: Vec<(i64, f64)> = modes.iter().map(|m| (m.lambda.twice(), m.mu)).collect();
        assert_eq!(
            keys,
            vec![(-1, 0.0), (-1, 1.0), (1, -1.0), (1, 0.0), (1, 1.0), (3, -1.0), (3, 0.0), (3, 1.0)]
        );
        assert_eq!(modes.iter().filter(|m| m.is_self_conjugate()).count(), 1);
    }

    #[test]
    fn empty_window() {
        let cfg = ModelConfig { lambda_cut: 0.5, mu_cut: 0.1, holonomy_h0: 0.5, ..ModelConfig::default() };
        assert!(enumerate_modes(&cfg).is_empty());
    }

    #[test]
    fn conjugation_examples() {
        let m = ModeIndex::new(HalfInt::MINUS_HALF, 3.0, 1);
        assert_eq!(conjugate_mode(m), ModeIndex::new(HalfInt::MINUS_HALF, -3.0, 1));
        let m = ModeIndex::new(HalfInt::from_twice(3).unwrap(), -1.0, 2);
        assert_eq!(conjugate_mode(m), ModeIndex::new(HalfInt::from_twice(-5).unwrap(), 1.0, 2));
        let m = ModeIndex::new(HalfInt::MINUS_HALF, 0.0, 1);
        assert_eq!(conjugate_mode(m), m);
    }
}
