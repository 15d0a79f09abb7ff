//! Residue conditions on the truncated residue space and the linear algebra
//! around them.
//!
//! A condition is a subspace `R_μ ⊂ V_{-1/2,μ} = C^d ⊕ C^d` for every retained
//! `λ = -1/2` representative `μ ≥ 0`. The symplectic form on each block is
//! `Ω(v, w) = -⟨Jv, w⟩`, so the annihilator of `R_μ` is `J(R_μ^⊥)`.

use std::fmt;

use crate::error::{Error, Result};
use crate::gelfand_robbin::{branching_matrix, negative_projector};
use crate::linalg::{block_tensor, c, j_matrix, max_abs, real, CMat, Subspace};
use crate::model::{residue_modes, ModelConfig};

/// Tolerance for subspace equality in the catalog.
pub const SUBSPACE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionKind {
    Minimal,
    Maximal,
    Aps,
    BagPlus,
    BagMinus,
    LocalSubspace,
    Custom,
}

impl fmt::Display for ConditionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConditionKind::Minimal => "minimal",
            ConditionKind::Maximal => "maximal",
            ConditionKind::Aps => "aps",
            ConditionKind::BagPlus => "bag+",
            ConditionKind::BagMinus => "bag-",
            ConditionKind::LocalSubspace => "local",
            ConditionKind::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// A residue condition on the truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidueCondition {
    pub kind: ConditionKind,
    pub fiber_dim: usize,
    /// `(μ, R_μ)` for each retained representative, ascending in `μ`.
    pub per_mode: Vec<(f64, Subspace)>,
    /// Declared regularity order; `None` when no regularity is claimed.
    pub regularity: Option<f64>,
}

impl ResidueCondition {
    /// Same subspace `block` installed on every residue mode of `cfg`.
    pub fn uniform(cfg: &ModelConfig, kind: ConditionKind, block: &Subspace) -> Self {
        let per_mode = residue_modes(cfg).iter().map(|m| (m.mu, block.clone())).collect();
        ResidueCondition { kind, fiber_dim: cfg.fiber_dim, per_mode, regularity: None }
    }

    pub fn from_fn(cfg: &ModelConfig, kind: ConditionKind, f: impl Fn(f64) -> Subspace) -> Self {
        let per_mode = residue_modes(cfg).iter().map(|m| (m.mu, f(m.mu))).collect();
        ResidueCondition { kind, fiber_dim: cfg.fiber_dim, per_mode, regularity: None }
    }

    pub fn get(&self, mu: f64) -> Option<&Subspace> {
        self.per_mode.iter().find(|(m, _)| (*m - mu).abs() < 1e-12).map(|(_, s)| s)
    }

    pub fn mus(&self) -> Vec<f64> {
        self.per_mode.iter().map(|(m, _)| *m).collect()
    }

    fn map_blocks(&self, kind: ConditionKind, f: impl Fn(f64, &Subspace) -> Subspace) -> Self {
        ResidueCondition {
            kind,
            fiber_dim: self.fiber_dim,
            per_mode: self.per_mode.iter().map(|(m, s)| (*m, f(*m, s))).collect(),
            regularity: None,
        }
    }

    fn zip_blocks(&self, other: &ResidueCondition, f: impl Fn(&Subspace, &Subspace) -> Subspace) -> Result<Self> {
        if self.mus() != other.mus() {
            return Err(Error::DimensionMismatch("conditions live on different truncations".into()));
        }
        let per_mode = self.per_mode.iter().zip(&other.per_mode).map(|((m, a), (_, b))| (*m, f(a, b))).collect();
        Ok(ResidueCondition { kind: ConditionKind::Custom, fiber_dim: self.fiber_dim, per_mode, regularity: None })
    }

    pub fn sum(&self, other: &ResidueCondition) -> Result<Self> {
        self.zip_blocks(other, |a, b| a.sum(b))
    }

    pub fn intersection(&self, other: &ResidueCondition) -> Result<Self> {
        self.zip_blocks(other, |a, b| a.intersection(b))
    }

    pub fn approx_eq(&self, other: &ResidueCondition, tol: f64) -> bool {
        self.mus() == other.mus() && self.per_mode.iter().zip(&other.per_mode).all(|((_, a), (_, b))| a.approx_eq(b, tol))
    }

    pub fn total_dim(&self) -> usize {
        self.per_mode.iter().map(|(_, s)| s.dim()).sum()
    }

    /// CSV rows `mu, column, row, re, im`.
    pub fn csv_rows(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (mu, s) in &self.per_mode {
            let b = s.basis();
            for j in 0..b.ncols() {
                for i in 0..b.nrows() {
                    out.push(format!("{mu},{j},{i},{},{}", b[(i, j)].re, b[(i, j)].im));
                }
            }
        }
        out
    }
}

pub fn minimal(cfg: &ModelConfig) -> ResidueCondition {
    ResidueCondition::uniform(cfg, ConditionKind::Minimal, &Subspace::zero(2 * cfg.fiber_dim))
}

pub fn maximal(cfg: &ModelConfig) -> ResidueCondition {
    ResidueCondition::uniform(cfg, ConditionKind::Maximal, &Subspace::full(2 * cfg.fiber_dim))
}

/// Negative spectral subspace of `A_μ` on one block.
pub fn aps_block(mu: f64, d: usize) -> Subspace {
    Subspace::span(&negative_projector(mu, d))
}

/// `ker A_μ`: everything at `μ = 0`, nothing otherwise.
pub fn kernel_block(mu: f64, d: usize) -> Subspace {
    Subspace::span(&branching_matrix(mu, d)).complement()
}

pub fn make_aps(cfg: &ModelConfig) -> ResidueCondition {
    let d = cfg.fiber_dim;
    let mut r = ResidueCondition::from_fn(cfg, ConditionKind::Aps, |mu| aps_block(mu, d));
    r.regularity = Some(f64::INFINITY);
    r
}

/// `±1` eigenspace of `iJ` on one block.
pub fn bag_block(plus: bool, d: usize) -> Subspace {
    let s = if plus { 1.0 } else { -1.0 };
    let v = CMat::from_column_slice(2, 1, &[real(1.0), c(0.0, s)]);
    Subspace::span(&v).tensor(d)
}

pub fn make_bag(cfg: &ModelConfig, plus: bool) -> ResidueCondition {
    let kind = if plus { ConditionKind::BagPlus } else { ConditionKind::BagMinus };
    let mut r = ResidueCondition::uniform(cfg, kind, &bag_block(plus, cfg.fiber_dim));
    r.regularity = Some(f64::INFINITY);
    r
}

/// Local condition from a fibre subspace, given either in `C^2` (tensored with
/// `C^d`) or directly in `C^{2d}`.
pub fn make_local(cfg: &ModelConfig, v: &Subspace) -> Result<ResidueCondition> {
    let d = cfg.fiber_dim;
    let block = if v.ambient() == 2 * d {
        v.clone()
    } else if v.ambient() == 2 {
        v.tensor(d)
    } else {
        return Err(Error::DimensionMismatch(format!("local subspace lives in C^{}, fibre is C^{}", v.ambient(), 2 * d)));
    };
    let mut r = ResidueCondition::uniform(cfg, ConditionKind::LocalSubspace, &block);
    if symbol_regularity_check(&block, 1.0) {
        r.regularity = Some(f64::INFINITY);
    }
    Ok(r)
}

/// `J(V^⊥)`, the annihilator of `V` for `Ω`.
pub fn block_complement(v: &Subspace) -> Subspace {
    v.complement().map(&j_matrix(v.ambient() / 2))
}

pub fn symplectic_complement(r: &ResidueCondition) -> ResidueCondition {
    let kind = match r.kind {
        ConditionKind::Minimal => ConditionKind::Maximal,
        ConditionKind::Maximal => ConditionKind::Minimal,
        ConditionKind::BagPlus => ConditionKind::BagMinus,
        ConditionKind::BagMinus => ConditionKind::BagPlus,
        ConditionKind::LocalSubspace => ConditionKind::LocalSubspace,
        _ => ConditionKind::Custom,
    };
    r.map_blocks(kind, |_, s| block_complement(s))
}

pub fn block_is_lagrangian(v: &Subspace) -> bool {
    v.approx_eq(&block_complement(v), SUBSPACE_TOL)
}

pub fn is_lagrangian(r: &ResidueCondition) -> bool {
    r.per_mode.iter().all(|(_, s)| block_is_lagrangian(s))
}

/// Clifford action of the unit cotangent `ξ = sign · dα` on one block.
pub fn gamma_xi(d: usize, sign: f64) -> CMat {
    let z = CMat::from_row_slice(2, 2, &[real(sign), real(0.0), real(0.0), real(-sign)]);
    block_tensor(&z, d)
}

/// Whether `γ(ξ) V ⊥ J V`.
pub fn symbol_regularity_check(v: &Subspace, xi_sign: f64) -> bool {
    if v.dim() == 0 {
        return true;
    }
    let d = v.ambient() / 2;
    let b = v.basis();
    let form = (j_matrix(d) * b).adjoint() * gamma_xi(d, xi_sign) * b;
    max_abs(&form) <= SUBSPACE_TOL
}

/// Fibre involution anticommuting with `J`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiralityOperator {
    pub matrix: CMat,
}

impl ChiralityOperator {
    /// `σ_x ⊗ I_d`: swaps the `μ` and `-μ` slots, commutes with `A`.
    pub fn standard(d: usize) -> Self {
        let sx = CMat::from_row_slice(2, 2, &[real(0.0), real(1.0), real(1.0), real(0.0)]);
        ChiralityOperator { matrix: block_tensor(&sx, d) }
    }

    pub fn new(matrix: CMat) -> Result<Self> {
        let n = matrix.nrows();
        if n % 2 != 0 || matrix.ncols() != n {
            return Err(Error::DimensionMismatch("chirality operator must be square of even size".into()));
        }
        let j = j_matrix(n / 2);
        let id = CMat::identity(n, n);
        if max_abs(&(&matrix * &matrix - &id)) > 1e-12 {
            return Err(Error::InvalidConfig("chirality operator does not square to one".into()));
        }
        if max_abs(&(&matrix - matrix.adjoint())) > 1e-12 {
            return Err(Error::InvalidConfig("chirality operator is not self-adjoint".into()));
        }
        if max_abs(&(&matrix * &j + &j * &matrix)) > 1e-12 {
            return Err(Error::InvalidConfig("chirality operator does not anticommute with J".into()));
        }
        Ok(ChiralityOperator { matrix })
    }

    pub fn eigenspace(&self, plus: bool) -> Subspace {
        let n = self.matrix.nrows();
        let s = if plus { 1.0 } else { -1.0 };
        Subspace::span(&((CMat::identity(n, n) * real(s) + &self.matrix) * real(0.5)))
    }
}

/// `(R ∩ Ȟ⁺, R ∩ Ȟ⁻)` for an `ε`-invariant `R`.
pub fn chirality_split(r: &ResidueCondition, eps: &ChiralityOperator) -> Result<(ResidueCondition, ResidueCondition)> {
    let (ep, em) = (eps.eigenspace(true), eps.eigenspace(false));
    for (mu, s) in &r.per_mode {
        if !s.map(&eps.matrix).approx_eq(s, SUBSPACE_TOL) {
            return Err(Error::NotEpsInvariant(format!("block at mu = {mu}")));
        }
    }
    let plus = r.map_blocks(ConditionKind::Custom, |_, s| s.intersection(&ep));
    let minus = r.map_blocks(ConditionKind::Custom, |_, s| s.intersection(&em));
    Ok((plus, minus))
}

/// `R⁺ ⊕ ((R⁺)^G ∩ Ȟ⁻)`, a Lagrangian condition.
pub fn complete_plus(r_plus: &ResidueCondition, eps: &ChiralityOperator) -> Result<ResidueCondition> {
    let (ep, em) = (eps.eigenspace(true), eps.eigenspace(false));
    for (mu, s) in &r_plus.per_mode {
        if s.intersection(&ep).dim() != s.dim() {
            return Err(Error::NotEpsInvariant(format!("block at mu = {mu} leaves the positive eigenspace")));
        }
    }
    Ok(r_plus.map_blocks(ConditionKind::Custom, |_, s| s.sum(&block_complement(s).intersection(&em))))
}

/// Local contribution `dim(Λ ∩ R) - codim(Λ + R)` of one block.
pub fn block_index(lambda: &Subspace, r: &Subspace) -> i64 {
    let n = r.ambient() as i64;
    lambda.intersection(r).dim() as i64 - (n - lambda.sum(r).dim() as i64)
}

pub fn block_transverse(lambda: &Subspace, r: &Subspace) -> bool {
    lambda.intersection(r).dim() == 0 && lambda.sum(r).dim() == r.ambient()
}

/// Index of the Fredholm pair `(Λ, R)` on the truncation; the modes beyond it
/// are taken transverse, which is checked on the eight largest nonzero `μ`.
pub fn fredholm_delta_index(r: &ResidueCondition, lambda: &ResidueCondition) -> Result<i64> {
    if r.mus() != lambda.mus() {
        return Err(Error::DimensionMismatch("condition and Calderón data live on different truncations".into()));
    }
    let blocks: Vec<(f64, &Subspace, &Subspace)> =
        r.per_mode.iter().zip(&lambda.per_mode).map(|((m, a), (_, l))| (*m, a, l)).collect();
    let tail: Vec<_> = blocks.iter().filter(|b| b.0 != 0.0).collect();
    for (mu, a, l) in &tail[tail.len().saturating_sub(8)..] {
        if !block_transverse(l, a) {
            return Err(Error::TailNotTransverse(format!("condition meets the Calderón subspace at mu = {mu}")));
        }
    }
    Ok(blocks.iter().map(|(_, a, l)| block_index(l, a)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CVec;

    fn cfg() -> ModelConfig {
        ModelConfig { lambda_cut: 1.5, mu_cut: 5.0, ..ModelConfig::default() }
    }

    fn line(a: f64, b: f64) -> Subspace {
        Subspace::from_vector(&CVec::from_vec(vec![real(a), real(b)]))
    }

    #[test]
    fn aps_blocks() {
        let r = make_aps(&cfg());
        assert_eq!(r.get(0.0).unwrap().dim(), 0);
        assert!(r.get(5.0).unwrap().approx_eq(&line(1.0, 1.0), 1e-14));
        let g = symplectic_complement(&r);
        assert_eq!(g.get(0.0).unwrap().dim(), 2);
        assert!(g.get(5.0).unwrap().approx_eq(&line(1.0, 1.0), 1e-14));
        assert!(!is_lagrangian(&r));
    }

    #[test]
    fn bag_pair() {
        let (p, m) = (make_bag(&cfg(), true), make_bag(&cfg(), false));
        let gram = p.per_mode[0].1.basis().adjoint() * m.per_mode[0].1.basis();
        assert!(max_abs(&gram) < 1e-15);
        assert!(symplectic_complement(&p).approx_eq(&m, 1e-14));
        assert!(!is_lagrangian(&p));
        let j = j_matrix(1);
        let v = p.per_mode[0].1.basis().column(0).into_owned();
        assert!(((j * &v) * c(0.0, 1.0) - &v).norm() < 1e-15);
    }

    #[test]
    fn local_lines() {
        let r = make_local(&cfg(), &line(1.0, 0.0)).unwrap();
        assert!(is_lagrangian(&r));
        assert!(symplectic_complement(&r).approx_eq(&r, 1e-14));
        // the f-slot and the g-slot are each Lagrangian
        let f = make_local(&cfg().with_fiber_dim(2), &line(1.0, 0.0)).unwrap();
        assert!(symplectic_complement(&f).approx_eq(&f, 1e-14));
        let g = make_local(&cfg().with_fiber_dim(2), &line(0.0, 1.0)).unwrap();
        assert!(is_lagrangian(&g));
        assert_eq!(f.intersection(&g).unwrap().total_dim(), 0);
        assert!(symplectic_complement(&minimal(&cfg())).approx_eq(&maximal(&cfg()), 1e-14));
    }

    #[test]
    fn symbol_criterion() {
        assert!(symbol_regularity_check(&bag_block(true, 1), 1.0));
        assert!(symbol_regularity_check(&bag_block(false, 3), -1.0));
        assert!(symbol_regularity_check(&line(1.0, 0.0), 1.0));
        let complex = Subspace::from_vector(&CVec::from_vec(vec![real(1.0), c(0.0, 0.7)]));
        assert!(symbol_regularity_check(&complex, 1.0));
        assert!(!symbol_regularity_check(&Subspace::full(2), 1.0));
        assert!(!symbol_regularity_check(&line(1.0, -1.0), 1.0));
    }

    #[test]
    fn chirality_completion() {
        let d = 2;
        let cfg = cfg().with_fiber_dim(d);
        let eps = ChiralityOperator::standard(d);
        assert!(ChiralityOperator::new(eps.matrix.clone()).is_ok());
        let zero = minimal(&cfg);
        let full_minus = ResidueCondition::uniform(&cfg, ConditionKind::Custom, &eps.eigenspace(false));
        assert!(complete_plus(&zero, &eps).unwrap().approx_eq(&full_minus, 1e-12));
        let full_plus = ResidueCondition::uniform(&cfg, ConditionKind::Custom, &eps.eigenspace(true));
        assert!(complete_plus(&full_plus, &eps).unwrap().approx_eq(&full_plus, 1e-12));
        let (p, m) = chirality_split(&make_aps(&cfg), &eps).unwrap();
        assert!(p.sum(&m).unwrap().approx_eq(&make_aps(&cfg), 1e-12));
        assert!(is_lagrangian(&complete_plus(&p, &eps).unwrap()));
        assert!(matches!(chirality_split(&make_local(&cfg, &line(1.0, 0.0)).unwrap(), &eps), Err(Error::NotEpsInvariant(_))));
        assert!(ChiralityOperator::new(CMat::identity(2, 2)).is_err());
    }

    #[test]
    fn index_of_aps_against_constant_line() {
        // Λ_0 = g-slot, Λ_μ transverse to the APS line for μ > 0
        let cfg = cfg();
        let lam = ResidueCondition::from_fn(&cfg, ConditionKind::Custom, |mu| {
            if mu == 0.0 {
                line(0.0, 1.0)
            } else {
                line(1.0, -1.0)
            }
        });
        assert_eq!(fredholm_delta_index(&make_aps(&cfg), &lam).unwrap(), -1);
        let nested = make_aps(&cfg).sum(&make_local(&cfg, &line(1.0, 0.0)).unwrap().intersection(&ResidueCondition::from_fn(&cfg, ConditionKind::Custom, |mu| kernel_block(mu, 1))).unwrap()).unwrap();
        assert_eq!(fredholm_delta_index(&nested, &lam), Ok(0));
        let bad = make_local(&cfg, &line(1.0, -1.0)).unwrap();
        assert!(matches!(fredholm_delta_index(&bad, &lam), Err(Error::TailNotTransverse(_))));
    }
}
