//! Residues, extensions, Green's forms and the branching locus operator on the
//! `λ = -1/2` modes.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{block_tensor, j_matrix, real, CMat, CVec, C64};
use crate::model::ModeIndex;
use crate::profile::Profile;
use crate::quadrature::{GradedMesh, Stencil};
use crate::radial::{fit_half_residue, ClosedTerm, RadialSection, Representation};

/// Per-mode residue vectors in `V_{-1/2,μ} = C^d ⊕ C^d`, keyed by `μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidueVector {
    pub fiber_dim: usize,
    pub entries: Vec<(f64, CVec)>,
}

impl ResidueVector {
    pub fn new(fiber_dim: usize) -> Self {
        ResidueVector { fiber_dim, entries: Vec::new() }
    }

    pub fn single(mu: f64, v: CVec) -> Self {
        ResidueVector { fiber_dim: v.len() / 2, entries: vec![(mu, v)] }
    }

    pub fn insert(&mut self, mu: f64, v: CVec) -> Result<()> {
        if v.len() != 2 * self.fiber_dim {
            return Err(Error::DimensionMismatch(format!("residue of length {} for fibre dimension {}", v.len(), self.fiber_dim)));
        }
        match self.entries.binary_search_by(|(m, _)| m.partial_cmp(&mu).unwrap()) {
            Ok(i) => self.entries[i].1 = v,
            Err(i) => self.entries.insert(i, (mu, v)),
        }
        Ok(())
    }

    pub fn get(&self, mu: f64) -> Option<&CVec> {
        self.entries.iter().find(|(m, _)| *m == mu).map(|(_, v)| v)
    }

    /// `Ω̌(v, w) = -2π Σ_μ ⟨J v_μ, w_μ⟩`.
    pub fn omega(&self, other: &ResidueVector) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (mu, v) in &self.entries {
            if let Some(w) = other.get(*mu) {
                acc += greens_form_residue(v, w);
            }
        }
        acc * (2.0 * PI)
    }

    pub fn map(&self, f: impl Fn(f64, &CVec) -> CVec) -> ResidueVector {
        ResidueVector { fiber_dim: self.fiber_dim, entries: self.entries.iter().map(|(m, v)| (*m, f(*m, v))).collect() }
    }

    /// CSV rows `mu, slot, fiber_index, re, im`.
    pub fn csv_rows(&self) -> Vec<String> {
        let d = self.fiber_dim;
        let mut out = Vec::new();
        for (mu, v) in &self.entries {
            for (slot, off) in [("f", 0), ("g", d)] {
                for k in 0..d {
                    let z = v[off + k];
                    out.push(format!("{mu},{slot},{k},{},{}", z.re, z.im));
                }
            }
        }
        out
    }
}

/// Residue of a section of a `λ = -1/2` mode: the coefficients of `r^{-1/2}`.
pub fn residue(phi: &RadialSection, mesh: &GradedMesh) -> Result<CVec> {
    if !phi.mode.is_residue_mode() {
        return Err(Error::DomainError(format!("mode {} carries no residue", phi.mode)));
    }
    phi.check_domain(mesh)?;
    let d = phi.fiber_dim();
    let mut out = CVec::zeros(2 * d);
    match &phi.repr {
        Representation::Closed(terms) => {
            for t in terms {
                let (a, b) = match (t.f.half_residue(), t.g.half_residue()) {
                    (Some(a), Some(b)) => (a, b),
                    _ => return Err(Error::NotInDomain("profile more singular than r^{-1/2}".into())),
                };
                for k in 0..d {
                    out[k] += t.coeff[k] * a;
                    out[d + k] += t.coeff[k] * b;
                }
            }
        }
        Representation::Sampled(s) => {
            for k in 0..d {
                let f: Vec<C64> = s.f.column(k).iter().cloned().collect();
                let g: Vec<C64> = s.g.column(k).iter().cloned().collect();
                out[k] = fit_half_residue(mesh, &f)?;
                out[d + k] = fit_half_residue(mesh, &g)?;
            }
        }
    }
    Ok(out)
}

/// The radial profile `χ(r) r^{-1/2} e^{-|μ| r}` of the extension map.
pub fn extension_profile(mu: f64) -> Profile {
    Profile::PowerExp { c: 1.0, p: -0.5, a: mu.abs() }.times(Profile::ext_cutoff())
}

/// `ext_μ(v) = χ(r) r^{-1/2} e^{-|μ| r} v`.
pub fn extend(v: &CVec, mode: ModeIndex) -> RadialSection {
    let d = v.len() / 2;
    let p = extension_profile(mode.mu);
    let fpart = v.rows(0, d).into_owned();
    let gpart = v.rows(d, d).into_owned();
    let mut terms = Vec::new();
    if fpart.iter().any(|z| z.norm() > 0.0) {
        terms.push(ClosedTerm { f: p.clone(), g: Profile::Zero, coeff: fpart });
    }
    if gpart.iter().any(|z| z.norm() > 0.0) {
        terms.push(ClosedTerm { f: Profile::Zero, g: p, coeff: gpart });
    }
    RadialSection::closed(ModeIndex { mult: d, ..mode }, terms)
}

/// `⟨Mφ, ψ⟩ - ⟨φ, Mψ⟩` by quadrature.
pub fn greens_form_quadrature(phi: &RadialSection, psi: &RadialSection, mesh: &GradedMesh) -> Result<C64> {
    phi.check_domain(mesh)?;
    psi.check_domain(mesh)?;
    let (a, b) = (phi.samples(mesh), psi.samples(mesh));
    let (ma, mb) = (phi.operator_samples(mesh, Stencil::Panel), psi.operator_samples(mesh, Stencil::Panel));
    Ok(ma.inner(mesh, &b) - a.inner(mesh, &mb))
}

/// `⟨J w₁, w₂⟩` for boundary values at `r = 1`.
pub fn outer_form(w1: &CVec, w2: &CVec) -> C64 {
    let j = j_matrix(w1.len() / 2);
    (j * w1).dotc(w2)
}

/// `-⟨J v, w⟩` on a single mode.
pub fn greens_form_residue(v: &CVec, w: &CVec) -> C64 {
    -outer_form(v, w)
}

/// `A_μ = [[0, -μ], [-μ, 0]] ⊗ I_d`.
pub fn branching_matrix(mu: f64, d: usize) -> CMat {
    let a = CMat::from_row_slice(2, 2, &[real(0.0), real(-mu), real(-mu), real(0.0)]);
    block_tensor(&a, d)
}

pub fn branching_apply(v: &ResidueVector) -> ResidueVector {
    let d = v.fiber_dim;
    v.map(|mu, x| branching_matrix(mu, d) * x)
}

/// Orthogonal projection onto the negative eigenspace of `A_μ`.
pub fn negative_projector(mu: f64, d: usize) -> CMat {
    if mu == 0.0 {
        return CMat::zeros(2 * d, 2 * d);
    }
    // A_μ = -μ σ_x: eigenvector (1, sign μ)/√2 has eigenvalue -|μ|
    let s = mu.signum();
    let p = CMat::from_row_slice(2, 2, &[real(0.5), real(0.5 * s), real(0.5 * s), real(0.5)]);
    block_tensor(&p, d)
}

/// `‖v‖_Ȟ`: weight `1+|μ|` on the negative part of `A_μ`, `(1+|μ|)^{-1}` on the rest.
pub fn check_norm(v: &ResidueVector) -> f64 {
    let d = v.fiber_dim;
    let mut acc = 0.0;
    for (mu, x) in &v.entries {
        let neg = negative_projector(*mu, d) * x;
        let rest = x - &neg;
        let w = 1.0 + mu.abs();
        acc += w * neg.norm_squared() + rest.norm_squared() / w;
    }
    acc.sqrt()
}

pub fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// `(Σ_μ ⟨μ⟩^{2s} ‖v_μ‖²)^{1/2}`.
pub fn sobolev_norm(v: &ResidueVector, s: f64) -> f64 {
    v.entries.iter().map(|(mu, x)| bracket(*mu).powf(2.0 * s) * x.norm_squared()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::halfint::HalfInt;
    use crate::model::QuadratureParams;

    fn mesh() -> GradedMesh {
        GradedMesh::new(&QuadratureParams::default()).unwrap()
    }

    fn v2(a: f64, b: f64) -> CVec {
        CVec::from_vec(vec![real(a), real(b)])
    }

    fn mode(mu: f64) -> ModeIndex {
        ModeIndex::new(HalfInt::MINUS_HALF, mu, 1)
    }

    #[test]
    fn residue_of_extension_and_eigen_solution() {
        let m = mesh();
        let v = CVec::from_vec(vec![C64::new(0.3, -1.0), real(2.0)]);
        let e = extend(&v, mode(3.0));
        assert_eq!(residue(&e, &m).unwrap(), v);
        let s = crate::radial::fundamental_system(mode(0.0), 1.1).unwrap();
        let r = residue(&s.admissible[0], &m).unwrap();
        assert!((r - v2(1.0, 0.0)).norm() < 1e-14);
        let sampled = s.admissible[0].to_sampled(&m);
        let r = residue(&sampled, &m).unwrap();
        assert!((&r - v2(1.0, 0.0)).norm() < 1e-9, "{r}");
        let smooth = RadialSection::closed(
            mode(0.0),
            vec![ClosedTerm { f: Profile::Power { c: 1.0, p: 0.5 }, g: Profile::Power { c: 2.0, p: 0.5 }, coeff: CVec::from_element(1, real(1.0)) }],
        );
        assert_eq!(residue(&smooth, &m).unwrap(), v2(0.0, 0.0));
        assert!(extend(&v2(0.0, 0.0), mode(1.0)).l2_norm(&m) == 0.0);
    }

    #[test]
    fn greens_form_of_unit_residues() {
        let m = mesh();
        let phi = extend(&v2(1.0, 0.0), mode(0.0));
        let psi = extend(&v2(0.0, 1.0), mode(0.0));
        let g = greens_form_quadrature(&phi, &psi, &m).unwrap();
        assert!((g - real(-1.0)).norm() < 1e-10, "{g}");
        assert_eq!(greens_form_residue(&v2(1.0, 0.0), &v2(0.0, 1.0)), real(-1.0));
        assert_eq!(greens_form_residue(&v2(0.4, 0.7), &v2(0.4, 0.7)), real(0.0));
        let a = ResidueVector::single(0.0, v2(1.0, 0.0));
        let b = ResidueVector::single(0.0, v2(0.0, 1.0));
        assert!((a.omega(&b) - real(-2.0 * PI)).norm() < 1e-15);
        assert!(greens_form_quadrature(&phi, &phi, &m).unwrap().norm() < 1e-12);
    }

    #[test]
    fn branching_operator_eigen_data() {
        let s = 1.0 / 2f64.sqrt();
        let v = ResidueVector::single(5.0, v2(s, s));
        assert_eq!(branching_apply(&v).entries[0].1, v2(-5.0 * s, -5.0 * s));
        let w = ResidueVector::single(5.0, v2(s, -s));
        assert_eq!(branching_apply(&w).entries[0].1, v2(5.0 * s, -5.0 * s));
        assert_eq!(branching_apply(&ResidueVector::single(0.0, v2(1.0, 2.0))).entries[0].1, v2(0.0, 0.0));
        let a = branching_matrix(3.0, 2);
        assert_eq!(a.transpose(), a);
    }

    #[test]
    fn norms() {
        let s = 1.0 / 2f64.sqrt();
        assert!((check_norm(&ResidueVector::single(5.0, v2(s, s))) - 6f64.sqrt()).abs() < 1e-14);
        assert!((check_norm(&ResidueVector::single(5.0, v2(s, -s))) - 1.0 / 6f64.sqrt()).abs() < 1e-14);
        assert!((check_norm(&ResidueVector::single(0.0, v2(0.6, 0.8))) - 1.0).abs() < 1e-14);
        let u = ResidueVector::single(3.0, v2(1.0, 0.0));
        assert!((sobolev_norm(&u, 0.5) - 10f64.powf(0.25)).abs() < 1e-14);
        assert!((sobolev_norm(&u, 0.0) - 1.0).abs() < 1e-15);
    }
}
