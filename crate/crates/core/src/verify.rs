//! Verification suites. Each suite checks one acceptance property on a
//! seeded battery and returns a pass flag, human-readable detail lines and
//! CSV rows.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::conditions::{
    bag_block, make_aps, make_bag, make_local, symbol_regularity_check, symplectic_complement, ResidueCondition,
    SUBSPACE_TOL,
};
use crate::diagnostics::{
    hardy_verify, hardy_verify_with, norm_equivalence_sweep, untwist_coefficients, weyl_check, ExpansionParams,
};
use crate::error::{Error, Result};
use crate::gelfand_robbin::{extend, extension_profile, greens_form_quadrature, greens_form_residue, residue};
use crate::halfint::HalfInt;
use crate::linalg::{c, max_abs, real, CVec, Subspace, C64};
use crate::model::{enumerate_modes, ModeIndex, ModelConfig, OuterBoundaryCondition};
use crate::oracle::fd_eigen_oracle;
use crate::profile::Profile;
use crate::quadrature::GradedMesh;
use crate::radial::{fundamental_system, leading_coefficient, ClosedTerm, LeadingCase, RadialSection, SampledPair, ScalarRadial};
use crate::spectral::{
    assemble_spectrum, bordism_check, calderon_condition, index, second_order_solve, MatchingProblem, ROOT_TOL,
};

const SEED: u64 = 0x5eed_0001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    Green,
    ResExt,
    ClosedForm,
    SelfAdjoint,
    ApsIndex,
    Bordism,
    BagKernel,
    Hardy,
    LeadingTerm,
    Elliptic,
    Weyl,
    SecondOrder,
    Untwist,
    Deformation,
}

impl Suite {
    pub const ALL: [Suite; 14] = [
        Suite::Green,
        Suite::ResExt,
        Suite::ClosedForm,
        Suite::SelfAdjoint,
        Suite::ApsIndex,
        Suite::Bordism,
        Suite::BagKernel,
        Suite::Hardy,
        Suite::LeadingTerm,
        Suite::Elliptic,
        Suite::Weyl,
        Suite::SecondOrder,
        Suite::Untwist,
        Suite::Deformation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Green => "green",
            Suite::ResExt => "res-ext",
            Suite::ClosedForm => "closed-form",
            Suite::SelfAdjoint => "self-adjoint",
            Suite::ApsIndex => "aps-index",
            Suite::Bordism => "bordism",
            Suite::BagKernel => "bag-kernel",
            Suite::Hardy => "hardy",
            Suite::LeadingTerm => "leading-term",
            Suite::Elliptic => "elliptic",
            Suite::Weyl => "weyl",
            Suite::SecondOrder => "second-order",
            Suite::Untwist => "untwist",
            Suite::Deformation => "deformation",
        }
    }

    /// Position in the acceptance list, from 1.
    pub fn criterion(self) -> usize {
        Suite::ALL.iter().position(|&s| s == self).expect("listed") + 1
    }

    /// The property the suite checks, as printed in reports and CSV headers.
    pub fn property(self) -> &'static str {
        match self {
            Suite::Green => "Green's form identification: <Mφ,ψ> - <φ,Mψ> = -<J res φ, res ψ>",
            Suite::ResExt => "res∘ext = id and uniform L² bound on ext",
            Suite::ClosedForm => "closed-form spectra of the (-1/2, 0) mode",
            Suite::SelfAdjoint => "self-adjoint iff Lagrangian; (Bag+)^G = Bag-",
            Suite::ApsIndex => "APS index equals -dim ker A / 2",
            Suite::Bordism => "index of A± vanishes",
            Suite::BagKernel => "MIT bag conditions carry no zero modes",
            Suite::Hardy => "borderline Hardy inequality with constant 4",
            Suite::LeadingTerm => "leading order terms at the origin",
            Suite::Elliptic => "elliptic estimates for regular residue conditions",
            Suite::Weyl => "Weyl bound N(Λ) ≲ <Λ>^{2k}",
            Suite::SecondOrder => "invertibility of M² + 1",
            Suite::Untwist => "untwisting by r^{1/2} removes half-integer powers",
            Suite::Deformation => "index constant along a continuous path of conditions",
        }
    }

    pub fn csv_header(self) -> &'static str {
        match self {
            Suite::Green => "mu,pair,g_quad_re,g_quad_im,g_res_re,g_res_im,error,tolerance",
            Suite::ResExt => "mu,ext_l2_ratio,res_ext_deviation",
            Suite::ClosedForm => "inner,k,expected,determinant,oracle",
            Suite::SelfAdjoint => "condition,lambda,mu,kappa_i,kappa_j,pairing",
            Suite::ApsIndex => "h0,h1,fiber_dim,index,expected",
            Suite::Bordism => "h0,h1,ind_a_plus,ind_a_minus,ind_r0_plus",
            Suite::BagKernel => "condition,lambda,mu,abs_det_at_zero",
            Suite::Hardy => "fourier_cut,periodic,ratio,best_constant,bounded",
            Suite::LeadingTerm => "case,lambda,expected,fitted,error",
            Suite::Elliptic => "condition,k,min_ratio,max_ratio,spread,mu_growth",
            Suite::Weyl => "k,Lambda,N,ratio",
            Suite::SecondOrder => "lambda,mu,max_error,max_residual",
            Suite::Untwist => "source,lambda,mu,kappa,half_power_residual,leading_l",
            Suite::Deformation => "t,index",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .iter()
            .copied()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown suite '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: bool,
    pub details: Vec<String>,
    pub rows: Vec<String>,
}

impl SuiteReport {
    fn new(suite: Suite) -> Self {
        SuiteReport { suite, passed: true, details: Vec::new(), rows: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: String) {
        self.passed &= ok;
        self.details.push(format!("[{}] {what}", if ok { "ok" } else { "FAIL" }));
    }

    /// `PASS` or `FAIL` line with the criterion number and property.
    pub fn summary(&self) -> String {
        format!(
            "{} {:>2} {:<13} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite.criterion(),
            self.suite.name(),
            self.suite.property()
        )
    }
}

/// Runs one suite. Suites that fix their own model (closed-form spectra,
/// Hardy) use only the quadrature settings of `cfg`.
pub fn run_suite(suite: Suite, cfg: &ModelConfig) -> Result<SuiteReport> {
    let out = match suite {
        Suite::Green => green(cfg),
        Suite::ResExt => res_ext(cfg),
        Suite::ClosedForm => closed_form(),
        Suite::SelfAdjoint => self_adjoint(cfg),
        Suite::ApsIndex => aps_index(cfg),
        Suite::Bordism => bordism(cfg),
        Suite::BagKernel => bag_kernel(cfg),
        Suite::Hardy => hardy(),
        Suite::LeadingTerm => leading_term(cfg),
        Suite::Elliptic => elliptic(cfg),
        Suite::Weyl => weyl(cfg),
        Suite::SecondOrder => second_order(cfg),
        Suite::Untwist => untwist(cfg),
        Suite::Deformation => deformation(cfg),
    };
    out.map_err(|e| e.context(suite.name()))
}

fn rand_c(rng: &mut ChaCha8Rng) -> C64 {
    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| rand_c(rng))
}

fn line(t: f64) -> Subspace {
    Subspace::from_vector(&CVec::from_vec(vec![real(t.cos()), real(t.sin())]))
}

fn residue_mode(mu: f64, d: usize) -> ModeIndex {
    ModeIndex::new(HalfInt::MINUS_HALF, mu, d)
}

// ---------------------------------------------------------------- 1

/// `ext(v)` plus cut-off fundamental solutions plus bumps; vanishes near `r = 1`.
fn random_residue_section(mode: ModeIndex, rng: &mut ChaCha8Rng) -> Result<RadialSection> {
    let d = mode.mult;
    let mut terms = Vec::new();
    if let crate::radial::Representation::Closed(ts) = extend(&rand_vec(rng, 2 * d), mode).repr {
        terms.extend(ts);
    }
    let kappa = rng.gen_range(-6.0..6.0);
    let cut = Profile::Cutoff { a: rng.gen_range(0.2..0.4), b: rng.gen_range(0.5..0.8) };
    for s in fundamental_system(mode, kappa)?.admissible {
        if let crate::radial::Representation::Closed(ts) = s.repr {
            for t in ts {
                let z = rand_c(rng);
                terms.push(ClosedTerm { f: t.f.times(cut.clone()), g: t.g.times(cut.clone()), coeff: t.coeff * z });
            }
        }
    }
    let bump = Profile::Bump { c: 1.0, center: rng.gen_range(0.3..0.6), width: rng.gen_range(0.1..0.25) };
    terms.push(ClosedTerm { f: bump.clone(), g: Profile::Zero, coeff: rand_vec(rng, d) });
    terms.push(ClosedTerm { f: Profile::Zero, g: bump, coeff: rand_vec(rng, d) });
    Ok(RadialSection::closed(mode, terms))
}

fn green(cfg: &ModelConfig) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::Green);
    let mesh = GradedMesh::new(&cfg.quadrature)?;
    let d = cfg.fiber_dim;
    let pairs_per_mu = 12;
    let results: Vec<Result<Vec<(f64, usize, C64, C64, f64, f64)>>> = (0..=8)
        .into_par_iter()
        .map(|m| {
            let mu = m as f64;
            let mode = residue_mode(mu, d);
            let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ m as u64);
            let mut out = Vec::new();
            for p in 0..pairs_per_mu {
                let phi = random_residue_section(mode, &mut rng)?;
                let psi = random_residue_section(mode, &mut rng)?;
                let gq = greens_form_quadrature(&phi, &psi, &mesh)?;
                let gr = greens_form_residue(&residue(&phi, &mesh)?, &residue(&psi, &mesh)?);
                let tol = 1e-6 * (1.0 + phi.graph_norm(&mesh)) * (1.0 + psi.graph_norm(&mesh));
                out.push((mu, p, gq, gr, (gq - gr).norm(), tol));
            }
            Ok(out)
        })
        .collect();
    let mut count = 0;
    let mut fails = 0;
    let mut worst = 0.0f64;
    for r in results {
        for (mu, p, gq, gr, err, tol) in r? {
            count += 1;
            if err > tol {
                fails += 1;
            }
            worst = worst.max(err / tol);
            rep.rows.push(format!("{mu},{p},{},{},{},{},{err:e},{tol:e}", gq.re, gq.im, gr.re, gr.im));
        }
    }
    rep.check(count >= 100, format!("{count} random section pairs over mu = 0..8"));
    rep.check(fails == 0, format!("{fails} pairs above tolerance; worst error/tolerance {worst:.3e}"));
    let one = extend(&CVec::from_vec(vec![real(1.0), real(0.0)]), residue_mode(0.0, 1));
    let two = extend(&CVec::from_vec(vec![real(0.0), real(1.0)]), residue_mode(0.0, 1));
    let g = greens_form_quadrature(&one, &two, &mesh)?;
    rep.check((g - real(-1.0)).norm() < 1e-10, format!("G(ext(1,0), ext(0,1)) = {g:.12}, expected -1"));
    Ok(rep)
}

// ---------------------------------------------------------------- 2

/// `‖ext_μ(v)‖_{L²} (1+|μ|)^{1/2} / |v|`, which does not depend on `v`.
pub fn ext_l2_ratio(mu: f64, mesh: &GradedMesh) -> f64 {
    let p = extension_profile(mu);
    let dens: Vec<f64> = mesh.nodes.iter().map(|&r| p.value(r).powi(2)).collect();
    mesh.integrate_rdr(&dens).sqrt() * (1.0 + mu.abs()).sqrt()
}

fn res_ext(cfg: &ModelConfig) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::ResExt);
    let mesh = GradedMesh::new(&cfg.quadrature)?;
    let d = cfg.fiber_dim;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 2);
    let mut dev_by_mu = vec![0.0f64; 65];
    let mut exact = 0;
    let trials = 130;
    for _ in 0..trials {
        let m = rng.gen_range(0..=64usize);
        let v = rand_vec(&mut rng, 2 * d);
        let r = residue(&extend(&v, residue_mode(m as f64, d)), &mesh)?;
        if r == v {
            exact += 1;
        }
        dev_by_mu[m] = dev_by_mu[m].max((r - &v).norm() / v.norm());
    }
    rep.check(exact == trials, format!("res(ext v) == v bit for bit on {exact}/{trials} random vectors"));
    let ratios: Vec<f64> = (0..=64).map(|m| ext_l2_ratio(m as f64, &mesh)).collect();
    for (m, (q, dev)) in ratios.iter().zip(&dev_by_mu).enumerate() {
        rep.rows.push(format!("{m},{q},{dev:e}"));
    }
    let cmax = ratios.iter().cloned().fold(0.0, f64::max);
    let growth = ratios[64] / ratios[32] - 1.0;
    rep.check(cmax.is_finite() && growth <= 0.05, format!("C = {cmax:.6} over mu = 0..64; last-octave growth {growth:.2e}"));
    // for μ ≥ 2 the cutoff region carries weight e^{-μ/2} at most; the
    // remaining integral is ∫_0^∞ e^{-2μr} dr = 1/(2μ)
    let want = (65.0f64 / 128.0).sqrt();
    rep.check((ratios[64] - want).abs() < 1e-10, format!("ratio at mu = 64 is {:.12}, closed form {want:.12}", ratios[64]));
    Ok(rep)
}

// ---------------------------------------------------------------- 3

fn closed_form() -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::ClosedForm);
    let mode = residue_mode(0.0, 1);
    let ti = OuterBoundaryCondition::type_i(1);
    let window = (-20.0, 20.0);
    for (name, angle, zero_shift) in [("f-slot", 0.0, 0.5), ("g-slot", PI / 2.0, 0.0)] {
        let inner = line(angle);
        let p = MatchingProblem::new(mode, Some(&inner), &ti)?;
        let got = p.search_roots(window, ROOT_TOL)?;
        // expected roots (k + shift)π inside the window
        let kmax = (window.1 / PI).floor() as i64 + 1;
        let want: Vec<f64> =
            (-kmax - 1..=kmax).map(|k| (k as f64 + zero_shift) * PI).filter(|x| x.abs() <= window.1).collect();
        let det_err = if got.len() == want.len() {
            got.iter().zip(&want).map(|((a, _), b)| (a - b).abs()).fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        rep.check(
            det_err <= 1e-10 && got.iter().all(|r| r.1 == 1),
            format!("{name}: {} determinant roots, max deviation {det_err:.2e}", got.len()),
        );
        if zero_shift == 0.0 {
            rep.check(got.iter().any(|r| r.0.abs() <= 1e-10), format!("{name}: zero mode present"));
        }
        let oracle = fd_eigen_oracle(mode, &inner, Some(&ti), 4096, 6)?;
        let mut worst = 0.0f64;
        for o in &oracle {
            let w = want.iter().cloned().min_by(|a, b| (a - o).abs().partial_cmp(&(b - o).abs()).unwrap()).unwrap();
            let d = got.iter().map(|r| r.0).min_by(|a, b| (a - o).abs().partial_cmp(&(b - o).abs()).unwrap());
            worst = worst.max((w - o).abs() / w.abs().max(1.0));
            let k = (w / PI - zero_shift).round() as i64;
            rep.rows.push(format!("{name},{k},{w},{},{o}", d.unwrap_or(f64::NAN)));
        }
        rep.check(worst <= 1e-4, format!("{name}: finite-difference oracle (n = 4096) within {worst:.2e} relative"));
    }
    Ok(rep)
}

// ---------------------------------------------------------------- 4

fn pairing_check(
    name: &str,
    mode: ModeIndex,
    inner: Option<&Subspace>,
    outer: &OuterBoundaryCondition,
    window: (f64, f64),
    mesh: &GradedMesh,
) -> Result<(f64, usize, Vec<String>)> {
    let p = MatchingProblem::new(mode, inner, outer)?;
    let mut efs = Vec::new();
    for (k, mult) in p.search_roots(window, ROOT_TOL)? {
        for phi in p.eigenfunctions(k, mult) {
            let n = phi.graph_norm(mesh);
            efs.push((k, phi, n));
        }
    }
    let mut worst = 0.0f64;
    let mut rows = Vec::new();
    let mut count = 0;
    for i in 0..efs.len() {
        for j in i..efs.len() {
            let g = greens_form_quadrature(&efs[i].1, &efs[j].1, mesh)?.norm() / (efs[i].2 * efs[j].2);
            worst = worst.max(g);
            count += 1;
            if j <= i + 1 {
                rows.push(format!("{name},{},{},{},{},{g:e}", mode.lambda, mode.mu, efs[i].0, efs[j].0));
            }
        }
    }
    Ok((worst, count, rows))
}

fn self_adjoint(cfg: &ModelConfig) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::SelfAdjoint);
    let mesh = GradedMesh::new(&cfg.quadrature)?;
    let d = cfg.fiber_dim;
    let window = (-10.0, 10.0);
    let conditions: Vec<(&str, ResidueCondition)> = vec![
        ("f-slot", make_local(cfg, &line(0.0))?),
        ("g-slot", make_local(cfg, &line(PI / 2.0))?),
        ("line-pi/4", make_local(cfg, &line(PI / 4.0))?),
        ("line-pi/3", make_local(cfg, &line(PI / 3.0))?),
        ("aps", make_aps(cfg)),
        ("calderon", calderon_condition(cfg)?),
    ];
    for (name, r) in &conditions {
        // APS is empty on ker A (μ = 0); that block is under-determined and
        // carries no spectrum, so only full blocks are checked
        let blocks: Vec<(f64, Subspace)> = r.per_mode.iter().filter(|(_, s)| s.dim() == d).cloned().collect();
        let lag = blocks.iter().all(|(_, s)| crate::conditions::block_is_lagrangian(s));
        let out: Vec<Result<(f64, usize, Vec<String>)>> = blocks
            .par_iter()
            .map(|(mu, s)| {
                let m = residue_mode(*mu, d);
                pairing_check(name, m, Some(s), cfg.outer_for(&m), window, &mesh)
            })
            .collect();
        let mut worst = 0.0f64;
        let mut count = 0;
        for o in out {
            let (w, n, rows) = o?;
            worst = worst.max(w);
            count += n;
            rep.rows.extend(rows);
        }
        let skipped = r.per_mode.len() - blocks.len();
        rep.check(
            lag && worst <= 1e-8,
            format!(
                "{name}: Lagrangian on {} blocks ({skipped} under-determined), {count} eigenfunction pairs, max relative pairing {worst:.2e}",
                blocks.len()
            ),
        );
    }
    // modes without residues: regularity at the origin is the condition
    let regular: Vec<ModeIndex> = enumerate_modes(cfg).into_iter().filter(|m| !m.is_residue_mode()).collect();
    let out: Vec<Result<(f64, usize, Vec<String>)>> = regular
        .par_iter()
        .map(|m| pairing_check("regular", *m, None, cfg.outer_for(m), window, &mesh))
        .collect();
    let mut worst = 0.0f64;
    let mut count = 0;
    for o in out {
        let (w, n, rows) = o?;
        worst = worst.max(w);
        count += n;
        rep.rows.extend(rows.into_iter().take(2));
    }
    rep.check(worst <= 1e-8, format!("{} modes without residues: {count} pairs, max relative pairing {worst:.2e}", regular.len()));
    let bp = make_bag(cfg, true);
    let bm = make_bag(cfg, false);
    let comp = symplectic_complement(&bp);
    let dist = comp
        .per_mode
        .iter()
        .zip(&bm.per_mode)
        .map(|((_, a), (_, b))| max_abs(&(a.projector() - b.projector())))
        .fold(0.0, f64::max);
    rep.check(
        comp.approx_eq(&bm, SUBSPACE_TOL) && dist <= 1e-14,
        format!("(Bag+)^G = Bag- on {} blocks, projector distance {dist:.1e}", bm.per_mode.len()),
    );
    rep.check(!crate::conditions::is_lagrangian(&bp), "Bag+ is not Lagrangian".into());
    Ok(rep)
}

// ---------------------------------------------------------------- 5, 6, 14

fn aps_index(cfg: &ModelConfig) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::ApsIndex);
    for d in [cfg.fiber_dim, cfg.fiber_dim + 1] {
        for (h0, want) in [(0.0, -(d as i64)), (0.5, 0)] {
            let c = ModelConfig { holonomy_h0: h0, holonomy_h1: 0.0, ..cfg.clone() }.with_fiber_dim(d);
            let got = index(&c, &make_aps(&c))?;
            rep.rows.push(format!("{h0},0,{d},{got},{want}"));
            rep.check(got == want, format!("d = {d}, h0 = {h0}: index {got}, expected {want}"));
        }
    }
    Ok(rep)
}

fn bordism(cfg: &ModelConfig) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::Bordism);
    for (h0, h1) in [(0.0, 0.0), (0.25, 0.5), (0.5, 0.0)] {
        let c = ModelConfig { holonomy_h0: h0, holonomy_h1: h1, ..cfg.clone() };
        let b = bordism_check(&c)?;
        rep.rows.push(format!("{h0},{h1},{},{},{}", b.ind_a_plus, b.ind_a_minus, b.ind_r0_plus));
        rep.check(
            b.holds(),
            format!("h0 = {h0}, h1 = {h1}: ind A+ = {}, ind A- = {}, ind R0+ = {}", b.ind_a_plus, b.ind_a_minus, b.ind_r0_plus),
        );
    }
    Ok(rep)
}

fn deformation(cfg: &ModelConfig) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::Deformation);
    let mut seen = Vec::new();
    for j in 0..9 {
        let t = PI / 2.0 * j as f64 / 8.0;
        let r = make_local(cfg, &line(t))?;
        let i = index(cfg, &r)?;
        rep.rows.push(format!("{t},{i}"));
        seen.push(i);
    }
    let constant = seen.windows(2).all(|w| w[0] == w[1]);
    rep.check(constant, format!("index along t in [0, π/2], 9 steps: {seen:?}"));
    Ok(rep)
}

// ---------------------------------------------------------------- 7

fn bag_kernel(cfg: &ModelConfig) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::BagKernel);
    let d = cfg.fiber_dim;
    let modes = enumerate_modes(cfg);
    for plus in [true, false] {
        let name = if plus { "bag+" } else { "bag-" };
        let b = bag_block(plus, d);
        let mut low = f64::INFINITY;
        for m in &modes {
            let inner = if m.is_residue_mode() { Some(&b) } else { None };
            let p = MatchingProblem::new(*m, inner, cfg.outer_for(m))?;
            let v = p.normalized_determinant(0.0).norm();
            low = low.min(v);
            rep.rows.push(format!("{name},{},{},{v}", m.lambda, m.mu));
        }
        rep.check(low >= 1e-8, format!("{name}: min |det(0)| over {} modes = {low:.3e}", modes.len()));
    }
    Ok(rep)
}

// ---------------------------------------------------------------- 8

fn hardy() -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::Hardy);
    for m in [1usize, 4, 16, 64] {
        let h = hardy_verify(m)?;
        rep.rows.push(format!("{m},false,{},{},{}", h.ratio, h.best_constant_estimate, h.bounded));
        let err = (h.best_constant_estimate - 4.0).abs();
        rep.check(h.bounded && err <= 1e-10, format!("M = {m}: best constant {:.14}", h.best_constant_estimate));
    }
    let p = hardy_verify_with(16, true)?;
    rep.rows.push(format!("16,true,{},{},{}", p.ratio, p.best_constant_estimate, p.bounded));
    rep.check(!p.bounded, format!("periodic control: ratio {:.2e}, inequality fails", p.ratio));
    Ok(rep)
}

// ---------------------------------------------------------------- 9

fn leading_term(cfg: &ModelConfig) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::LeadingTerm);
    let mesh = GradedMesh::new(&cfg.quadrature)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 9);
    let n = 50;
    let pw = |c: f64, p: f64| Profile::Power { c, p };
    // (i) λ ∈ (-1, 0): a r^λ + b r^{λ+1} + c r^p with p ≥ 1
    let mut worst = 0.0f64;
    let mut ok = true;
    for _ in 0..n {
        let lam = rng.gen_range(-0.95..-0.05);
        let a = rng.gen_range(-2.0..2.0);
        let phi = Profile::Sum(vec![
            pw(a, lam),
            pw(rng.gen_range(-2.0..2.0), lam + 1.0),
            pw(rng.gen_range(-2.0..2.0), rng.gen_range(1.0..3.0)),
        ]);
        let t = leading_coefficient(lam, &ScalarRadial::Closed(phi), &mesh)?;
        let err = (t.a - a).abs();
        ok &= t.case == LeadingCase::Power;
        worst = worst.max(err);
        rep.rows.push(format!("i,{lam},{a},{},{err:e}", t.a));
    }
    rep.check(ok && worst <= 1e-8, format!("case (i): {n} sections, all Power, max |a - a_fit| = {worst:.2e}"));
    // (ii) λ = 0: a + smooth; no |log r|^{1/2} component
    let mut worst = 0.0f64;
    let mut ok = true;
    for _ in 0..n {
        let a = rng.gen_range(-2.0..2.0);
        let mut cs = vec![a];
        cs.extend((0..3).map(|_| rng.gen_range(-2.0..2.0)));
        let t = leading_coefficient(0.0, &ScalarRadial::Closed(Profile::Polynomial(cs)), &mesh)?;
        ok &= t.case == LeadingCase::LogBounded;
        worst = worst.max(t.a.abs());
        rep.rows.push(format!("ii,0,0,{},{:e}", t.a, t.a.abs()));
    }
    rep.check(ok && worst <= 1e-8, format!("case (ii): {n} sections, all LogBounded, max |log coefficient| = {worst:.2e}"));
    // (iii) λ ∉ (-1, 0]: sections vanishing at the origin
    let mut ok = true;
    let mut worst = 0.0f64;
    for j in 0..n {
        let lam = if j % 2 == 0 { rng.gen_range(0.1..4.5) } else { rng.gen_range(-4.5..-1.0) };
        let p = rng.gen_range(0.2..2.0);
        let phi = Profile::Sum(vec![pw(rng.gen_range(-2.0..2.0), p), pw(rng.gen_range(-2.0..2.0), p + 1.0)]);
        let at0 = phi.value(mesh.r_min).abs();
        let t = leading_coefficient(lam, &ScalarRadial::Closed(phi), &mesh)?;
        ok &= t.case == LeadingCase::Vanishing && t.a == 0.0;
        worst = worst.max(at0);
        rep.rows.push(format!("iii,{lam},0,{},0", t.a));
    }
    rep.check(ok, format!("case (iii): {n} sections, all Vanishing with a = 0; max |φ(r_min)| = {worst:.2e}"));
    // (iv) ∫(|φ'|² + λ²|φ|²/r²) r dr = ∫|(∂ - λ/r)φ|² r dr when φ(0) = φ(1) = 0
    let mut worst = 0.0f64;
    for _ in 0..n {
        let lam = rng.gen_range(-4.0..4.0);
        let p = rng.gen_range(0.5..3.0);
        let mut cs: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
        cs[0] += 3.0;
        let phi = pw(1.0, p).times(Profile::Polynomial(vec![1.0, -1.0])).times(Profile::Polynomial(cs));
        let mut lhs = Vec::with_capacity(mesh.len());
        let mut rhs = Vec::with_capacity(mesh.len());
        for &r in &mesh.nodes {
            let j = phi.jet(r);
            lhs.push(j.d1 * j.d1 + lam * lam * j.v * j.v / (r * r));
            rhs.push((j.d1 - lam * j.v / r).powi(2));
        }
        let (a, b) = (mesh.integrate_rdr(&lhs), mesh.integrate_rdr(&rhs));
        let rel = (a - b).abs() / a.abs().max(b.abs());
        worst = worst.max(rel);
        rep.rows.push(format!("iv,{lam},{a},{b},{rel:e}"));
    }
    rep.check(worst <= 1e-8, format!("identity (iv): {n} sections, max relative defect {worst:.2e}"));
    Ok(rep)
}

// ---------------------------------------------------------------- 10

/// The catalog conditions covered by the elliptic estimates: APS and the
/// Lagrangian local conditions passing the symbol criterion.
pub fn regular_conditions(cfg: &ModelConfig) -> Result<Vec<(&'static str, ResidueCondition)>> {
    let mut out = vec![("aps", make_aps(cfg))];
    for (name, t) in [("f-slot", 0.0), ("g-slot", PI / 2.0)] {
        let v = line(t);
        if crate::conditions::block_is_lagrangian(&v) && symbol_regularity_check(&v, 1.0) {
            out.push((name, make_local(cfg, &v)?));
        }
    }
    Ok(out)
}

/// A real line failing the symbol criterion, on a truncation reaching large `μ`.
pub fn elliptic_control() -> Result<(ModelConfig, ResidueCondition)> {
    let cfg = ModelConfig { lambda_cut: 0.5, mu_cut: 64.0, ..ModelConfig::default() };
    let r = make_local(&cfg, &line(-PI / 4.0))?;
    Ok((cfg, r))
}

fn elliptic(cfg: &ModelConfig) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::Elliptic);
    for (name, r) in regular_conditions(cfg)? {
        for k in 0..=2 {
            let s = norm_equivalence_sweep(cfg, &r, k)?;
            let spread = s.spread();
            rep.rows.push(format!("{name},{k},{},{},{spread},{}", s.min_ratio, s.max_ratio, s.mu_growth()));
            rep.check(
                s.min_ratio > 0.0 && s.max_ratio.is_finite() && spread <= 50.0,
                format!("{name}, k = {k}: {} samples, ratios in [{:.3}, {:.3}], spread {spread:.2}", s.samples.len(), s.min_ratio, s.max_ratio),
            );
        }
    }
    let (ccfg, r) = elliptic_control()?;
    let regular = symbol_regularity_check(&r.per_mode[0].1, 1.0);
    let s = norm_equivalence_sweep(&ccfg, &r, 0)?;
    let g = s.mu_growth();
    rep.rows.push(format!("control,0,{},{},{},{g}", s.min_ratio, s.max_ratio, s.spread()));
    rep.check(!regular && g >= 10.0, format!("control line (1,-1), mu up to 64: ratio growth {g:.1}x"));
    Ok(rep)
}

// ---------------------------------------------------------------- 11

fn weyl(cfg: &ModelConfig) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::Weyl);
    let spec = assemble_spectrum(cfg, &make_aps(cfg), (-40.0, 40.0))?;
    rep.details.push(format!(
        "spectrum: {} eigenvalues with |κ| ≤ 40 on {} modes ({} skipped)",
        spec.total_count(),
        enumerate_modes(cfg).len(),
        spec.skipped.len()
    ));
    let w2 = weyl_check(&spec, 2)?;
    for k in [1u32, 2] {
        let w = if k == 2 { w2.clone() } else { weyl_check(&spec, k)? };
        for (l, n, q) in &w.table {
            rep.rows.push(format!("{k},{l},{n},{q}"));
        }
    }
    let monotone = w2.table.windows(2).all(|p| p[0].0 < p[1].0 && p[0].1 <= p[1].1);
    rep.check(monotone, format!("N(Λ) nondecreasing over {} grid points", w2.table.len()));
    let half = w2.table.len() / 2;
    let head = w2.table[..half].iter().map(|t| t.2).fold(0.0, f64::max);
    let tail = w2.table[half..].iter().map(|t| t.2).fold(0.0, f64::max);
    rep.check(
        w2.sup_ratio.is_finite() && tail <= head,
        format!("k = 2: sup N/<Λ>^4 = {:.4}; max over Λ ≥ 20 is {tail:.3e}", w2.sup_ratio),
    );
    Ok(rep)
}

// ---------------------------------------------------------------- 12

fn second_order(cfg: &ModelConfig) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::SecondOrder);
    let q = cfg.quadrature.clone();
    let mesh = GradedMesh::new(&q)?;
    let modes: Vec<ModeIndex> = enumerate_modes(cfg).into_iter().filter(|m| m.mu >= 0.0 && m.mu <= 4.0).collect();
    let per_mode = 20;
    let out: Vec<Result<(ModeIndex, f64, f64)>> = modes
        .par_iter()
        .map(|&m| {
            let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ (m.lambda.twice() as u64).wrapping_mul(131) ^ m.mu.to_bits());
            let outer = cfg.outer_for(&m);
            let mut worst = 0.0f64;
            let mut resid = 0.0f64;
            for _ in 0..per_mode {
                let (phi0, psi) = manufactured(m, &mut rng, &mesh);
                let sol = second_order_solve(m, outer, &psi, &q)?;
                let want = phi0.samples(&mesh);
                let err = sol.section.samples(&mesh).sub(&want).norm(&mesh) / want.norm(&mesh);
                worst = worst.max(err);
                resid = resid.max(sol.residual);
            }
            Ok((m, worst, resid))
        })
        .collect();
    let mut worst = 0.0f64;
    let mut count = 0;
    for o in out {
        let (m, e, r) = o?;
        worst = worst.max(e);
        count += 1;
        rep.rows.push(format!("{},{},{e:e},{r:e}", m.lambda, m.mu));
    }
    rep.check(
        count > 0 && worst <= 1e-6,
        format!("{count} modes with 0 ≤ mu ≤ 4, {per_mode} right-hand sides each: max relative error {worst:.2e}"),
    );
    Ok(rep)
}

/// `φ = (r^{|λ|} P(r), r^{|λ+1|} Q(r))` times a cutoff near `r = 1`, and
/// `ψ = (M² + 1)φ` through the decoupled Bessel operators.
fn manufactured(mode: ModeIndex, rng: &mut ChaCha8Rng, mesh: &GradedMesh) -> (RadialSection, RadialSection) {
    let d = mode.mult;
    let lam = mode.lambda.value();
    let (nf, ng) = (lam.abs(), (lam + 1.0).abs());
    let cut = Profile::Cutoff { a: 0.6, b: 0.9 };
    let mut poly = || {
        let mut cs: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        cs[0] += 2.0f64.copysign(cs[0]);
        Profile::Polynomial(cs)
    };
    let f = Profile::Power { c: 1.0, p: nf }.times(poly()).times(cut.clone());
    let g = Profile::Power { c: 1.0, p: ng }.times(poly()).times(cut);
    let coeff = rand_vec(rng, d);
    let mu = mode.mu;
    let op = |p: &Profile, nu: f64, r: f64| {
        let j = p.jet(r);
        -(j.d2 + j.d1 / r - nu * nu * j.v / (r * r)) + (mu * mu + 1.0) * j.v
    };
    let mut psi = SampledPair::zeros(mesh.len(), d);
    for (i, &r) in mesh.nodes.iter().enumerate() {
        let (a, b) = (op(&f, nf, r), op(&g, ng, r));
        for k in 0..d {
            psi.f[(i, k)] = coeff[k] * a;
            psi.g[(i, k)] = coeff[k] * b;
        }
    }
    let phi0 = RadialSection::closed(mode, vec![
        ClosedTerm { f, g: Profile::Zero, coeff: coeff.clone() },
        ClosedTerm { f: Profile::Zero, g, coeff },
    ]);
    (phi0, RadialSection::sampled(mode, psi))
}

// ---------------------------------------------------------------- 13

fn untwist(cfg: &ModelConfig) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(Suite::Untwist);
    let mesh = GradedMesh::new(&cfg.quadrature)?;
    let aps = make_aps(cfg);
    let spec = assemble_spectrum(cfg, &aps, (-20.0, 20.0))?;
    let entries: Vec<_> = spec.entries.iter().filter(|e| e.mode.mu.abs() <= 4.0).cloned().collect();
    let out: Vec<Result<Vec<(ModeIndex, f64, f64)>>> = entries
        .par_iter()
        .map(|e| {
            let inner = if e.mode.is_residue_mode() { aps.get(e.mode.mu) } else { None };
            let p = MatchingProblem::new(e.mode, inner, cfg.outer_for(&e.mode))?;
            let params = ExpansionParams::for_scale(e.kappa.abs() + e.mode.mu.abs());
            p.eigenfunctions(e.kappa, e.mult)
                .iter()
                .map(|phi| Ok((e.mode, e.kappa, untwist_coefficients(phi, &mesh, &params)?.half_power_residual)))
                .collect()
        })
        .collect();
    let mut worst = 0.0f64;
    let mut count = 0;
    for o in out {
        for (m, k, r) in o? {
            worst = worst.max(r);
            count += 1;
            rep.rows.push(format!("eigen,{},{},{k},{r:e},", m.lambda, m.mu));
        }
    }
    rep.check(count > 0 && worst <= 1e-8, format!("{count} eigenfunctions with |mu| ≤ 4, |κ| ≤ 20: max half-power residual {worst:.2e}"));
    // harmonic solutions: Mφ = 0
    let mut ok = true;
    let mut n = 0;
    for m in enumerate_modes(cfg).into_iter().filter(|m| m.mu.abs() <= 4.0) {
        let fs = fundamental_system(m, 0.0)?;
        let params = ExpansionParams::for_scale(m.mu);
        for phi in &fs.admissible {
            let u = untwist_coefficients(phi, &mesh, &params)?;
            let lead = u.integer_power_part.leading(1e-8);
            let ls: Vec<usize> = lead.iter().map(|e| e.l).collect();
            let good = !lead.is_empty() && ls.iter().all(|&l| l == 0) && u.half_power_residual <= 1e-8;
            ok &= good;
            n += 1;
            let lmax = ls.iter().max().map_or(String::from("none"), |l| l.to_string());
            rep.rows.push(format!("harmonic,{},{},0,{:e},{lmax}", m.lambda, m.mu, u.half_power_residual));
        }
    }
    rep.check(ok, format!("{n} harmonic solutions: leading block has ℓ = 0"));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for (i, s) in Suite::ALL.iter().enumerate() {
            assert_eq!(s.name().parse::<Suite>().unwrap(), *s);
            assert_eq!(s.criterion(), i + 1);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn cheap_suites_pass() {
        let cfg = ModelConfig::default();
        for s in [Suite::ApsIndex, Suite::Hardy, Suite::Deformation, Suite::BagKernel] {
            let r = run_suite(s, &cfg).unwrap();
            assert!(r.passed, "{}: {:?}", s, r.details);
        }
    }
}
