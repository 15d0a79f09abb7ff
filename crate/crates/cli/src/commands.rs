use ramified_dirac::conditions::{block_index, ChiralityOperator, ResidueCondition};
use ramified_dirac::diagnostics::{hardy_verify_with, untwist_coefficients, weyl_check, ExpansionParams};
use ramified_dirac::model::{base_spectrum, residue_modes, ModeIndex};
use ramified_dirac::quadrature::GradedMesh;
use ramified_dirac::spectral::{
    assemble_spectrum, calderon_condition, chiral_sectors, heat_supertrace, index, MatchingProblem, SpectrumResult,
};
use ramified_dirac::verify::{run_suite, Suite};
use ramified_dirac::Error;

use crate::config::RunConfig;
use crate::output::CsvFile;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Index,
    Green,
    Weyl,
    Heat,
    Verify,
    Hardy,
    Expand,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Index => "index",
            Command::Green => "green",
            Command::Weyl => "weyl",
            Command::Heat => "heat",
            Command::Verify => "verify",
            Command::Hardy => "hardy",
            Command::Expand => "expand",
        }
    }
}

/// What a command produced. Non-empty `failures` means exit code 1.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<CsvFile>,
    pub stdout: Vec<String>,
    pub failures: Vec<String>,
}

#[derive(Debug)]
pub enum RunError {
    /// Bad input: exit code 2.
    Config(String),
    /// The computation itself failed: exit code 1.
    Failed(String),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::DimensionMismatch(_) | Error::IllPosed(_) | Error::DomainError(_) => {
                RunError::Config(e.to_string())
            }
            _ => RunError::Failed(e.to_string()),
        }
    }
}

type Run = Result<Outcome, RunError>;

pub fn run(cmd: Command, rc: &RunConfig) -> Run {
    match cmd {
        Command::Spectrum => spectrum(rc),
        Command::Index => index_cmd(rc),
        Command::Green => green(rc),
        Command::Weyl => weyl(rc),
        Command::Heat => heat(rc),
        Command::Verify => verify(rc),
        Command::Hardy => hardy(rc),
        Command::Expand => expand(rc),
    }
}

fn condition(rc: &RunConfig) -> Result<ResidueCondition, RunError> {
    Ok(rc.condition.build(&rc.model)?)
}

fn solve(rc: &RunConfig) -> Result<(ResidueCondition, SpectrumResult), RunError> {
    let r = condition(rc)?;
    let k = rc.solver.kappa_max;
    let spec = assemble_spectrum(&rc.model, &r, (-k, k))?;
    Ok((r, spec))
}

fn spectrum(rc: &RunConfig) -> Run {
    let (r, spec) = solve(rc)?;
    let mut levels: Vec<f64> = spec.entries.iter().map(|e| e.kappa.abs()).collect();
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    levels.dedup();
    let counting = levels
        .iter()
        .map(|&l| {
            let n: usize = spec.entries.iter().filter(|e| e.kappa.abs() <= l).map(|e| e.mult).sum();
            format!("{l:.15e},{n}")
        })
        .collect();
    let mut out = Outcome::default();
    out.stdout.push(format!(
        "{} eigenvalues with |kappa| <= {} for condition {}",
        spec.total_count(),
        rc.solver.kappa_max,
        r.kind
    ));
    for (m, why) in &spec.skipped {
        out.stdout.push(format!("skipped mode {m}: {why}"));
    }
    out.files.push(CsvFile::new("spectrum.csv", "spectrum of D_R by mode", "kappa,lambda,mu,mult,method", spec.csv_rows()));
    out.files.push(CsvFile::new("counting.csv", "counting function N(Λ) = #{|κ| ≤ Λ}", "Lambda,N", counting));
    Ok(out)
}

fn index_cmd(rc: &RunConfig) -> Run {
    let r = condition(rc)?;
    let ind = index(&rc.model, &r)?;
    let cal = calderon_condition(&rc.model)?;
    let mut rows = Vec::new();
    for m in residue_modes(&rc.model) {
        if let (Some(a), Some(b)) = (cal.get(m.mu), r.get(m.mu)) {
            rows.push(format!("{},{},{}", m.mu, b.dim(), block_index(a, b)));
        }
    }
    let mut out = Outcome::default();
    out.stdout.push(ind.to_string());
    out.files.push(CsvFile::new(
        "index.csv",
        "index of D_R as the index of the pair (Calderón data, R), by residue mode",
        "mu,dim_r,block_index",
        rows,
    ));
    Ok(out)
}

fn suite_outcome(out: &mut Outcome, suite: Suite, rc: &RunConfig, file: String) {
    match run_suite(suite, &rc.model) {
        Ok(rep) => {
            out.stdout.push(rep.summary());
            out.stdout.extend(rep.details.iter().map(|d| format!("       {d}")));
            if !rep.passed {
                out.failures.push(format!("{} ({})", suite.name(), suite.property()));
            }
            out.files.push(CsvFile::new(file, suite.property(), suite.csv_header(), rep.rows));
        }
        Err(e) => {
            out.stdout.push(format!("FAIL {:>2} {:<13} error: {e}", suite.criterion(), suite.name()));
            out.failures.push(format!("{} ({e})", suite.name()));
        }
    }
}

fn green(rc: &RunConfig) -> Run {
    let mut out = Outcome::default();
    suite_outcome(&mut out, Suite::Green, rc, "green.csv".into());
    Ok(out)
}

fn verify(rc: &RunConfig) -> Run {
    let suites: Vec<Suite> = match rc.solver.suite {
        Some(s) => vec![s],
        None => Suite::ALL.to_vec(),
    };
    let mut out = Outcome::default();
    for s in suites {
        suite_outcome(&mut out, s, rc, format!("verify-{}.csv", s.name()));
    }
    Ok(out)
}

fn weyl(rc: &RunConfig) -> Run {
    let (_, spec) = solve(rc)?;
    let rep = weyl_check(&spec, rc.solver.weyl_k)?;
    let mut out = Outcome::default();
    out.stdout.push(format!("sup N(Λ)/<Λ>^{} = {}", 2 * rep.k, rep.sup_ratio));
    out.files.push(CsvFile::new("weyl.csv", "Weyl bound N(Λ) ≲ <Λ>^{2k}", "Lambda,N,ratio", rep.csv_rows()));
    Ok(out)
}

fn heat(rc: &RunConfig) -> Run {
    let (_, spec) = solve(rc)?;
    let eps = ChiralityOperator::standard(rc.model.fiber_dim);
    let (plus, minus) = chiral_sectors(&spec, &eps)?;
    let mut out = Outcome::default();
    let mut rows = Vec::new();
    for &t in &rc.solver.heat_times {
        let h = heat_supertrace(&plus, &minus, t, rc.solver.heat_tail)?;
        out.stdout.push(format!("t = {t}: supertrace {} (tail {:.3e})", h.value, h.tail));
        rows.push(format!("{t},{},{}", h.value, h.tail));
    }
    out.files.push(CsvFile::new("heat.csv", "heat supertrace over the chiral sectors", "t,supertrace,tail", rows));
    Ok(out)
}

fn hardy(rc: &RunConfig) -> Run {
    let mut out = Outcome::default();
    let mut rows = Vec::new();
    for periodic in [false, true] {
        for &m in &rc.solver.hardy_cuts {
            let h = hardy_verify_with(m, periodic)?;
            rows.push(format!("{m},{periodic},{},{},{}", h.ratio, h.best_constant_estimate, h.bounded));
            if !periodic {
                out.stdout.push(format!("M = {m}: ratio {} constant {}", h.ratio, h.best_constant_estimate));
            }
        }
    }
    out.files.push(CsvFile::new(
        "hardy.csv",
        "borderline Hardy inequality; periodic rows are the untwisted control",
        "fourier_cut,periodic,ratio,best_constant,bounded",
        rows,
    ));
    Ok(out)
}

fn expand(rc: &RunConfig) -> Run {
    let cfg = &rc.model;
    let (lambda, mu) = (rc.solver.expand_lambda, rc.solver.expand_mu);
    let (mu, mult) = base_spectrum(cfg, lambda)?
        .into_iter()
        .find(|(m, _)| (m - mu).abs() < 1e-9)
        .ok_or_else(|| RunError::Config(format!("mu = {mu} is not in the base spectrum for lambda = {lambda}")))?;
    let mode = ModeIndex::new(lambda, mu, mult);
    let r = condition(rc)?;
    let inner = if mode.is_residue_mode() {
        let b = r.get(mu).ok_or_else(|| RunError::Config(format!("condition has no block at mu = {mu}")))?;
        if b.dim() != mult {
            return Err(RunError::Config(format!("condition block at mu = {mu} has dimension {} != {mult}", b.dim())));
        }
        Some(b)
    } else {
        None
    };
    let p = MatchingProblem::new(mode, inner, cfg.outer_for(&mode))?;
    let k = rc.solver.kappa_max;
    let mut eig = p.eigenvalues((-k, k), cfg.tol.root)?;
    eig.sort_by(|a, b| a.0.abs().partial_cmp(&b.0.abs()).unwrap().then(a.0.partial_cmp(&b.0).unwrap()));
    let mesh = GradedMesh::new(&cfg.quadrature)?;
    let mut out = Outcome::default();
    let mut rows = Vec::new();
    for (kappa, m, _) in eig.into_iter().take(rc.solver.expand_count) {
        for (j, phi) in p.eigenfunctions(kappa, m).iter().enumerate() {
            let rep = untwist_coefficients(phi, &mesh, &ExpansionParams::for_scale(kappa.abs() + 1.0))?;
            out.stdout.push(format!(
                "kappa = {kappa:.12}: half-power residual {:.3e}, off-lattice {:.3e}",
                rep.half_power_residual, rep.off_lattice
            ));
            rows.extend(rep.integer_power_part.csv_rows().into_iter().map(|row| format!("{kappa:.15e},{j},{row}")));
        }
    }
    out.files.push(CsvFile::new(
        "expand.csv",
        "untwisting eigenfunctions by r^{1/2}: coefficients of z̄^{k-1/2} z^l",
        "kappa,eigenfunction,slot,fiber,k,l,re,im",
        rows,
    ));
    Ok(out)
}
