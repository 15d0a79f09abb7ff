//! Line-oriented run configuration.
//!
//! ```text
//! # comment
//! [model]
//! base_length = 2pi
//! lambda_cut = 9/2
//! [condition]
//! kind = local
//! angle = 0.785
//! ```
//!
//! Keys may also be written fully qualified (`condition.kind = bag+`), which
//! is the form `--set` uses. Numbers accept a trailing `pi`; half-integers
//! are written `p/2` with `p` odd.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use ramified_dirac::conditions::{make_aps, make_bag, make_local, maximal, minimal, ResidueCondition};
use ramified_dirac::linalg::{real, CVec, Subspace};
use ramified_dirac::model::{validate_config, ModelConfig, OuterBoundaryCondition};
use ramified_dirac::spectral::calderon_condition;
use ramified_dirac::verify::Suite;
use ramified_dirac::HalfInt;

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Parse { line: usize, msg: String },
    UnknownKey { key: String, line: Option<usize> },
    TypeMismatch { key: String, expected: &'static str, found: String },
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse { line, msg } => write!(f, "parse error on line {line}: {msg}"),
            ConfigError::UnknownKey { key, line: Some(l) } => write!(f, "unknown key '{key}' on line {l}"),
            ConfigError::UnknownKey { key, line: None } => write!(f, "unknown key '{key}'"),
            ConfigError::TypeMismatch { key, expected, found } => {
                write!(f, "type mismatch for '{key}': expected {expected}, found '{found}'")
            }
            ConfigError::Invalid(m) => write!(f, "invalid configuration: {m}"),
        }
    }
}

impl std::error::Error for ConfigError {}

const SECTIONS: [&str; 4] = ["model", "condition", "outer", "solver"];

/// Every accepted key with its default, in canonical order.
const KEYS: &[(&str, &str)] = &[
    ("model.base_length", "2pi"),
    ("model.holonomy_h0", "0"),
    ("model.holonomy_h1", "0"),
    ("model.fiber_dim", "1"),
    ("model.lambda_cut", "9/2"),
    ("model.mu_cut", "8"),
    ("condition.kind", "aps"),
    ("condition.angle", "0"),
    ("outer.kind", "type1"),
    ("outer.angle", "0"),
    ("outer.residue_angle", "none"),
    ("solver.r_min", "1e-12"),
    ("solver.points_per_panel", "16"),
    ("solver.panel_ratio", "2"),
    ("solver.max_panel", "0.03125"),
    ("solver.root_tol", "1e-12"),
    ("solver.quadrature_tol", "1e-10"),
    ("solver.fit_tol", "1e-8"),
    ("solver.kappa_max", "40"),
    ("solver.weyl_k", "2"),
    ("solver.heat_times", "0.05,0.1,0.2"),
    ("solver.heat_tail", "1e-6"),
    ("solver.hardy_cuts", "1,4,16,64"),
    ("solver.expand_lambda", "-1/2"),
    ("solver.expand_mu", "1"),
    ("solver.expand_count", "3"),
    ("solver.suite", "all"),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConditionSpec {
    Aps,
    BagPlus,
    BagMinus,
    Minimal,
    Maximal,
    /// Real line `span{(cos a, sin a)}` on every residue mode.
    Local(f64),
    Calderon,
}

impl ConditionSpec {
    pub fn build(&self, cfg: &ModelConfig) -> ramified_dirac::Result<ResidueCondition> {
        match *self {
            ConditionSpec::Aps => Ok(make_aps(cfg)),
            ConditionSpec::BagPlus => Ok(make_bag(cfg, true)),
            ConditionSpec::BagMinus => Ok(make_bag(cfg, false)),
            ConditionSpec::Minimal => Ok(minimal(cfg)),
            ConditionSpec::Maximal => Ok(maximal(cfg)),
            ConditionSpec::Local(a) => {
                make_local(cfg, &Subspace::from_vector(&CVec::from_vec(vec![real(a.cos()), real(a.sin())])))
            }
            ConditionSpec::Calderon => calderon_condition(cfg),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub kappa_max: f64,
    pub weyl_k: u32,
    pub heat_times: Vec<f64>,
    pub heat_tail: f64,
    pub hardy_cuts: Vec<usize>,
    pub expand_lambda: HalfInt,
    pub expand_mu: f64,
    pub expand_count: usize,
    /// `None` runs every suite.
    pub suite: Option<Suite>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub condition: ConditionSpec,
    pub solver: SolverOptions,
    /// Resolved `key = value` lines in canonical order; hashed into the CSV metadata.
    pub canonical: String,
}

/// Raw `key -> (value, line)` map; line 0 marks command-line overrides.
type Raw = BTreeMap<String, (String, usize)>;

fn parse_lines(text: &str) -> Result<Raw, ConfigError> {
    let mut raw = Raw::new();
    let mut section: Option<&str> = None;
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::Parse { line: n, msg: format!("unterminated section header '{body}'") })?
                .trim();
            section = Some(
                SECTIONS
                    .iter()
                    .find(|s| **s == name)
                    .ok_or_else(|| ConfigError::UnknownKey { key: format!("[{name}]"), line: Some(n) })?,
            );
            continue;
        }
        let (k, v) = body
            .split_once('=')
            .ok_or_else(|| ConfigError::Parse { line: n, msg: format!("expected 'key = value', found '{body}'") })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(ConfigError::Parse { line: n, msg: "empty key or value".into() });
        }
        let key = match (k.contains('.'), section) {
            (true, _) => k.to_string(),
            (false, Some(s)) => format!("{s}.{k}"),
            (false, None) => {
                return Err(ConfigError::Parse { line: n, msg: format!("key '{k}' appears before any section header") })
            }
        };
        if !KEYS.iter().any(|(name, _)| *name == key) {
            return Err(ConfigError::UnknownKey { key, line: Some(n) });
        }
        if raw.insert(key.clone(), (v.to_string(), n)).is_some() {
            return Err(ConfigError::Parse { line: n, msg: format!("duplicate key '{key}'") });
        }
    }
    Ok(raw)
}

fn apply_overrides(raw: &mut Raw, overrides: &[String]) -> Result<(), ConfigError> {
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| ConfigError::Parse { line: 0, msg: format!("override '{o}' is not key=value") })?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.iter().any(|(name, _)| *name == k) {
            return Err(ConfigError::UnknownKey { key: k.to_string(), line: None });
        }
        raw.insert(k.to_string(), (v.to_string(), 0));
    }
    Ok(())
}

fn mismatch(key: &str, expected: &'static str, found: &str) -> ConfigError {
    ConfigError::TypeMismatch { key: key.to_string(), expected, found: found.to_string() }
}

/// A float, optionally followed by `pi` (`2pi`, `0.5pi`, `pi`).
pub fn parse_real(key: &str, s: &str) -> Result<f64, ConfigError> {
    let t = s.trim();
    let v = match t.strip_suffix("pi") {
        Some("") => Some(PI),
        Some(c) => c.trim_end_matches('*').trim().parse::<f64>().ok().map(|x| x * PI),
        None => t.parse::<f64>().ok(),
    };
    match v {
        Some(x) if x.is_finite() => Ok(x),
        _ => Err(mismatch(key, "a real number", s)),
    }
}

/// Only the `p/2` form with `p` odd is accepted.
pub fn parse_half(key: &str, s: &str) -> Result<HalfInt, ConfigError> {
    let (p, q) = s.split_once('/').ok_or_else(|| mismatch(key, "a half-integer literal p/2", s))?;
    let p: i64 = p.trim().parse().map_err(|_| mismatch(key, "a half-integer literal p/2", s))?;
    if q.trim() != "2" {
        return Err(mismatch(key, "a half-integer literal p/2", s));
    }
    HalfInt::from_twice(p).map_err(|_| mismatch(key, "a half-integer literal p/2 with p odd", s))
}

fn parse_uint(key: &str, s: &str) -> Result<usize, ConfigError> {
    s.trim().parse().map_err(|_| mismatch(key, "a nonnegative integer", s))
}

fn parse_list<T>(key: &str, s: &str, item: impl Fn(&str, &str) -> Result<T, ConfigError>) -> Result<Vec<T>, ConfigError> {
    s.split(',').map(|x| item(key, x.trim())).collect()
}

fn get<'a>(raw: &'a Raw, key: &str) -> &'a str {
    match raw.get(key) {
        Some((v, _)) => v,
        None => KEYS.iter().find(|(k, _)| *k == key).map(|(_, d)| *d).expect("known key"),
    }
}

impl RunConfig {
    /// Parses `text`, applies `overrides` (`key=value`) and validates the model.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut raw = parse_lines(text)?;
        apply_overrides(&mut raw, overrides)?;
        let g = |k: &str| get(&raw, k);
        let real_of = |k: &str| parse_real(k, g(k));

        let fiber_dim = parse_uint("model.fiber_dim", g("model.fiber_dim"))?;
        let mut model = ModelConfig {
            base_length: real_of("model.base_length")?,
            holonomy_h0: real_of("model.holonomy_h0")?,
            holonomy_h1: real_of("model.holonomy_h1")?,
            lambda_cut: parse_half("model.lambda_cut", g("model.lambda_cut"))?.value(),
            mu_cut: real_of("model.mu_cut")?,
            ..ModelConfig::default()
        }
        .with_fiber_dim(fiber_dim.max(1));
        model.fiber_dim = fiber_dim;
        model.quadrature.r_min = real_of("solver.r_min")?;
        model.quadrature.points_per_panel = parse_uint("solver.points_per_panel", g("solver.points_per_panel"))?;
        model.quadrature.panel_ratio = real_of("solver.panel_ratio")?;
        model.quadrature.max_panel = real_of("solver.max_panel")?;
        model.tol.root = real_of("solver.root_tol")?;
        model.tol.quadrature = real_of("solver.quadrature_tol")?;
        model.tol.fit = real_of("solver.fit_tol")?;

        let d = fiber_dim.max(1);
        let outer_angle = real_of("outer.angle")?;
        model.outer_bc = match g("outer.kind") {
            "type1" => OuterBoundaryCondition::type_i(d),
            "type2" => OuterBoundaryCondition::type_ii(d),
            "line" => OuterBoundaryCondition::line(outer_angle, d),
            other => return Err(mismatch("outer.kind", "one of type1, type2, line", other)),
        };
        model.outer_residue_bc = match g("outer.residue_angle") {
            "none" => None,
            s => Some(OuterBoundaryCondition::line(parse_real("outer.residue_angle", s)?, d)),
        };
        let model = validate_config(model).map_err(|e| ConfigError::Invalid(e.to_string()))?;

        let condition = match g("condition.kind") {
            "aps" => ConditionSpec::Aps,
            "bag+" => ConditionSpec::BagPlus,
            "bag-" => ConditionSpec::BagMinus,
            "minimal" => ConditionSpec::Minimal,
            "maximal" => ConditionSpec::Maximal,
            "local" => ConditionSpec::Local(real_of("condition.angle")?),
            "calderon" => ConditionSpec::Calderon,
            other => {
                return Err(mismatch("condition.kind", "one of aps, bag+, bag-, minimal, maximal, local, calderon", other))
            }
        };

        let weyl_k = parse_uint("solver.weyl_k", g("solver.weyl_k"))?;
        let suite = match g("solver.suite") {
            "all" => None,
            s => Some(s.parse::<Suite>().map_err(|_| mismatch("solver.suite", "a suite name or 'all'", s))?),
        };
        let solver = SolverOptions {
            kappa_max: real_of("solver.kappa_max")?,
            weyl_k: u32::try_from(weyl_k).map_err(|_| mismatch("solver.weyl_k", "a small integer", g("solver.weyl_k")))?,
            heat_times: parse_list("solver.heat_times", g("solver.heat_times"), parse_real)?,
            heat_tail: real_of("solver.heat_tail")?,
            hardy_cuts: parse_list("solver.hardy_cuts", g("solver.hardy_cuts"), parse_uint)?,
            expand_lambda: parse_half("solver.expand_lambda", g("solver.expand_lambda"))?,
            expand_mu: real_of("solver.expand_mu")?,
            expand_count: parse_uint("solver.expand_count", g("solver.expand_count"))?,
            suite,
        };
        if !(solver.kappa_max > 0.0) {
            return Err(ConfigError::Invalid("solver.kappa_max must be positive".into()));
        }

        let canonical: String = KEYS.iter().map(|(k, _)| format!("{k} = {}\n", g(k))).collect();
        Ok(RunConfig { model, condition, solver, canonical })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ramified_dirac::conditions::ConditionKind;

    #[test]
    fn minimal_file_gives_defaults() {
        let rc = RunConfig::parse("[model]\n", &[]).unwrap();
        assert_eq!(rc.model, ModelConfig::default());
        assert_eq!(rc.condition, ConditionSpec::Aps);
        assert_eq!(rc.solver.suite, None);
        assert_eq!(rc.solver.hardy_cuts, vec![1, 4, 16, 64]);
    }

    #[test]
    fn bag_condition_from_dotted_key() {
        let rc = RunConfig::parse("condition.kind = bag+\n", &[]).unwrap();
        assert_eq!(rc.condition, ConditionSpec::BagPlus);
        let r = rc.condition.build(&rc.model).unwrap();
        assert_eq!(r.kind, ConditionKind::BagPlus);
        assert_eq!(r.kind.to_string(), "bag+");
    }

    #[test]
    fn integer_lambda_cut_is_a_type_mismatch() {
        let e = RunConfig::parse("[model]\nlambda_cut = 1\n", &[]).unwrap_err();
        assert!(matches!(e, ConfigError::TypeMismatch { ref key, .. } if key == "model.lambda_cut"), "{e}");
        let e = RunConfig::parse("[model]\nlambda_cut = 2/2\n", &[]).unwrap_err();
        assert!(matches!(e, ConfigError::TypeMismatch { .. }));
        assert_eq!(RunConfig::parse("[model]\nlambda_cut = 3/2\n", &[]).unwrap().model.lambda_cut, 1.5);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = RunConfig::parse("[model]\n\nmu_cut 3\n", &[]).unwrap_err();
        assert_eq!(e, ConfigError::Parse { line: 3, msg: "expected 'key = value', found 'mu_cut 3'".into() });
        let e = RunConfig::parse("[model]\nmu_cutt = 3\n", &[]).unwrap_err();
        assert_eq!(e, ConfigError::UnknownKey { key: "model.mu_cutt".into(), line: Some(2) });
        let e = RunConfig::parse("[modle]\n", &[]).unwrap_err();
        assert!(matches!(e, ConfigError::UnknownKey { line: Some(1), .. }));
        let e = RunConfig::parse("mu_cut = 3\n", &[]).unwrap_err();
        assert!(matches!(e, ConfigError::Parse { line: 1, .. }));
        let e = RunConfig::parse("[model]\nmu_cut = 3\nmu_cut = 4\n", &[]).unwrap_err();
        assert!(matches!(e, ConfigError::Parse { line: 3, .. }));
    }

    #[test]
    fn overrides_apply_after_the_file() {
        let text = "[model]\nmu_cut = 3 # trailing comment\n";
        let rc = RunConfig::parse(text, &["model.mu_cut=5".into(), "condition.kind=local".into()]).unwrap();
        assert_eq!(rc.model.mu_cut, 5.0);
        assert_eq!(rc.condition, ConditionSpec::Local(0.0));
        let e = RunConfig::parse(text, &["model.nope=1".into()]).unwrap_err();
        assert_eq!(e, ConfigError::UnknownKey { key: "model.nope".into(), line: None });
    }

    #[test]
    fn literals() {
        assert_eq!(parse_real("k", "2pi").unwrap(), 2.0 * PI);
        assert_eq!(parse_real("k", "pi").unwrap(), PI);
        assert_eq!(parse_real("k", "0.5*pi").unwrap(), 0.5 * PI);
        assert!(parse_real("k", "two").is_err());
        assert_eq!(parse_half("k", "-1/2").unwrap(), HalfInt::MINUS_HALF);
        assert!(parse_half("k", "0.5").is_err());
        assert!(matches!(
            RunConfig::parse("[model]\nfiber_dim = 1.5\n", &[]),
            Err(ConfigError::TypeMismatch { .. })
        ));
    }

    #[test]
    fn invalid_model_is_reported() {
        let e = RunConfig::parse("[model]\nbase_length = 0\n", &[]).unwrap_err();
        assert!(matches!(e, ConfigError::Invalid(_)), "{e}");
    }

    #[test]
    fn canonical_form_is_stable() {
        let a = RunConfig::parse("[model]\nmu_cut = 3\n", &[]).unwrap();
        let b = RunConfig::parse("model.mu_cut = 3\n# same thing\n", &[]).unwrap();
        assert_eq!(a.canonical, b.canonical);
        assert!(a.canonical.contains("model.mu_cut = 3\n"));
    }
}
