//! Run configuration, read from TOML or JSON.
//!
//! A document whose first non-blank character is `{` is JSON, anything else
//! is TOML. The system may be given at the top level or inside a `system`
//! table; rationals are strings such as `"3/2"`.
//!
//! ```toml
//! family = "oscillator3d"
//! alpha = 1.0
//! beta = [1.0, 2.0, 3.0]
//! k = ["3/2", "5/3"]
//! suites = ["involution", "superintegrability"]
//! seed = 7
//!
//! [tolerances]
//! bracket_tol = 1e-9
//! ```

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chain::{build_system, ChainSystem, FamilyTag, Level, RationalParam, DEFAULT_MAX_DIM};
use crate::degree::{DEFAULT_DMAX, MAX_DMAX};
use crate::error::{Error, Result};
use crate::integrator::{MAX_TOL, MIN_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteName {
    Involution,
    Superintegrability,
    Conservation,
    Polynomiality,
    Geometry,
    ClosedForms,
}

impl SuiteName {
    pub const ALL: [SuiteName; 6] = [
        SuiteName::Involution,
        SuiteName::Superintegrability,
        SuiteName::Conservation,
        SuiteName::Polynomiality,
        SuiteName::Geometry,
        SuiteName::ClosedForms,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SuiteName::Involution => "involution",
            SuiteName::Superintegrability => "superintegrability",
            SuiteName::Conservation => "conservation",
            SuiteName::Polynomiality => "polynomiality",
            SuiteName::Geometry => "geometry",
            SuiteName::ClosedForms => "closed-forms",
        }
    }
}

impl fmt::Display for SuiteName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SuiteName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SuiteName::ALL
            .into_iter()
            .find(|n| n.name() == s.trim())
            .ok_or_else(|| {
                let known: Vec<_> = SuiteName::ALL.iter().map(|n| n.name()).collect();
                Error::config(format!("unknown suite {s:?}, expected one of {}", known.join(", ")))
            })
    }
}

/// The chain under test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemSpec {
    pub family: FamilyTag,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub beta: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub k: Vec<RationalParam>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<Level>>,
    pub max_dim: usize,
}

impl SystemSpec {
    pub fn build(&self) -> Result<ChainSystem> {
        match (self.family, &self.levels) {
            (FamilyTag::Custom, Some(levels)) => ChainSystem::custom(levels.clone(), self.max_dim),
            (FamilyTag::Custom, None) => Err(Error::config("custom family needs a `levels` list")),
            (_, Some(_)) => Err(Error::config("`levels` is only allowed with family = \"custom\"")),
            (family, None) => {
                let alpha = self.alpha.ok_or_else(|| Error::config("missing field `alpha`"))?;
                build_system(family, alpha, &self.beta, &self.k)
            }
        }
    }

    /// Same family with `β[index]` (1-based) shifted by `delta`.
    pub fn with_beta_shift(&self, index: usize, delta: f64) -> Result<Self> {
        if index == 0 || index > self.beta.len() {
            return Err(Error::config(format!(
                "perturbed beta index {index} outside 1..={}",
                self.beta.len()
            )));
        }
        let mut out = self.clone();
        out.beta[index - 1] += delta;
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Normalized `|{Lᵢ, Lⱼ}|`.
    pub bracket_tol: f64,
    /// Normalized `|{H, F}|` for constructed constants.
    pub constant_tol: f64,
    /// Relative singular-value cut for the independence rank.
    pub rank_tol: f64,
    /// Relative drift along trajectories.
    pub drift_tol: f64,
    /// Scale-normalized curvature threshold.
    pub geom_tol: f64,
    /// Relative agreement of explicit forms with the composed pairs.
    pub formula_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            bracket_tol: 1e-9,
            constant_tol: 1e-8,
            rank_tol: 1e-8,
            drift_tol: 1e-6,
            geom_tol: 1e-7,
            formula_tol: 1e-9,
        }
    }
}

impl Tolerances {
    fn named(&self) -> [(&'static str, f64); 6] {
        [
            ("bracket_tol", self.bracket_tol),
            ("constant_tol", self.constant_tol),
            ("rank_tol", self.rank_tol),
            ("drift_tol", self.drift_tol),
            ("geom_tol", self.geom_tol),
            ("formula_tol", self.formula_tol),
        ]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            bracket_tol: self.bracket_tol * factor,
            constant_tol: self.constant_tol * factor,
            rank_tol: self.rank_tol * factor,
            drift_tol: self.drift_tol * factor,
            geom_tol: self.geom_tol * factor,
            formula_tol: self.formula_tol * factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingConfig {
    /// Phase points for brackets and ranks.
    pub points: usize,
    /// Coordinate points for curvature.
    pub geometry_points: usize,
    /// Phase points for the explicit-form comparison.
    pub formula_points: usize,
    /// Coordinate points at which degrees are probed.
    pub degree_points: usize,
    pub dmax: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            points: 100,
            geometry_points: 20,
            formula_points: 20,
            degree_points: 3,
            dmax: DEFAULT_DMAX,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryConfig {
    pub t_max: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub n_trajectories: usize,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            t_max: 100.0,
            rel_tol: 1e-12,
            abs_tol: 1e-12,
            n_trajectories: 5,
        }
    }
}

/// Expected flatness verdicts; unset fields are reported but not checked.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryExpectation {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conformally_flat: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flat: Option<bool>,
}

/// Evaluates `L₂, …, Lₙ` from a system whose `β[beta_index]` is shifted,
/// while `H` keeps the original value. A deliberately broken chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub beta_index: usize,
    pub delta: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub system: SystemSpec,
    pub suites: Vec<SuiteName>,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub sampling: SamplingConfig,
    pub trajectory: TrajectoryConfig,
    pub geometry: GeometryExpectation,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_degrees: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Perturbation>,
    pub output: OutputPaths,
}

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    family: Option<String>,
    alpha: Option<f64>,
    beta: Option<Vec<f64>>,
    k: Option<Vec<RationalParam>>,
    levels: Option<Vec<Level>>,
    max_dim: Option<usize>,
}

impl RawSystem {
    fn is_empty(&self) -> bool {
        self.family.is_none()
            && self.alpha.is_none()
            && self.beta.is_none()
            && self.k.is_none()
            && self.levels.is_none()
            && self.max_dim.is_none()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    system: Option<RawSystem>,
    family: Option<String>,
    alpha: Option<f64>,
    beta: Option<Vec<f64>>,
    k: Option<Vec<RationalParam>>,
    levels: Option<Vec<Level>>,
    max_dim: Option<usize>,
    #[serde(default)]
    suites: Vec<String>,
    seed: Option<u64>,
    #[serde(default)]
    tolerances: Tolerances,
    #[serde(default)]
    sampling: SamplingConfig,
    #[serde(default)]
    trajectory: TrajectoryConfig,
    #[serde(default)]
    geometry: GeometryExpectation,
    expected_degrees: Option<Vec<usize>>,
    perturbation: Option<Perturbation>,
    #[serde(default)]
    output: OutputPaths,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

fn located(location: String, message: impl Into<String>) -> Error {
    Error::Config {
        location: Some(location),
        message: message.into(),
    }
}

fn field(name: &str, message: impl fmt::Display) -> Error {
    located(format!("field `{name}`"), message.to_string())
}

/// Parses and validates a configuration, filling defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| {
            located(format!("line {}, column {}", e.line(), e.column()), e.to_string())
        })?
    } else {
        toml::from_str(text).map_err(|e| {
            let loc = e
                .span()
                .map(|s| {
                    let (l, c) = line_col(text, s.start);
                    format!("line {l}, column {c}")
                })
                .unwrap_or_else(|| "unknown position".into());
            located(loc, e.message().trim().to_string())
        })?
    };
    validate(raw)
}

fn validate(raw: RawConfig) -> Result<RunConfig> {
    let top = RawSystem {
        family: raw.family,
        alpha: raw.alpha,
        beta: raw.beta,
        k: raw.k,
        levels: raw.levels,
        max_dim: raw.max_dim,
    };
    let sys = match raw.system {
        Some(_) if !top.is_empty() => {
            return Err(Error::config(
                "system fields given both at the top level and in the `system` table",
            ));
        }
        Some(s) => s,
        None => top,
    };
    let family = match (&sys.family, &sys.levels) {
        (Some(f), _) => f.parse::<FamilyTag>().map_err(|e| field("family", e))?,
        (None, Some(_)) => FamilyTag::Custom,
        (None, None) => return Err(field("family", "missing")),
    };
    let system = SystemSpec {
        family,
        alpha: sys.alpha,
        beta: sys.beta.unwrap_or_default(),
        k: sys.k.unwrap_or_default(),
        levels: sys.levels,
        max_dim: sys.max_dim.unwrap_or(DEFAULT_MAX_DIM),
    };
    system.build().map_err(|e| field("system", e))?;

    let mut suites = Vec::new();
    for s in &raw.suites {
        let name: SuiteName = s.parse().map_err(|e| field("suites", e))?;
        if !suites.contains(&name) {
            suites.push(name);
        }
    }

    for (name, v) in raw.tolerances.named() {
        if !(v > 0.0 && v.is_finite()) {
            return Err(field(&format!("tolerances.{name}"), format!("{v} must be positive and finite")));
        }
    }
    let sm = raw.sampling;
    for (name, v) in [
        ("points", sm.points),
        ("geometry_points", sm.geometry_points),
        ("formula_points", sm.formula_points),
        ("degree_points", sm.degree_points),
    ] {
        if v == 0 {
            return Err(field(&format!("sampling.{name}"), "must be at least 1"));
        }
    }
    if sm.dmax == 0 || sm.dmax > MAX_DMAX {
        return Err(field("sampling.dmax", format!("{} outside 1..={MAX_DMAX}", sm.dmax)));
    }
    let tr = raw.trajectory;
    if !(tr.t_max >= 0.0 && tr.t_max.is_finite()) {
        return Err(field("trajectory.t_max", format!("{} must be finite and ≥ 0", tr.t_max)));
    }
    for (name, v) in [("rel_tol", tr.rel_tol), ("abs_tol", tr.abs_tol)] {
        if !(MIN_TOL..=MAX_TOL).contains(&v) {
            return Err(field(
                &format!("trajectory.{name}"),
                format!("{v:e} outside [{MIN_TOL:e}, {MAX_TOL:e}]"),
            ));
        }
    }
    if let Some(p) = raw.perturbation {
        if !p.delta.is_finite() {
            return Err(field("perturbation.delta", "must be finite"));
        }
        if family == FamilyTag::Custom {
            return Err(field("perturbation", "only built-in families can be perturbed"));
        }
        system
            .with_beta_shift(p.beta_index, p.delta)
            .map_err(|e| field("perturbation.beta_index", e))?;
    }
    Ok(RunConfig {
        system,
        suites,
        seed: raw.seed.unwrap_or(DEFAULT_SEED),
        tolerances: raw.tolerances,
        sampling: sm,
        trajectory: tr,
        geometry: raw.geometry,
        expected_degrees: raw.expected_degrees,
        perturbation: raw.perturbation,
        output: raw.output,
    })
}

impl RunConfig {
    pub fn build_system(&self) -> Result<ChainSystem> {
        self.system.build()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
family = "oscillator3d"
k = ["3/2", "5/3"]
alpha = 1
beta = [1, 2, 3]
suites = ["involution"]
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.system.family, FamilyTag::Oscillator3D);
        assert_eq!(c.system.k, vec![RationalParam::new(3, 2).unwrap(), RationalParam::new(5, 3).unwrap()]);
        assert_eq!(c.suites, vec![SuiteName::Involution]);
        assert_eq!(c.seed, DEFAULT_SEED);
        assert_eq!(c.tolerances, Tolerances::default());
        assert_eq!(c.sampling.points, 100);
        assert_eq!(c.trajectory.n_trajectories, 5);
        assert_eq!(c.build_system().unwrap().dim(), 3);
    }

    #[test]
    fn json_and_system_table() {
        let json = r#"{"system": {"family": "kepler-coulomb3d", "alpha": -1, "beta": [1,1,1], "k": ["1/1","1"]},
                       "suites": ["geometry", "conservation"], "seed": 9}"#;
        let c = parse_config(json).unwrap();
        assert_eq!(c.system.family, FamilyTag::KeplerCoulomb3D);
        assert_eq!(c.seed, 9);
    }

    #[test]
    fn bad_rationals_are_rejected() {
        for k in ["0/1", "4/2", "x"] {
            let text = MINIMAL.replace("\"3/2\"", &format!("{k:?}"));
            let err = parse_config(&text).unwrap_err().to_string();
            assert!(err.contains("line 3"), "{err}");
        }
    }

    #[test]
    fn unknown_fields_and_suites() {
        let err = parse_config(&format!("{MINIMAL}\nfoo = 1\n")).unwrap_err().to_string();
        assert!(err.contains("foo") && err.contains("line 8"), "{err}");
        let err = parse_config(&MINIMAL.replace("involution", "nope")).unwrap_err().to_string();
        assert!(err.contains("suites"), "{err}");
    }

    #[test]
    fn validation_errors_name_the_field() {
        let err = parse_config(&format!("{MINIMAL}\n[tolerances]\nrank_tol = -1\n")).unwrap_err();
        assert!(err.to_string().contains("tolerances.rank_tol"), "{err}");
        let err = parse_config(&MINIMAL.replace("[1, 2, 3]", "[1, 2]")).unwrap_err();
        assert!(err.to_string().contains("beta"), "{err}");
    }

    #[test]
    fn custom_chain() {
        let text = r#"
suites = []
[system]
levels = [
  { potential = [{ kind = "harmonic-radial", coefficient = 1.0 }], coupling = { kind = "inv-radial-sq" } },
  { potential = [{ kind = "inv-cos-sq", k = "2/1", coefficient = 0.5 }] },
]
"#;
        let c = parse_config(text).unwrap();
        assert_eq!(c.system.family, FamilyTag::Custom);
        assert_eq!(c.build_system().unwrap().dim(), 2);
    }

    #[test]
    fn four_d_with_all_suites() {
        let text = r#"
family = "four-d-example"
alpha = 1.0
beta = [1.0, 1.3, 0.7, 1.1]
k = ["2", "1", "1"]
suites = ["involution", "superintegrability", "conservation", "polynomiality", "geometry", "closed-forms"]
"#;
        let c = parse_config(text).unwrap();
        assert_eq!(c.suites.len(), 6);
        assert_eq!(c.build_system().unwrap().dim(), 4);
    }
}
