//! Subgroup-separable chained Hamiltonians.
//!
//! A chain of dimension `n` lives on the chart `(r, θ₁, …, θₙ₋₁)` and nests as
//!
//! ```text
//! Lₙ = pₙ² + Vₙ(qₙ)
//! Lᵢ = pᵢ² + Vᵢ(qᵢ) + fᵢ(qᵢ) Lᵢ₊₁        (i < n)
//! H  = L₁
//! ```
//!
//! with `f₁ = 1/r²` and `fᵢ = 1/sin²(kᵢ₋₁ θᵢ₋₁)` for `i ≥ 2`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dual::{Dual, Scalar};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_DIM: usize = 8;
pub const DEFAULT_DOMAIN_MARGIN: f64 = 1e-6;

/// Positive rational `num/den` in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RationalParam {
    num: u32,
    den: u32,
}

impl RationalParam {
    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::InvalidParameter(format!(
                "rational {num}/{den}: numerator and denominator must be positive"
            )));
        }
        if gcd(num as u64, den as u64) != 1 {
            return Err(Error::InvalidParameter(format!(
                "rational {num}/{den} is not in lowest terms"
            )));
        }
        Ok(Self { num, den })
    }

    pub fn integer(n: u32) -> Result<Self> {
        Self::new(n, 1)
    }

    pub fn num(&self) -> u32 {
        self.num
    }

    pub fn den(&self) -> u32 {
        self.den
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn is_one(&self) -> bool {
        self.num == 1 && self.den == 1
    }
}

impl fmt::Display for RationalParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for RationalParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("cannot parse rational {s:?}, expected \"p/q\""));
        let (n, d) = match s.trim().split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s.trim(), "1"),
        };
        let n: u32 = n.parse().map_err(|_| bad())?;
        let d: u32 = d.parse().map_err(|_| bad())?;
        Self::new(n, d)
    }
}

impl Serialize for RationalParam {
    fn serialize<Ser: serde::Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for RationalParam {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PotentialKind {
    /// `α r²`
    HarmonicRadial,
    /// `α / r`
    KeplerRadial,
    /// `β / cos²(kθ)`
    InvCosSq { k: RationalParam },
    /// `β / sin²(kθ)`
    InvSinSq { k: RationalParam },
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialTerm {
    #[serde(flatten)]
    pub kind: PotentialKind,
    pub coefficient: f64,
}

impl PotentialTerm {
    pub fn new(kind: PotentialKind, coefficient: f64) -> Self {
        Self { kind, coefficient }
    }

    /// Terms with coefficient exactly zero are never evaluated.
    pub fn is_absent(&self) -> bool {
        self.coefficient == 0.0 || matches!(self.kind, PotentialKind::Zero)
    }

    fn is_radial(&self) -> bool {
        matches!(self.kind, PotentialKind::HarmonicRadial | PotentialKind::KeplerRadial)
    }

    fn eval<S: Scalar>(&self, x: S) -> S {
        if self.is_absent() {
            return S::zero();
        }
        let c = S::cst(self.coefficient);
        match self.kind {
            PotentialKind::HarmonicRadial => c * x * x,
            PotentialKind::KeplerRadial => c / x,
            PotentialKind::InvCosSq { k } => {
                let v = x.scale(k.value()).cos();
                c / (v * v)
            }
            PotentialKind::InvSinSq { k } => {
                let v = x.scale(k.value()).sin();
                c / (v * v)
            }
            PotentialKind::Zero => S::zero(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CouplingTerm {
    /// `1 / r²`, level 1 only.
    InvRadialSq,
    /// `1 / sin²(kθ)`, levels ≥ 2.
    InvSinSq { k: RationalParam },
}

impl CouplingTerm {
    fn eval<S: Scalar>(&self, x: S) -> S {
        self.inverse_eval(x).recip()
    }

    /// `1/f`, i.e. `r²` or `sin²(kθ)`.
    fn inverse_eval<S: Scalar>(&self, x: S) -> S {
        match self {
            CouplingTerm::InvRadialSq => x * x,
            CouplingTerm::InvSinSq { k } => {
                let s = x.scale(k.value()).sin();
                s * s
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level {
    #[serde(default)]
    pub potential: Vec<PotentialTerm>,
    #[serde(default)]
    pub coupling: Option<CouplingTerm>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyTag {
    #[serde(rename = "oscillator3d")]
    Oscillator3D,
    #[serde(rename = "kepler-coulomb3d")]
    KeplerCoulomb3D,
    #[serde(rename = "four-d-example")]
    FourDExample,
    #[serde(rename = "custom")]
    Custom,
}

impl FamilyTag {
    pub const BUILT_IN: [FamilyTag; 3] = [
        FamilyTag::Oscillator3D,
        FamilyTag::KeplerCoulomb3D,
        FamilyTag::FourDExample,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FamilyTag::Oscillator3D => "oscillator3d",
            FamilyTag::KeplerCoulomb3D => "kepler-coulomb3d",
            FamilyTag::FourDExample => "four-d-example",
            FamilyTag::Custom => "custom",
        }
    }

    /// `(n, β arity, k arity)` for built-in families.
    pub fn arities(&self) -> Option<(usize, usize, usize)> {
        match self {
            FamilyTag::Oscillator3D | FamilyTag::KeplerCoulomb3D => Some((3, 3, 2)),
            FamilyTag::FourDExample => Some((4, 4, 3)),
            FamilyTag::Custom => None,
        }
    }
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match norm.as_str() {
            "oscillator3d" => Ok(FamilyTag::Oscillator3D),
            "keplercoulomb3d" => Ok(FamilyTag::KeplerCoulomb3D),
            "fourdexample" => Ok(FamilyTag::FourDExample),
            "custom" => Ok(FamilyTag::Custom),
            _ => Err(Error::Unsupported(format!("unknown family {s:?}"))),
        }
    }
}

/// Parameters of a built-in family, kept for closed-form cross-checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    pub alpha: f64,
    pub beta: Vec<f64>,
    pub k: Vec<RationalParam>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainSystem {
    levels: Vec<Level>,
    family: FamilyTag,
    params: Option<FamilyParams>,
    domain_margin: f64,
}

impl ChainSystem {
    /// Validates a hand-assembled chain.
    pub fn custom(levels: Vec<Level>, max_dim: usize) -> Result<Self> {
        let n = levels.len();
        if n == 0 {
            return Err(Error::InvalidParameter("chain needs at least one level".into()));
        }
        if n > max_dim {
            return Err(Error::InvalidParameter(format!(
                "dimension {n} exceeds the configured cap {max_dim}"
            )));
        }
        for (idx, level) in levels.iter().enumerate() {
            let i = idx + 1;
            for term in &level.potential {
                if !term.coefficient.is_finite() {
                    return Err(Error::InvalidParameter(format!("level {i}: non-finite coefficient")));
                }
                if i == 1 && !(term.is_radial() || matches!(term.kind, PotentialKind::Zero)) {
                    return Err(Error::Unsupported(format!(
                        "level 1 (radial) admits only radial terms, got {:?}",
                        term.kind
                    )));
                }
                if i > 1 && term.is_radial() {
                    return Err(Error::Unsupported(format!(
                        "radial term {:?} is only admissible at level 1 (found at level {i})",
                        term.kind
                    )));
                }
            }
            match (i, level.coupling) {
                (i, None) if i == n => {}
                (i, Some(_)) if i == n => {
                    return Err(Error::InvalidParameter(format!(
                        "top level {n} must not carry a coupling term"
                    )))
                }
                (_, None) => {
                    return Err(Error::InvalidParameter(format!("level {i} is missing its coupling term")))
                }
                (1, Some(CouplingTerm::InvRadialSq)) => {}
                (1, Some(c)) => {
                    return Err(Error::Unsupported(format!("level 1 coupling must be 1/r², got {c:?}")))
                }
                (_, Some(CouplingTerm::InvSinSq { .. })) => {}
                (i, Some(c)) => {
                    return Err(Error::Unsupported(format!(
                        "level {i} coupling must be 1/sin²(kθ), got {c:?}"
                    )))
                }
            }
        }
        Ok(Self {
            levels,
            family: FamilyTag::Custom,
            params: None,
            domain_margin: DEFAULT_DOMAIN_MARGIN,
        })
    }

    pub fn with_domain_margin(mut self, margin: f64) -> Self {
        self.domain_margin = margin;
        self
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn family(&self) -> FamilyTag {
        self.family
    }

    pub fn params(&self) -> Option<&FamilyParams> {
        self.params.as_ref()
    }

    pub fn domain_margin(&self) -> f64 {
        self.domain_margin
    }

    /// Largest angular parameter referenced at each level (level 1 → `None`).
    pub fn level_k_max(&self, level: usize) -> Option<f64> {
        let lv = &self.levels[level];
        let ks = lv
            .potential
            .iter()
            .filter_map(|t| match t.kind {
                PotentialKind::InvCosSq { k } | PotentialKind::InvSinSq { k } => Some(k.value()),
                _ => None,
            })
            .chain(match lv.coupling {
                Some(CouplingTerm::InvSinSq { k }) => Some(k.value()),
                _ => None,
            });
        ks.fold(None, |acc: Option<f64>, k| Some(acc.map_or(k, |a| a.max(k))))
    }

    /// Checks a configuration against the domain margin around singular sets.
    pub fn check_domain(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.dim() {
            return Err(Error::Arity {
                what: "coordinates",
                expected: self.dim(),
                got: q.len(),
            });
        }
        let eps = self.domain_margin;
        for (idx, (&x, level)) in q.iter().zip(&self.levels).enumerate() {
            let fail = |reason: String| Error::Domain {
                index: idx + 1,
                value: x,
                reason,
            };
            if !x.is_finite() {
                return Err(fail("non-finite coordinate".into()));
            }
            if idx == 0 {
                // a lone level without 1/r terms is an ordinary line coordinate
                let singular = level.coupling.is_some()
                    || level
                        .potential
                        .iter()
                        .any(|t| !t.is_absent() && matches!(t.kind, PotentialKind::KeplerRadial));
                if singular && x <= eps {
                    return Err(fail(format!("radius must exceed the margin {eps:e}")));
                }
                continue;
            }
            let live = level.potential.iter().filter(|t| !t.is_absent()).map(|t| t.kind);
            for kind in live {
                match kind {
                    PotentialKind::InvCosSq { k } if (k.value() * x).cos().abs() < eps => {
                        return Err(fail(format!("cos({k}·θ) within {eps:e} of zero")))
                    }
                    PotentialKind::InvSinSq { k } if (k.value() * x).sin().abs() < eps => {
                        return Err(fail(format!("sin({k}·θ) within {eps:e} of zero")))
                    }
                    _ => {}
                }
            }
            if let Some(CouplingTerm::InvSinSq { k }) = level.coupling {
                if (k.value() * x).sin().abs() < eps {
                    return Err(fail(format!("coupling sin({k}·θ) within {eps:e} of zero")));
                }
            }
        }
        Ok(())
    }

    fn check_point<S: Scalar>(&self, q: &[S], p: &[S]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::Arity {
                what: "momenta",
                expected: self.dim(),
                got: p.len(),
            });
        }
        let qv: Vec<f64> = q.iter().map(Scalar::value).collect();
        self.check_domain(&qv)
    }

    /// `(L₁, …, Lₙ)` for any scalar type.
    pub fn levels_at<S: Scalar>(&self, q: &[S], p: &[S]) -> Result<Vec<S>> {
        self.check_point(q, p)?;
        Ok(self.levels_unchecked(q, p))
    }

    pub(crate) fn levels_unchecked<S: Scalar>(&self, q: &[S], p: &[S]) -> Vec<S> {
        let n = self.dim();
        let mut out = vec![S::zero(); n];
        let mut upper = S::zero();
        for i in (0..n).rev() {
            let level = &self.levels[i];
            let mut li = p[i] * p[i];
            for term in &level.potential {
                li += term.eval(q[i]);
            }
            if let Some(c) = level.coupling {
                li += c.eval(q[i]) * upper;
            }
            out[i] = li;
            upper = li;
        }
        out
    }

    pub fn hamiltonian_at<S: Scalar>(&self, q: &[S], p: &[S]) -> Result<S> {
        Ok(self.levels_at(q, p)?[0])
    }

    /// Diagonal inverse metric `g^{ii} = f₁ ⋯ fᵢ₋₁` for any scalar type.
    pub fn inverse_metric_at<S: Scalar>(&self, q: &[S]) -> Vec<S> {
        self.metric_at(q).into_iter().map(Scalar::recip).collect()
    }

    /// Diagonal metric `g_{ii} = 1/g^{ii}`, built directly from `r²` and `sin²(kθ)`.
    pub fn metric_at<S: Scalar>(&self, q: &[S]) -> Vec<S> {
        let mut out = Vec::with_capacity(self.dim());
        let mut acc = S::one();
        for (i, level) in self.levels.iter().enumerate() {
            out.push(acc);
            if let Some(c) = level.coupling {
                acc *= c.inverse_eval(q[i]);
            }
        }
        out
    }
}

/// Builds one of the built-in families.
pub fn build_system(family: FamilyTag, alpha: f64, beta: &[f64], k: &[RationalParam]) -> Result<ChainSystem> {
    let Some((n, nb, nk)) = family.arities() else {
        return Err(Error::Unsupported(
            "custom chains are assembled with ChainSystem::custom".into(),
        ));
    };
    if beta.len() != nb {
        return Err(Error::Arity {
            what: "beta",
            expected: nb,
            got: beta.len(),
        });
    }
    if k.len() != nk {
        return Err(Error::Arity {
            what: "k",
            expected: nk,
            got: k.len(),
        });
    }
    if !alpha.is_finite() || beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::InvalidParameter("non-finite alpha or beta".into()));
    }
    let radial = match family {
        FamilyTag::KeplerCoulomb3D => PotentialKind::KeplerRadial,
        _ => PotentialKind::HarmonicRadial,
    };
    let mut levels = vec![Level {
        potential: vec![PotentialTerm::new(radial, alpha)],
        coupling: Some(CouplingTerm::InvRadialSq),
    }];
    for i in 1..n {
        let kk = k[i - 1];
        let mut potential = vec![PotentialTerm::new(PotentialKind::InvCosSq { k: kk }, beta[i - 1])];
        let coupling = if i + 1 < n {
            Some(CouplingTerm::InvSinSq { k: kk })
        } else {
            potential.push(PotentialTerm::new(PotentialKind::InvSinSq { k: kk }, beta[i]));
            None
        };
        levels.push(Level { potential, coupling });
    }
    let mut sys = ChainSystem::custom(levels, DEFAULT_MAX_DIM)?;
    sys.family = family;
    sys.params = Some(FamilyParams {
        alpha,
        beta: beta.to_vec(),
        k: k.to_vec(),
    });
    Ok(sys)
}

/// Real phase-space point `(q, p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Self {
        Self { q, p }
    }

    /// Splits a flat `[q…, p…]` vector.
    pub fn from_flat(x: &[f64]) -> Result<Self> {
        if x.len() % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "phase vector must have even length, got {}",
                x.len()
            )));
        }
        let n = x.len() / 2;
        Ok(Self::new(x[..n].to_vec(), x[n..].to_vec()))
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.q.iter().chain(&self.p).copied().collect()
    }
}

/// Evaluated `(L₁, …, Lₙ)` with `H = L₁`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainValues {
    pub values: Vec<f64>,
}

impl ChainValues {
    pub fn hamiltonian(&self) -> f64 {
        self.values[0]
    }

    /// `Lᵢ` with the 1-based index used throughout.
    pub fn level(&self, i: usize) -> f64 {
        self.values[i - 1]
    }
}

pub fn eval_chain(system: &ChainSystem, x: &PhasePoint) -> Result<ChainValues> {
    let values = system.levels_at(&x.q, &x.p)?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("chain evaluation".into()));
    }
    Ok(ChainValues { values })
}

/// Hamilton's equations `(q̇, ṗ) = (∂H/∂p, −∂H/∂q)` by forward-mode AD.
pub fn flow_field(system: &ChainSystem, x: &PhasePoint) -> Result<Vec<f64>> {
    let n = system.dim();
    system.check_point(&x.q, &x.p)?;
    let mut out = vec![0.0; 2 * n];
    let mut q: Vec<Dual<f64>> = x.q.iter().map(|&v| Dual::constant(v)).collect();
    let mut p: Vec<Dual<f64>> = x.p.iter().map(|&v| Dual::constant(v)).collect();
    for j in 0..n {
        q[j].eps = 1.0;
        out[n + j] = -system.levels_unchecked(&q, &p)[0].eps;
        q[j].eps = 0.0;
        p[j].eps = 1.0;
        out[j] = system.levels_unchecked(&q, &p)[0].eps;
        p[j].eps = 0.0;
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("flow field".into()));
    }
    Ok(out)
}

pub fn inverse_metric(system: &ChainSystem, q: &[f64]) -> Result<Vec<f64>> {
    system.check_domain(q)?;
    Ok(system.inverse_metric_at(q))
}
