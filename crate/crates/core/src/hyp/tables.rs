//! Per-level hyperbolic pairs for the separable chains.
//!
//! Every pair is written through five "letters":
//!
//! ```text
//! sinh X = σ / d,      σ = ℓ τ + κ
//! cosh X = √ℓ γ / d,   d = √disc
//! ```
//!
//! where `ℓ` is the chain constant `Lᵢ₊₁` shared by both pairs of level `i`,
//! `τ` depends on coordinates only, `κ` and `disc` are functions of the chain
//! constants, and `γ` is linear in the momenta. Four pair types cover the
//! built-in families:
//!
//! | pair | τ | κ | γ | disc |
//! |------|---|---|---|------|
//! | radial, `αr²` | `−2i/r²` | `iH` | `−2p_r/r` | `H² − 4αL₂` |
//! | radial, `α/r` | `2i/r` | `iα` | `2p_r` | `α² + 4HL₂` |
//! | angular A `(L, β, X, k)` | `i cos 2kθ` | `i(X − β)` | `sin(2kθ) p_θ` | `(β − L − X)² − 4LX` |
//! | angular B `(L, β, X, k)` | `2 cosec²kθ − 1` | `β − L` | `−2i cot(kθ) p_θ` | `4βL − (X − L − β)²` |
//!
//! For A the shared constant is `ℓ = L`, for B it is `ℓ = X`.

use num_complex::Complex64;

use crate::chain::{ChainSystem, CouplingTerm, FamilyTag, PhasePoint, PotentialKind, RationalParam};
use crate::dual::{csqrt, cx, cx_i, cx_value, Cx, Scalar};
use crate::error::{Error, Result};
use crate::hyp::pair::HypPair;

/// Relative size below which a discriminant counts as vanishing.
pub const DEGENERATE_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadialKind {
    Harmonic,
    Kepler,
}

impl RadialKind {
    /// Prefactor `κ₀` in `M₁ = 𝓑₁ / (4 κ₀ √−L₂)`, playing the role of `k₀`.
    pub fn rate(&self) -> (u32, u32) {
        match self {
            RadialKind::Harmonic => (1, 1),
            RadialKind::Kepler => (1, 2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularLevel {
    pub k: RationalParam,
    pub beta_cos: f64,
    /// Only the top level carries its own `β / sin²` term.
    pub beta_sin: Option<f64>,
}

/// The term structure a chain must have for the pair tables to apply.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableLayout {
    pub radial: RadialKind,
    pub alpha: f64,
    /// `angular[j]` describes chain level `j + 2`, coordinate `θⱼ₊₁`.
    pub angular: Vec<AngularLevel>,
}

impl SeparableLayout {
    pub fn from_system(system: &ChainSystem) -> Result<Self> {
        let n = system.dim();
        if n < 2 {
            return Err(Error::Unsupported(
                "extra constants need at least two levels".into(),
            ));
        }
        let levels = system.levels();
        let mut radial = match system.family() {
            FamilyTag::KeplerCoulomb3D => RadialKind::Kepler,
            _ => RadialKind::Harmonic,
        };
        let mut alpha = 0.0;
        let mut seen_radial = false;
        for term in &levels[0].potential {
            match term.kind {
                PotentialKind::Zero => {}
                PotentialKind::HarmonicRadial | PotentialKind::KeplerRadial if !seen_radial => {
                    seen_radial = true;
                    alpha = term.coefficient;
                    radial = if matches!(term.kind, PotentialKind::KeplerRadial) {
                        RadialKind::Kepler
                    } else {
                        RadialKind::Harmonic
                    };
                }
                _ => {
                    return Err(Error::Unsupported(
                        "level 1 must carry at most one radial term".into(),
                    ))
                }
            }
        }
        let mut angular = Vec::with_capacity(n - 1);
        for (idx, level) in levels.iter().enumerate().skip(1) {
            let top = idx + 1 == n;
            let mut k: Option<RationalParam> = match level.coupling {
                Some(CouplingTerm::InvSinSq { k }) => Some(k),
                _ => None,
            };
            let mut same_k = |kk: RationalParam| -> Result<()> {
                match k {
                    Some(existing) if existing != kk => Err(Error::Unsupported(format!(
                        "level {} mixes angular parameters {existing} and {kk}",
                        idx + 1
                    ))),
                    _ => {
                        k = Some(kk);
                        Ok(())
                    }
                }
            };
            let (mut beta_cos, mut beta_sin) = (None, None);
            for term in &level.potential {
                match term.kind {
                    PotentialKind::Zero => {}
                    PotentialKind::InvCosSq { k: kk } if beta_cos.is_none() => {
                        same_k(kk)?;
                        beta_cos = Some(term.coefficient);
                    }
                    PotentialKind::InvSinSq { k: kk } if top && beta_sin.is_none() => {
                        same_k(kk)?;
                        beta_sin = Some(term.coefficient);
                    }
                    other => {
                        return Err(Error::Unsupported(format!(
                            "term {other:?} at level {} has no pair table",
                            idx + 1
                        )))
                    }
                }
            }
            let k = k.ok_or_else(|| {
                Error::Unsupported(format!("level {} has no angular parameter", idx + 1))
            })?;
            angular.push(AngularLevel {
                k,
                beta_cos: beta_cos.unwrap_or(0.0),
                beta_sin: top.then(|| beta_sin.unwrap_or(0.0)),
            });
        }
        Ok(Self {
            radial,
            alpha,
            angular,
        })
    }

    pub fn dim(&self) -> usize {
        self.angular.len() + 1
    }
}

/// Letters of a single pair, see the module table.
#[derive(Debug, Clone, Copy)]
pub struct PairParts<S> {
    pub tau: Cx<S>,
    pub kappa: Cx<S>,
    pub gamma: Cx<S>,
    pub disc: Cx<S>,
    pub d: Cx<S>,
    scale: f64,
    what: &'static str,
}

impl<S: Scalar> PairParts<S> {
    fn new(tau: Cx<S>, kappa: Cx<S>, gamma: Cx<S>, disc: Cx<S>, scale: f64, what: &'static str) -> Self {
        Self {
            tau,
            kappa,
            gamma,
            disc,
            d: csqrt(disc),
            scale,
            what,
        }
    }

    /// Rejects a vanishing or non-finite discriminant.
    pub fn check(&self) -> Result<()> {
        let dv = cx_value(&self.disc);
        if !dv.is_finite() || !self.scale.is_finite() {
            return Err(Error::NonFinite(format!("{} discriminant", self.what)));
        }
        if dv.norm() <= DEGENERATE_TOLERANCE * self.scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Degenerate(format!(
                "{} discriminant {:e} vanishes (scale {:e})",
                self.what,
                dv.norm(),
                self.scale
            )));
        }
        Ok(())
    }

    pub fn sigma(&self, ell: Cx<S>) -> Cx<S> {
        ell * self.tau + self.kappa
    }

    pub fn pair(&self, ell: Cx<S>, root_ell: Cx<S>) -> HypPair<S> {
        HypPair::new(root_ell * self.gamma / self.d, self.sigma(ell) / self.d)
    }
}

fn radial_harmonic<S: Scalar>(alpha: f64, h: S, l2: S, r: S, pr: S) -> PairParts<S> {
    let two = S::cst(2.0);
    let disc = h * h - l2.scale(4.0 * alpha);
    let scale = h.value().powi(2) + (4.0 * alpha * l2.value()).abs();
    PairParts::new(
        cx_i(-(two / (r * r))),
        cx_i(h),
        cx(-(two * pr / r)),
        cx(disc),
        scale,
        "radial (harmonic)",
    )
}

fn radial_kepler<S: Scalar>(alpha: f64, h: S, l2: S, r: S, pr: S) -> PairParts<S> {
    let two = S::cst(2.0);
    let disc = S::cst(alpha * alpha) + (h * l2).scale(4.0);
    let scale = alpha * alpha + (4.0 * h.value() * l2.value()).abs();
    PairParts::new(
        cx_i(two / r),
        cx_i(S::cst(alpha)),
        cx(two * pr),
        cx(disc),
        scale,
        "radial (Kepler)",
    )
}

fn angular_a<S: Scalar>(l: S, beta: f64, x: S, k: f64, th: S, pth: S) -> PairParts<S> {
    let arg = th.scale(2.0 * k);
    let b = S::cst(beta);
    let t = b - l - x;
    let disc = t * t - (l * x).scale(4.0);
    let scale = (beta.abs() + l.value().abs() + x.value().abs()).powi(2);
    PairParts::new(
        cx_i(arg.cos()),
        cx_i(x - b),
        cx(arg.sin() * pth),
        cx(disc),
        scale,
        "angular A",
    )
}

fn angular_b<S: Scalar>(l: S, beta: f64, x: S, k: f64, th: S, pth: S) -> PairParts<S> {
    let arg = th.scale(k);
    let (sn, cs) = (arg.sin(), arg.cos());
    let b = S::cst(beta);
    let t = x - l - b;
    let disc = (b * l).scale(4.0) - t * t;
    let scale = (beta.abs() + l.value().abs() + x.value().abs()).powi(2);
    PairParts::new(
        cx(S::cst(2.0) / (sn * sn) - S::one()),
        cx(b - l),
        cx_i(-(S::cst(2.0) * cs / sn * pth)),
        cx(disc),
        scale,
        "angular B",
    )
}

/// Both pairs of one level together with the shared constant `ℓ = Lᵢ₊₁`.
#[derive(Debug, Clone, Copy)]
pub struct LevelPairs<S> {
    pub ell: Cx<S>,
    pub root_ell: Cx<S>,
    pub a: PairParts<S>,
    pub b: PairParts<S>,
}

impl<S: Scalar> LevelPairs<S> {
    pub fn pair_a(&self) -> HypPair<S> {
        self.a.pair(self.ell, self.root_ell)
    }

    pub fn pair_b(&self) -> HypPair<S> {
        self.b.pair(self.ell, self.root_ell)
    }
}

/// Pairs `(𝓐ᵢ, 𝓑ᵢ)` for level `i ∈ 1..n` given the chain values `ls = (L₁, …, Lₙ)`.
pub fn level_pairs<S: Scalar>(
    layout: &SeparableLayout,
    level: usize,
    q: &[S],
    p: &[S],
    ls: &[S],
) -> Result<LevelPairs<S>> {
    let lp = level_parts(layout, level, q, p, ls)?;
    lp.a.check()?;
    lp.b.check()?;
    Ok(lp)
}

/// Letters of both pairs without the discriminant check; the polynomial
/// numerators never divide by a discriminant.
pub fn level_parts<S: Scalar>(
    layout: &SeparableLayout,
    level: usize,
    q: &[S],
    p: &[S],
    ls: &[S],
) -> Result<LevelPairs<S>> {
    let n = layout.dim();
    if level == 0 || level >= n {
        return Err(Error::InvalidParameter(format!(
            "constant level {level} outside 1..{}",
            n - 1
        )));
    }
    // Chain values with 1-based access.
    let big_l = |i: usize| ls[i - 1];
    let ell = big_l(level + 1);
    if ell.value() == 0.0 {
        return Err(Error::Degenerate(format!("L{} vanishes", level + 1)));
    }

    let ang = &layout.angular[level - 1];
    let x_a = match ang.beta_sin {
        Some(b) => S::cst(b),
        None => big_l(level + 2),
    };
    let a = angular_a(ell, ang.beta_cos, x_a, ang.k.value(), q[level], p[level]);

    let b = if level == 1 {
        match layout.radial {
            RadialKind::Harmonic => radial_harmonic(layout.alpha, big_l(1), ell, q[0], p[0]),
            RadialKind::Kepler => radial_kepler(layout.alpha, big_l(1), ell, q[0], p[0]),
        }
    } else {
        let below = &layout.angular[level - 2];
        angular_b(
            big_l(level),
            below.beta_cos,
            ell,
            below.k.value(),
            q[level - 1],
            p[level - 1],
        )
    };
    let ell_c = cx(ell);
    Ok(LevelPairs {
        ell: ell_c,
        root_ell: csqrt(ell_c),
        a,
        b,
    })
}

/// `[(𝓑₁, 𝓐₁), (𝓑₂, 𝓐₂), …]` at a real point.
pub fn all_pairs(system: &ChainSystem, x: &PhasePoint) -> Result<Vec<(HypPair, HypPair)>> {
    let layout = SeparableLayout::from_system(system)?;
    let ls = system.levels_at(&x.q, &x.p)?;
    (1..system.dim())
        .map(|i| {
            let lp = level_pairs(&layout, i, &x.q, &x.p, &ls)?;
            Ok((lp.pair_b(), lp.pair_a()))
        })
        .collect()
}

fn flatten(pairs: Vec<(HypPair, HypPair)>) -> Vec<HypPair> {
    pairs.into_iter().flat_map(|(b, a)| [b, a]).collect()
}

/// `(𝓑₁, 𝓐₁, 𝓑₂, 𝓐₂)` for a three-dimensional chain with a harmonic radial term.
pub fn pairs_oscillator3d(system: &ChainSystem, x: &PhasePoint) -> Result<[HypPair; 4]> {
    let layout = SeparableLayout::from_system(system)?;
    if layout.dim() != 3 || layout.radial != RadialKind::Harmonic {
        return Err(Error::Unsupported(
            "pairs_oscillator3d needs a 3D chain with a harmonic radial term".into(),
        ));
    }
    let v = flatten(all_pairs(system, x)?);
    Ok([v[0], v[1], v[2], v[3]])
}

/// `𝓑₁` for a chain with a Kepler–Coulomb radial term.
pub fn pair_radial_kepler(system: &ChainSystem, x: &PhasePoint) -> Result<HypPair> {
    let layout = SeparableLayout::from_system(system)?;
    if layout.radial != RadialKind::Kepler {
        return Err(Error::Unsupported(
            "pair_radial_kepler needs a Kepler–Coulomb radial term".into(),
        ));
    }
    let ls = system.levels_at(&x.q, &x.p)?;
    Ok(level_pairs(&layout, 1, &x.q, &x.p, &ls)?.pair_b())
}

/// `(𝓑₁, 𝓐₁, 𝓑₂, 𝓐₂, 𝓑₃, 𝓐₃)` for a four-dimensional chain.
pub fn pairs_4d_example(system: &ChainSystem, x: &PhasePoint) -> Result<[HypPair; 6]> {
    if system.dim() != 4 {
        return Err(Error::Unsupported("pairs_4d_example needs a 4D chain".into()));
    }
    let v = flatten(all_pairs(system, x)?);
    Ok([v[0], v[1], v[2], v[3], v[4], v[5]])
}

/// `sinh(m𝓐 − n𝓑)` read off composed pairs.
pub fn composed_sinh(a: &HypPair, b: &HypPair, m: i64, n: i64) -> Complex64 {
    composed_sinh_generic(a, b, m, n)
}

pub(crate) fn composed_sinh_generic<S: Scalar>(a: &HypPair<S>, b: &HypPair<S>, m: i64, n: i64) -> Cx<S> {
    a.pow_unchecked(m).mul_unchecked(&b.pow_unchecked(-n)).s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_system, RationalParam};
    use crate::sampling::sample_points;

    fn r(n: u32, d: u32) -> RationalParam {
        RationalParam::new(n, d).unwrap()
    }

    #[test]
    fn layout_of_builtins() {
        let sys = build_system(FamilyTag::FourDExample, 1.0, &[1.0, 2.0, 3.0, 4.0], &[r(2, 1), r(1, 1), r(1, 1)])
            .unwrap();
        let lay = SeparableLayout::from_system(&sys).unwrap();
        assert_eq!(lay.radial, RadialKind::Harmonic);
        assert_eq!(lay.angular.len(), 3);
        assert_eq!(lay.angular[0].beta_cos, 1.0);
        assert_eq!(lay.angular[2].beta_sin, Some(4.0));
        let sys = build_system(FamilyTag::KeplerCoulomb3D, 0.5, &[1.0; 3], &[r(1, 1), r(1, 1)]).unwrap();
        assert_eq!(SeparableLayout::from_system(&sys).unwrap().radial, RadialKind::Kepler);
    }

    #[test]
    fn sigma_split_matches_tables() {
        let sys = build_system(FamilyTag::Oscillator3D, 1.0, &[1.0, 2.0, 3.0], &[r(3, 2), r(5, 3)]).unwrap();
        let x = &sample_points(&sys, 1, 11)[0];
        let ls = sys.levels_at(&x.q, &x.p).unwrap();
        let lay = SeparableLayout::from_system(&sys).unwrap();
        let lp = level_pairs(&lay, 1, &x.q, &x.p, &ls).unwrap();
        let (h, l2, l3) = (ls[0], ls[1], ls[2]);
        let (rr, t1) = (x.q[0], x.q[1]);
        let sinh_b = Complex64::new(0.0, h - 2.0 * l2 / (rr * rr)) / lp.b.d;
        assert!((lp.pair_b().s - sinh_b).norm() < 1e-14);
        let sinh_a = Complex64::new(0.0, l2 * (3.0 * t1).cos() + l3 - 1.0) / lp.a.d;
        assert!((lp.pair_a().s - sinh_a).norm() < 1e-14);
    }

    #[test]
    fn kepler_turning_point() {
        let sys = build_system(FamilyTag::KeplerCoulomb3D, 1.0, &[1.0, 2.0, 3.0], &[r(1, 1), r(1, 1)]).unwrap();
        let mut x = sample_points(&sys, 1, 2)[0].clone();
        x.p[0] = 0.0;
        let b = pair_radial_kepler(&sys, &x).unwrap();
        assert_eq!(b.c.norm(), 0.0);
        assert!((b.s.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oscillator_turning_point() {
        let sys = build_system(FamilyTag::Oscillator3D, 1.0, &[1.0, 2.0, 3.0], &[r(1, 1), r(1, 1)]).unwrap();
        let mut x = sample_points(&sys, 1, 3)[0].clone();
        x.p[0] = 0.0;
        let [b1, ..] = pairs_oscillator3d(&sys, &x).unwrap();
        assert_eq!(b1.c.norm(), 0.0);
        // sinh 𝓑₁ = i(H − 2L₂/r²)/√(H² − 4αL₂), purely imaginary with modulus 1
        assert!(b1.s.re.abs() < 1e-15);
        let ls = sys.levels_at(&x.q, &x.p).unwrap();
        let sign = (ls[0] - 2.0 * ls[1] / x.q[0].powi(2)).signum();
        assert!((b1.s.im - sign).abs() < 1e-12);
    }

    #[test]
    fn circular_kepler_orbit_is_degenerate() {
        // α² + 4HL₂ = 0 at the bottom of the effective potential with α < 0.
        let sys = build_system(FamilyTag::KeplerCoulomb3D, -2.0, &[0.0; 3], &[r(1, 1), r(1, 1)]).unwrap();
        // L₂ = p₁² with θ-terms absent; pick L₂ = 1 and r at the minimum r = 2L₂/|α| = 1.
        let x = PhasePoint::new(vec![1.0, 0.7, 0.4], vec![0.0, 1.0, 0.0]);
        let ls = sys.levels_at(&x.q, &x.p).unwrap();
        assert!((4.0 + 4.0 * ls[0] * ls[1]).abs() < 1e-12);
        assert!(matches!(pair_radial_kepler(&sys, &x), Err(Error::Degenerate(_))));
    }

    #[test]
    fn unsupported_layouts() {
        let sys = build_system(FamilyTag::Oscillator3D, 1.0, &[1.0; 3], &[r(1, 1), r(1, 1)]).unwrap();
        let x = &sample_points(&sys, 1, 4)[0];
        assert!(pair_radial_kepler(&sys, x).is_err());
        assert!(pairs_4d_example(&sys, x).is_err());
    }
}
