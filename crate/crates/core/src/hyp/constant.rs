//! Extra constants `sinh(m𝓐ᵢ − n𝓑ᵢ)` and their polynomial numerators.
//!
//! With `P = √ℓ γ_A + σ_A` and `Q = √ℓ γ_B − σ_B` (and `P̄`, `Q̄` the same with
//! the sign of `σ` flipped) the pair definitions give
//!
//! ```text
//! sinh(m𝓐 − n𝓑) · d_A^m d_B^n = (P^m Q^n − P̄^m Q̄^n) / 2
//! ```
//!
//! which is odd in the `σ`'s. When `m + n` is even every term carries an odd
//! number of `√ℓ` factors, so one `√ℓ` is divided out. The result `N` is a
//! polynomial in the momenta and the denominator `D = d_A^m d_B^n / √ℓ^[m+n even]`
//! depends on the chain constants alone.
//!
//! When `m + n` is odd, the `ℓ`-free part of `N` is the constant
//! `C = (−1)^n κ_A^m κ_B^n`, and `(N − C)/ℓ` is a further constant two
//! orders lower in the momenta.

use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::chain::{gcd, ChainSystem, PhasePoint};
use crate::degree::{degree_probe, Degree, DEFAULT_DMAX};
use crate::dual::{cx, cx_value, Cx, Scalar};
use crate::error::{Error, Result};
use crate::hyp::tables::{level_pairs, level_parts, composed_sinh_generic, SeparableLayout};

/// Largest admissible `m` or `n`.
pub const MAX_COMBO: u64 = 64;

/// Fixed seed of the degree probe run by [`poly_constant`].
pub const DEGREE_SEED: u64 = 0x5eed;

/// `m𝓐 − n𝓑` with `gcd(m, n) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AngleCombo {
    pub m: u32,
    pub n: u32,
}

impl AngleCombo {
    /// Cancels the time dependence of `m𝓐ᵢ − n𝓑ᵢ`.
    ///
    /// Along the flow `𝓐ᵢ` advances at a rate proportional to `1/kᵢ` and `𝓑ᵢ`
    /// at a rate proportional to `1/kᵢ₋₁`, where the radial "parameter" is
    /// `1` for `αr²` and `1/2` for `α/r`.
    pub fn for_level(layout: &SeparableLayout, level: usize) -> Result<Self> {
        if level == 0 || level >= layout.dim() {
            return Err(Error::InvalidParameter(format!(
                "constant level {level} outside 1..{}",
                layout.dim() - 1
            )));
        }
        let ka = layout.angular[level - 1].k;
        let (pa, qa) = (ka.num() as u64, ka.den() as u64);
        let (pb, qb) = if level == 1 {
            let (p, q) = layout.radial.rate();
            (p as u64, q as u64)
        } else {
            let kb = layout.angular[level - 2].k;
            (kb.num() as u64, kb.den() as u64)
        };
        let (m, n) = (qa * pb, qb * pa);
        let g = gcd(m, n);
        let (m, n) = (m / g, n / g);
        if m > MAX_COMBO || n > MAX_COMBO {
            return Err(Error::Unsupported(format!(
                "angle combination ({m}, {n}) exceeds the cap {MAX_COMBO}"
            )));
        }
        Ok(Self {
            m: m as u32,
            n: n as u32,
        })
    }

    pub fn odd(&self) -> bool {
        (self.m + self.n) % 2 == 1
    }
}

/// Which face of a constructed constant to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConstantView {
    /// `sinh(m𝓐 − n𝓑)`
    Raw,
    /// `raw · D`
    Numerator,
    /// `(N − C)/ℓ^a`
    Reduced,
}

/// Every quantity attached to one constant at one point.
#[derive(Debug, Clone, Copy)]
pub struct ConstantParts<S> {
    pub raw: Cx<S>,
    pub denominator: Cx<S>,
    pub numerator: Cx<S>,
    pub offset: Cx<S>,
    pub reduced: Cx<S>,
}

fn cpow<S: Scalar>(z: Cx<S>, e: u32) -> Cx<S> {
    let mut acc = Cx::<S>::one();
    let mut base = z;
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base;
        }
        e >>= 1;
        if e > 0 {
            base = base * base;
        }
    }
    acc
}

/// A constant of one chain level, evaluable over any scalar.
#[derive(Debug, Clone)]
pub struct ConstantEvaluator {
    system: ChainSystem,
    layout: SeparableLayout,
    level: usize,
    combo: AngleCombo,
}

impl ConstantEvaluator {
    pub fn new(system: &ChainSystem, level: usize) -> Result<Self> {
        let layout = SeparableLayout::from_system(system)?;
        let combo = AngleCombo::for_level(&layout, level)?;
        Ok(Self {
            system: system.clone(),
            layout,
            level,
            combo,
        })
    }

    /// Overrides the angle combination, e.g. to probe non-conserved combos.
    pub fn with_combo(mut self, combo: AngleCombo) -> Self {
        self.combo = combo;
        self
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn combo(&self) -> AngleCombo {
        self.combo
    }

    pub fn layout(&self) -> &SeparableLayout {
        &self.layout
    }

    pub fn system(&self) -> &ChainSystem {
        &self.system
    }

    /// `L''ᵢ`
    pub fn label(&self) -> String {
        format!("L''{}", self.level)
    }

    /// Power `a` of `ℓ` divided out of `N − C`.
    pub fn reduction_power(&self) -> u32 {
        u32::from(self.combo.odd())
    }

    pub fn eval<S: Scalar>(&self, q: &[S], p: &[S]) -> Result<ConstantParts<S>> {
        let ls = self.system.levels_at(q, p)?;
        let lp = level_pairs(&self.layout, self.level, q, p, &ls)?;
        let (m, n) = (self.combo.m, self.combo.n);
        let raw = composed_sinh_generic(&lp.pair_a(), &lp.pair_b(), m as i64, n as i64);
        let mut denominator = cpow(lp.a.d, m) * cpow(lp.b.d, n);
        if !self.combo.odd() {
            denominator = denominator / lp.root_ell;
        }
        let rest = self.polynomial_faces(q, p, &ls)?;
        Ok(ConstantParts {
            raw,
            denominator,
            numerator: rest.0,
            offset: rest.1,
            reduced: rest.2,
        })
    }

    /// `(N, C, R)` without dividing by any discriminant.
    fn polynomial_faces<S: Scalar>(&self, q: &[S], p: &[S], ls: &[S]) -> Result<(Cx<S>, Cx<S>, Cx<S>)> {
        let lp = level_parts(&self.layout, self.level, q, p, ls)?;
        let (m, n) = (self.combo.m, self.combo.n);
        let (sa, sb) = (lp.a.sigma(lp.ell), lp.b.sigma(lp.ell));
        let (ca, cb) = (lp.root_ell * lp.a.gamma, lp.root_ell * lp.b.gamma);
        let plus = cpow(ca + sa, m) * cpow(cb - sb, n);
        let minus = cpow(ca - sa, m) * cpow(cb + sb, n);
        let half = cx(S::cst(0.5));
        let mut numerator = (plus - minus) * half;
        if !self.combo.odd() {
            numerator = numerator / lp.root_ell;
        }
        let (offset, reduced) = if self.combo.odd() {
            let sign = if n % 2 == 0 { S::one() } else { -S::one() };
            let c = cpow(lp.a.kappa, m) * cpow(lp.b.kappa, n) * cx(sign);
            (c, (numerator - c) / lp.ell)
        } else {
            (Cx::<S>::zero(), numerator)
        };
        Ok((numerator, offset, reduced))
    }

    /// One face at a real point.
    pub fn value(&self, x: &PhasePoint, view: ConstantView) -> Result<Complex64> {
        let v = match view {
            ConstantView::Raw => self.eval(&x.q, &x.p)?.raw,
            ConstantView::Numerator | ConstantView::Reduced => {
                let ls = self.system.levels_at(&x.q, &x.p)?;
                let (n, _, r) = self.polynomial_faces(&x.q, &x.p, &ls)?;
                if view == ConstantView::Numerator {
                    n
                } else {
                    r
                }
            }
        };
        let v = cx_value(&v);
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("{} ({view:?})", self.label())));
        }
        Ok(v)
    }

    /// Momentum degree of the reduced numerator at fixed coordinates.
    pub fn measure_degree(&self, q: &[f64], dmax: usize, seed: u64) -> Result<Degree> {
        self.measure_degree_of(ConstantView::Reduced, q, dmax, seed)
    }

    pub fn measure_degree_of(&self, view: ConstantView, q: &[f64], dmax: usize, seed: u64) -> Result<Degree> {
        let probe = |p: &[f64]| {
            let ls = self.system.levels_at(q, p)?;
            Ok(match view {
                ConstantView::Raw => cx_value(&self.eval(q, p)?.raw),
                ConstantView::Numerator => cx_value(&self.polynomial_faces(q, p, &ls)?.0),
                ConstantView::Reduced => cx_value(&self.polynomial_faces(q, p, &ls)?.2),
            })
        };
        degree_probe(probe, self.system.dim(), dmax, seed)
    }
}

/// A constructed constant evaluated at one point.
#[derive(Debug, Clone, Serialize)]
pub struct PolyConstant {
    pub label: String,
    pub level: usize,
    pub angle_combo: AngleCombo,
    pub raw_value: Complex64,
    pub denominator: Complex64,
    pub numerator_value: Complex64,
    pub offset: Complex64,
    pub reduction_power: u32,
    pub reduced_value: Complex64,
    pub measured_degree: Option<usize>,
}

pub fn poly_constant(system: &ChainSystem, x: &PhasePoint, level: usize) -> Result<PolyConstant> {
    let ev = ConstantEvaluator::new(system, level)?;
    let parts = ev.eval(&x.q, &x.p)?;
    let measured_degree = match ev.measure_degree(&x.q, DEFAULT_DMAX, DEGREE_SEED)? {
        Degree::Exact(d) => Some(d),
        Degree::ExceedsMax => None,
    };
    let out = PolyConstant {
        label: ev.label(),
        level,
        angle_combo: ev.combo(),
        raw_value: cx_value(&parts.raw),
        denominator: cx_value(&parts.denominator),
        numerator_value: cx_value(&parts.numerator),
        offset: cx_value(&parts.offset),
        reduction_power: ev.reduction_power(),
        reduced_value: cx_value(&parts.reduced),
        measured_degree,
    };
    for v in [out.raw_value, out.denominator, out.numerator_value, out.reduced_value] {
        if !v.is_finite() {
            return Err(Error::NonFinite(out.label.clone()));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_system, FamilyTag, RationalParam};
    use crate::sampling::sample_points;

    fn r(n: u32, d: u32) -> RationalParam {
        RationalParam::new(n, d).unwrap()
    }

    fn combos(family: FamilyTag, k: &[RationalParam]) -> Vec<(u32, u32)> {
        let beta = vec![1.0; k.len() + 1];
        let sys = build_system(family, 1.0, &beta, k).unwrap();
        let lay = SeparableLayout::from_system(&sys).unwrap();
        (1..sys.dim())
            .map(|i| {
                let c = AngleCombo::for_level(&lay, i).unwrap();
                (c.m, c.n)
            })
            .collect()
    }

    #[test]
    fn integer_combinations() {
        let k = [r(3, 2), r(5, 3)];
        // (q₁, p₁) and (p₁q₂, q₁p₂)
        assert_eq!(combos(FamilyTag::Oscillator3D, &k), vec![(2, 3), (9, 10)]);
        assert_eq!(combos(FamilyTag::KeplerCoulomb3D, &k), vec![(1, 3), (9, 10)]);
        assert_eq!(combos(FamilyTag::Oscillator3D, &[r(1, 1), r(1, 1)]), vec![(1, 1), (1, 1)]);
        assert_eq!(combos(FamilyTag::KeplerCoulomb3D, &[r(1, 1), r(1, 1)]), vec![(1, 2), (1, 1)]);
        assert_eq!(
            combos(FamilyTag::FourDExample, &[r(2, 1), r(1, 1), r(1, 1)]),
            vec![(1, 2), (2, 1), (1, 1)]
        );
        // the 3D level-1 combo for k₁ = 2 is the 4D one
        assert_eq!(combos(FamilyTag::Oscillator3D, &[r(2, 1), r(1, 1)])[0], (1, 2));
    }

    #[test]
    fn combination_cap() {
        let sys = build_system(FamilyTag::Oscillator3D, 1.0, &[1.0; 3], &[r(1, 65), r(1, 1)]).unwrap();
        // (65, 1) and (1, 65)
        assert!(ConstantEvaluator::new(&sys, 1).is_err());
        assert!(ConstantEvaluator::new(&sys, 2).is_err());
        let sys = build_system(FamilyTag::Oscillator3D, 1.0, &[1.0; 3], &[r(1, 64), r(1, 1)]).unwrap();
        assert_eq!(ConstantEvaluator::new(&sys, 1).unwrap().combo(), AngleCombo { m: 64, n: 1 });
    }

    #[test]
    fn numerator_is_raw_times_denominator() {
        for (family, k) in [
            (FamilyTag::Oscillator3D, vec![r(3, 2), r(5, 3)]),
            (FamilyTag::KeplerCoulomb3D, vec![r(1, 1), r(1, 1)]),
            (FamilyTag::FourDExample, vec![r(2, 1), r(1, 1), r(1, 1)]),
        ] {
            let beta = vec![1.0, 2.0, 3.0, 4.0][..k.len() + 1].to_vec();
            let sys = build_system(family, 1.0, &beta, &k).unwrap();
            for x in sample_points(&sys, 10, 21) {
                for level in 1..sys.dim() {
                    let c = ConstantEvaluator::new(&sys, level).unwrap();
                    let parts = c.eval(&x.q, &x.p).unwrap();
                    let lhs = parts.raw * parts.denominator;
                    let rel = (lhs - parts.numerator).norm() / parts.numerator.norm().max(1.0);
                    assert!(rel < 1e-10, "{family:?} level {level}: {rel:e}");
                }
            }
        }
    }

    #[test]
    fn reduced_degrees() {
        let sys = build_system(FamilyTag::FourDExample, 1.0, &[1.0, 1.3, 0.7, 1.1], &[r(2, 1), r(1, 1), r(1, 1)])
            .unwrap();
        let x = &sample_points(&sys, 1, 8)[0];
        let degs: Vec<_> = (1..4).map(|i| poly_constant(&sys, x, i).unwrap().measured_degree).collect();
        assert_eq!(degs, vec![Some(4), Some(4), Some(3)]);
    }
}
