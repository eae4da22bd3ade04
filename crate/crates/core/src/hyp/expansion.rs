//! Exact expansion of the numerator in the pair letters.
//!
//! Works with integer polynomials in `(√ℓ, γ_A, τ_A, κ_A, γ_B, τ_B, κ_B)` and
//! serves as an independent route to the numerator, the offset `C` and the
//! reduction power used by [`super::constant`].

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hyp::constant::AngleCombo;

pub const ROOT: usize = 0;
pub const GAMMA_A: usize = 1;
pub const TAU_A: usize = 2;
pub const KAPPA_A: usize = 3;
pub const GAMMA_B: usize = 4;
pub const TAU_B: usize = 5;
pub const KAPPA_B: usize = 6;
const LETTERS: usize = 7;

type Monomial = [u16; LETTERS];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, i128>,
}

fn overflow() -> Error {
    Error::Unsupported("coefficient overflow in the exact expansion".into())
}

impl Poly {
    pub fn constant(c: i128) -> Self {
        let mut p = Self::default();
        if c != 0 {
            p.terms.insert([0; LETTERS], c);
        }
        p
    }

    pub fn monomial(c: i128, exps: Monomial) -> Self {
        let mut p = Self::default();
        if c != 0 {
            p.terms.insert(exps, c);
        }
        p
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &i128)> {
        self.terms.iter()
    }

    fn add_term(&mut self, e: Monomial, c: i128) -> Result<()> {
        let slot = self.terms.entry(e).or_insert(0);
        *slot = slot.checked_add(c).ok_or_else(overflow)?;
        if *slot == 0 {
            self.terms.remove(&e);
        }
        Ok(())
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.add_term(*e, c.checked_neg().ok_or_else(overflow)?)?;
        }
        Ok(out)
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        let mut out = Self::default();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &o.terms {
                let mut e = *ea;
                for (x, y) in e.iter_mut().zip(eb) {
                    *x += y;
                }
                out.add_term(e, ca.checked_mul(*cb).ok_or_else(overflow)?)?;
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Result<Self> {
        let mut acc = Self::constant(1);
        for _ in 0..k {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Divides every coefficient by `k`, which must divide exactly.
    fn div_coefficients(&self, k: i128) -> Result<Self> {
        let mut out = Self::default();
        for (e, c) in &self.terms {
            if c % k != 0 {
                return Err(Error::Degenerate(format!("coefficient {c} not divisible by {k}")));
            }
            out.terms.insert(*e, c / k);
        }
        Ok(out)
    }

    /// Lowers the exponent of `letter` by `k` in every term.
    fn div_letter(&self, letter: usize, k: u16) -> Result<Self> {
        let mut out = Self::default();
        for (e, c) in &self.terms {
            if e[letter] < k {
                return Err(Error::Degenerate(format!("term {e:?} lacks letter {letter}^{k}")));
            }
            let mut e = *e;
            e[letter] -= k;
            out.terms.insert(e, *c);
        }
        Ok(out)
    }

    /// Part of the polynomial without `letter`.
    fn free_of(&self, letter: usize) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e[letter] == 0)
                .map(|(e, c)| (*e, *c))
                .collect(),
        }
    }

    pub fn eval(&self, letters: &[Complex64; LETTERS]) -> Complex64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(letters)
                    .fold(Complex64::new(*c as f64, 0.0), |acc, (&k, z)| acc * z.powu(k as u32))
            })
            .sum()
    }
}

fn letter(i: usize, exp: u16) -> Monomial {
    let mut e = [0; LETTERS];
    e[i] = exp;
    e
}

/// `√ℓ γ + sign·(ℓ τ + κ)`
fn factor(gamma: usize, tau: usize, kappa: usize, sign: i128) -> Result<Poly> {
    let mut root_gamma = letter(ROOT, 1);
    root_gamma[gamma] = 1;
    let mut ell_tau = letter(ROOT, 2);
    ell_tau[tau] = 1;
    let mut p = Poly::monomial(1, root_gamma);
    p.add_term(ell_tau, sign)?;
    p.add_term(letter(kappa, 1), sign)?;
    Ok(p)
}

/// Numerator, offset and reduced constant as exact polynomials.
#[derive(Debug, Clone)]
pub struct Expansion {
    pub numerator: Poly,
    pub offset: Poly,
    pub reduction_power: u32,
    pub reduced: Poly,
}

pub fn expand(combo: AngleCombo) -> Result<Expansion> {
    let (m, n) = (combo.m, combo.n);
    let plus = factor(GAMMA_A, TAU_A, KAPPA_A, 1)?
        .pow(m)?
        .mul(&factor(GAMMA_B, TAU_B, KAPPA_B, -1)?.pow(n)?)?;
    let minus = factor(GAMMA_A, TAU_A, KAPPA_A, -1)?
        .pow(m)?
        .mul(&factor(GAMMA_B, TAU_B, KAPPA_B, 1)?.pow(n)?)?;
    let mut numerator = plus.sub(&minus)?.div_coefficients(2)?;
    if (m + n) % 2 == 0 {
        numerator = numerator.div_letter(ROOT, 1)?;
    }
    if numerator.terms().any(|(e, _)| e[ROOT] % 2 == 1) {
        return Err(Error::Degenerate("odd power of the square root survived".into()));
    }
    // Peel off ℓ-free parts while they involve no coordinate or momentum letter.
    let mut reduced = numerator.clone();
    let mut offset = Poly::default();
    let mut power = 0;
    loop {
        let free = reduced.free_of(ROOT);
        let only_constants = free
            .terms()
            .all(|(e, _)| e[GAMMA_A] == 0 && e[GAMMA_B] == 0 && e[TAU_A] == 0 && e[TAU_B] == 0);
        if free.is_empty() || !only_constants || reduced.len() == free.len() {
            break;
        }
        if power == 0 {
            offset = free.clone();
        } else {
            // a second constant layer would need its own bookkeeping
            break;
        }
        reduced = reduced.sub(&free)?.div_letter(ROOT, 2)?;
        power += 1;
    }
    Ok(Expansion {
        numerator,
        offset,
        reduction_power: power,
        reduced,
    })
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;

    use super::*;
    use crate::chain::{build_system, FamilyTag, RationalParam};
    use crate::dual::csqrt;
    use crate::hyp::constant::ConstantEvaluator;
    use crate::hyp::tables::level_pairs;
    use crate::sampling::sample_points;

    #[test]
    fn offset_and_power_match_closed_rule() {
        for (m, n) in [(1, 1), (1, 2), (2, 1), (2, 3), (1, 3), (3, 4)] {
            let e = expand(AngleCombo { m, n }).unwrap();
            let odd = (m + n) % 2 == 1;
            assert_eq!(e.reduction_power, u32::from(odd), "({m},{n})");
            if odd {
                let sign = if n % 2 == 0 { 1 } else { -1 };
                let mut want = [0; LETTERS];
                want[KAPPA_A] = m as u16;
                want[KAPPA_B] = n as u16;
                assert_eq!(e.offset, Poly::monomial(sign, want));
            } else {
                assert!(e.offset.is_empty());
            }
        }
    }

    #[test]
    fn expansion_matches_numeric_faces() {
        let r = |a, b| RationalParam::new(a, b).unwrap();
        let sys = build_system(FamilyTag::FourDExample, 1.0, &[1.0, 1.3, 0.7, 1.1], &[r(2, 1), r(1, 1), r(1, 1)])
            .unwrap();
        for x in sample_points(&sys, 5, 3) {
            let ls = sys.levels_at(&x.q, &x.p).unwrap();
            for level in 1..4 {
                let ev = ConstantEvaluator::new(&sys, level).unwrap();
                let e = expand(ev.combo()).unwrap();
                let lp = level_pairs(ev.layout(), level, &x.q, &x.p, &ls).unwrap();
                let letters = [
                    csqrt(lp.ell),
                    lp.a.gamma,
                    lp.a.tau,
                    lp.a.kappa,
                    lp.b.gamma,
                    lp.b.tau,
                    lp.b.kappa,
                ];
                let parts = ev.eval(&x.q, &x.p).unwrap();
                let close = |a: Complex64, b: Complex64| (a - b).norm() <= 1e-11 * b.norm().max(1.0);
                assert!(close(e.numerator.eval(&letters), parts.numerator));
                assert!(close(e.offset.eval(&letters), parts.offset));
                assert!(close(e.reduced.eval(&letters), parts.reduced));
            }
        }
    }
}
