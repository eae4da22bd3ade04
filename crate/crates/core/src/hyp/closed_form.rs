//! Explicit expressions for the 4D chain with `k = (2, 1, 1)`.
//!
//! These are written out by hand, independently of the pair composition,
//! and several come in variants that differ by a coefficient or an angle
//! multiple. The bracket with `H` and the agreement with the composed pairs
//! decide between variants.

use serde::Serialize;

use crate::chain::{ChainSystem, FamilyTag};
use crate::dual::{csqrt, cx, cx_i, Cx, Scalar};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ClosedForm {
    /// `sinh(𝓐₁ − 2𝓑₁)` as a quotient.
    Level1Quotient,
    /// `sinh(2𝓐₂ − 𝓑₂)`; `doubled` selects the `2L₃` prefactor over `L₃`.
    Level2Quotient { doubled: bool },
    /// `sinh(𝓐₃ − 𝓑₃)`
    Level3Quotient,
    /// Quartic level-1 constant with angle multiple `angle` in the momentum
    /// terms and `H² − c·αL₂` in the last term.
    Level1Quartic { angle: u32, c: u32 },
    /// Quartic level-2 constant; `whole` multiplies the entire discriminant
    /// by `cosec²(2θ₁)`, otherwise only its `4L₃L₄` part.
    Level2Quartic { whole: bool },
    /// Cubic level-3 constant.
    Level3Cubic,
}

impl ClosedForm {
    pub const ALL: [ClosedForm; 11] = [
        ClosedForm::Level1Quotient,
        ClosedForm::Level2Quotient { doubled: false },
        ClosedForm::Level2Quotient { doubled: true },
        ClosedForm::Level3Quotient,
        ClosedForm::Level1Quartic { angle: 2, c: 1 },
        ClosedForm::Level1Quartic { angle: 2, c: 4 },
        ClosedForm::Level1Quartic { angle: 4, c: 1 },
        ClosedForm::Level1Quartic { angle: 4, c: 4 },
        ClosedForm::Level2Quartic { whole: true },
        ClosedForm::Level2Quartic { whole: false },
        ClosedForm::Level3Cubic,
    ];

    pub fn label(&self) -> String {
        match self {
            ClosedForm::Level1Quotient => "sinh(A1-2B1) quotient".into(),
            ClosedForm::Level2Quotient { doubled } => {
                format!("sinh(2A2-B2) quotient, prefactor {}", if *doubled { "2L3" } else { "L3" })
            }
            ClosedForm::Level3Quotient => "sinh(A3-B3) quotient".into(),
            ClosedForm::Level1Quartic { angle, c } => {
                format!("L''1 with sin/cos({angle}θ1), (H^2-{c}αL2)")
            }
            ClosedForm::Level2Quartic { whole } => format!(
                "L''2 with cosec^2(2θ1) on {}",
                if *whole { "the whole discriminant" } else { "4L3L4 only" }
            ),
            ClosedForm::Level3Cubic => "L''3".into(),
        }
    }

    /// Evaluates at `(q, p)`; the system must be the 4D chain with `k = (2, 1, 1)`.
    pub fn eval<S: Scalar>(&self, system: &ChainSystem, q: &[S], p: &[S]) -> Result<Cx<S>> {
        let params = match (system.family(), system.params()) {
            (FamilyTag::FourDExample, Some(pr))
                if pr.k.iter().map(|k| (k.num(), k.den())).eq([(2, 1), (1, 1), (1, 1)]) =>
            {
                pr
            }
            _ => {
                return Err(Error::Unsupported(
                    "explicit forms exist only for the 4D chain with k = (2, 1, 1)".into(),
                ))
            }
        };
        let ls = system.levels_at(q, p)?;
        let c = S::cst;
        let (h, l2, l3, l4) = (ls[0], ls[1], ls[2], ls[3]);
        let (r, t1, t2, t3) = (q[0], q[1], q[2], q[3]);
        let (pr, p1, p2, p3) = (p[0], p[1], p[2], p[3]);
        let alpha = params.alpha;
        let (b1, b2, b3, b4) = (c(params.beta[0]), c(params.beta[1]), c(params.beta[2]), c(params.beta[3]));
        let two = c(2.0);

        let osc_disc = h * h - l2.scale(4.0 * alpha);
        let root_a1 = csqrt(cx((b1 - l2 - l3) * (b1 - l2 - l3) - (l2 * l3).scale(4.0)));
        let disc_a2 = (b2 - l3 - l4) * (b2 - l3 - l4) - (l3 * l4).scale(4.0);
        let root_b2 = csqrt(cx((b1 * l2).scale(4.0) - (l3 - l2 - b1) * (l3 - l2 - b1)));
        let root_b3 = csqrt(cx((b2 * l3).scale(4.0) - (l4 - l3 - b2) * (l4 - l3 - b2)));
        let root_a3 = csqrt(cx((b3 - b4 - l4) * (b3 - b4 - l4) - (b4 * l4).scale(4.0)));

        let sq = |v: S| v * v;
        let s2t1 = t1.scale(2.0).sin();
        let cot2t1 = t1.scale(2.0).cos() / s2t1;
        let cosec2_2t1 = sq(s2t1).recip();

        let level1_momentum = |angle: f64| {
            let (s, co) = (t1.scale(angle).sin(), t1.scale(angle).cos());
            (h - two * l2 / sq(r)) * s / r * p1 * pr + two * (l2 * co + l3 - b1) / sq(r) * sq(pr)
        };
        let s_b2 = two * l3 * cosec2_2t1 + b1 - l2 - l3;
        let level2_momentum = two * (l3 * t2.scale(2.0).cos() + l4 - b2) * cot2t1 * t2.scale(2.0).sin() * p1 * p2
            - sq(t2.scale(2.0).sin()) * s_b2 * sq(p2);
        let level3 = two * (l4 * t3.scale(2.0).cos() + b4 - b3) * (t2.cos() / t2.sin()) * p2
            - (two * l4 / sq(t2.sin()) + b2 - l3 - l4) * t3.scale(2.0).sin() * p3;

        Ok(match *self {
            ClosedForm::Level1Quotient => {
                let ang = l2 * t1.scale(4.0).cos() + l3 - b1;
                let num = cx_i((l2 * level1_momentum(4.0)).scale(4.0) - osc_disc * ang);
                num / (cx(osc_disc) * root_a1)
            }
            ClosedForm::Level2Quotient { doubled } => {
                let pre = if doubled { two * l3 } else { l3 };
                cx(pre * level2_momentum + disc_a2 * s_b2) / (cx(disc_a2) * root_b2)
            }
            ClosedForm::Level3Quotient => csqrt(cx(l4)) * cx(level3) / (root_b3 * root_a3),
            ClosedForm::Level1Quartic { angle, c: coef } => cx(level1_momentum(angle as f64)
                - (h * h - l2.scale(coef as f64 * alpha)).scale(0.25) * t1.scale(4.0).cos()),
            ClosedForm::Level2Quartic { whole } => {
                let middle = if whole {
                    disc_a2 * cosec2_2t1
                } else {
                    sq(b2 - l3 - l4) - (l3 * l4).scale(4.0) * cosec2_2t1
                };
                cx(level2_momentum + middle)
            }
            ClosedForm::Level3Cubic => cx(level3),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_system, RationalParam};
    use crate::hyp::tables::{composed_sinh, pairs_4d_example};
    use crate::sampling::sample_points;

    fn four_d() -> ChainSystem {
        let k: Vec<_> = [2, 1, 1].iter().map(|&n| RationalParam::integer(n).unwrap()).collect();
        build_system(FamilyTag::FourDExample, 1.0, &[1.0, 1.3, 0.7, 1.1], &k).unwrap()
    }

    #[test]
    fn wrong_system_is_rejected() {
        let k: Vec<_> = [1, 1, 1].iter().map(|&n| RationalParam::integer(n).unwrap()).collect();
        let sys = build_system(FamilyTag::FourDExample, 1.0, &[1.0; 4], &k).unwrap();
        let x = &sample_points(&sys, 1, 1)[0];
        assert!(ClosedForm::Level3Cubic.eval(&sys, &x.q, &x.p).is_err());
    }

    #[test]
    fn quotients_against_composed_pairs() {
        let sys = four_d();
        for x in sample_points(&sys, 5, 17) {
            let [b1, a1, b2, a2, b3, a3] = pairs_4d_example(&sys, &x).unwrap();
            let cases = [
                (ClosedForm::Level1Quotient, composed_sinh(&a1, &b1, 1, 2)),
                (ClosedForm::Level2Quotient { doubled: true }, composed_sinh(&a2, &b2, 2, 1)),
                (ClosedForm::Level3Quotient, composed_sinh(&a3, &b3, 1, 1)),
            ];
            for (form, want) in cases {
                let got = form.eval(&sys, &x.q, &x.p).unwrap();
                assert!((got - want).norm() <= 1e-9 * want.norm().max(1e-300), "{}", form.label());
            }
            let single = ClosedForm::Level2Quotient { doubled: false }.eval(&sys, &x.q, &x.p).unwrap();
            assert!((single - composed_sinh(&a2, &b2, 2, 1)).norm() > 1e-6);
        }
    }
}
