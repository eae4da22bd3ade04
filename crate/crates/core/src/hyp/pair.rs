//! `(cosh X, sinh X)` pairs composed by the addition formulas.
//!
//! Angles are never materialised: `X` is only ever known through its pair,
//! so inverse hyperbolic branch choices never enter.

use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::dual::{cx_value, Cx, Scalar};
use crate::error::{Error, Result};

/// Input tolerance on `c² − s² = 1` accepted by [`hyp_mul`] and [`hyp_pow`].
pub const INPUT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypPair<S = f64> {
    pub c: Cx<S>,
    pub s: Cx<S>,
}

impl<S: Scalar> HypPair<S> {
    pub fn new(c: Cx<S>, s: Cx<S>) -> Self {
        Self { c, s }
    }

    pub fn identity() -> Self {
        Self::new(Cx::one(), Cx::zero())
    }

    /// `(cosh(−X), sinh(−X))`
    pub fn inverse(&self) -> Self {
        Self::new(self.c, -self.s)
    }

    /// `|c² − s² − 1|` relative to `max(1, |c|², |s|²)`.
    pub fn residual(&self) -> f64 {
        let c = cx_value(&self.c);
        let s = cx_value(&self.s);
        let scale = 1f64.max(c.norm_sqr()).max(s.norm_sqr());
        (c * c - s * s - 1.0).norm() / scale
    }

    pub fn value(&self) -> HypPair<f64> {
        HypPair::new(cx_value(&self.c), cx_value(&self.s))
    }

    pub(crate) fn mul_unchecked(&self, o: &Self) -> Self {
        Self::new(self.c * o.c + self.s * o.s, self.c * o.s + self.s * o.c)
    }

    pub(crate) fn pow_unchecked(&self, n: i64) -> Self {
        let mut base = if n < 0 { self.inverse() } else { *self };
        let mut e = n.unsigned_abs();
        let mut acc = Self::identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_unchecked(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_unchecked(&base);
            }
        }
        acc
    }

    fn check(&self) -> Result<()> {
        let r = self.residual();
        if !(r <= INPUT_TOLERANCE) {
            return Err(Error::PairInvariant { residual: r });
        }
        Ok(())
    }
}

impl HypPair<f64> {
    pub fn from_angle(x: Complex64) -> Self {
        Self::new(x.cosh(), x.sinh())
    }
}

/// `(cosh(x+y), sinh(x+y))`
pub fn hyp_mul<S: Scalar>(a: &HypPair<S>, b: &HypPair<S>) -> Result<HypPair<S>> {
    a.check()?;
    b.check()?;
    Ok(a.mul_unchecked(b))
}

/// `(cosh(nx), sinh(nx))` by repeated squaring; negative `n` uses `(c, −s)`.
pub fn hyp_pow<S: Scalar>(a: &HypPair<S>, n: i64) -> Result<HypPair<S>> {
    a.check()?;
    Ok(a.pow_unchecked(n))
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;

    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * 1f64.max(b.norm())
    }

    #[test]
    fn identity_is_neutral() {
        let b = HypPair::from_angle(Complex64::new(0.4, -1.3));
        let r = hyp_mul(&HypPair::identity(), &b).unwrap();
        assert!(close(r.c, b.c, 1e-15) && close(r.s, b.s, 1e-15));
    }

    #[test]
    fn double_angle() {
        let a = HypPair::from_angle(Complex64::new(1.0, 0.0));
        let r = hyp_mul(&a, &a).unwrap();
        assert!(close(r.c, Complex64::new(2f64.cosh(), 0.0), 1e-14));
        assert!(close(r.s, Complex64::new(2f64.sinh(), 0.0), 1e-14));
    }

    #[test]
    fn opposite_angles_cancel() {
        let a = HypPair::from_angle(Complex64::new(0.8, 0.3));
        let r = hyp_mul(&a, &a.inverse()).unwrap();
        assert!(close(r.c, Complex64::new(1.0, 0.0), 1e-14));
        assert!(r.s.norm() < 1e-14);
    }

    #[test]
    fn powers() {
        let a = HypPair::from_angle(Complex64::new(0.3, 0.0));
        let r = hyp_pow(&a, 5).unwrap();
        assert!(close(r.c, Complex64::new(1.5f64.cosh(), 0.0), 1e-14));
        assert!(close(r.s, Complex64::new(1.5f64.sinh(), 0.0), 1e-14));
        let r = hyp_pow(&a, 0).unwrap();
        assert_eq!(r, HypPair::identity());
        let r = hyp_pow(&a, -2).unwrap();
        assert!(close(r.s, Complex64::new(-(0.6f64).sinh(), 0.0), 1e-14));
    }

    #[test]
    fn triple_angle_against_cubic_formula() {
        let x = 0.7f64;
        let r = hyp_pow(&HypPair::from_angle(Complex64::new(x, 0.0)), 3).unwrap();
        let c = x.cosh();
        let expected = 4.0 * c * c * c - 3.0 * c;
        assert!((r.c.re - expected).abs() <= 1e-12 * expected.abs());
    }

    #[test]
    fn rejects_off_hyperbola_input() {
        let bad = HypPair::new(Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0));
        assert!(matches!(hyp_mul(&bad, &bad), Err(Error::PairInvariant { .. })));
        assert!(hyp_pow(&bad, 2).is_err());
    }
}
