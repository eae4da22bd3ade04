//! Forward-mode automatic differentiation.
//!
//! `Dual<S>` carries a primal value and one tangent. Because `Dual<S>` is itself
//! a [`Scalar`], duals nest: `Dual<Dual<f64>>` yields mixed second derivatives
//! and `Dual<Dual<Dual<f64>>>` third derivatives, which the curvature code uses.
//!
//! Everything that has to be differentiated (chain evaluation, hyperbolic
//! pairs, metric entries) is written once, generic over `S: Scalar`.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Rem, Sub, SubAssign};

use num_complex::Complex;
use num_traits::{Num, One, Zero};

/// Real scalar usable by the generic evaluation code.
pub trait Scalar:
    Num + Copy + Debug + Neg<Output = Self> + AddAssign + SubAssign + MulAssign + Send + Sync + 'static
{
    fn cst(v: f64) -> Self;
    /// Primal value with every tangent stripped.
    fn value(&self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sqrt(self) -> Self;
    fn recip(self) -> Self {
        Self::one() / self
    }
    fn powi(self, n: i32) -> Self {
        let mut base = if n < 0 { self.recip() } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base *= base;
            e >>= 1;
        }
        acc
    }
    fn scale(self, k: f64) -> Self {
        self * Self::cst(k)
    }
}

impl Scalar for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn recip(self) -> Self {
        f64::recip(self)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

/// A value together with one directional derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<S> {
    pub re: S,
    pub eps: S,
}

impl<S: Scalar> Dual<S> {
    #[inline]
    pub fn new(re: S, eps: S) -> Self {
        Self { re, eps }
    }

    #[inline]
    pub fn constant(re: S) -> Self {
        Self { re, eps: S::zero() }
    }

    #[inline]
    pub fn variable(re: S) -> Self {
        Self { re, eps: S::one() }
    }
}

impl<S: Scalar> Zero for Dual<S> {
    fn zero() -> Self {
        Self::constant(S::zero())
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.eps.is_zero()
    }
}

impl<S: Scalar> One for Dual<S> {
    fn one() -> Self {
        Self::constant(S::one())
    }
}

impl<S: Scalar> Add for Dual<S> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.eps + o.eps)
    }
}

impl<S: Scalar> Sub for Dual<S> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.eps - o.eps)
    }
}

impl<S: Scalar> Mul for Dual<S> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Self::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}

impl<S: Scalar> Div for Dual<S> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = S::one() / o.re;
        let re = self.re * inv;
        Self::new(re, (self.eps - re * o.eps) * inv)
    }
}

// Only present to satisfy `Num`; the tangent follows a % b = a - b * trunc(a / b).
impl<S: Scalar> Rem for Dual<S> {
    type Output = Self;
    fn rem(self, o: Self) -> Self {
        let q = (self.re.value() / o.re.value()).trunc();
        Self::new(self.re % o.re, self.eps - o.eps.scale(q))
    }
}

impl<S: Scalar> Neg for Dual<S> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.re, -self.eps)
    }
}

impl<S: Scalar> AddAssign for Dual<S> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<S: Scalar> SubAssign for Dual<S> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<S: Scalar> MulAssign for Dual<S> {
    #[inline]
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl<S: Scalar> Num for Dual<S> {
    type FromStrRadixErr = <f64 as Num>::FromStrRadixErr;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        f64::from_str_radix(s, radix).map(|v| Self::constant(S::cst(v)))
    }
}

impl<S: Scalar> Scalar for Dual<S> {
    #[inline]
    fn cst(v: f64) -> Self {
        Self::constant(S::cst(v))
    }
    #[inline]
    fn value(&self) -> f64 {
        self.re.value()
    }
    #[inline]
    fn sin(self) -> Self {
        Self::new(self.re.sin(), self.eps * self.re.cos())
    }
    #[inline]
    fn cos(self) -> Self {
        Self::new(self.re.cos(), -(self.eps * self.re.sin()))
    }
    #[inline]
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        Self::new(s, self.eps / (s + s))
    }
    #[inline]
    fn recip(self) -> Self {
        let inv = S::one() / self.re;
        Self::new(inv, -(self.eps * inv * inv))
    }
}

/// Complex scalar over a generic real scalar.
pub type Cx<S> = Complex<S>;

#[inline]
pub fn cx<S: Scalar>(re: S) -> Cx<S> {
    Complex::new(re, S::zero())
}

#[inline]
pub fn cx_i<S: Scalar>(im: S) -> Cx<S> {
    Complex::new(S::zero(), im)
}

#[inline]
pub fn cx_value<S: Scalar>(z: &Cx<S>) -> Complex<f64> {
    Complex::new(z.re.value(), z.im.value())
}

/// Principal square root of a complex number.
///
/// Purely real arguments take the exact branch `√x` or `i√(-x)`, which keeps
/// tangents well defined when the argument is real by construction.
pub fn csqrt<S: Scalar>(z: Cx<S>) -> Cx<S> {
    let im = z.im.value();
    let re = z.re.value();
    if im == 0.0 && is_const_zero(&z.im) {
        if re >= 0.0 {
            return Complex::new(z.re.sqrt(), S::zero());
        }
        return Complex::new(S::zero(), (-z.re).sqrt());
    }
    let modulus = (z.re * z.re + z.im * z.im).sqrt();
    let a = ((modulus + z.re).scale(0.5)).sqrt();
    if a.value() == 0.0 {
        return Complex::new(S::zero(), ((modulus - z.re).scale(0.5)).sqrt());
    }
    Complex::new(a, z.im / (a + a))
}

/// True when the scalar has zero value and zero tangents.
fn is_const_zero<S: Scalar>(s: &S) -> bool {
    s.is_zero()
}

/// Exact derivative of `f` at `x` by one dual evaluation.
pub fn derivative(f: impl Fn(Dual<f64>) -> Dual<f64>, x: f64) -> f64 {
    f(Dual::variable(x)).eps
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_quotient_rules() {
        let d = derivative(|x| x * x.sin() / (x + Dual::cst(1.0)), 0.7);
        let expected = {
            let x: f64 = 0.7;
            ((x.sin() + x * x.cos()) * (x + 1.0) - x * x.sin()) / (x + 1.0).powi(2)
        };
        assert!((d - expected).abs() < 1e-15);
    }

    #[test]
    fn nested_duals_give_third_derivative() {
        // d³/dx³ sin(2x) = -8 cos(2x)
        type D3 = Dual<Dual<Dual<f64>>>;
        let x0 = 0.3;
        let x: D3 = Dual::new(
            Dual::new(Dual::new(x0, 1.0), Dual::cst(1.0)),
            Dual::cst(1.0),
        );
        let y = (x.scale(2.0)).sin();
        assert!((y.eps.eps.eps + 8.0 * (2.0 * x0).cos()).abs() < 1e-13);
        assert!((y.re.re.re - (2.0 * x0).sin()).abs() < 1e-15);
    }

    #[test]
    fn sqrt_and_powi() {
        let d = derivative(|x| x.sqrt().powi(3), 4.0);
        assert!((d - 1.5 * 2.0).abs() < 1e-14);
        let d = derivative(|x| x.powi(-2), 2.0);
        assert!((d + 0.25).abs() < 1e-15);
    }

    #[test]
    fn complex_sqrt_branches() {
        let r = csqrt(cx(-4.0_f64));
        assert_eq!(r, Complex::new(0.0, 2.0));
        let r = csqrt(Complex::new(3.0_f64, 4.0));
        assert!((r - Complex::new(2.0, 1.0)).norm() < 1e-15);
        let r = csqrt(Complex::new(-3.0_f64, -4.0));
        assert!((r - Complex::new(1.0, -2.0)).norm() < 1e-15);
        // derivative of i*sqrt(-x) at x = -4
        let z = csqrt(cx(Dual::variable(-4.0_f64)));
        assert!((z.im.eps + 0.25).abs() < 1e-15);
    }
}
