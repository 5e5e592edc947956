//! Forward-mode automatic differentiation.
//!
//! Charts written against [`Real`] can be evaluated on plain `f64` or on
//! [`HyperDual`] numbers. A hyper-dual number `a + b ε₁ + c ε₂ + d ε₁ε₂` with
//! `ε₁² = ε₂² = 0` carries two first-order directional derivatives and the
//! mixed second derivative without truncation error, so a chart's Hessian is
//! exact up to rounding.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Scalar arithmetic shared by `f64` and the dual number types.
pub trait Real:
    Copy
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + Send
    + Sync
{
    fn cst(v: f64) -> Self;
    fn value(&self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tan(self) -> Self;
    fn sinh(self) -> Self;
    fn cosh(self) -> Self;
    fn tanh(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn atan(self) -> Self;
    fn asin(self) -> Self;
    fn acos(self) -> Self;
    fn asinh(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn powf(self, p: f64) -> Self;
    fn abs(self) -> Self;

    fn sech(self) -> Self {
        Self::cst(1.0) / self.cosh()
    }
    fn recip(self) -> Self {
        Self::cst(1.0) / self
    }
    fn square(self) -> Self {
        self * self
    }
}

impl Real for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn tan(self) -> Self {
        f64::tan(self)
    }
    fn sinh(self) -> Self {
        f64::sinh(self)
    }
    fn cosh(self) -> Self {
        f64::cosh(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn atan(self) -> Self {
        f64::atan(self)
    }
    fn asin(self) -> Self {
        f64::asin(self)
    }
    fn acos(self) -> Self {
        f64::acos(self)
    }
    fn asinh(self) -> Self {
        f64::asinh(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
}

/// Hyper-dual number `re + e1 ε₁ + e2 ε₂ + e12 ε₁ε₂`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HyperDual {
    pub re: f64,
    pub e1: f64,
    pub e2: f64,
    pub e12: f64,
}

impl HyperDual {
    pub const fn new(re: f64, e1: f64, e2: f64, e12: f64) -> Self {
        HyperDual { re, e1, e2, e12 }
    }

    pub const fn constant(re: f64) -> Self {
        HyperDual::new(re, 0.0, 0.0, 0.0)
    }

    /// Seed a variable with unit perturbations in the requested slots.
    pub const fn variable(re: f64, d1: bool, d2: bool) -> Self {
        HyperDual::new(re, if d1 { 1.0 } else { 0.0 }, if d2 { 1.0 } else { 0.0 }, 0.0)
    }

    /// Apply a scalar function given its value and first two derivatives at `re`.
    #[inline]
    fn chain(self, f: f64, df: f64, d2f: f64) -> Self {
        HyperDual { re: f, e1: df * self.e1, e2: df * self.e2, e12: df * self.e12 + d2f * self.e1 * self.e2 }
    }
}

impl fmt::Display for HyperDual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}ε₁ + {}ε₂ + {}ε₁ε₂", self.re, self.e1, self.e2, self.e12)
    }
}

impl Add for HyperDual {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        HyperDual::new(self.re + o.re, self.e1 + o.e1, self.e2 + o.e2, self.e12 + o.e12)
    }
}

impl Sub for HyperDual {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        HyperDual::new(self.re - o.re, self.e1 - o.e1, self.e2 - o.e2, self.e12 - o.e12)
    }
}

impl Mul for HyperDual {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        HyperDual {
            re: self.re * o.re,
            e1: self.re * o.e1 + self.e1 * o.re,
            e2: self.re * o.e2 + self.e2 * o.re,
            e12: self.re * o.e12 + self.e1 * o.e2 + self.e2 * o.e1 + self.e12 * o.re,
        }
    }
}

impl Div for HyperDual {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.re;
        self * o.chain(inv, -inv * inv, 2.0 * inv * inv * inv)
    }
}

impl Neg for HyperDual {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        HyperDual::new(-self.re, -self.e1, -self.e2, -self.e12)
    }
}

impl Add<f64> for HyperDual {
    type Output = Self;
    fn add(mut self, o: f64) -> Self {
        self.re += o;
        self
    }
}

impl Sub<f64> for HyperDual {
    type Output = Self;
    fn sub(mut self, o: f64) -> Self {
        self.re -= o;
        self
    }
}

impl Mul<f64> for HyperDual {
    type Output = Self;
    fn mul(self, o: f64) -> Self {
        HyperDual::new(self.re * o, self.e1 * o, self.e2 * o, self.e12 * o)
    }
}

impl Div<f64> for HyperDual {
    type Output = Self;
    fn div(self, o: f64) -> Self {
        self * (1.0 / o)
    }
}

impl AddAssign for HyperDual {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl SubAssign for HyperDual {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl MulAssign for HyperDual {
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl Real for HyperDual {
    fn cst(v: f64) -> Self {
        HyperDual::constant(v)
    }
    fn value(&self) -> f64 {
        self.re
    }
    fn sin(self) -> Self {
        let (s, c) = self.re.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.re.sin_cos();
        self.chain(c, -s, -c)
    }
    fn tan(self) -> Self {
        let t = self.re.tan();
        let sec2 = 1.0 + t * t;
        self.chain(t, sec2, 2.0 * t * sec2)
    }
    fn sinh(self) -> Self {
        let (s, c) = (self.re.sinh(), self.re.cosh());
        self.chain(s, c, s)
    }
    fn cosh(self) -> Self {
        let (s, c) = (self.re.sinh(), self.re.cosh());
        self.chain(c, s, c)
    }
    fn tanh(self) -> Self {
        let t = self.re.tanh();
        let sech2 = 1.0 - t * t;
        self.chain(t, sech2, -2.0 * t * sech2)
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e, e)
    }
    fn ln(self) -> Self {
        let inv = 1.0 / self.re;
        self.chain(self.re.ln(), inv, -inv * inv)
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.re))
    }
    fn atan(self) -> Self {
        let d = 1.0 / (1.0 + self.re * self.re);
        self.chain(self.re.atan(), d, -2.0 * self.re * d * d)
    }
    fn asin(self) -> Self {
        let q = 1.0 - self.re * self.re;
        let d = 1.0 / q.sqrt();
        self.chain(self.re.asin(), d, self.re * d / q)
    }
    fn acos(self) -> Self {
        let q = 1.0 - self.re * self.re;
        let d = 1.0 / q.sqrt();
        self.chain(self.re.acos(), -d, -self.re * d / q)
    }
    fn asinh(self) -> Self {
        let q = 1.0 + self.re * self.re;
        let d = 1.0 / q.sqrt();
        self.chain(self.re.asinh(), d, -self.re * d / q)
    }
    fn powi(self, n: i32) -> Self {
        match n {
            0 => HyperDual::constant(1.0),
            1 => self,
            _ => {
                let nf = n as f64;
                self.chain(self.re.powi(n), nf * self.re.powi(n - 1), nf * (nf - 1.0) * self.re.powi(n - 2))
            }
        }
    }
    fn powf(self, p: f64) -> Self {
        self.chain(self.re.powf(p), p * self.re.powf(p - 1.0), p * (p - 1.0) * self.re.powf(p - 2.0))
    }
    fn abs(self) -> Self {
        if self.re < 0.0 {
            -self
        } else {
            self
        }
    }
}

/// Value, gradient and Hessian of a scalar function of `u.len()` variables.
pub fn hessian<F>(f: F, u: &[f64]) -> (f64, Vec<f64>, Vec<Vec<f64>>)
where
    F: Fn(&[HyperDual]) -> HyperDual,
{
    let n = u.len();
    let mut grad = vec![0.0; n];
    let mut hess = vec![vec![0.0; n]; n];
    let mut value = 0.0;
    for i in 0..n {
        for j in i..n {
            let args: Vec<HyperDual> =
                u.iter().enumerate().map(|(k, &x)| HyperDual::variable(x, k == i, k == j)).collect();
            let r = f(&args);
            value = r.re;
            if i == j {
                grad[i] = r.e1;
            }
            hess[i][j] = r.e12;
            hess[j][i] = r.e12;
        }
    }
    (value, grad, hess)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> (f64, f64) {
        let d1 = (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h);
        let d2 = (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h)) / (12.0 * h * h);
        (d1, d2)
    }

    fn check_unary(ad: impl Fn(HyperDual) -> HyperDual, fl: impl Fn(f64) -> f64, x: f64) {
        let r = ad(HyperDual::variable(x, true, true));
        let (d1, d2) = central(&fl, x, 1e-3);
        assert!((r.re - fl(x)).abs() < 1e-14 * (1.0 + fl(x).abs()));
        assert!((r.e1 - d1).abs() < 1e-7 * (1.0 + d1.abs()), "d1 {} vs {}", r.e1, d1);
        assert!((r.e12 - d2).abs() < 1e-5 * (1.0 + d2.abs()), "d2 {} vs {}", r.e12, d2);
    }

    #[test]
    fn elementary_functions_match_finite_differences() {
        for &x in &[0.3, 0.7, 1.1] {
            check_unary(|a| a.sin(), f64::sin, x);
            check_unary(|a| a.cos(), f64::cos, x);
            check_unary(|a| a.tan(), f64::tan, x);
            check_unary(|a| a.sinh(), f64::sinh, x);
            check_unary(|a| a.cosh(), f64::cosh, x);
            check_unary(|a| a.tanh(), f64::tanh, x);
            check_unary(|a| a.exp(), f64::exp, x);
            check_unary(|a| a.ln(), f64::ln, x);
            check_unary(|a| a.sqrt(), f64::sqrt, x);
            check_unary(|a| a.atan(), f64::atan, x);
            check_unary(|a| (a * 0.5).asin(), |t| (0.5 * t).asin(), x);
            check_unary(|a| (a * 0.5).acos(), |t| (0.5 * t).acos(), x);
            check_unary(|a| a.asinh(), f64::asinh, x);
            check_unary(|a| a.powi(3), |t| t.powi(3), x);
            check_unary(|a| a.powf(2.5), |t| t.powf(2.5), x);
            check_unary(|a| a.sech(), |t| 1.0 / t.cosh(), x);
            check_unary(|a| HyperDual::constant(1.0) / a, |t| 1.0 / t, x);
        }
    }

    #[test]
    fn mixed_partial_of_product() {
        // f(x, y) = sin(x) * exp(x y)
        let f = |a: &[HyperDual]| a[0].sin() * (a[0] * a[1]).exp();
        let (x, y) = (0.4, -0.8);
        let (_, g, h) = hessian(f, &[x, y]);
        let e = (x * y).exp();
        assert!((g[1] - x.sin() * x * e).abs() < 1e-14);
        let fxy = x.cos() * x * e + x.sin() * (e + x * y * e);
        assert!((h[0][1] - fxy).abs() < 1e-13);
        assert_eq!(h[0][1], h[1][0]);
    }

    proptest! {
        #[test]
        fn product_rule_holds(a in -2.0..2.0f64, b in -2.0..2.0f64) {
            let x = HyperDual::variable(a, true, true);
            let y = x.sin() * x.exp();
            let d1 = a.cos() * a.exp() + a.sin() * a.exp();
            let d2 = 2.0 * a.cos() * a.exp();
            prop_assert!((y.e1 - d1).abs() < 1e-12);
            prop_assert!((y.e12 - d2).abs() < 1e-12);
            let z = HyperDual::variable(b, false, false) + x;
            prop_assert_eq!(z.e1, 1.0);
        }
    }
}
