//! Scalar types the closed-form kernels are generic over.
//!
//! Kernels are written once against [`Scalar`] and evaluated with `f64` for
//! values, [`Dual`] for exact first derivatives, and [`HyperDual`] for exact
//! mixed second derivatives `∂²/∂s∂t` (seed `s` on `e1` and `t` on `e2`).

use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(v: f64) -> Self;
    fn sqrt(self) -> Self;
    fn value(self) -> f64;

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
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn value(self) -> f64 {
        self
    }
    #[inline]
    fn scale(self, k: f64) -> Self {
        self * k
    }
}

/// First-order dual number `re + eps·ε`, `ε² = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dual {
    pub re: f64,
    pub eps: f64,
}

impl Dual {
    pub fn new(re: f64, eps: f64) -> Self {
        Self { re, eps }
    }

    pub fn new_const(v: f64) -> Self {
        Self { re: v, eps: 0.0 }
    }
}

impl Add for Dual {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.eps + o.eps)
    }
}

impl Sub for Dual {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.eps - o.eps)
    }
}

impl Mul for Dual {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Self::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}

impl Div for Dual {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.re;
        let re = self.re * inv;
        Self::new(re, (self.eps - re * o.eps) * inv)
    }
}

impl Neg for Dual {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.re, -self.eps)
    }
}

impl Scalar for Dual {
    #[inline]
    fn cst(v: f64) -> Self {
        Self::new(v, 0.0)
    }
    #[inline]
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        Self::new(s, 0.5 * self.eps / s)
    }
    #[inline]
    fn value(self) -> f64 {
        self.re
    }
    #[inline]
    fn scale(self, k: f64) -> Self {
        Self::new(self.re * k, self.eps * k)
    }
}

/// Hyper-dual number `re + e1·ε₁ + e2·ε₂ + e12·ε₁ε₂` with `ε₁² = ε₂² = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HyperDual {
    pub re: f64,
    pub e1: f64,
    pub e2: f64,
    pub e12: f64,
}

impl HyperDual {
    pub fn new(re: f64, e1: f64, e2: f64, e12: f64) -> Self {
        Self { re, e1, e2, e12 }
    }

    pub fn new_const(v: f64) -> Self {
        Self::new(v, 0.0, 0.0, 0.0)
    }

    /// Applies a scalar function given its value and first two derivatives at `re`.
    #[inline]
    fn chain(self, f: f64, df: f64, d2f: f64) -> Self {
        Self::new(
            f,
            df * self.e1,
            df * self.e2,
            df * self.e12 + d2f * self.e1 * self.e2,
        )
    }
}

impl Add for HyperDual {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(
            self.re + o.re,
            self.e1 + o.e1,
            self.e2 + o.e2,
            self.e12 + o.e12,
        )
    }
}

impl Sub for HyperDual {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(
            self.re - o.re,
            self.e1 - o.e1,
            self.e2 - o.e2,
            self.e12 - o.e12,
        )
    }
}

impl Mul for HyperDual {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.re * o.re,
            self.re * o.e1 + self.e1 * o.re,
            self.re * o.e2 + self.e2 * o.re,
            self.re * o.e12 + self.e1 * o.e2 + self.e2 * o.e1 + self.e12 * o.re,
        )
    }
}

impl Div for HyperDual {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.re;
        let recip = o.chain(inv, -inv * inv, 2.0 * inv * inv * inv);
        self * recip
    }
}

impl Neg for HyperDual {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.re, -self.e1, -self.e2, -self.e12)
    }
}

impl Scalar for HyperDual {
    #[inline]
    fn cst(v: f64) -> Self {
        Self::new(v, 0.0, 0.0, 0.0)
    }
    #[inline]
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.re))
    }
    #[inline]
    fn value(self) -> f64 {
        self.re
    }
    #[inline]
    fn scale(self, k: f64) -> Self {
        Self::new(self.re * k, self.e1 * k, self.e2 * k, self.e12 * k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly<T: Scalar>(x: T) -> T {
        // x^3 / sqrt(1 + x^2)
        x * x * x / (T::cst(1.0) + x * x).sqrt()
    }

    fn poly_d1(x: f64) -> f64 {
        let q = 1.0 + x * x;
        3.0 * x * x / q.sqrt() - x.powi(4) / q.powf(1.5)
    }

    fn poly_d2(x: f64) -> f64 {
        let q = 1.0 + x * x;
        6.0 * x / q.sqrt() - 3.0 * x.powi(3) / q.powf(1.5) - 4.0 * x.powi(3) / q.powf(1.5)
            + 3.0 * x.powi(5) / q.powf(2.5)
    }

    #[test]
    fn dual_matches_closed_form_derivative() {
        for &x in &[-1.3, 0.2, 0.7, 2.5] {
            let d = poly(Dual::new(x, 1.0));
            assert!((d.re - poly(x)).abs() < 1e-14);
            assert!((d.eps - poly_d1(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn hyperdual_second_derivative() {
        for &x in &[-1.3, 0.2, 0.7, 2.5] {
            let h = poly(HyperDual::new(x, 1.0, 1.0, 0.0));
            assert!((h.e1 - poly_d1(x)).abs() < 1e-12);
            assert!((h.e2 - poly_d1(x)).abs() < 1e-12);
            assert!((h.e12 - poly_d2(x)).abs() < 1e-11, "{} vs {}", h.e12, poly_d2(x));
        }
    }

    #[test]
    fn hyperdual_mixed_partial() {
        // f(s, t) = s^2 t / (s + t), ∂²f/∂s∂t
        let f = |s: HyperDual, t: HyperDual| s * s * t / (s + t);
        let (s, t) = (0.8, 1.7);
        let v = f(HyperDual::new(s, 1.0, 0.0, 0.0), HyperDual::new(t, 0.0, 1.0, 0.0));
        let exact = (s * s * s + 3.0 * s * s * t) / (s + t).powi(3);
        let g = |s: f64, t: f64| s * s * t / (s + t);
        let h = 1e-4;
        let fd = (g(s + h, t + h) - g(s + h, t - h) - g(s - h, t + h) + g(s - h, t - h)) / (4.0 * h * h);
        assert!((v.e12 - fd).abs() < 1e-6);
        assert!((v.e12 - exact).abs() < 1e-12);
    }
}
