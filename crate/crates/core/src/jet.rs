//! Truncated Taylor series ("jets") of scalar functions.
//!
//! A [`Jet`] at a point `s0` stores the normalized coefficients
//! `f^(k)(s0) / k!` for `k < len`. Arithmetic truncates to the shorter
//! operand, and [`Jet::diff`] drops one coefficient, so the number of valid
//! coefficients always tracks how many derivatives an expression can still
//! deliver. Asking for a derivative beyond that is an error, not a zero.

#![allow(clippy::needless_range_loop)]

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Maximum number of stored coefficients (derivatives 0..=7).
pub const JET_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    c: [f64; JET_LEN],
    len: usize,
}

const FACTORIAL: [f64; JET_LEN] = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0, 5040.0];

impl Jet {
    /// A constant; all `len` coefficients past the value are zero.
    pub fn constant(value: f64, len: usize) -> Self {
        let mut c = [0.0; JET_LEN];
        c[0] = value;
        Jet { c, len: len.min(JET_LEN) }
    }

    /// The identity function `s` expanded at `s0`.
    pub fn variable(s0: f64, len: usize) -> Self {
        let mut j = Jet::constant(s0, len);
        if j.len > 1 {
            j.c[1] = 1.0;
        }
        j
    }

    /// Builds a jet from raw derivatives `[f, f', f'', ...]`.
    pub fn from_derivatives(d: &[f64]) -> Self {
        let len = d.len().min(JET_LEN);
        let mut c = [0.0; JET_LEN];
        for k in 0..len {
            c[k] = d[k] / FACTORIAL[k];
        }
        Jet { c, len }
    }

    pub fn from_coefficients(coeffs: &[f64]) -> Self {
        let len = coeffs.len().min(JET_LEN);
        let mut c = [0.0; JET_LEN];
        c[..len].copy_from_slice(&coeffs[..len]);
        Jet { c, len }
    }

    /// Number of valid coefficients.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Highest derivative order available, if any.
    pub fn order(&self) -> Option<usize> {
        self.len.checked_sub(1)
    }

    pub fn truncate(mut self, len: usize) -> Self {
        self.len = self.len.min(len);
        for k in self.len..JET_LEN {
            self.c[k] = 0.0;
        }
        self
    }

    /// Raw derivative of order `k`.
    pub fn derivative(&self, k: usize) -> Result<f64> {
        if k < self.len {
            Ok(self.c[k] * FACTORIAL[k])
        } else {
            Err(Error::DerivativeUnavailable { needed: k, available: self.len.saturating_sub(1) })
        }
    }

    pub fn value(&self) -> Result<f64> {
        self.derivative(0)
    }

    /// Raw derivatives `0..len`.
    pub fn derivatives(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.c[k] * FACTORIAL[k]).collect()
    }

    pub fn coefficient(&self, k: usize) -> f64 {
        if k < self.len {
            self.c[k]
        } else {
            0.0
        }
    }

    /// Derivative with respect to the expansion variable.
    pub fn diff(&self) -> Jet {
        let mut c = [0.0; JET_LEN];
        let len = self.len.saturating_sub(1);
        for k in 0..len {
            c[k] = (k + 1) as f64 * self.c[k + 1];
        }
        Jet { c, len }
    }

    pub fn scale(&self, s: f64) -> Jet {
        let mut out = *self;
        out.c.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn recip(&self) -> Jet {
        let mut b = [0.0; JET_LEN];
        if self.len == 0 {
            return Jet { c: b, len: 0 };
        }
        let a0 = self.c[0];
        b[0] = 1.0 / a0;
        for k in 1..self.len {
            let mut s = 0.0;
            for j in 1..=k {
                s += self.c[j] * b[k - j];
            }
            b[k] = -s / a0;
        }
        Jet { c: b, len: self.len }
    }

    /// `self^p` for a real exponent; requires a positive constant term
    /// unless `p` is a non-negative integer handled by [`Jet::powi`].
    pub fn powf(&self, p: f64) -> Jet {
        let mut y = [0.0; JET_LEN];
        if self.len == 0 {
            return Jet { c: y, len: 0 };
        }
        let a0 = self.c[0];
        y[0] = a0.powf(p);
        for k in 1..self.len {
            let mut s = 0.0;
            for j in 1..=k {
                s += (p * j as f64 - (k - j) as f64) * self.c[j] * y[k - j];
            }
            y[k] = s / (k as f64 * a0);
        }
        Jet { c: y, len: self.len }
    }

    /// Applies a scalar function given its derivatives at the jet's value.
    fn apply(&self, derivs: impl Fn(f64, usize) -> f64) -> Jet {
        if self.len == 0 {
            return *self;
        }
        let a = self.c[0];
        let d: Vec<f64> = (0..self.len).map(|k| derivs(a, k)).collect();
        Jet::from_derivatives(&d).compose(self)
    }

    pub fn sin(&self) -> Jet {
        self.apply(|a, k| match k % 4 {
            0 => a.sin(),
            1 => a.cos(),
            2 => -a.sin(),
            _ => -a.cos(),
        })
    }

    pub fn cos(&self) -> Jet {
        self.apply(|a, k| match k % 4 {
            0 => a.cos(),
            1 => -a.sin(),
            2 => -a.cos(),
            _ => a.sin(),
        })
    }

    pub fn exp(&self) -> Jet {
        self.apply(|a, _| a.exp())
    }

    pub fn powi(&self, n: u32) -> Jet {
        let mut out = Jet::constant(1.0, self.len);
        for _ in 0..n {
            out = out * *self;
        }
        out
    }

    /// `self(inner(s))`: `self` is the expansion of the outer function at
    /// `inner`'s constant term.
    pub fn compose(&self, inner: &Jet) -> Jet {
        let len = self.len.min(inner.len);
        if len == 0 {
            return Jet { c: [0.0; JET_LEN], len: 0 };
        }
        let mut delta = *inner;
        delta.c[0] = 0.0;
        let delta = delta.truncate(len);
        let mut acc = Jet::constant(self.c[len - 1], len);
        for k in (0..len - 1).rev() {
            acc = acc * delta;
            acc.c[0] += self.c[k];
        }
        acc
    }

    /// Antiderivative taking the value `c0` at the expansion point; gains one
    /// coefficient up to [`JET_LEN`].
    pub fn integrate(&self, c0: f64) -> Jet {
        let len = (self.len + 1).min(JET_LEN);
        let mut c = [0.0; JET_LEN];
        c[0] = c0;
        for k in 1..len {
            c[k] = self.c[k - 1] / k as f64;
        }
        Jet { c, len }
    }

    /// The truncated Taylor polynomial evaluated at `s0 + offset`.
    pub fn eval_offset(&self, offset: f64) -> f64 {
        self.c[..self.len].iter().rev().fold(0.0, |acc, c| acc * offset + c)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let len = self.len.min(rhs.len);
        let mut c = [0.0; JET_LEN];
        for k in 0..len {
            c[k] = self.c[k] + rhs.c[k];
        }
        Jet { c, len }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let len = self.len.min(rhs.len);
        let mut c = [0.0; JET_LEN];
        for k in 0..len {
            let mut s = 0.0;
            for j in 0..=k {
                s += self.c[j] * rhs.c[k - j];
            }
            c[k] = s;
        }
        Jet { c, len }
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, s: f64) -> Jet {
        self.scale(s)
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, j: Jet) -> Jet {
        j.scale(self)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, s: f64) -> Jet {
        if self.len > 0 {
            self.c[0] += s;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn product_and_derivatives_of_polynomials() {
        // f = s^2 at s0 = 2; g = s^3 at s0 = 2; f*g = s^5.
        let s = Jet::variable(2.0, JET_LEN);
        let f = s * s;
        let g = s * s * s;
        let h = f * g;
        let expect = [32.0, 80.0, 160.0, 240.0, 240.0, 120.0, 0.0, 0.0];
        for (k, e) in expect.iter().enumerate() {
            assert!(close(h.derivative(k).unwrap(), *e, 1e-14), "k={k}");
        }
        assert!(close(h.diff().derivative(0).unwrap(), 80.0, 1e-14));
    }

    #[test]
    fn recip_and_powf_match_closed_forms() {
        // 1/(1+s) and (1+s)^(1/4) at s0 = 0.5.
        let x = Jet::variable(0.5, 6) + 1.0;
        let r = x.recip();
        let q = x.powf(0.25);
        let mut fact = 1.0;
        for k in 0..6 {
            if k > 0 {
                fact *= k as f64;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let d = sign * fact / 1.5f64.powi(k as i32 + 1);
            assert!(close(r.derivative(k).unwrap(), d, 1e-13));
        }
        // derivative k of (1+s)^p = p(p-1)...(p-k+1)(1+s)^(p-k)
        let mut falling = 1.0;
        for k in 0..6 {
            if k > 0 {
                falling *= 0.25 - (k as f64 - 1.0);
            }
            let d = falling * 1.5f64.powf(0.25 - k as f64);
            assert!(close(q.derivative(k).unwrap(), d, 1e-13), "k={k}");
        }
    }

    #[test]
    fn compose_sin_of_square() {
        // sin(u) with u = s^2 at s0 = 0.7
        let s0: f64 = 0.7;
        let u0 = s0 * s0;
        let outer = Jet::from_derivatives(&[u0.sin(), u0.cos(), -u0.sin(), -u0.cos(), u0.sin()]);
        let inner = Jet::variable(s0, 5) * Jet::variable(s0, 5);
        let h = outer.compose(&inner);
        // d/ds sin(s^2) = 2s cos(s^2); d2 = 2cos - 4s^2 sin
        assert!(close(h.derivative(1).unwrap(), 2.0 * s0 * u0.cos(), 1e-14));
        assert!(close(h.derivative(2).unwrap(), 2.0 * u0.cos() - 4.0 * u0 * u0.sin(), 1e-14));
    }

    #[test]
    fn missing_derivatives_are_reported() {
        let j = Jet::from_derivatives(&[1.0, 2.0]);
        assert!(j.derivative(1).is_ok());
        assert!(matches!(j.derivative(2), Err(Error::DerivativeUnavailable { .. })));
        assert!(j.diff().diff().value().is_err());
        let short = Jet::from_derivatives(&[1.0]) * Jet::variable(0.0, JET_LEN);
        assert_eq!(short.len(), 1);
    }
}
