//! Scalar functions of pseudo-arclength with derivative access, used for
//! the components of deformation fields.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::stencil::window_derivatives;

/// Where a field and all its derivatives may be nonzero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    Empty,
    Interval(f64, f64),
    Unbounded,
}

impl Support {
    pub fn union(self, other: Support) -> Support {
        match (self, other) {
            (Support::Empty, s) | (s, Support::Empty) => s,
            (Support::Interval(a, b), Support::Interval(c, d)) => Support::Interval(a.min(c), b.max(d)),
            _ => Support::Unbounded,
        }
    }

    /// True when the support lies inside `[lo, hi]`.
    pub fn within(self, lo: f64, hi: f64) -> bool {
        match self {
            Support::Empty => true,
            Support::Interval(a, b) => a >= lo && b <= hi,
            Support::Unbounded => false,
        }
    }
}

pub trait ScalarField: Send + Sync {
    /// Jet with `len` coefficients at `sigma`. Fewer coefficients mean the
    /// higher derivatives are unavailable.
    fn jet(&self, sigma: f64, len: usize) -> Result<Jet>;

    fn support(&self) -> Support {
        Support::Unbounded
    }

    /// Points where the field is less smooth than elsewhere.
    fn breakpoints(&self) -> Vec<f64> {
        match self.support() {
            Support::Interval(a, b) => vec![a, b],
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroField;

impl ScalarField for ZeroField {
    fn jet(&self, _sigma: f64, len: usize) -> Result<Jet> {
        Ok(Jet::constant(0.0, len))
    }

    fn support(&self) -> Support {
        Support::Empty
    }
}

/// `sum_k coeffs[k] * sigma^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialField {
    coeffs: Vec<f64>,
}

impl PolynomialField {
    pub fn new(coeffs: Vec<f64>) -> Self {
        PolynomialField { coeffs }
    }

    /// `sigma^n`.
    pub fn monomial(n: usize) -> Self {
        let mut coeffs = vec![0.0; n + 1];
        coeffs[n] = 1.0;
        PolynomialField { coeffs }
    }
}

impl ScalarField for PolynomialField {
    fn jet(&self, sigma: f64, len: usize) -> Result<Jet> {
        let s = Jet::variable(sigma, len);
        let mut acc = Jet::constant(0.0, len);
        for c in self.coeffs.iter().rev() {
            acc = acc * s + *c;
        }
        Ok(acc)
    }

    fn support(&self) -> Support {
        if self.coeffs.iter().all(|c| *c == 0.0) {
            Support::Empty
        } else {
            Support::Unbounded
        }
    }
}

type JetFn = dyn Fn(&Jet) -> Jet + Send + Sync;

/// A closed-form field written in jet arithmetic, e.g.
/// `FnField::new(|s| s.sin() * 2.0)`.
#[derive(Clone)]
pub struct FnField {
    f: Arc<JetFn>,
}

impl FnField {
    pub fn new(f: impl Fn(&Jet) -> Jet + Send + Sync + 'static) -> Self {
        FnField { f: Arc::new(f) }
    }
}

impl ScalarField for FnField {
    fn jet(&self, sigma: f64, len: usize) -> Result<Jet> {
        Ok((self.f)(&Jet::variable(sigma, len)))
    }
}

/// `inner * ((s - a)(b - s) / r^2)^power` on `[a, b]` (`r` the half width),
/// zero outside. The field vanishes with its first `power - 1` derivatives
/// at both ends.
#[derive(Clone)]
pub struct WindowField {
    a: f64,
    b: f64,
    power: u32,
    inner: Arc<dyn ScalarField>,
}

impl WindowField {
    pub fn new(a: f64, b: f64, power: u32, inner: Arc<dyn ScalarField>) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter(format!("window [{a}, {b}] is empty")));
        }
        Ok(WindowField { a, b, power, inner })
    }

    pub fn bump(a: f64, b: f64, power: u32) -> Result<Self> {
        Self::new(a, b, power, Arc::new(PolynomialField::new(vec![1.0])))
    }
}

impl ScalarField for WindowField {
    fn jet(&self, sigma: f64, len: usize) -> Result<Jet> {
        if sigma <= self.a || sigma >= self.b {
            return Ok(Jet::constant(0.0, len));
        }
        let s = Jet::variable(sigma, len);
        let r = 0.5 * (self.b - self.a);
        let q = (s + (-self.a)) * (-s + self.b) * (1.0 / (r * r));
        Ok(q.powi(self.power) * self.inner.jet(sigma, len)?)
    }

    fn support(&self) -> Support {
        Support::Interval(self.a, self.b)
    }
}

/// `sum_i c_i f_i`.
#[derive(Clone, Default)]
pub struct LinearCombination {
    terms: Vec<(f64, Arc<dyn ScalarField>)>,
}

impl LinearCombination {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn term(mut self, c: f64, f: Arc<dyn ScalarField>) -> Self {
        self.terms.push((c, f));
        self
    }
}

impl ScalarField for LinearCombination {
    fn jet(&self, sigma: f64, len: usize) -> Result<Jet> {
        let mut acc = Jet::constant(0.0, len);
        for (c, f) in &self.terms {
            acc = acc + f.jet(sigma, len)? * *c;
        }
        Ok(acc)
    }

    fn support(&self) -> Support {
        self.terms.iter().filter(|(c, _)| *c != 0.0).fold(Support::Empty, |s, (_, f)| s.union(f.support()))
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.terms.iter().filter(|(c, _)| *c != 0.0).flat_map(|(_, f)| f.breakpoints()).collect()
    }
}

/// Values on a uniform grid; derivatives by finite-difference weights on a
/// local window of nodes (one-sided near the ends).
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    nodes: Vec<f64>,
    values: Vec<f64>,
}

/// Nodes per differentiation window.
pub const SAMPLE_WINDOW: usize = 9;
/// Highest derivative reported for sampled data.
pub const SAMPLE_MAX_ORDER: usize = 5;

impl SampledField {
    pub fn new(sigma0: f64, h: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < SAMPLE_WINDOW {
            return Err(Error::InvalidParameter(format!(
                "need at least {SAMPLE_WINDOW} samples, got {}",
                values.len()
            )));
        }
        if !(h > 0.0) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sampled field"));
        }
        let nodes = (0..values.len()).map(|i| sigma0 + i as f64 * h).collect();
        Ok(SampledField { nodes, values })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.nodes[0], *self.nodes.last().unwrap())
    }
}

impl ScalarField for SampledField {
    fn jet(&self, sigma: f64, len: usize) -> Result<Jet> {
        let (lo, hi) = self.domain();
        let slack = 1e-9 * (hi - lo);
        if sigma < lo - slack || sigma > hi + slack {
            return Err(Error::OutOfDomain { value: sigma, lo, hi });
        }
        let order = len.saturating_sub(1).min(SAMPLE_MAX_ORDER);
        let d = window_derivatives(&self.nodes, &self.values, sigma, SAMPLE_WINDOW, order);
        Ok(Jet::from_derivatives(&d[..len.min(order + 1)]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_vanishes_to_order_below_power() {
        let w = WindowField::bump(0.0, 2.0, 6).unwrap();
        // near the left end the field behaves like (2x)^6
        let x = 1e-3;
        let j = w.jet(x, 7).unwrap();
        for k in 0..6 {
            let falling: f64 = (7 - k..=6).map(|m| m as f64).product();
            let expect = 64.0 * falling * x.powi(6 - k as i32);
            assert!((j.derivative(k).unwrap() - expect).abs() < 0.02 * expect, "k={k}");
        }
        assert_eq!(w.jet(1.0, 1).unwrap().value().unwrap(), 1.0);
        assert_eq!(w.jet(3.0, 4).unwrap().derivative(3).unwrap(), 0.0);
    }

    #[test]
    fn sampled_field_differentiates_smooth_data() {
        let h = 0.01;
        let vals: Vec<f64> = (0..300).map(|i| (i as f64 * h).sin()).collect();
        let f = SampledField::new(0.0, h, vals).unwrap();
        for &s in &[0.0, 1.234, 2.99] {
            let j = f.jet(s, 4).unwrap();
            assert!((j.derivative(1).unwrap() - s.cos()).abs() < 1e-10);
            assert!((j.derivative(3).unwrap() + s.cos()).abs() < 1e-5);
        }
    }

    #[test]
    fn supports_combine() {
        let a = Support::Interval(0.0, 1.0).union(Support::Interval(2.0, 3.0));
        assert_eq!(a, Support::Interval(0.0, 3.0));
        assert!(Support::Empty.union(a).within(0.0, 3.0));
        assert!(!a.union(Support::Unbounded).within(-10.0, 10.0));
    }
}
