//! Jets of spacetime-vector-valued functions, one scalar [`Jet`] per
//! component.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::Result;
use crate::jet::{Jet, JET_LEN};
use crate::minkowski::{Dim, FourVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorJet {
    dim: Dim,
    comps: [Jet; 4],
}

impl VectorJet {
    /// Components beyond `dim.n()` are ignored and stored as zero.
    pub fn new(dim: Dim, comps: [Jet; 4]) -> Self {
        let mut comps = comps;
        if dim == Dim::Three {
            comps[3] = Jet::constant(0.0, comps[0].len());
        }
        VectorJet { dim, comps }
    }

    pub fn constant(v: &FourVector, len: usize) -> Self {
        let c = v.components();
        let mut comps = [Jet::constant(0.0, len); 4];
        for (i, x) in c.iter().enumerate() {
            comps[i] = Jet::constant(*x, len);
        }
        VectorJet { dim: v.dim(), comps }
    }

    /// From raw derivatives `[X, X', X'', ...]`.
    pub fn from_derivatives(derivs: &[FourVector]) -> Self {
        assert!(!derivs.is_empty(), "at least the value is required");
        let dim = derivs[0].dim();
        let len = derivs.len().min(JET_LEN);
        let mut comps = [Jet::constant(0.0, len); 4];
        for (i, comp) in comps.iter_mut().enumerate().take(dim.n()) {
            let d: Vec<f64> = derivs[..len].iter().map(|v| v.get(i)).collect();
            *comp = Jet::from_derivatives(&d);
        }
        VectorJet { dim, comps }
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.comps[..self.dim.n()].iter().map(Jet::len).min().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn component(&self, i: usize) -> &Jet {
        &self.comps[i]
    }

    pub fn derivative(&self, k: usize) -> Result<FourVector> {
        let mut c = [0.0; 4];
        for (i, slot) in c.iter_mut().enumerate().take(self.dim.n()) {
            *slot = self.comps[i].derivative(k)?;
        }
        Ok(match self.dim {
            Dim::Four => FourVector::new(c[0], c[1], c[2], c[3]),
            Dim::Three => FourVector::new3(c[0], c[1], c[2]),
        })
    }

    pub fn value(&self) -> Result<FourVector> {
        self.derivative(0)
    }

    pub fn diff(&self) -> VectorJet {
        self.map(|j| j.diff())
    }

    pub fn truncate(&self, len: usize) -> VectorJet {
        self.map(|j| j.truncate(len))
    }

    /// Minkowski product, as a scalar jet.
    pub fn dot(&self, other: &VectorJet) -> Jet {
        assert_eq!(self.dim, other.dim, "dot of vector jets with different dimensions");
        let mut s = self.comps[0] * other.comps[0];
        for i in 1..self.dim.n() {
            s = s - self.comps[i] * other.comps[i];
        }
        s
    }

    /// Pointwise product with a scalar jet.
    pub fn scale_by(&self, f: &Jet) -> VectorJet {
        self.map(|j| *j * *f)
    }

    /// `self(inner(s))` componentwise.
    pub fn compose(&self, inner: &Jet) -> VectorJet {
        self.map(|j| j.compose(inner))
    }

    fn map(&self, f: impl Fn(&Jet) -> Jet) -> VectorJet {
        let mut comps = self.comps;
        for c in comps.iter_mut() {
            *c = f(c);
        }
        VectorJet { dim: self.dim, comps }
    }

    fn zip(&self, other: &VectorJet, f: impl Fn(Jet, Jet) -> Jet) -> VectorJet {
        assert_eq!(self.dim, other.dim, "combining vector jets with different dimensions");
        let mut comps = self.comps;
        for (c, o) in comps.iter_mut().zip(other.comps) {
            *c = f(*c, o);
        }
        VectorJet { dim: self.dim, comps }
    }
}

impl Add for VectorJet {
    type Output = VectorJet;
    fn add(self, rhs: VectorJet) -> VectorJet {
        self.zip(&rhs, |a, b| a + b)
    }
}

impl Sub for VectorJet {
    type Output = VectorJet;
    fn sub(self, rhs: VectorJet) -> VectorJet {
        self.zip(&rhs, |a, b| a - b)
    }
}

impl Neg for VectorJet {
    type Output = VectorJet;
    fn neg(self) -> VectorJet {
        self.map(|j| -*j)
    }
}

impl Mul<f64> for VectorJet {
    type Output = VectorJet;
    fn mul(self, s: f64) -> VectorJet {
        self.map(|j| j.scale(s))
    }
}

impl Mul<Jet> for VectorJet {
    type Output = VectorJet;
    fn mul(self, f: Jet) -> VectorJet {
        self.scale_by(&f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_of_null_polynomial_curve_vanishes() {
        // X' = (1 + s^2, 1 - s^2, 2s) is null for every s
        let s = Jet::variable(0.4, 6);
        let one = Jet::constant(1.0, 6);
        let v = VectorJet::new(Dim::Three, [one + s * s, one - s * s, s * 2.0, one]);
        let n = v.dot(&v);
        for k in 0..6 {
            assert!(n.derivative(k).unwrap().abs() < 1e-14);
        }
        assert_eq!(v.derivative(1).unwrap(), FourVector::new3(0.8, -0.8, 2.0));
    }

    #[test]
    fn from_derivatives_round_trip() {
        let d = [FourVector::new(1.0, 2.0, 3.0, 4.0), FourVector::new(0.5, 0.0, -1.0, 2.0)];
        let j = VectorJet::from_derivatives(&d);
        assert_eq!(j.len(), 2);
        assert_eq!(j.derivative(1).unwrap(), d[1]);
        assert!(j.derivative(2).is_err());
    }
}
