//! Minkowski-space linear algebra in an orthonormal basis with signature
//! (+, -, -, -).
//!
//! Every geometric object carries its spacetime dimension ([`Dim`]) at run
//! time. Fallible free functions (`dot`, `wedge`, the Levi-Civita
//! contractions) report a mismatch as an error; the arithmetic operators and
//! the [`FourVector::dot`] method treat a mismatch as a programming error and
//! panic.
//!
//! Levi-Civita convention: the fully covariant symbol is fixed by requiring
//! `eps(e+, e-, e1, e2) = +1` (and `eps(e+, e-, e1) = +1` in 2+1) for the
//! standard null frame `e+ = (1,1,0,0)/sqrt2`, `e- = (1,-1,0,0)/sqrt2`,
//! `e1 = (0,0,1,0)`, `e2 = (0,0,0,1)`. That frame has determinant -1 in the
//! orthonormal basis, so `eps_{0123} = -1` and `eps_{012} = -1` with all
//! indices down. Contractions produce covariant components which are then
//! raised with the metric, so every returned [`FourVector`] is contravariant.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spacetime dimension: 2+1 or 3+1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Dim {
    Three,
    Four,
}

impl Dim {
    pub fn n(self) -> usize {
        match self {
            Dim::Three => 3,
            Dim::Four => 4,
        }
    }

    pub fn from_n(n: usize) -> Result<Self> {
        match n {
            3 => Ok(Dim::Three),
            4 => Ok(Dim::Four),
            _ => Err(Error::InvalidParameter(format!("dimension must be 3 or 4, got {n}"))),
        }
    }

    pub fn check(self, other: Dim) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(self, other))
        }
    }
}

impl TryFrom<u8> for Dim {
    type Error = String;
    fn try_from(n: u8) -> std::result::Result<Self, String> {
        Dim::from_n(n as usize).map_err(|e| e.to_string())
    }
}

impl From<Dim> for u8 {
    fn from(d: Dim) -> u8 {
        d.n() as u8
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dim::Three => write!(f, "2+1"),
            Dim::Four => write!(f, "3+1"),
        }
    }
}

#[inline]
fn metric(i: usize) -> f64 {
    if i == 0 {
        1.0
    } else {
        -1.0
    }
}

/// A contravariant spacetime vector. In 2+1 mode the fourth slot is unused
/// and kept at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourVector {
    dim: Dim,
    c: [f64; 4],
}

impl FourVector {
    pub fn new(t: f64, x: f64, y: f64, z: f64) -> Self {
        FourVector { dim: Dim::Four, c: [t, x, y, z] }
    }

    pub fn new3(t: f64, x: f64, y: f64) -> Self {
        FourVector { dim: Dim::Three, c: [t, x, y, 0.0] }
    }

    pub fn zero(dim: Dim) -> Self {
        FourVector { dim, c: [0.0; 4] }
    }

    /// Builds a vector from `dim.n()` components.
    pub fn from_slice(dim: Dim, comps: &[f64]) -> Result<Self> {
        if comps.len() != dim.n() {
            return Err(Error::InvalidParameter(format!("expected {} components, got {}", dim.n(), comps.len())));
        }
        if comps.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("vector components"));
        }
        let mut c = [0.0; 4];
        c[..comps.len()].copy_from_slice(comps);
        Ok(FourVector { dim, c })
    }

    /// Unit basis vector along axis `i`.
    pub fn basis(dim: Dim, i: usize) -> Self {
        assert!(i < dim.n(), "axis {i} out of range for {dim}");
        let mut c = [0.0; 4];
        c[i] = 1.0;
        FourVector { dim, c }
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn components(&self) -> &[f64] {
        &self.c[..self.dim.n()]
    }

    pub fn get(&self, i: usize) -> f64 {
        self.components()[i]
    }

    /// Minkowski inner product. Panics on a dimension mismatch; use
    /// [`dot`] for the fallible form.
    pub fn dot(&self, other: &FourVector) -> f64 {
        assert_eq!(self.dim, other.dim, "dot of vectors with different dimensions");
        let mut s = self.c[0] * other.c[0];
        for i in 1..self.dim.n() {
            s -= self.c[i] * other.c[i];
        }
        s
    }

    pub fn norm2(&self) -> f64 {
        self.dot(self)
    }

    /// Covariant components `x_mu = eta_{mu nu} x^nu`.
    pub fn lower(&self) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (i, o) in out.iter_mut().enumerate().take(self.dim.n()) {
            *o = metric(i) * self.c[i];
        }
        out
    }

    /// Raises covariant components back to a contravariant vector.
    pub fn raise(dim: Dim, cov: [f64; 4]) -> Self {
        let mut c = [0.0; 4];
        for (i, ci) in c.iter_mut().enumerate().take(dim.n()) {
            *ci = metric(i) * cov[i];
        }
        FourVector { dim, c }
    }

    pub fn euclidean_norm(&self) -> f64 {
        self.components().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.components().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.components().iter().all(|v| v.is_finite())
    }

    /// Embeds a 2+1 vector in 3+1 with a vanishing z component.
    pub fn embed(&self) -> FourVector {
        FourVector { dim: Dim::Four, c: self.c }
    }
}

impl Add for FourVector {
    type Output = FourVector;
    fn add(self, rhs: FourVector) -> FourVector {
        assert_eq!(self.dim, rhs.dim, "adding vectors with different dimensions");
        let mut c = self.c;
        for (a, b) in c.iter_mut().zip(rhs.c) {
            *a += b;
        }
        FourVector { dim: self.dim, c }
    }
}

impl Sub for FourVector {
    type Output = FourVector;
    fn sub(self, rhs: FourVector) -> FourVector {
        self + (-rhs)
    }
}

impl AddAssign for FourVector {
    fn add_assign(&mut self, rhs: FourVector) {
        *self = *self + rhs;
    }
}

impl SubAssign for FourVector {
    fn sub_assign(&mut self, rhs: FourVector) {
        *self = *self - rhs;
    }
}

impl Neg for FourVector {
    type Output = FourVector;
    fn neg(self) -> FourVector {
        self * -1.0
    }
}

impl Mul<f64> for FourVector {
    type Output = FourVector;
    fn mul(self, s: f64) -> FourVector {
        let mut c = self.c;
        c.iter_mut().for_each(|v| *v *= s);
        FourVector { dim: self.dim, c }
    }
}

impl Mul<FourVector> for f64 {
    type Output = FourVector;
    fn mul(self, v: FourVector) -> FourVector {
        v * self
    }
}

impl Div<f64> for FourVector {
    type Output = FourVector;
    fn div(self, s: f64) -> FourVector {
        self * (1.0 / s)
    }
}

/// Minkowski inner product `a^0 b^0 - sum_i a^i b^i`.
pub fn dot(a: &FourVector, b: &FourVector) -> Result<f64> {
    a.dim.check(b.dim)?;
    Ok(a.dot(b))
}

const PAIRS4: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
const PAIRS3: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

fn pair_index(mu: usize, nu: usize) -> usize {
    debug_assert!(mu < nu);
    match (mu, nu) {
        (0, 1) => 0,
        (0, 2) => 1,
        (0, 3) => 2,
        (1, 2) => 3,
        (1, 3) => 4,
        (2, 3) => 5,
        _ => unreachable!(),
    }
}

/// Antisymmetric rank-2 contravariant tensor `M^{mu nu}`, stored as its
/// upper triangle so that antisymmetry holds by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiVector {
    dim: Dim,
    upper: [f64; 6],
}

impl BiVector {
    pub fn zero(dim: Dim) -> Self {
        BiVector { dim, upper: [0.0; 6] }
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn get(&self, mu: usize, nu: usize) -> f64 {
        let n = self.dim.n();
        assert!(mu < n && nu < n, "bivector index out of range");
        match mu.cmp(&nu) {
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Less => self.upper[pair_index(mu, nu)],
            std::cmp::Ordering::Greater => -self.upper[pair_index(nu, mu)],
        }
    }

    /// Index pairs `(mu, nu)`, `mu < nu`, in storage order.
    pub fn index_pairs(dim: Dim) -> &'static [(usize, usize)] {
        match dim {
            Dim::Three => &PAIRS3,
            Dim::Four => &PAIRS4,
        }
    }

    /// Independent components in the order of [`BiVector::index_pairs`].
    pub fn components(&self) -> Vec<f64> {
        Self::index_pairs(self.dim).iter().map(|&(m, n)| self.get(m, n)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.upper.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Add for BiVector {
    type Output = BiVector;
    fn add(self, rhs: BiVector) -> BiVector {
        assert_eq!(self.dim, rhs.dim, "adding bivectors with different dimensions");
        let mut upper = self.upper;
        for (a, b) in upper.iter_mut().zip(rhs.upper) {
            *a += b;
        }
        BiVector { dim: self.dim, upper }
    }
}

impl Sub for BiVector {
    type Output = BiVector;
    fn sub(self, rhs: BiVector) -> BiVector {
        self + rhs * -1.0
    }
}

impl Mul<f64> for BiVector {
    type Output = BiVector;
    fn mul(self, s: f64) -> BiVector {
        let mut upper = self.upper;
        upper.iter_mut().for_each(|v| *v *= s);
        BiVector { dim: self.dim, upper }
    }
}

impl Mul<BiVector> for f64 {
    type Output = BiVector;
    fn mul(self, b: BiVector) -> BiVector {
        b * self
    }
}

/// `a^{[mu} b^{nu]} = (a^mu b^nu - a^nu b^mu) / 2`.
///
/// The bracket carries the factor 1/2 everywhere an angular momentum is
/// assembled; Casimir invariants do not depend on this weight as long as it
/// is used consistently.
pub fn wedge(a: &FourVector, b: &FourVector) -> Result<BiVector> {
    a.dim.check(b.dim)?;
    Ok(wedge_unchecked(a, b))
}

pub(crate) fn wedge_unchecked(a: &FourVector, b: &FourVector) -> BiVector {
    assert_eq!(a.dim, b.dim, "wedge of vectors with different dimensions");
    let mut upper = [0.0; 6];
    for &(m, n) in BiVector::index_pairs(a.dim) {
        upper[pair_index(m, n)] = 0.5 * (a.c[m] * b.c[n] - a.c[n] * b.c[m]);
    }
    BiVector { dim: a.dim, upper }
}

/// Sign of the permutation `idx` of `0..idx.len()`, or 0 when an index
/// repeats.
pub fn permutation_sign(idx: &[usize]) -> f64 {
    let mut sign = 1.0;
    for i in 0..idx.len() {
        for j in i + 1..idx.len() {
            if idx[i] == idx[j] {
                return 0.0;
            }
            if idx[i] > idx[j] {
                sign = -sign;
            }
        }
    }
    sign
}

/// Covariant Levi-Civita symbol with `eps_{0123} = -1` (`eps_{012} = -1`).
pub fn levi_civita(idx: &[usize]) -> f64 {
    -permutation_sign(idx)
}

/// `eps_{mu rho sigma} P^rho X^sigma` in 2+1, returned with the index raised.
pub fn levi_civita_contract3(p: &FourVector, x: &FourVector) -> Result<FourVector> {
    require(Dim::Three, p.dim)?;
    p.dim.check(x.dim)?;
    let mut cov = [0.0; 4];
    for (mu, out) in cov.iter_mut().enumerate().take(3) {
        for rho in 0..3 {
            for sigma in 0..3 {
                *out += levi_civita(&[mu, rho, sigma]) * p.c[rho] * x.c[sigma];
            }
        }
    }
    Ok(FourVector::raise(Dim::Three, cov))
}

/// `eps_{mu rho sigma} M^{rho sigma}` in 2+1, index raised.
pub fn levi_civita_dual3(m: &BiVector) -> Result<FourVector> {
    require(Dim::Three, m.dim)?;
    let mut cov = [0.0; 4];
    for (mu, out) in cov.iter_mut().enumerate().take(3) {
        for rho in 0..3 {
            for sigma in 0..3 {
                *out += levi_civita(&[mu, rho, sigma]) * m.get(rho, sigma);
            }
        }
    }
    Ok(FourVector::raise(Dim::Three, cov))
}

/// `eps_{mu nu rho sigma} P^nu M^{rho sigma}` in 3+1, index raised.
pub fn levi_civita_contract4(p: &FourVector, m: &BiVector) -> Result<FourVector> {
    require(Dim::Four, p.dim)?;
    p.dim.check(m.dim)?;
    let mut cov = [0.0; 4];
    for (mu, out) in cov.iter_mut().enumerate() {
        for nu in 0..4 {
            if nu == mu {
                continue;
            }
            for rho in 0..4 {
                for sigma in 0..4 {
                    let e = levi_civita(&[mu, nu, rho, sigma]);
                    if e != 0.0 {
                        *out += e * p.c[nu] * m.get(rho, sigma);
                    }
                }
            }
        }
    }
    Ok(FourVector::raise(Dim::Four, cov))
}

/// Full contraction `eps(a, b, c, d)` with all four slots filled by vectors.
pub fn levi_civita_full4(a: &FourVector, b: &FourVector, c: &FourVector, d: &FourVector) -> Result<f64> {
    for v in [a, b, c, d] {
        require(Dim::Four, v.dim)?;
    }
    let mut s = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    let e = levi_civita(&[i, j, k, l]);
                    if e != 0.0 {
                        s += e * a.c[i] * b.c[j] * c.c[k] * d.c[l];
                    }
                }
            }
        }
    }
    Ok(s)
}

/// Full contraction `eps(a, b, c)` in 2+1.
pub fn levi_civita_full3(a: &FourVector, b: &FourVector, c: &FourVector) -> Result<f64> {
    for v in [a, b, c] {
        require(Dim::Three, v.dim)?;
    }
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                s += levi_civita(&[i, j, k]) * a.c[i] * b.c[j] * c.c[k];
            }
        }
    }
    Ok(s)
}

/// The unique unit spacelike vector orthogonal to `e+`, `e-`, `e1` with
/// `eps(e+, e-, e1, e2) = +1`: `e2^mu = eta^{mu nu} eps_{nu a b c} e+^a e-^b e1^c`.
pub fn complete_orientation(ep: &FourVector, em: &FourVector, e1: &FourVector) -> Result<FourVector> {
    for v in [ep, em, e1] {
        require(Dim::Four, v.dim)?;
    }
    let mut cov = [0.0; 4];
    for (mu, out) in cov.iter_mut().enumerate() {
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    let e = levi_civita(&[mu, a, b, c]);
                    if e != 0.0 {
                        *out += e * ep.c[a] * em.c[b] * e1.c[c];
                    }
                }
            }
        }
    }
    Ok(FourVector::raise(Dim::Four, cov))
}

fn require(expected: Dim, found: Dim) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::WrongMode { expected, found })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame4() -> [FourVector; 4] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        [
            FourVector::new(s, s, 0.0, 0.0),
            FourVector::new(s, -s, 0.0, 0.0),
            FourVector::new(0.0, 0.0, 1.0, 0.0),
            FourVector::new(0.0, 0.0, 0.0, 1.0),
        ]
    }

    #[test]
    fn dot_examples() {
        let t = FourVector::new(1.0, 0.0, 0.0, 0.0);
        assert_eq!(dot(&t, &t).unwrap(), 1.0);
        let n = FourVector::new(1.0, 1.0, 0.0, 0.0);
        assert_eq!(dot(&n, &n).unwrap(), 0.0);
        let [ep, em, ..] = frame4();
        assert!((ep.dot(&em) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dot_rejects_mixed_dimensions() {
        let a = FourVector::new(1.0, 0.0, 0.0, 0.0);
        let b = FourVector::new3(1.0, 0.0, 0.0);
        assert!(matches!(dot(&a, &b), Err(Error::DimensionMismatch(..))));
        assert!(wedge(&a, &b).is_err());
    }

    #[test]
    fn gram_table_of_standard_frame() {
        let f = frame4();
        let expected = [[0.0, 1.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], [0.0, 0.0, -1.0, 0.0], [0.0, 0.0, 0.0, -1.0]];
        for i in 0..4 {
            for j in 0..4 {
                assert!((f[i].dot(&f[j]) - expected[i][j]).abs() < 1e-15, "({i},{j})");
            }
        }
    }

    #[test]
    fn wedge_examples() {
        let a = FourVector::new(1.0, 0.0, 0.0, 0.0);
        let b = FourVector::new(0.0, 1.0, 0.0, 0.0);
        let w = wedge(&a, &b).unwrap();
        assert_eq!(w.get(0, 1), 0.5);
        assert_eq!(w.get(1, 0), -0.5);
        let v = FourVector::new(0.3, -1.2, 2.0, 0.1);
        assert_eq!(wedge(&v, &v).unwrap().max_abs(), 0.0);
        let ab = wedge(&v, &a).unwrap();
        let ba = wedge(&a, &v).unwrap();
        assert_eq!((ab + ba).max_abs(), 0.0);
    }

    #[test]
    fn orientation_conventions() {
        let [ep, em, e1, e2] = frame4();
        assert!((levi_civita_full4(&ep, &em, &e1, &e2).unwrap() - 1.0).abs() < 1e-15);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let (p3, m3, o3) = (FourVector::new3(s, s, 0.0), FourVector::new3(s, -s, 0.0), FourVector::new3(0.0, 0.0, 1.0));
        assert!((levi_civita_full3(&p3, &m3, &o3).unwrap() - 1.0).abs() < 1e-15);
        let c = complete_orientation(&ep, &em, &e1).unwrap();
        assert!((c - e2).max_abs() < 1e-15);
    }

    #[test]
    fn contract3_spot_value() {
        // eps_{mu 0 1} with eps_{012} = -1 leaves only mu = 2: cov_2 = -1,
        // raised component 2 is +1.
        let p = FourVector::new3(1.0, 0.0, 0.0);
        let x = FourVector::new3(0.0, 1.0, 0.0);
        let j = levi_civita_contract3(&p, &x).unwrap();
        assert_eq!(j.components(), &[0.0, 0.0, 1.0]);
        assert_eq!(levi_civita_contract3(&p, &p).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn contractions_check_mode() {
        let p4 = FourVector::new(1.0, 0.0, 0.0, 0.0);
        let p3 = FourVector::new3(1.0, 0.0, 0.0);
        assert!(matches!(levi_civita_contract3(&p4, &p4), Err(Error::WrongMode { .. })));
        let m3 = BiVector::zero(Dim::Three);
        assert!(levi_civita_contract4(&p3, &m3).is_err());
    }

    #[test]
    fn contract4_with_wedge_of_p_is_orthogonal_to_p() {
        let p = FourVector::new(2.0, 0.3, -0.7, 1.1);
        let q = FourVector::new(-0.4, 1.5, 0.2, 0.9);
        let s = levi_civita_contract4(&p, &wedge(&p, &q).unwrap()).unwrap();
        assert!(s.max_abs() < 1e-14);
        let r = FourVector::new(0.1, 0.2, 0.3, -0.5);
        let s = levi_civita_contract4(&p, &wedge(&q, &r).unwrap()).unwrap();
        assert!(s.dot(&p).abs() < 1e-13);
    }
}
