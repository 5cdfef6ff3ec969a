//! Null curves, pseudo-arclength and Frenet-Serret frame extraction.
//!
//! A [`CurveSource`] delivers `X(lambda)` together with its
//! `lambda`-derivatives as a [`VectorJet`]. Pseudo-arclength derivatives
//! follow from the chain rule `d/dsigma = v^-1 d/dlambda` with the density
//! `v = (-X.. . X..)^(1/4)`, carried out in jet arithmetic, so every
//! derivative available in `lambda` turns into one in `sigma` without
//! finite differencing.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{SAMPLE_MAX_ORDER, SAMPLE_WINDOW};
use crate::jet::{Jet, JET_LEN};
use crate::minkowski::{complete_orientation, Dim, FourVector};
use crate::quadrature::integrate_adaptive;
use crate::stencil::fd_weights;
use crate::stencil::window_start;
use crate::vector_jet::VectorJet;

/// Extraction tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Bound on `|X'.X'|` relative to the squared Euclidean size of `X'`.
    pub tol_null: f64,
    /// Bound on the Gram residual of an extracted frame.
    pub tol_frame: f64,
    /// Below this `kappa2` the fourth leg is fixed by orientation.
    pub tol_k2: f64,
    /// Negative `kappa2` radicands down to `-tol_radicand * scale` are
    /// clamped to zero.
    pub tol_radicand: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { tol_null: 1e-10, tol_frame: 1e-9, tol_k2: 1e-6, tol_radicand: 1e-9 }
    }
}

impl Tolerances {
    /// Loosened tolerances for curves known only through samples.
    pub fn sampled() -> Self {
        Tolerances { tol_null: 1e-3, tol_frame: 1e-3, tol_k2: 1e-3, tol_radicand: 1e-3 }
    }
}

/// The null tetrad `{e+, e-, e1, e2}`; `e2` is absent in 2+1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullFrame {
    pub e_plus: FourVector,
    pub e_minus: FourVector,
    pub e1: FourVector,
    pub e2: Option<FourVector>,
}

impl NullFrame {
    /// `e+ = (1,1,0,0)/sqrt2`, `e- = (1,-1,0,0)/sqrt2`, `e1 = (0,0,1,0)`,
    /// `e2 = (0,0,0,1)`.
    pub fn standard(dim: Dim) -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        match dim {
            Dim::Four => NullFrame {
                e_plus: FourVector::new(r, r, 0.0, 0.0),
                e_minus: FourVector::new(r, -r, 0.0, 0.0),
                e1: FourVector::new(0.0, 0.0, 1.0, 0.0),
                e2: Some(FourVector::new(0.0, 0.0, 0.0, 1.0)),
            },
            Dim::Three => NullFrame {
                e_plus: FourVector::new3(r, r, 0.0),
                e_minus: FourVector::new3(r, -r, 0.0),
                e1: FourVector::new3(0.0, 0.0, 1.0),
                e2: None,
            },
        }
    }

    pub fn dim(&self) -> Dim {
        self.e_plus.dim()
    }

    /// Legs in the order `e+, e-, e1, e2`.
    pub fn legs(&self) -> Vec<FourVector> {
        let mut v = vec![self.e_plus, self.e_minus, self.e1];
        v.extend(self.e2);
        v
    }

    /// Largest deviation from the null-frame Gram table.
    pub fn gram_residual(&self) -> f64 {
        let legs = self.legs();
        // target products in the order e+, e-, e1, e2
        let target = |i: usize, j: usize| match (i.min(j), i.max(j)) {
            (0, 1) => 1.0,
            (2, 2) | (3, 3) => -1.0,
            _ => 0.0,
        };
        let mut r: f64 = 0.0;
        for i in 0..legs.len() {
            for j in i..legs.len() {
                r = r.max((legs[i].dot(&legs[j]) - target(i, j)).abs());
            }
        }
        r
    }

    pub fn is_finite(&self) -> bool {
        self.legs().iter().all(FourVector::is_finite)
    }

    /// Applies a linear map to every leg.
    pub fn map(&self, f: impl Fn(&FourVector) -> FourVector) -> NullFrame {
        NullFrame { e_plus: f(&self.e_plus), e_minus: f(&self.e_minus), e1: f(&self.e1), e2: self.e2.as_ref().map(f) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvaturePair {
    pub kappa1: f64,
    pub kappa2: f64,
}

/// A parametrized curve with derivative access.
pub trait CurveSource: Send + Sync {
    fn dim(&self) -> Dim;

    /// Parameter interval `[lambda0, lambda1]`.
    fn domain(&self) -> (f64, f64);

    /// Highest `lambda`-derivative available.
    fn max_order(&self) -> usize;

    /// `X` and its derivatives at `lambda`, up to `len` coefficients.
    fn jet(&self, lambda: f64, len: usize) -> Result<VectorJet>;
}

fn check_param(lambda: f64, (lo, hi): (f64, f64)) -> Result<()> {
    crate::profile::check_domain(lambda, (lo, hi))
}

type CurveFn = dyn Fn(&Jet) -> VectorJet + Send + Sync;

/// A closed-form curve written in jet arithmetic.
#[derive(Clone)]
pub struct AnalyticCurve {
    dim: Dim,
    domain: (f64, f64),
    f: Arc<CurveFn>,
}

impl AnalyticCurve {
    pub fn new(dim: Dim, domain: (f64, f64), f: impl Fn(&Jet) -> VectorJet + Send + Sync + 'static) -> Self {
        AnalyticCurve { dim, domain, f: Arc::new(f) }
    }
}

impl CurveSource for AnalyticCurve {
    fn dim(&self) -> Dim {
        self.dim
    }

    fn domain(&self) -> (f64, f64) {
        self.domain
    }

    fn max_order(&self) -> usize {
        JET_LEN - 1
    }

    fn jet(&self, lambda: f64, len: usize) -> Result<VectorJet> {
        check_param(lambda, self.domain)?;
        let j = (self.f)(&Jet::variable(lambda, len.min(JET_LEN)));
        if j.dim() != self.dim {
            return Err(Error::DimensionMismatch(self.dim, j.dim()));
        }
        Ok(j)
    }
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &[f64], b: &[f64], sb: f64) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] += sb * y;
    }
    out
}

fn poly_integrate(a: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0];
    out.extend(a.iter().enumerate().map(|(i, c)| c / (i + 1) as f64));
    out
}

fn poly_jet(coeffs: &[f64], s: &Jet) -> Jet {
    let mut acc = Jet::constant(0.0, s.len());
    for c in coeffs.iter().rev() {
        acc = acc * *s + *c;
    }
    acc
}

/// A polynomial null curve built from a pair of complex polynomials
/// `(a, b)`: the tangent is the null vector
/// `(|a|^2 + |b|^2, 2 Re(a b*), 2 Im(a b*), |a|^2 - |b|^2)` (in 2+1 the
/// polynomials are real and the `Im` slot is dropped). The curve is
/// degenerate exactly where the Wronskian `a b' - a' b` vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialNullCurve {
    dim: Dim,
    domain: (f64, f64),
    coords: Vec<Vec<f64>>,
}

impl PolynomialNullCurve {
    /// `a = a_re + i a_im`, `b = b_re + i b_im` as coefficient lists; the
    /// imaginary parts must be empty in 2+1.
    pub fn new(dim: Dim, a: (Vec<f64>, Vec<f64>), b: (Vec<f64>, Vec<f64>), domain: (f64, f64)) -> Result<Self> {
        let (ar, ai) = a;
        let (br, bi) = b;
        if dim == Dim::Three && (ai.iter().any(|c| *c != 0.0) || bi.iter().any(|c| *c != 0.0)) {
            return Err(Error::InvalidParameter("2+1 null curves need real polynomials".into()));
        }
        let abs2 = |re: &[f64], im: &[f64]| poly_add(&poly_mul(re, re), &poly_mul(im, im), 1.0);
        let a2 = abs2(&ar, &ai);
        let b2 = abs2(&br, &bi);
        // a b* = (ar br + ai bi) + i (ai br - ar bi)
        let re = poly_add(&poly_mul(&ar, &br), &poly_mul(&ai, &bi), 1.0);
        let im = poly_add(&poly_mul(&ai, &br), &poly_mul(&ar, &bi), -1.0);
        let t = poly_add(&a2, &b2, 1.0);
        let z = poly_add(&a2, &b2, -1.0);
        let x = re.iter().map(|c| 2.0 * c).collect::<Vec<_>>();
        let y = im.iter().map(|c| 2.0 * c).collect::<Vec<_>>();
        let tangent = match dim {
            Dim::Four => vec![t, x, y, z],
            Dim::Three => vec![t, x, z],
        };
        let coords = tangent.iter().map(|p| poly_integrate(p)).collect();
        Ok(PolynomialNullCurve { dim, domain, coords })
    }
}

impl CurveSource for PolynomialNullCurve {
    fn dim(&self) -> Dim {
        self.dim
    }

    fn domain(&self) -> (f64, f64) {
        self.domain
    }

    fn max_order(&self) -> usize {
        JET_LEN - 1
    }

    fn jet(&self, lambda: f64, len: usize) -> Result<VectorJet> {
        check_param(lambda, self.domain)?;
        let s = Jet::variable(lambda, len.min(JET_LEN));
        let mut comps = [Jet::constant(0.0, s.len()); 4];
        for (c, p) in comps.iter_mut().zip(&self.coords) {
            *c = poly_jet(p, &s);
        }
        Ok(VectorJet::new(self.dim, comps))
    }
}

/// A curve known at discrete parameter values, optionally with some of
/// its derivatives at each node. Derivatives beyond those stored come from
/// finite-difference weights on a local window of nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve {
    dim: Dim,
    nodes: Vec<f64>,
    /// `stored[k][i]`: component data of the `k`-th derivative at node `i`.
    stored: Vec<Vec<[f64; 4]>>,
}

impl SampledCurve {
    /// Positions only.
    pub fn from_points(dim: Dim, lambdas: Vec<f64>, points: Vec<FourVector>) -> Result<Self> {
        let derivs = points.into_iter().map(|p| vec![p]).collect();
        Self::from_jets(dim, lambdas, derivs)
    }

    /// `derivs[i] = [X, X., X.., ...]` at node `i`; every node must carry the
    /// same number of derivatives.
    pub fn from_jets(dim: Dim, lambdas: Vec<f64>, derivs: Vec<Vec<FourVector>>) -> Result<Self> {
        if lambdas.len() != derivs.len() {
            return Err(Error::InvalidParameter("sample parameter and value counts differ".into()));
        }
        if lambdas.len() < SAMPLE_WINDOW {
            return Err(Error::InvalidParameter(format!(
                "need at least {SAMPLE_WINDOW} samples, got {}",
                lambdas.len()
            )));
        }
        if lambdas.windows(2).any(|w| !(w[1] > w[0])) || lambdas.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidParameter("sample parameters must be finite and strictly increasing".into()));
        }
        let depth = derivs[0].len();
        if depth == 0 || derivs.iter().any(|d| d.len() != depth) {
            return Err(Error::InvalidParameter("every sample needs the same non-empty derivative list".into()));
        }
        let mut stored = vec![Vec::with_capacity(lambdas.len()); depth];
        for d in &derivs {
            for (k, v) in d.iter().enumerate() {
                if v.dim() != dim {
                    return Err(Error::DimensionMismatch(dim, v.dim()));
                }
                if !v.is_finite() {
                    return Err(Error::NonFinite("curve samples"));
                }
                let mut c = [0.0; 4];
                c[..dim.n()].copy_from_slice(v.components());
                stored[k].push(c);
            }
        }
        Ok(SampledCurve { dim, nodes: lambdas, stored })
    }
}

impl CurveSource for SampledCurve {
    fn dim(&self) -> Dim {
        self.dim
    }

    fn domain(&self) -> (f64, f64) {
        (self.nodes[0], *self.nodes.last().unwrap())
    }

    fn max_order(&self) -> usize {
        (self.stored.len() - 1 + SAMPLE_MAX_ORDER).min(JET_LEN - 1)
    }

    fn jet(&self, lambda: f64, len: usize) -> Result<VectorJet> {
        check_param(lambda, self.domain())?;
        let len = len.min(self.max_order() + 1);
        let top = self.stored.len() - 1;
        let start = window_start(&self.nodes, lambda, SAMPLE_WINDOW);
        let window = &self.nodes[start..start + SAMPLE_WINDOW.min(self.nodes.len())];
        let extra = len.saturating_sub(top + 1);
        let weights = fd_weights(lambda, window, extra);
        let mut derivs = Vec::with_capacity(len);
        for k in 0..len {
            // interpolate stored derivatives, differentiate the highest one
            let (src, order) = if k <= top { (k, 0) } else { (top, k - top) };
            let mut c = [0.0; 4];
            for (w, node) in weights[order].iter().zip(&self.stored[src][start..]) {
                for i in 0..4 {
                    c[i] += w * node[i];
                }
            }
            derivs.push(match self.dim {
                Dim::Four => FourVector::new(c[0], c[1], c[2], c[3]),
                Dim::Three => FourVector::new3(c[0], c[1], c[2]),
            });
        }
        Ok(VectorJet::from_derivatives(&derivs))
    }
}

type ParamFn = dyn Fn(&Jet) -> Jet + Send + Sync;

/// `X(lambda(mu))` for a smooth increasing parameter change `lambda(mu)`.
#[derive(Clone)]
pub struct Reparametrized {
    inner: Arc<dyn CurveSource>,
    domain: (f64, f64),
    map: Arc<ParamFn>,
}

impl Reparametrized {
    pub fn new(
        inner: Arc<dyn CurveSource>,
        domain: (f64, f64),
        map: impl Fn(&Jet) -> Jet + Send + Sync + 'static,
    ) -> Self {
        Reparametrized { inner, domain, map: Arc::new(map) }
    }

    /// The inner parameter corresponding to `mu`.
    pub fn inner_parameter(&self, mu: f64) -> f64 {
        (self.map)(&Jet::constant(mu, 1)).coefficient(0)
    }
}

impl CurveSource for Reparametrized {
    fn dim(&self) -> Dim {
        self.inner.dim()
    }

    fn domain(&self) -> (f64, f64) {
        self.domain
    }

    fn max_order(&self) -> usize {
        self.inner.max_order()
    }

    fn jet(&self, mu: f64, len: usize) -> Result<VectorJet> {
        check_param(mu, self.domain)?;
        let lam = (self.map)(&Jet::variable(mu, len.min(JET_LEN)));
        Ok(self.inner.jet(lam.value()?, len)?.compose(&lam))
    }
}

fn require_order(src: &dyn CurveSource, needed: usize) -> Result<()> {
    if src.max_order() < needed {
        return Err(Error::DerivativeUnavailable { needed, available: src.max_order() });
    }
    Ok(())
}

/// Jet of `v = (-X.. . X..)^(1/4)` with `len` coefficients, from a curve jet
/// with at least `len + 2`.
pub(crate) fn density_jet(x: &VectorJet, lambda: f64) -> Result<Jet> {
    let acc = x.diff().diff();
    let w = -acc.dot(&acc);
    let w0 = w.value()?;
    if !(w0 > 0.0) || !w0.is_finite() {
        return Err(Error::DegenerateCurve { lambda });
    }
    Ok(w.powf(0.25))
}

/// `dsigma/dlambda = (-X.. . X..)^(1/4)`.
pub fn pseudo_arclength_density(src: &dyn CurveSource, lambda: f64) -> Result<f64> {
    require_order(src, 2)?;
    density_jet(&src.jet(lambda, 3)?, lambda)?.value()
}

/// `[X', X'', ..., X^(order)]` with respect to pseudo-arclength at `lambda`.
/// Needs `order + 1` derivatives in `lambda`.
pub fn sigma_derivatives(src: &dyn CurveSource, lambda: f64, order: usize) -> Result<Vec<FourVector>> {
    if order == 0 || order > 4 {
        return Err(Error::InvalidParameter(format!("sigma derivative order must be 1..=4, got {order}")));
    }
    require_order(src, order + 1)?;
    sigma_derivatives_of(&src.jet(lambda, order + 2)?, lambda, order)
}

/// Chain rule on an explicit curve jet (at least `order + 2` coefficients).
pub(crate) fn sigma_derivatives_of(x: &VectorJet, lambda: f64, order: usize) -> Result<Vec<FourVector>> {
    let u = density_jet(x, lambda)?.recip();
    let mut cur = x.diff().scale_by(&u);
    let mut out = Vec::with_capacity(order);
    for _ in 0..order {
        out.push(cur.value()?);
        cur = cur.diff().scale_by(&u);
    }
    Ok(out)
}

/// Frame and curvatures from the `sigma`-derivatives `X'..X''''`
/// (`X'..X'''` in 2+1). `at` is only used to locate errors.
pub(crate) fn frame_from_derivatives(
    d: &[FourVector],
    dim: Dim,
    tol: &Tolerances,
    at: f64,
) -> Result<(NullFrame, CurvaturePair)> {
    let (x1, x2, x3) = (d[0], d[1], d[2]);
    let e_plus = x1;
    let e1 = x2;
    let kappa1 = 0.5 * x3.dot(&x3);
    let e_minus = x3 - e_plus * kappa1;
    let (e2, kappa2) = match dim {
        Dim::Three => (None, 0.0),
        Dim::Four => {
            let x4 = d[3];
            let a = x4.dot(&x4);
            let b = x3.dot(&x3);
            let radicand = -a - b * b;
            let scale = a.abs().max(b * b).max(1.0);
            if radicand < -tol.tol_radicand * scale {
                return Err(Error::NegativeRadicand { lambda: at, radicand });
            }
            let kappa2 = radicand.max(0.0).sqrt();
            let e2 = if kappa2 > tol.tol_k2 {
                let dk1 = x3.dot(&x4);
                (x4 - e_plus * dk1 - e1 * (2.0 * kappa1)) / kappa2
            } else {
                complete_orientation(&e_plus, &e_minus, &e1)?
            };
            (Some(e2), kappa2)
        }
    };
    let frame = NullFrame { e_plus, e_minus, e1, e2 };
    if !frame.is_finite() {
        return Err(Error::NonFinite("extracted frame"));
    }
    let residual = frame.gram_residual();
    if residual > tol.tol_frame {
        return Err(Error::ExtractionFailure { lambda: at, residual });
    }
    Ok((frame, CurvaturePair { kappa1, kappa2 }))
}

fn check_null(x: &VectorJet, lambda: f64, tol: &Tolerances) -> Result<()> {
    let v = x.derivative(1)?;
    let violation = v.dot(&v).abs();
    if violation > tol.tol_null * v.euclidean_norm().powi(2) {
        return Err(Error::NotNull { lambda, violation });
    }
    Ok(())
}

fn frame_order(dim: Dim) -> usize {
    match dim {
        Dim::Three => 3,
        Dim::Four => 4,
    }
}

/// Frame and curvatures at parameter value `lambda`.
pub fn frame_at_lambda(src: &dyn CurveSource, lambda: f64, tol: &Tolerances) -> Result<(NullFrame, CurvaturePair)> {
    let order = frame_order(src.dim());
    require_order(src, order + 1)?;
    let x = src.jet(lambda, order + 2)?;
    check_null(&x, lambda, tol)?;
    let d = sigma_derivatives_of(&x, lambda, order)?;
    frame_from_derivatives(&d, src.dim(), tol, lambda)
}

/// Frame and curvatures at pseudo-arclength `sigma` along `map`.
pub fn frame_at(map: &ArclengthMap, sigma: f64, tol: &Tolerances) -> Result<(NullFrame, CurvaturePair)> {
    let lambda = map.lambda_of(sigma)?;
    frame_at_lambda(map.source().as_ref(), lambda, tol)
}

/// Monotone correspondence between the curve parameter and
/// pseudo-arclength measured from the start of the domain.
#[derive(Clone)]
pub struct ArclengthMap {
    src: Arc<dyn CurveSource>,
    knots: Vec<f64>,
    sigma: Vec<f64>,
    tol: f64,
}

const MAP_KNOTS: usize = 256;

impl ArclengthMap {
    pub fn source(&self) -> &Arc<dyn CurveSource> {
        &self.src
    }

    /// Total pseudo-arclength of the domain.
    pub fn total(&self) -> f64 {
        *self.sigma.last().unwrap()
    }

    fn integral(&self, a: f64, b: f64) -> Result<f64> {
        let src = self.src.as_ref();
        integrate_adaptive(|l| pseudo_arclength_density(src, l), a, b, self.tol)
    }

    fn interval(&self, lambda: f64) -> usize {
        self.knots.partition_point(|&k| k <= lambda).clamp(1, self.knots.len() - 1) - 1
    }

    pub fn sigma_of(&self, lambda: f64) -> Result<f64> {
        check_param(lambda, self.src.domain())?;
        let i = self.interval(lambda);
        Ok(self.sigma[i] + self.integral(self.knots[i], lambda)?)
    }

    /// Inverse map by safeguarded Newton iteration inside the bracketing knot
    /// interval.
    pub fn lambda_of(&self, sigma: f64) -> Result<f64> {
        let total = self.total();
        let slack = 1e-12 * total.max(1.0);
        if !(sigma >= -slack && sigma <= total + slack) {
            return Err(Error::OutOfDomain { value: sigma, lo: 0.0, hi: total });
        }
        let i = self.sigma.partition_point(|&s| s <= sigma).clamp(1, self.sigma.len() - 1) - 1;
        let (mut lo, mut hi) = (self.knots[i], self.knots[i + 1]);
        let (s_lo, s_hi) = (self.sigma[i], self.sigma[i + 1]);
        let mut lam = lo + (hi - lo) * ((sigma - s_lo) / (s_hi - s_lo)).clamp(0.0, 1.0);
        let range = self.knots.last().unwrap() - self.knots[0];
        for _ in 0..60 {
            let f = self.sigma[i] + self.integral(self.knots[i], lam)? - sigma;
            if f > 0.0 {
                hi = lam;
            } else {
                lo = lam;
            }
            let v = pseudo_arclength_density(self.src.as_ref(), lam)?;
            let mut next = lam - f / v;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let done = (next - lam).abs() <= 1e-15 * range.max(1.0);
            lam = next;
            if done || hi - lo <= 1e-15 * range.max(1.0) {
                break;
            }
        }
        Ok(lam)
    }
}

/// Tabulates `sigma(lambda)` over the whole domain by adaptive quadrature of
/// the density.
pub fn reparametrize(src: Arc<dyn CurveSource>) -> Result<ArclengthMap> {
    require_order(src.as_ref(), 2)?;
    let (a, b) = src.domain();
    if !(b > a) {
        return Err(Error::InvalidParameter(format!("empty parameter domain [{a}, {b}]")));
    }
    let knots: Vec<f64> = (0..=MAP_KNOTS).map(|i| a + (b - a) * i as f64 / MAP_KNOTS as f64).collect();
    let mut map = ArclengthMap { src, knots, sigma: vec![0.0], tol: 0.0 };
    // absolute tolerance per knot interval from a first estimate of the scale
    let rough = integrate_adaptive(|l| pseudo_arclength_density(map.src.as_ref(), l), a, b, 1e-8)?;
    map.tol = 1e-14 * rough.abs().max(1.0) / MAP_KNOTS as f64;
    let mut acc = 0.0;
    for w in map.knots.clone().windows(2) {
        acc += map.integral(w[0], w[1])?;
        map.sigma.push(acc);
    }
    Ok(map)
}

/// Curve description read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveFile {
    pub dimension: Dim,
    pub kind: CurveKind,
    #[serde(default)]
    pub samples: Vec<CurveSample>,
    #[serde(default)]
    pub builtin: Option<crate::builtin::BuiltinSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Samples,
    Builtin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSample {
    pub lambda: f64,
    pub x: Vec<f64>,
    /// Optional `lambda`-derivatives `[X., X.., ...]` at this sample.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub derivatives: Vec<Vec<f64>>,
}

impl CurveFile {
    pub fn into_source(self) -> Result<Arc<dyn CurveSource>> {
        match self.kind {
            CurveKind::Samples => {
                if self.samples.is_empty() {
                    return Err(Error::InvalidParameter("curve file has no samples".into()));
                }
                let mut lambdas = Vec::with_capacity(self.samples.len());
                let mut derivs = Vec::with_capacity(self.samples.len());
                for s in &self.samples {
                    lambdas.push(s.lambda);
                    let mut d = vec![FourVector::from_slice(self.dimension, &s.x)?];
                    for v in &s.derivatives {
                        d.push(FourVector::from_slice(self.dimension, v)?);
                    }
                    derivs.push(d);
                }
                Ok(Arc::new(SampledCurve::from_jets(self.dimension, lambdas, derivs)?))
            }
            CurveKind::Builtin => {
                let spec = self
                    .builtin
                    .ok_or_else(|| Error::InvalidParameter("builtin curve without a builtin section".into()))?;
                spec.build(self.dimension)
            }
        }
    }

    /// Whether extraction should use the loosened sampled-mode tolerances.
    pub fn is_sampled(&self) -> bool {
        self.kind == CurveKind::Samples
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn null_cubic() -> AnalyticCurve {
        let f = NullFrame::standard(Dim::Four);
        AnalyticCurve::new(Dim::Four, (0.0, 2.0), move |s| {
            let ep = VectorJet::constant(&f.e_plus, s.len());
            let e1 = VectorJet::constant(&f.e1, s.len());
            let em = VectorJet::constant(&f.e_minus, s.len());
            ep.scale_by(s) + e1.scale_by(&(*s * *s * 0.5)) + em.scale_by(&(s.powi(3) * (1.0 / 6.0)))
        })
    }

    #[test]
    fn null_cubic_has_unit_density_and_flat_frame() {
        let c = null_cubic();
        for &l in &[0.0, 0.3, 1.7] {
            assert!((pseudo_arclength_density(&c, l).unwrap() - 1.0).abs() < 1e-15);
            let d = sigma_derivatives(&c, l, 4).unwrap();
            assert!((d[2] - NullFrame::standard(Dim::Four).e_minus).max_abs() < 1e-15);
            let (frame, k) = frame_at_lambda(&c, l, &Tolerances::default()).unwrap();
            assert_eq!(k.kappa1, 0.0);
            assert_eq!(k.kappa2, 0.0);
            assert!(frame.gram_residual() < 1e-15);
        }
    }

    #[test]
    fn straight_ray_is_degenerate() {
        let ray = AnalyticCurve::new(Dim::Three, (0.0, 1.0), |s| {
            VectorJet::new(Dim::Three, [*s, *s, Jet::constant(0.0, s.len()), Jet::constant(0.0, s.len())])
        });
        assert!(matches!(pseudo_arclength_density(&ray, 0.5), Err(Error::DegenerateCurve { .. })));
    }

    #[test]
    fn reparametrization_by_doubling_keeps_total_sigma() {
        let c: Arc<dyn CurveSource> = Arc::new(null_cubic());
        let slow: Arc<dyn CurveSource> = Arc::new(Reparametrized::new(c.clone(), (0.0, 4.0), |m| *m * 0.5));
        let m1 = reparametrize(c).unwrap();
        let m2 = reparametrize(slow).unwrap();
        assert!((m1.total() - 2.0).abs() < 1e-13);
        assert!((m2.total() - 2.0).abs() < 1e-13);
        assert!((m2.lambda_of(1.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn polynomial_null_curve_is_null() {
        let c = PolynomialNullCurve::new(
            Dim::Four,
            (vec![1.0, 0.5], vec![0.0, 0.2, 0.1]),
            (vec![0.3, -1.0], vec![0.4]),
            (-1.0, 1.0),
        )
        .unwrap();
        for &l in &[-0.9, 0.0, 0.6] {
            let j = c.jet(l, 3).unwrap();
            let v = j.derivative(1).unwrap();
            assert!(v.dot(&v).abs() < 1e-14);
        }
        let (frame, _) = frame_at_lambda(&c, 0.2, &Tolerances::default()).unwrap();
        assert!(frame.gram_residual() < 1e-10);
    }

    #[test]
    fn two_plus_one_frames_have_no_second_leg() {
        let c =
            PolynomialNullCurve::new(Dim::Three, (vec![1.0, 0.5, 0.1], vec![]), (vec![0.3, -1.0], vec![]), (0.0, 1.0))
                .unwrap();
        let (frame, k) = frame_at_lambda(&c, 0.5, &Tolerances::default()).unwrap();
        assert!(frame.e2.is_none());
        assert_eq!(k.kappa2, 0.0);
    }

    #[test]
    fn sampled_curve_with_stored_derivatives() {
        let c = null_cubic();
        let lambdas: Vec<f64> = (0..50).map(|i| i as f64 * 0.04).collect();
        let derivs = lambdas
            .iter()
            .map(|&l| {
                let j = c.jet(l, 3).unwrap();
                (0..3).map(|k| j.derivative(k).unwrap()).collect()
            })
            .collect();
        let s = SampledCurve::from_jets(Dim::Four, lambdas, derivs).unwrap();
        assert_eq!(s.max_order(), 7);
        let (_, k) = frame_at_lambda(&s, 0.77, &Tolerances::default()).unwrap();
        assert!(k.kappa1.abs() < 1e-10 && k.kappa2.abs() < 1e-6);
    }

    #[test]
    fn curve_file_rejects_empty_samples() {
        let f = CurveFile { dimension: Dim::Three, kind: CurveKind::Samples, samples: vec![], builtin: None };
        assert!(f.into_source().is_err());
    }
}
