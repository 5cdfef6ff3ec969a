//! Curvature profiles `kappa1(sigma)`, `kappa2(sigma)` with derivative
//! access.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{SAMPLE_MAX_ORDER, SAMPLE_WINDOW};
use crate::jet::{Jet, JET_LEN};
use crate::minkowski::Dim;
use crate::stencil::window_derivatives;

/// Jets of both curvatures at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureJets {
    pub k1: Jet,
    pub k2: Jet,
}

impl CurvatureJets {
    pub fn values(&self) -> Result<(f64, f64)> {
        Ok((self.k1.value()?, self.k2.value()?))
    }
}

pub trait CurvatureProfile: Send + Sync {
    fn dim(&self) -> Dim;

    fn domain(&self) -> (f64, f64);

    /// Jets with up to `len` coefficients at `sigma`.
    fn jets(&self, sigma: f64, len: usize) -> Result<CurvatureJets>;

    fn kappa(&self, sigma: f64) -> Result<(f64, f64)> {
        self.jets(sigma, 1)?.values()
    }
}

pub(crate) fn check_domain(sigma: f64, (lo, hi): (f64, f64)) -> Result<()> {
    let slack = 1e-9 * (hi - lo).abs().max(1.0);
    if sigma.is_finite() && sigma >= lo - slack && sigma <= hi + slack {
        Ok(())
    } else {
        Err(Error::OutOfDomain { value: sigma, lo, hi })
    }
}

fn check_planar(dim: Dim, k2: f64) -> Result<()> {
    if dim == Dim::Three && k2 != 0.0 {
        return Err(Error::InvalidParameter(format!("kappa2 must vanish in 2+1 mode, got {k2}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantProfile {
    dim: Dim,
    k1: f64,
    k2: f64,
    domain: (f64, f64),
}

impl ConstantProfile {
    pub fn new(dim: Dim, k1: f64, k2: f64, sigma_max: f64) -> Result<Self> {
        if !k1.is_finite() || !k2.is_finite() {
            return Err(Error::NonFinite("curvature"));
        }
        if k2 < 0.0 {
            return Err(Error::InvalidParameter(format!("kappa2 must be non-negative, got {k2}")));
        }
        check_planar(dim, k2)?;
        Ok(ConstantProfile { dim, k1, k2, domain: (0.0, sigma_max) })
    }
}

impl CurvatureProfile for ConstantProfile {
    fn dim(&self) -> Dim {
        self.dim
    }

    fn domain(&self) -> (f64, f64) {
        self.domain
    }

    fn jets(&self, sigma: f64, len: usize) -> Result<CurvatureJets> {
        check_domain(sigma, self.domain)?;
        Ok(CurvatureJets { k1: Jet::constant(self.k1, len), k2: Jet::constant(self.k2, len) })
    }
}

type ProfileFn = dyn Fn(&Jet) -> (Jet, Jet) + Send + Sync;

/// Closed-form curvatures written in jet arithmetic.
#[derive(Clone)]
pub struct AnalyticProfile {
    dim: Dim,
    domain: (f64, f64),
    f: Arc<ProfileFn>,
}

impl AnalyticProfile {
    pub fn new(dim: Dim, domain: (f64, f64), f: impl Fn(&Jet) -> (Jet, Jet) + Send + Sync + 'static) -> Self {
        AnalyticProfile { dim, domain, f: Arc::new(f) }
    }
}

impl CurvatureProfile for AnalyticProfile {
    fn dim(&self) -> Dim {
        self.dim
    }

    fn domain(&self) -> (f64, f64) {
        self.domain
    }

    fn jets(&self, sigma: f64, len: usize) -> Result<CurvatureJets> {
        check_domain(sigma, self.domain)?;
        let (k1, k2) = (self.f)(&Jet::variable(sigma, len.min(JET_LEN)));
        check_planar(self.dim, k2.value()?)?;
        if !k1.value()?.is_finite() || !k2.value()?.is_finite() {
            return Err(Error::NonFinite("analytic profile"));
        }
        Ok(CurvatureJets { k1, k2 })
    }
}

/// Samples on a uniform grid, differentiated on local windows.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledProfile {
    dim: Dim,
    nodes: Vec<f64>,
    k1: Vec<f64>,
    k2: Vec<f64>,
}

impl SampledProfile {
    pub fn new(dim: Dim, sigma0: f64, h: f64, k1: Vec<f64>, k2: Vec<f64>) -> Result<Self> {
        if k1.len() != k2.len() {
            return Err(Error::InvalidParameter("kappa1 and kappa2 sample counts differ".into()));
        }
        if k1.len() < SAMPLE_WINDOW {
            return Err(Error::InvalidParameter(format!("need at least {SAMPLE_WINDOW} samples, got {}", k1.len())));
        }
        if !(h > 0.0) || k1.iter().chain(&k2).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sampled profile"));
        }
        for &v in &k2 {
            if v < 0.0 {
                return Err(Error::InvalidParameter(format!("kappa2 must be non-negative, got {v}")));
            }
            check_planar(dim, v)?;
        }
        let nodes = (0..k1.len()).map(|i| sigma0 + i as f64 * h).collect();
        Ok(SampledProfile { dim, nodes, k1, k2 })
    }
}

impl CurvatureProfile for SampledProfile {
    fn dim(&self) -> Dim {
        self.dim
    }

    fn domain(&self) -> (f64, f64) {
        (self.nodes[0], *self.nodes.last().unwrap())
    }

    fn jets(&self, sigma: f64, len: usize) -> Result<CurvatureJets> {
        check_domain(sigma, self.domain())?;
        let order = len.saturating_sub(1).min(SAMPLE_MAX_ORDER);
        let n = len.min(order + 1);
        let d1 = window_derivatives(&self.nodes, &self.k1, sigma, SAMPLE_WINDOW, order);
        let d2 = window_derivatives(&self.nodes, &self.k2, sigma, SAMPLE_WINDOW, order);
        Ok(CurvatureJets { k1: Jet::from_derivatives(&d1[..n]), k2: Jet::from_derivatives(&d2[..n]) })
    }
}
