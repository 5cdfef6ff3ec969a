//! Closed-form null curves parametrized by pseudo-arclength: the null cubic
//! (both curvatures zero) and the light-cone helices (constant curvatures).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::curve::{CurvaturePair, CurveSource};
use crate::error::{Error, Result};
use crate::jet::{Jet, JET_LEN};
use crate::minkowski::Dim;
use crate::profile::{check_domain, CurvatureJets};
use crate::reconstruct::{closed_form_derivatives, CurveState};
use crate::vector_jet::VectorJet;

/// Jets in `sigma` of the position and every leg.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameJets {
    pub x: VectorJet,
    pub e_plus: VectorJet,
    pub e1: VectorJet,
    pub e_minus: VectorJet,
    pub e2: Option<VectorJet>,
}

/// A curve parametrized by pseudo-arclength whose frame and curvatures are
/// known in closed form.
pub trait FramedCurve: CurveSource {
    fn frame_jets(&self, sigma: f64, len: usize) -> Result<FrameJets>;

    fn curvature_jets(&self, sigma: f64, len: usize) -> Result<CurvatureJets>;
}

/// Constant-curvature null curve through an arbitrary initial state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Helix {
    kappa: CurvaturePair,
    init: CurveState,
    sigma_max: f64,
}

impl Helix {
    /// Starts at the origin with the standard frame.
    pub fn new(dim: Dim, kappa1: f64, kappa2: f64, sigma_max: f64) -> Result<Self> {
        Self::with_initial(CurvaturePair { kappa1, kappa2 }, CurveState::standard(dim), sigma_max)
    }

    pub fn with_initial(kappa: CurvaturePair, init: CurveState, sigma_max: f64) -> Result<Self> {
        if !kappa.kappa1.is_finite() || !kappa.kappa2.is_finite() {
            return Err(Error::NonFinite("helix curvature"));
        }
        if kappa.kappa2 < 0.0 {
            return Err(Error::InvalidParameter(format!("kappa2 must be non-negative, got {}", kappa.kappa2)));
        }
        if init.dim() == Dim::Three && kappa.kappa2 != 0.0 {
            return Err(Error::InvalidParameter("kappa2 must vanish in 2+1 mode".into()));
        }
        if !(sigma_max > init.sigma) {
            return Err(Error::InvalidParameter(format!("sigma_max {sigma_max} must exceed the start")));
        }
        Ok(Helix { kappa, init, sigma_max })
    }

    pub fn kappa(&self) -> CurvaturePair {
        self.kappa
    }

    pub fn initial(&self) -> &CurveState {
        &self.init
    }

    pub fn state_at(&self, sigma: f64) -> CurveState {
        closed_form_derivatives(self.kappa, &self.init, sigma, 1)[0]
    }
}

fn jets_from_states(states: &[CurveState]) -> FrameJets {
    let col = |f: &dyn Fn(&CurveState) -> crate::minkowski::FourVector| {
        VectorJet::from_derivatives(&states.iter().map(f).collect::<Vec<_>>())
    };
    FrameJets {
        x: col(&|s| s.x),
        e_plus: col(&|s| s.frame.e_plus),
        e1: col(&|s| s.frame.e1),
        e_minus: col(&|s| s.frame.e_minus),
        e2: states[0].frame.e2.map(|_| col(&|s| s.frame.e2.unwrap())),
    }
}

impl CurveSource for Helix {
    fn dim(&self) -> Dim {
        self.init.dim()
    }

    fn domain(&self) -> (f64, f64) {
        (self.init.sigma, self.sigma_max)
    }

    fn max_order(&self) -> usize {
        JET_LEN - 1
    }

    fn jet(&self, lambda: f64, len: usize) -> Result<VectorJet> {
        Ok(self.frame_jets(lambda, len)?.x)
    }
}

impl FramedCurve for Helix {
    fn frame_jets(&self, sigma: f64, len: usize) -> Result<FrameJets> {
        check_domain(sigma, self.domain())?;
        let states = closed_form_derivatives(self.kappa, &self.init, sigma, len.clamp(1, JET_LEN));
        Ok(jets_from_states(&states))
    }

    fn curvature_jets(&self, sigma: f64, len: usize) -> Result<CurvatureJets> {
        check_domain(sigma, self.domain())?;
        Ok(CurvatureJets { k1: Jet::constant(self.kappa.kappa1, len), k2: Jet::constant(self.kappa.kappa2, len) })
    }
}

/// `X = s e+ + s^2/2 e1 + s^3/6 e-` with a constant frame basis, written as
/// a polynomial rather than through the matrix exponential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullCubic {
    init: CurveState,
    sigma_max: f64,
}

impl NullCubic {
    pub fn new(dim: Dim, sigma_max: f64) -> Result<Self> {
        if !(sigma_max > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma_max must be positive, got {sigma_max}")));
        }
        Ok(NullCubic { init: CurveState::standard(dim), sigma_max })
    }
}

impl CurveSource for NullCubic {
    fn dim(&self) -> Dim {
        self.init.dim()
    }

    fn domain(&self) -> (f64, f64) {
        (0.0, self.sigma_max)
    }

    fn max_order(&self) -> usize {
        JET_LEN - 1
    }

    fn jet(&self, lambda: f64, len: usize) -> Result<VectorJet> {
        Ok(self.frame_jets(lambda, len)?.x)
    }
}

impl FramedCurve for NullCubic {
    fn frame_jets(&self, sigma: f64, len: usize) -> Result<FrameJets> {
        check_domain(sigma, self.domain())?;
        let s = Jet::variable(sigma, len.min(JET_LEN));
        let f = &self.init.frame;
        let c = |v| VectorJet::constant(v, s.len());
        let (ep, e1, em) = (c(&f.e_plus), c(&f.e1), c(&f.e_minus));
        let s2 = s * s * 0.5;
        let s3 = s * s * s * (1.0 / 6.0);
        Ok(FrameJets {
            x: c(&self.init.x) + ep.scale_by(&s) + e1.scale_by(&s2) + em.scale_by(&s3),
            e_plus: ep + e1.scale_by(&s) + em.scale_by(&s2),
            e1: e1 + em.scale_by(&s),
            e_minus: em,
            e2: f.e2.as_ref().map(c),
        })
    }

    fn curvature_jets(&self, sigma: f64, len: usize) -> Result<CurvatureJets> {
        check_domain(sigma, self.domain())?;
        Ok(CurvatureJets { k1: Jet::constant(0.0, len), k2: Jet::constant(0.0, len) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinName {
    NullCubic,
    Helix,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BuiltinParams {
    pub kappa1: f64,
    pub kappa2: f64,
    pub sigma_max: f64,
}

impl Default for BuiltinParams {
    fn default() -> Self {
        BuiltinParams { kappa1: 0.0, kappa2: 0.0, sigma_max: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuiltinSpec {
    pub name: BuiltinName,
    #[serde(default)]
    pub params: BuiltinParams,
}

impl BuiltinSpec {
    pub fn build(&self, dim: Dim) -> Result<Arc<dyn CurveSource>> {
        let p = &self.params;
        Ok(match self.name {
            BuiltinName::NullCubic => Arc::new(NullCubic::new(dim, p.sigma_max)?),
            BuiltinName::Helix => Arc::new(Helix::new(dim, p.kappa1, p.kappa2, p.sigma_max)?),
        })
    }
}
