//! Curvature-dependent actions for null curves: equations of motion, first
//! integrals, and solvers that evolve the curvatures in pseudo-arclength.
//!
//! Three actions are covered: `2 alpha * int dsigma`,
//! `2 * int (alpha + beta kappa1) dsigma` and `2 lambda2 * int kappa2 dsigma`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{Jet, JET_LEN};
use crate::minkowski::Dim;
use crate::ode::{rk4_step, step_count};
use crate::profile::{check_domain, CurvatureJets, CurvatureProfile};
use crate::quadrature::{gauss_legendre, integrate_adaptive};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    PseudoArclength,
    LinearK1,
    LinearK2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    /// Coupling of the second-curvature action.
    #[serde(default)]
    pub lambda2: f64,
    pub dimension: Dim,
}

impl ModelSpec {
    pub fn pseudo_arclength(dimension: Dim, alpha: f64) -> Self {
        ModelSpec { kind: ModelKind::PseudoArclength, alpha, beta: 0.0, lambda2: 0.0, dimension }
    }

    pub fn linear_k1(dimension: Dim, alpha: f64, beta: f64) -> Self {
        ModelSpec { kind: ModelKind::LinearK1, alpha, beta, lambda2: 0.0, dimension }
    }

    pub fn linear_k2(lambda2: f64) -> Self {
        ModelSpec { kind: ModelKind::LinearK2, alpha: 0.0, beta: 0.0, lambda2, dimension: Dim::Four }
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.alpha, self.beta, self.lambda2].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("model parameter"));
        }
        match self.kind {
            ModelKind::PseudoArclength => Ok(()),
            ModelKind::LinearK1 if self.beta == 0.0 => Err(Error::InvalidParameter("beta must be nonzero".into())),
            ModelKind::LinearK1 => Ok(()),
            ModelKind::LinearK2 if self.lambda2 == 0.0 => {
                Err(Error::InvalidParameter("lambda2 must be nonzero".into()))
            }
            ModelKind::LinearK2 if self.dimension == Dim::Three => {
                Err(Error::InvalidParameter("the kappa2 action needs 3+1 dimensions".into()))
            }
            ModelKind::LinearK2 => Ok(()),
        }
    }

    /// Lagrangian per unit pseudo-arclength.
    pub fn lagrangian(&self, k1: f64, k2: f64) -> f64 {
        match self.kind {
            ModelKind::PseudoArclength => 2.0 * self.alpha,
            ModelKind::LinearK1 => 2.0 * (self.alpha + self.beta * k1),
            ModelKind::LinearK2 => 2.0 * self.lambda2 * k2,
        }
    }

    /// `(dL/dkappa1, dL/dkappa2)`.
    pub fn partials(&self, _k1: f64, _k2: f64) -> (f64, f64) {
        match self.kind {
            ModelKind::PseudoArclength => (0.0, 0.0),
            ModelKind::LinearK1 => (2.0 * self.beta, 0.0),
            ModelKind::LinearK2 => (0.0, 2.0 * self.lambda2),
        }
    }
}

fn profile_jets(profile: &dyn CurvatureProfile, model_dim: Dim, sigma: f64, len: usize) -> Result<CurvatureJets> {
    model_dim.check(profile.dim())?;
    profile.jets(sigma, len)
}

/// Left-hand sides of the Euler-Lagrange equations at `sigma`:
///
/// * pseudo-arclength: `(kappa1', kappa2)`
/// * linear in `kappa1`, 2+1: `beta k1''' - 3 beta k1 k1' + alpha k1'`
/// * linear in `kappa1`, 3+1: the above minus `2 beta k2 k2'`, and
///   `2 beta k2'' - beta k1 k2 + alpha k2`
/// * linear in `kappa2`: `lambda2 (k2''' - 2 k1 k2' + k1' k2)` and
///   `lambda2 (2 k1'' + k2^2)`
pub fn eom_residual(model: &ModelSpec, profile: &dyn CurvatureProfile, sigma: f64) -> Result<Vec<f64>> {
    let j = profile_jets(profile, model.dimension, sigma, 4)?;
    let (k1, k2) = (j.k1.derivatives(), j.k2.derivatives());
    let d = |v: &[f64], k: usize| {
        v.get(k).copied().ok_or(Error::DerivativeUnavailable { needed: k, available: v.len().saturating_sub(1) })
    };
    let (a, b, l) = (model.alpha, model.beta, model.lambda2);
    Ok(match (model.kind, model.dimension) {
        (ModelKind::PseudoArclength, _) => vec![d(&k1, 1)?, d(&k2, 0)?],
        (ModelKind::LinearK1, Dim::Three) => {
            vec![b * d(&k1, 3)? - 3.0 * b * k1[0] * d(&k1, 1)? + a * d(&k1, 1)?]
        }
        (ModelKind::LinearK1, Dim::Four) => vec![
            b * d(&k1, 3)? - 3.0 * b * k1[0] * d(&k1, 1)? - 2.0 * b * k2[0] * d(&k2, 1)? + a * d(&k1, 1)?,
            2.0 * b * d(&k2, 2)? - b * k1[0] * k2[0] + a * k2[0],
        ],
        (ModelKind::LinearK2, _) => vec![
            l * (d(&k2, 3)? - 2.0 * k1[0] * d(&k2, 1)? + d(&k1, 1)? * k2[0]),
            l * (2.0 * d(&k1, 2)? + k2[0] * k2[0]),
        ],
    })
}

/// `beta/2 k1'^2 - beta/2 k1^3 + alpha/2 k1^2 - gamma3 k1 - e3`; zero along
/// planar solutions of the `kappa1` model with these constants.
pub fn first_integral_k1_3d(
    profile: &dyn CurvatureProfile,
    alpha: f64,
    beta: f64,
    gamma3: f64,
    e3: f64,
    sigma: f64,
) -> Result<f64> {
    let j = profile.jets(sigma, 2)?;
    let (k, dk) = (j.k1.value()?, j.k1.derivative(1)?);
    Ok(0.5 * beta * dk * dk - 0.5 * beta * k.powi(3) + 0.5 * alpha * k * k - gamma3 * k - e3)
}

/// `V = -beta/2 k1^3 + alpha/2 k1^2 - (gamma4 + beta k2^2) k1 + alpha k2^2`.
pub fn potential(alpha: f64, beta: f64, gamma4: f64, k1: f64, k2: f64) -> f64 {
    -0.5 * beta * k1.powi(3) + 0.5 * alpha * k1 * k1 - (gamma4 + beta * k2 * k2) * k1 + alpha * k2 * k2
}

/// `beta k1'' - 3 beta/2 k1^2 - beta k2^2 + alpha k1 - gamma4`.
pub fn first_integral_k1_4d(
    profile: &dyn CurvatureProfile,
    alpha: f64,
    beta: f64,
    gamma4: f64,
    sigma: f64,
) -> Result<f64> {
    let j = profile.jets(sigma, 3)?;
    let (k1, k2) = j.values()?;
    Ok(beta * j.k1.derivative(2)? - 1.5 * beta * k1 * k1 - beta * k2 * k2 + alpha * k1 - gamma4)
}

/// `beta/2 k1'^2 + 2 beta k2'^2 + V(k1, k2) - e4`.
pub fn energy_k1_4d(
    profile: &dyn CurvatureProfile,
    alpha: f64,
    beta: f64,
    gamma4: f64,
    e4: f64,
    sigma: f64,
) -> Result<f64> {
    let j = profile.jets(sigma, 2)?;
    let (k1, k2) = j.values()?;
    let (d1, d2) = (j.k1.derivative(1)?, j.k2.derivative(1)?);
    Ok(0.5 * beta * d1 * d1 + 2.0 * beta * d2 * d2 + potential(alpha, beta, gamma4, k1, k2) - e4)
}

/// The first-order systems behind the solvers. States have five slots:
///
/// * `Planar`: `[k1, k1', 0, 0, 0]` with
///   `k1'' = (gamma - alpha k1 + 3 beta/2 k1^2) / beta`
/// * `Spatial`: `[k1, k1', k2, k2', 0]` with
///   `k1'' = (gamma + 3 beta/2 k1^2 + beta k2^2 - alpha k1) / beta` and
///   `k2'' = (beta k1 k2 - alpha k2) / (2 beta)`
/// * `SecondCurvature`: `[k2, k2', k2'', k1, k1']` with
///   `k2''' = 2 k1 k2' - k1' k2` and `k1'' = -k2^2 / 2`
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurvatureSystem {
    Planar { alpha: f64, beta: f64, gamma: f64 },
    Spatial { alpha: f64, beta: f64, gamma: f64 },
    SecondCurvature,
}

pub type SystemState = [f64; 5];

impl CurvatureSystem {
    pub fn dim(&self) -> Dim {
        match self {
            CurvatureSystem::Planar { .. } => Dim::Three,
            _ => Dim::Four,
        }
    }

    fn check(&self) -> Result<()> {
        match *self {
            CurvatureSystem::Planar { beta, .. } | CurvatureSystem::Spatial { beta, .. } if beta == 0.0 => {
                Err(Error::InvalidParameter("beta must be nonzero".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn rhs(&self, y: &SystemState) -> SystemState {
        match *self {
            CurvatureSystem::Planar { alpha, beta, gamma } => {
                [y[1], (gamma - alpha * y[0] + 1.5 * beta * y[0] * y[0]) / beta, 0.0, 0.0, 0.0]
            }
            CurvatureSystem::Spatial { alpha, beta, gamma } => [
                y[1],
                (gamma + 1.5 * beta * y[0] * y[0] + beta * y[2] * y[2] - alpha * y[0]) / beta,
                y[3],
                (beta * y[0] * y[2] - alpha * y[2]) / (2.0 * beta),
                0.0,
            ],
            CurvatureSystem::SecondCurvature => [y[1], y[2], 2.0 * y[3] * y[1] - y[4] * y[0], y[4], -0.5 * y[0] * y[0]],
        }
    }

    fn rhs_jet(&self, y: &[Jet; 5]) -> [Jet; 5] {
        let zero = Jet::constant(0.0, y[0].len());
        match *self {
            CurvatureSystem::Planar { alpha, beta, gamma } => {
                let acc = ((y[0] * y[0]) * (1.5 * beta) - y[0] * alpha + gamma) * (1.0 / beta);
                [y[1], acc, zero, zero, zero]
            }
            CurvatureSystem::Spatial { alpha, beta, gamma } => {
                let acc1 = ((y[0] * y[0]) * (1.5 * beta) + (y[2] * y[2]) * beta - y[0] * alpha + gamma) * (1.0 / beta);
                let acc2 = (y[0] * y[2] * beta - y[2] * alpha) * (0.5 / beta);
                [y[1], acc1, y[3], acc2, zero]
            }
            CurvatureSystem::SecondCurvature => [y[1], y[2], y[3] * y[1] * 2.0 - y[4] * y[0], y[4], y[0] * y[0] * -0.5],
        }
    }

    /// Taylor expansion of the solution through `y0`, by Picard iteration on
    /// jets (exact for polynomial right-hand sides).
    pub fn taylor(&self, y0: &SystemState, len: usize) -> [Jet; 5] {
        let len = len.clamp(1, JET_LEN);
        let mut y = y0.map(|v| Jet::constant(v, 1));
        for _ in 1..len {
            let f = self.rhs_jet(&y);
            for i in 0..5 {
                y[i] = f[i].integrate(y0[i]);
            }
        }
        y
    }

    fn curvatures(&self, y: &[Jet; 5]) -> CurvatureJets {
        let zero = Jet::constant(0.0, y[0].len());
        match self {
            CurvatureSystem::Planar { .. } => CurvatureJets { k1: y[0], k2: zero },
            CurvatureSystem::Spatial { .. } => CurvatureJets { k1: y[0], k2: y[2] },
            CurvatureSystem::SecondCurvature => CurvatureJets { k1: y[3], k2: y[0] },
        }
    }
}

/// Blow-up threshold for any state component.
pub const BLOWUP: f64 = 1e150;

/// A curvature profile sampled at the RK4 nodes of a solver. Between nodes
/// the state is continued with the local Taylor expansion, and derivative
/// jets come from the equations themselves rather than from differencing.
#[derive(Debug, Clone, PartialEq)]
pub struct SolvedProfile {
    system: CurvatureSystem,
    sigma0: f64,
    h: f64,
    states: Vec<SystemState>,
}

impl SolvedProfile {
    /// Integrates with fixed steps from `domain.0` to `domain.1`. On blow-up
    /// the profile up to the last finite state is returned together with
    /// the error.
    pub fn march(
        system: CurvatureSystem,
        y0: SystemState,
        domain: (f64, f64),
        h: f64,
    ) -> Result<(SolvedProfile, Option<Error>)> {
        system.check()?;
        let (start, end) = domain;
        if !(h > 0.0) || !start.is_finite() || !end.is_finite() || !(end > start) {
            return Err(Error::InvalidParameter(format!("bad solver domain {domain:?} with step {h}")));
        }
        if y0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("initial curvature data"));
        }
        let steps = step_count(start, end, h);
        if steps == 0 {
            return Err(Error::InvalidParameter(format!("step {h} exceeds the domain {domain:?}")));
        }
        let mut states = Vec::with_capacity(steps + 1);
        states.push(y0);
        let mut f = |_t: f64, y: &SystemState| Ok(system.rhs(y));
        let mut failure = None;
        for n in 0..steps {
            let t = start + n as f64 * h;
            let next = rk4_step(&mut f, t, states.last().unwrap(), h)?;
            if next.iter().any(|v| !v.is_finite() || v.abs() > BLOWUP) {
                failure = Some(Error::BlowUp { last_sigma: t });
                break;
            }
            states.push(next);
        }
        if states.len() < 2 {
            return Err(failure.unwrap_or(Error::BlowUp { last_sigma: start }));
        }
        Ok((SolvedProfile { system, sigma0: start, h, states }, failure))
    }

    /// As [`SolvedProfile::march`], treating blow-up as an error.
    pub fn solve(system: CurvatureSystem, y0: SystemState, domain: (f64, f64), h: f64) -> Result<SolvedProfile> {
        match Self::march(system, y0, domain, h)? {
            (p, None) => Ok(p),
            (_, Some(e)) => Err(e),
        }
    }

    pub fn system(&self) -> CurvatureSystem {
        self.system
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.states.len()).map(|i| self.sigma0 + i as f64 * self.h)
    }

    pub fn states(&self) -> &[SystemState] {
        &self.states
    }

    /// State at `sigma`, continued from the nearest node.
    pub fn state_at(&self, sigma: f64) -> Result<SystemState> {
        check_domain(sigma, self.domain())?;
        let i = (((sigma - self.sigma0) / self.h).round().max(0.0) as usize).min(self.states.len() - 1);
        let offset = sigma - (self.sigma0 + i as f64 * self.h);
        if offset == 0.0 {
            return Ok(self.states[i]);
        }
        let t = self.system.taylor(&self.states[i], JET_LEN);
        Ok(t.map(|j| j.eval_offset(offset)))
    }
}

impl CurvatureProfile for SolvedProfile {
    fn dim(&self) -> Dim {
        self.system.dim()
    }

    fn domain(&self) -> (f64, f64) {
        (self.sigma0, self.sigma0 + (self.states.len() - 1) as f64 * self.h)
    }

    fn jets(&self, sigma: f64, len: usize) -> Result<CurvatureJets> {
        let y = self.state_at(sigma)?;
        Ok(self.system.curvatures(&self.system.taylor(&y, len)))
    }
}

/// Constants of the planar `kappa1` model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarConstants {
    pub gamma3: f64,
    pub e3: f64,
}

/// Shape of the orbit of the planar first integral through the initial data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Orbit {
    /// `kappa1` oscillates between two simple turning points.
    Bounded {
        turning_points: (f64, f64),
        period: f64,
    },
    /// Initial data sits at the bottom of the well.
    Equilibrium {
        kappa: f64,
    },
    /// `R` has a double root at an unstable equilibrium: the orbit
    /// approaches it asymptotically and never returns.
    Separatrix {
        double_root: f64,
    },
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct PlanarSolution {
    pub profile: SolvedProfile,
    pub constants: PlanarConstants,
    pub orbit: Orbit,
}

/// `R(k) = k^3 - (alpha/beta) k^2 + (2 gamma/beta) k + 2 e/beta`, so that
/// `k1'^2 = R(k1)` along solutions.
fn planar_radicand(alpha: f64, beta: f64, c: &PlanarConstants, k: f64) -> f64 {
    ((k - alpha / beta) * k + 2.0 * c.gamma3 / beta) * k + 2.0 * c.e3 / beta
}

/// Real roots of the monic cubic `x^3 + a x^2 + b x + c`, ascending and
/// polished by Newton steps.
fn cubic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let p = b - a * a / 3.0;
    let q = 2.0 * a.powi(3) / 27.0 - a * b / 3.0 + c;
    let shift = -a / 3.0;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let disc_scale = (q / 2.0).powi(2).max((p / 3.0).abs().powi(3));
    let mut roots = if disc.abs() <= 1e-12 * disc_scale && p != 0.0 {
        let u = (-q / 2.0).cbrt();
        vec![2.0 * u + shift, -u + shift, -u + shift]
    } else if disc > 0.0 {
        let s = disc.sqrt();
        vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt() + shift]
    } else if p == 0.0 {
        vec![shift; 3]
    } else {
        let r = (-p / 3.0).sqrt();
        let phi = (3.0 * q / (2.0 * p * r)).clamp(-1.0, 1.0).acos();
        (0..3).map(|k| 2.0 * r * ((phi - 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos() + shift).collect()
    };
    for x in roots.iter_mut() {
        for _ in 0..4 {
            let f = ((*x + a) * *x + b) * *x + c;
            let df = (3.0 * *x + 2.0 * a) * *x + b;
            if df == 0.0 {
                break;
            }
            let dx = f / df;
            if !dx.is_finite() {
                break;
            }
            *x -= dx;
        }
    }
    roots.sort_by(|x, y| x.total_cmp(y));
    roots
}

/// Period of the planar oscillation between `r1 < r2` with third root
/// `r3 > r2`: `4 * int_0^{pi/2} dtheta / sqrt(r3 - r1 - (r2 - r1) sin^2)`,
/// the turning-point singularities removed by `k = r1 + (r2 - r1) sin^2`.
pub fn quadrature_period(r1: f64, r2: f64, r3: f64) -> Result<f64> {
    if !(r1 <= r2 && r2 < r3) {
        return Err(Error::InvalidParameter(format!("roots {r1}, {r2}, {r3} do not bound a well")));
    }
    let integral = integrate_adaptive(
        |theta: f64| Ok(1.0 / (r3 - r1 - (r2 - r1) * theta.sin().powi(2)).sqrt()),
        0.0,
        std::f64::consts::FRAC_PI_2,
        1e-15,
    )?;
    Ok(4.0 * integral)
}

fn classify_orbit(alpha: f64, beta: f64, c: &PlanarConstants, k0: f64) -> Result<Orbit> {
    let roots = cubic_roots(-alpha / beta, 2.0 * c.gamma3 / beta, 2.0 * c.e3 / beta);
    let scale = roots.iter().fold(k0.abs(), |m, r| m.max(r.abs())).max(1.0);
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-7 * scale;
    if roots.len() < 3 {
        return Ok(Orbit::Unbounded);
    }
    let (r1, r2, r3) = (roots[0], roots[1], roots[2]);
    if close(r2, r3) {
        return Ok(Orbit::Separatrix { double_root: 0.5 * (r2 + r3) });
    }
    if k0 > r2 + 1e-9 * scale {
        return Ok(Orbit::Unbounded);
    }
    if close(r1, r2) {
        return Ok(Orbit::Equilibrium { kappa: 0.5 * (r1 + r2) });
    }
    Ok(Orbit::Bounded { turning_points: (r1, r2), period: quadrature_period(r1, r2, r3)? })
}

/// System and initial state of the planar `kappa1` model with slope
/// `sign * sqrt(R(kappa0))`.
pub fn planar_initial_state(
    alpha: f64,
    beta: f64,
    constants: &PlanarConstants,
    kappa0: f64,
    sign: f64,
) -> Result<(CurvatureSystem, SystemState)> {
    if beta == 0.0 {
        return Err(Error::InvalidParameter("beta must be nonzero".into()));
    }
    let r0 = planar_radicand(alpha, beta, constants, kappa0);
    let scale = kappa0.abs().powi(3).max(1.0);
    if r0 < -1e-12 * scale {
        return Err(Error::ForbiddenRegion(kappa0));
    }
    let slope = sign.signum() * r0.max(0.0).sqrt();
    Ok((CurvatureSystem::Planar { alpha, beta, gamma: constants.gamma3 }, [kappa0, slope, 0.0, 0.0, 0.0]))
}

/// Planar `kappa1` model from the first integral
/// `beta/2 k1'^2 - beta/2 k1^3 + alpha/2 k1^2 - gamma3 k1 = e3`.
///
/// The initial slope is `sign * sqrt(R(k0))`; the evolution then follows
/// the second-order form `k1'' = R'(k1)/2`, which passes turning points
/// without special handling. The orbit is classified from the roots of `R`.
pub fn solve_k1_3d(
    alpha: f64,
    beta: f64,
    constants: PlanarConstants,
    kappa0: f64,
    sign: f64,
    domain: (f64, f64),
    h: f64,
) -> Result<PlanarSolution> {
    let (system, y0) = planar_initial_state(alpha, beta, &constants, kappa0, sign)?;
    let profile = SolvedProfile::solve(system, y0, domain, h)?;
    let orbit = classify_orbit(alpha, beta, &constants, kappa0)?;
    Ok(PlanarSolution { profile, constants, orbit })
}

impl PlanarSolution {
    /// Period read off the evolution: mean spacing of successive maxima of
    /// `kappa1`, each located to round-off on the local Taylor expansion.
    pub fn measured_period(&self) -> Option<f64> {
        let p = &self.profile;
        let mut maxima = Vec::new();
        for (i, w) in p.states.windows(2).enumerate() {
            if w[0][1] > 0.0 && w[1][1] <= 0.0 {
                let t = p.system.taylor(&w[0], JET_LEN);
                let slope = t[1];
                let mut x = p.h * w[0][1] / (w[0][1] - w[1][1]);
                for _ in 0..20 {
                    let d = slope.diff().eval_offset(x);
                    if d == 0.0 {
                        break;
                    }
                    let dx = slope.eval_offset(x) / d;
                    x -= dx;
                    if dx.abs() < 1e-16 * p.h {
                        break;
                    }
                }
                maxima.push(p.sigma0 + i as f64 * p.h + x);
            }
        }
        if maxima.len() < 2 {
            return None;
        }
        Some((maxima[maxima.len() - 1] - maxima[0]) / (maxima.len() - 1) as f64)
    }

    pub fn first_integral_drift(&self) -> Result<f64> {
        let c = &self.constants;
        let (a, b) = match self.profile.system {
            CurvatureSystem::Planar { alpha, beta, .. } => (alpha, beta),
            _ => unreachable!("planar solution holds a planar system"),
        };
        let mut worst: f64 = 0.0;
        for s in self.profile.nodes() {
            worst = worst.max(first_integral_k1_3d(&self.profile, a, b, c.gamma3, c.e3, s)?.abs());
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone)]
pub struct SpatialSolution {
    pub profile: SolvedProfile,
    pub gamma4: f64,
    /// Energy of the initial data.
    pub e4: f64,
    /// Max deviation of the energy from `e4` over the nodes.
    pub energy_drift: f64,
}

/// 3+1 `kappa1` model as two coupled second-order equations; `init` is
/// `(k1, k1', k2, k2')`.
pub fn solve_k1_4d(
    alpha: f64,
    beta: f64,
    gamma4: f64,
    init: [f64; 4],
    domain: (f64, f64),
    h: f64,
) -> Result<SpatialSolution> {
    let system = CurvatureSystem::Spatial { alpha, beta, gamma: gamma4 };
    let profile = SolvedProfile::solve(system, [init[0], init[1], init[2], init[3], 0.0], domain, h)?;
    let s0 = domain.0;
    let e4 = energy_k1_4d(&profile, alpha, beta, gamma4, 0.0, s0)?;
    let mut energy_drift: f64 = 0.0;
    for s in profile.nodes() {
        energy_drift = energy_drift.max(energy_k1_4d(&profile, alpha, beta, gamma4, e4, s)?.abs());
    }
    Ok(SpatialSolution { profile, gamma4, e4, energy_drift })
}

#[derive(Debug, Clone)]
pub struct SecondCurvatureSolution {
    pub profile: SolvedProfile,
    /// Max of `|k1 - k2^2 (k1/k2^2 |_start - int k2'''/k2^3)|` over the
    /// leading stretch where `kappa2` stays above [`DECOUPLING_FLOOR`];
    /// `None` when `kappa2` starts below it.
    pub decoupling_residual: Option<f64>,
}

pub const DECOUPLING_FLOOR: f64 = 1e-3;

/// Second-curvature model as a five-dimensional first-order system; `init`
/// is `(k2, k2', k2'', k1, k1')`. The coupling cancels from both equations,
/// so it only has to be nonzero.
pub fn solve_k2(lambda2: f64, init: [f64; 5], domain: (f64, f64), h: f64) -> Result<SecondCurvatureSolution> {
    if lambda2 == 0.0 || !lambda2.is_finite() {
        return Err(Error::InvalidParameter("lambda2 must be nonzero".into()));
    }
    let profile = SolvedProfile::solve(CurvatureSystem::SecondCurvature, init, domain, h)?;
    let decoupling_residual = decoupling_residual(&profile)?;
    Ok(SecondCurvatureSolution { profile, decoupling_residual })
}

fn decoupling_residual(p: &SolvedProfile) -> Result<Option<f64>> {
    let y0 = p.states[0];
    if y0[0] <= DECOUPLING_FLOOR {
        return Ok(None);
    }
    let g0 = y0[3] / (y0[0] * y0[0]);
    let (x, w) = gauss_legendre(8);
    let mut integral = 0.0;
    let mut worst: f64 = 0.0;
    for i in 1..p.states.len() {
        let y = p.states[i];
        if y[0] <= DECOUPLING_FLOOR {
            break;
        }
        let (a, b) = (p.sigma0 + (i - 1) as f64 * p.h, p.sigma0 + i as f64 * p.h);
        let t = p.system.taylor(&p.states[i - 1], 4);
        for (xi, wi) in x.iter().zip(&w) {
            let off = 0.5 * (b - a) * (xi + 1.0);
            let k2 = t[0].eval_offset(off);
            let k2ddd = t[2].diff().eval_offset(off);
            integral += 0.5 * (b - a) * wi * k2ddd / k2.powi(3);
        }
        let predicted = y[0] * y[0] * (g0 - integral);
        worst = worst.max((predicted - y[3]).abs());
    }
    Ok(Some(worst))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{AnalyticProfile, ConstantProfile};

    #[test]
    fn helix_solves_pseudo_arclength() {
        let m = ModelSpec::pseudo_arclength(Dim::Four, 1.0);
        let p = ConstantProfile::new(Dim::Four, -0.5, 0.0, 1.0).unwrap();
        assert_eq!(eom_residual(&m, &p, 0.3).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn constant_curvatures_solve_linear_k1() {
        let (a, b) = (-1.0, 2.0);
        let m = ModelSpec::linear_k1(Dim::Four, a, b);
        let p = ConstantProfile::new(Dim::Four, a / b, 0.7, 1.0).unwrap();
        for r in eom_residual(&m, &p, 0.5).unwrap() {
            assert!(r.abs() < 1e-15);
        }
    }

    #[test]
    fn linear_k1_with_flat_k2_solves_k2_model() {
        let m = ModelSpec::linear_k2(3.0);
        let p = AnalyticProfile::new(Dim::Four, (0.0, 2.0), |s| (*s * 0.7 + 1.3, Jet::constant(0.0, s.len())));
        assert_eq!(eom_residual(&m, &p, 1.1).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn inverse_square_satisfies_first_integral() {
        let p =
            AnalyticProfile::new(Dim::Three, (0.5, 4.0), |s| (s.powi(2).recip() * 4.0, Jet::constant(0.0, s.len())));
        for s in [0.5, 1.0, 2.2, 4.0] {
            assert!(first_integral_k1_3d(&p, 0.0, 1.0, 0.0, 0.0, s).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn taylor_matches_closed_form() {
        // k2 model with k2 = 0: k1 linear
        let sys = CurvatureSystem::SecondCurvature;
        let t = sys.taylor(&[0.0, 0.0, 0.0, 1.0, 0.5], 6);
        assert_eq!(t[3].derivatives(), vec![1.0, 0.5, 0.0, 0.0, 0.0, 0.0]);
        // planar, beta = 1, alpha = gamma = 0: k'' = 3/2 k^2 has k = 4/s^2
        let sys = CurvatureSystem::Planar { alpha: 0.0, beta: 1.0, gamma: 0.0 };
        let t = sys.taylor(&[4.0, -8.0, 0.0, 0.0, 0.0], 6);
        let exact = [4.0, -8.0, 24.0, -96.0, 480.0, -2880.0];
        for (k, e) in exact.iter().enumerate() {
            assert!((t[0].derivative(k).unwrap() - e).abs() < 1e-9 * e.abs(), "k={k}");
        }
    }

    #[test]
    fn inverse_square_is_reproduced_by_the_solver() {
        let c = PlanarConstants { gamma3: 0.0, e3: 0.0 };
        let sol = solve_k1_3d(0.0, 1.0, c, 4.0, -1.0, (1.0, 3.0), 1e-3).unwrap();
        for s in [1.0, 1.5, 2.0, 2.7345, 3.0] {
            let k = sol.profile.kappa(s).unwrap().0;
            assert!((k - 4.0 / (s * s)).abs() < 1e-10, "s={s} k={k}");
        }
        assert_eq!(sol.orbit, Orbit::Separatrix { double_root: 0.0 });
    }

    #[test]
    fn cubic_roots_recovered() {
        let r = cubic_roots(-(1.0 + 2.0 + 4.0), 1.0 * 2.0 + 1.0 * 4.0 + 2.0 * 4.0, -8.0);
        for (a, b) in r.iter().zip([1.0, 2.0, 4.0]) {
            assert!((a - b).abs() < 1e-13);
        }
        assert_eq!(cubic_roots(0.0, 1.0, 0.0).len(), 1);
    }

    #[test]
    fn forbidden_start_is_rejected() {
        // k'^2 = k^3 - 1 is negative at k = 0
        let c = PlanarConstants { gamma3: 0.0, e3: -0.5 };
        assert!(matches!(solve_k1_3d(0.0, 1.0, c, 0.0, 1.0, (0.0, 1.0), 0.01), Err(Error::ForbiddenRegion(_))));
    }

    #[test]
    fn equilibrium_stays_put() {
        let (a, b) = (1.0, 1.0);
        // minimum of the effective potential: R(k) = (k - k*)^2 (k - r3)
        let k_star = -1.0;
        let r3 = 3.0;
        // R = k^3 - (2k* + r3) k^2 + (k*^2 + 2 k* r3) k - k*^2 r3
        let alpha_over_beta = 2.0 * k_star + r3;
        assert_eq!(alpha_over_beta, a / b);
        let c = PlanarConstants {
            gamma3: 0.5 * b * (k_star * k_star + 2.0 * k_star * r3),
            e3: -0.5 * b * k_star * k_star * r3,
        };
        let sol = solve_k1_3d(a, b, c, k_star, 1.0, (0.0, 5.0), 0.01).unwrap();
        assert!(matches!(sol.orbit, Orbit::Equilibrium { .. }));
        assert!(sol.profile.states().iter().all(|y| (y[0] - k_star).abs() < 1e-12));
    }

    #[test]
    fn blow_up_keeps_partial_profile() {
        let sys = CurvatureSystem::Planar { alpha: 0.0, beta: 1.0, gamma: 0.0 };
        let (p, err) = SolvedProfile::march(sys, [4.0, 8.0, 0.0, 0.0, 0.0], (0.0, 5.0), 1e-3).unwrap();
        assert!(matches!(err, Some(Error::BlowUp { .. })), "{:?} {:?}", err, p.domain());
        assert!(p.domain().1 < 1.01, "{:?}", p.domain());
    }
}
