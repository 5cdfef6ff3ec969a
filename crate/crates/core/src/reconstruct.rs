//! Synthesis of a null curve from its curvatures: transport of the position
//! and null frame along pseudo-arclength, with periodic projection back onto
//! the Gram constraints.

use crate::curve::{CurvaturePair, NullFrame, SampledCurve};
use crate::error::{Error, Result};
use crate::minkowski::{Dim, FourVector};
use crate::ode::{rk4_step, step_count};
use crate::profile::CurvatureProfile;

/// Rows give the derivative of each leg in the basis `(e+, e1, e-, e2)`.
pub type FsMatrix = [[f64; 4]; 4];

/// The Frenet-Serret connection: `e+' = e1`, `e1' = k1 e+ + e-`,
/// `e-' = k1 e1 + k2 e2`, `e2' = k2 e+`.
pub fn fs_matrix(k: CurvaturePair) -> FsMatrix {
    let (k1, k2) = (k.kappa1, k.kappa2);
    [[0.0, 1.0, 0.0, 0.0], [k1, 0.0, 1.0, 0.0], [0.0, k1, 0.0, k2], [k2, 0.0, 0.0, 0.0]]
}

/// Gram matrix of the legs in the order `(e+, e1, e-, e2)`.
pub fn frame_gram() -> FsMatrix {
    [[0.0, 0.0, 1.0, 0.0], [0.0, -1.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, -1.0]]
}

/// Position and frame at one value of pseudo-arclength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveState {
    pub sigma: f64,
    pub x: FourVector,
    pub frame: NullFrame,
}

/// Rows of the packed state: `X, e+, e1, e-, e2`.
const ROWS: usize = 5;
type Packed = [f64; 4 * ROWS];
type Mat5 = [[f64; ROWS]; ROWS];

impl CurveState {
    /// Origin with the standard frame at `sigma = 0`.
    pub fn standard(dim: Dim) -> Self {
        CurveState { sigma: 0.0, x: FourVector::zero(dim), frame: NullFrame::standard(dim) }
    }

    pub fn dim(&self) -> Dim {
        self.x.dim()
    }

    fn rows(&self) -> [FourVector; ROWS] {
        let f = &self.frame;
        [self.x, f.e_plus, f.e1, f.e_minus, f.e2.unwrap_or_else(|| FourVector::zero(self.dim()))]
    }

    fn from_rows(dim: Dim, sigma: f64, r: &[FourVector; ROWS]) -> Self {
        let e2 = match dim {
            Dim::Four => Some(r[4]),
            Dim::Three => None,
        };
        CurveState { sigma, x: r[0], frame: NullFrame { e_plus: r[1], e1: r[2], e_minus: r[3], e2 } }
    }

    fn pack(&self) -> Packed {
        let mut p = [0.0; 4 * ROWS];
        for (i, v) in self.rows().iter().enumerate() {
            p[4 * i..4 * i + v.dim().n()].copy_from_slice(v.components());
        }
        p
    }

    fn unpack(dim: Dim, sigma: f64, p: &Packed) -> Self {
        let n = dim.n();
        let rows =
            std::array::from_fn(|i| FourVector::from_slice(dim, &p[4 * i..4 * i + n]).unwrap_or(FourVector::zero(dim)));
        Self::from_rows(dim, sigma, &rows)
    }

    fn packed_finite(p: &Packed) -> bool {
        p.iter().all(|v| v.is_finite() && v.abs() < 1e150)
    }
}

/// Augmented connection acting on the rows `X, e+, e1, e-, e2`.
fn augmented(k: CurvaturePair) -> Mat5 {
    let (k1, k2) = (k.kappa1, k.kappa2);
    [
        [0.0, 1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0, 0.0],
        [0.0, k1, 0.0, 1.0, 0.0],
        [0.0, 0.0, k1, 0.0, k2],
        [0.0, k2, 0.0, 0.0, 0.0],
    ]
}

fn apply(m: &Mat5, p: &Packed) -> Packed {
    let mut out = [0.0; 4 * ROWS];
    for i in 0..ROWS {
        for j in 0..ROWS {
            let a = m[i][j];
            if a != 0.0 {
                for c in 0..4 {
                    out[4 * i + c] += a * p[4 * j + c];
                }
            }
        }
    }
    out
}

fn mat_mul(a: &Mat5, b: &Mat5) -> Mat5 {
    let mut out = [[0.0; ROWS]; ROWS];
    for i in 0..ROWS {
        for k in 0..ROWS {
            for j in 0..ROWS {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
fn expm(a: &Mat5) -> Mat5 {
    let norm = a.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.125 {
        scale *= 0.5;
        squarings += 1;
    }
    let mut scaled = *a;
    scaled.iter_mut().flatten().for_each(|v| *v *= scale);
    let mut result = [[0.0; ROWS]; ROWS];
    let mut term = [[0.0; ROWS]; ROWS];
    for i in 0..ROWS {
        result[i][i] = 1.0;
        term[i][i] = 1.0;
    }
    for k in 1..=18 {
        term = mat_mul(&term, &scaled);
        term.iter_mut().flatten().for_each(|v| *v /= k as f64);
        for i in 0..ROWS {
            for j in 0..ROWS {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        result = mat_mul(&result, &result);
    }
    result
}

/// Exact transport for constant curvatures: the state at `sigma` starting
/// from `init`, `exp((sigma - sigma0) B) Y0`.
pub fn closed_form(k: CurvaturePair, init: &CurveState, sigma: f64) -> CurveState {
    closed_form_derivatives(k, init, sigma, 1).remove(0)
}

/// The closed-form state and its first `count - 1` sigma-derivatives
/// (`B^n exp(sigma B) Y0`), each packed as a [`CurveState`] whose legs hold
/// the derivative of the corresponding leg.
pub fn closed_form_derivatives(k: CurvaturePair, init: &CurveState, sigma: f64, count: usize) -> Vec<CurveState> {
    let b = augmented(k);
    let mut step = b;
    step.iter_mut().flatten().for_each(|v| *v *= sigma - init.sigma);
    let mut p = apply(&expm(&step), &init.pack());
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(CurveState::unpack(init.dim(), sigma, &p));
        p = apply(&b, &p);
    }
    out
}

/// Projects a nearly null frame back onto the Gram constraints.
///
/// `e+` receives the smallest correction along `e-` that makes it null;
/// `e1` and then `e2` are made orthogonal to `e+` (and `e2` to `e1`) by
/// removing components along the null pair and normalized; finally `e-` is
/// the unique null vector with `e-.e+ = 1` orthogonal to `e1`, `e2`, taken
/// on the root continuous with the input.
pub fn restore_frame(f: &NullFrame) -> Result<NullFrame> {
    let residual = f.gram_residual();
    if !(residual < 0.1) {
        return Err(Error::ResidualTooLarge(residual));
    }
    let em = f.e_minus;
    let mut ep = f.e_plus;
    let (pp, pm, mm) = (ep.dot(&ep), ep.dot(&em), em.dot(&em));
    let disc = pm * pm - pp * mm;
    if disc < 0.0 || pm <= 0.0 {
        return Err(Error::Singular("no null direction in the span of e+ and e-"));
    }
    ep += em * (-pp / (pm + disc.sqrt()));

    let pm = ep.dot(&em);
    if pm.abs() < 1e-300 {
        return Err(Error::Singular("e+ orthogonal to e-"));
    }
    let dual = em / pm;
    let project = |v: FourVector| v - dual * v.dot(&ep) - ep * v.dot(&dual);
    let unit = |v: FourVector| -> Result<FourVector> {
        let n2 = -v.dot(&v);
        if !(n2 > 0.0) {
            return Err(Error::Singular("spacelike leg lost its norm"));
        }
        Ok(v / n2.sqrt())
    };
    let e1 = unit(project(f.e1))?;
    let e2 = match f.e2 {
        Some(v) => {
            let v = project(v);
            Some(unit(v + e1 * v.dot(&e1))?)
        }
        None => None,
    };
    let mut n = dual + e1 * dual.dot(&e1);
    if let Some(e2) = e2 {
        n += e2 * dual.dot(&e2);
    }
    let e_minus = n - ep * (0.5 * n.dot(&n));
    Ok(NullFrame { e_plus: ep, e_minus, e1, e2 })
}

/// States at uniform steps of pseudo-arclength.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub h: f64,
    pub renorm_every: usize,
    pub states: Vec<CurveState>,
    pub curvatures: Vec<CurvaturePair>,
    /// Gram residual of each recorded frame.
    pub residuals: Vec<f64>,
}

impl Trajectory {
    pub fn dim(&self) -> Dim {
        self.states[0].dim()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(*r))
    }

    pub fn last(&self) -> &CurveState {
        self.states.last().unwrap()
    }

    /// Every `stride`-th state as samples `[X, X', X'']` = `[X, e+, e1]` in
    /// the parameter `lambda = sigma`.
    pub fn to_curve_source(&self, stride: usize) -> Result<SampledCurve> {
        let stride = stride.max(1);
        let picked: Vec<&CurveState> = self.states.iter().step_by(stride).collect();
        let lambdas = picked.iter().map(|s| s.sigma).collect();
        let derivs = picked.iter().map(|s| vec![s.x, s.frame.e_plus, s.frame.e1]).collect();
        SampledCurve::from_jets(self.dim(), lambdas, derivs)
    }
}

/// Initial frames must satisfy the Gram table to this accuracy.
pub const INIT_TOLERANCE: f64 = 1e-12;

/// Integrates the frame equations with `X' = e+` from `init.sigma` to the
/// end of the profile's domain with fixed step `h` (whole steps only),
/// restoring the frame every `renorm_every` steps (0 disables).
pub fn integrate(profile: &dyn CurvatureProfile, init: &CurveState, h: f64, renorm_every: usize) -> Result<Trajectory> {
    let (traj, err) = integrate_partial(profile, init, h, renorm_every)?;
    match err {
        Some(e) => Err(e),
        None => Ok(traj),
    }
}

/// Like [`integrate`], but a failure during the run returns the states
/// recorded so far together with the error.
pub fn integrate_partial(
    profile: &dyn CurvatureProfile,
    init: &CurveState,
    h: f64,
    renorm_every: usize,
) -> Result<(Trajectory, Option<Error>)> {
    let dim = init.dim();
    if profile.dim() != dim || init.frame.dim() != dim {
        return Err(Error::DimensionMismatch(profile.dim(), dim));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!("step must be positive, got {h}")));
    }
    let residual = init.frame.gram_residual();
    if !(residual <= INIT_TOLERANCE) || !init.x.is_finite() {
        return Err(Error::InvalidInit(format!("initial frame Gram residual {residual:e}")));
    }
    let (lo, hi) = profile.domain();
    let sigma0 = init.sigma;
    if sigma0 < lo - 1e-12 || sigma0 >= hi {
        return Err(Error::InvalidInit(format!("initial sigma {sigma0} outside [{lo}, {hi})")));
    }
    let steps = step_count(sigma0, hi, h);
    let k0 = kappa_at(profile, sigma0)?;
    let mut traj = Trajectory { h, renorm_every, states: vec![*init], curvatures: vec![k0], residuals: vec![residual] };
    let mut rhs = |t: f64, y: &Packed| -> Result<Packed> { Ok(apply(&augmented(kappa_at(profile, t)?), y)) };
    let mut y = init.pack();
    for i in 0..steps {
        let t = sigma0 + i as f64 * h;
        let next = match rk4_step(&mut rhs, t, &y, h) {
            Ok(n) => n,
            Err(e) => return Ok((traj, Some(e))),
        };
        if !CurveState::packed_finite(&next) {
            return Ok((traj, Some(Error::BlowUp { last_sigma: t })));
        }
        let sigma = sigma0 + (i + 1) as f64 * h;
        let mut state = CurveState::unpack(dim, sigma, &next);
        if renorm_every > 0 && (i + 1) % renorm_every == 0 {
            match restore_frame(&state.frame) {
                Ok(f) => state.frame = f,
                Err(e) => return Ok((traj, Some(e))),
            }
        }
        y = state.pack();
        let k = match kappa_at(profile, sigma) {
            Ok(k) => k,
            Err(e) => return Ok((traj, Some(e))),
        };
        traj.residuals.push(state.frame.gram_residual());
        traj.curvatures.push(k);
        traj.states.push(state);
    }
    Ok((traj, None))
}

fn kappa_at(profile: &dyn CurvatureProfile, sigma: f64) -> Result<CurvaturePair> {
    let (kappa1, kappa2) = profile.kappa(sigma)?;
    Ok(CurvaturePair { kappa1, kappa2 })
}
