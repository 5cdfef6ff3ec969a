//! Poincare charges of the curvature models, their Casimir invariants, and
//! conservation monitoring along reconstructed trajectories.
//!
//! Every charge is assembled from the frame, the position and the curvature
//! derivatives at a single point; nothing is re-differentiated.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::minkowski::{levi_civita_contract4, levi_civita_dual3, wedge, BiVector, Dim, FourVector};
use crate::models::{ModelKind, ModelSpec};
use crate::profile::CurvatureProfile;
use crate::reconstruct::{CurveState, Trajectory};

/// Below this `|M^2|` the spin vector is left unnormalized.
pub const MASS_FLOOR: f64 = 1e-12;

/// Linear momentum `p`, angular momentum `m` and the two Casimirs.
///
/// In 3+1, `spin` is the Pauli-Lubanski vector
/// `S_mu = eps_{mu nu rho sigma} P^nu M^{rho sigma} / (2 sqrt|M^2|)` and
/// `casimir2 = |M^2| S^2`; when `|M^2| <= MASS_FLOOR` the contraction is
/// reported without the `1/sqrt|M^2|` and `spin_normalized` is false.
/// In 2+1, `spin` is `J_mu = eps_{mu rho sigma} M^{rho sigma}` and
/// `casimir2 = J . P`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargeSet {
    pub p: FourVector,
    pub m: BiVector,
    pub mass2: f64,
    pub spin: FourVector,
    pub casimir2: f64,
    pub spin_normalized: bool,
}

impl ChargeSet {
    pub fn assemble(p: FourVector, m: BiVector) -> Result<ChargeSet> {
        p.dim().check(m.dim())?;
        let mass2 = p.dot(&p);
        Ok(match p.dim() {
            Dim::Four => {
                let u = levi_civita_contract4(&p, &m)? * 0.5;
                let casimir2 = u.dot(&u);
                if mass2.abs() > MASS_FLOOR {
                    ChargeSet { p, m, mass2, spin: u / mass2.abs().sqrt(), casimir2, spin_normalized: true }
                } else {
                    ChargeSet { p, m, mass2, spin: u, casimir2, spin_normalized: false }
                }
            }
            Dim::Three => {
                let j = levi_civita_dual3(&m)?;
                ChargeSet { p, m, mass2, spin: j, casimir2: j.dot(&p), spin_normalized: false }
            }
        })
    }

    /// Named scalar components: `P^mu`, `M^{mu nu}` (upper triangle),
    /// `mass2`, `casimir2`.
    pub fn components(&self) -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64)> =
            self.p.components().iter().enumerate().map(|(i, v)| (format!("P{i}"), *v)).collect();
        for &(a, b) in BiVector::index_pairs(self.m.dim()) {
            out.push((format!("M{a}{b}"), self.m.get(a, b)));
        }
        out.push(("mass2".into(), self.mass2));
        out.push(("casimir2".into(), self.casimir2));
        out
    }
}

/// Pseudo-arclength action `2 alpha int dsigma`:
/// `P = alpha (e- - k1 e+)`, `M = P^[ X ] + alpha e+^[ e1 ]`.
pub fn charges_arclength(alpha: f64, state: &CurveState, kappa1: f64) -> Result<ChargeSet> {
    let f = &state.frame;
    let p = (f.e_minus - f.e_plus * kappa1) * alpha;
    let m = wedge(&p, &state.x)? + wedge(&f.e_plus, &f.e1)? * alpha;
    ChargeSet::assemble(p, m)
}

/// Mass of the pseudo-arclength model from its curvature alone:
/// `M^2 = -2 alpha^2 kappa1`.
pub fn arclength_mass2(alpha: f64, kappa1: f64) -> f64 {
    -2.0 * alpha * alpha * kappa1
}

fn nonzero_beta(beta: f64) -> Result<()> {
    if beta == 0.0 || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta must be nonzero and finite, got {beta}")));
    }
    Ok(())
}

/// Integration constants of the planar `kappa1` model recovered from the
/// Casimirs: `gamma3 = -(S + alpha^2) / (2 beta)` and
/// `e3 = (alpha (S + alpha^2) - beta M^2) / (2 beta^2)`.
pub fn planar_constants_from_casimirs(alpha: f64, beta: f64, mass2: f64, spin: f64) -> Result<(f64, f64)> {
    nonzero_beta(beta)?;
    let gamma3 = -(spin + alpha * alpha) / (2.0 * beta);
    let e3 = (alpha * (spin + alpha * alpha) - beta * mass2) / (2.0 * beta * beta);
    Ok((gamma3, e3))
}

/// Linear-in-`kappa1` action in 2+1, with the integration constants
/// `(gamma3, e3)` derived from the Casimirs.
pub fn charges_k1_3d(
    alpha: f64,
    beta: f64,
    state: &CurveState,
    k1: f64,
    dk1: f64,
    ddk1: f64,
) -> Result<(ChargeSet, (f64, f64))> {
    Dim::Three.check(state.dim())?;
    nonzero_beta(beta)?;
    let f = &state.frame;
    let plus = -beta * ddk1 + beta * k1 * k1 - alpha * k1;
    let p = f.e_plus * plus + f.e1 * (beta * dk1) + f.e_minus * (alpha - beta * k1);
    let m = wedge(&p, &state.x)?
        + wedge(&f.e_minus, &f.e1)? * (2.0 * beta)
        + wedge(&f.e_plus, &f.e1)? * (alpha + beta * k1);
    let charges = ChargeSet::assemble(p, m)?;
    let constants = planar_constants_from_casimirs(alpha, beta, charges.mass2, charges.casimir2)?;
    Ok((charges, constants))
}

/// Curvatures and derivatives entering the 3+1 `kappa1` charges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialCurvatures {
    pub k1: f64,
    pub dk1: f64,
    pub ddk1: f64,
    pub k2: f64,
    pub dk2: f64,
}

impl SpatialCurvatures {
    /// `beta k1'' - 3 beta/2 k1^2 - beta k2^2 + alpha k1`.
    pub fn gamma4(&self, alpha: f64, beta: f64) -> f64 {
        beta * self.ddk1 - 1.5 * beta * self.k1 * self.k1 - beta * self.k2 * self.k2 + alpha * self.k1
    }
}

/// Linear-in-`kappa1` action in 3+1. Also returns `e4` from
/// `2 beta e4 = -M^2 - 2 alpha gamma4`, with `gamma4` evaluated locally.
pub fn charges_k1_4d(alpha: f64, beta: f64, state: &CurveState, k: &SpatialCurvatures) -> Result<(ChargeSet, f64)> {
    Dim::Four.check(state.dim())?;
    nonzero_beta(beta)?;
    let f = &state.frame;
    let e2 = f.e2.ok_or(Error::WrongMode { expected: Dim::Four, found: Dim::Three })?;
    let plus = -beta * k.ddk1 + beta * k.k1 * k.k1 - alpha * k.k1;
    let p = f.e_plus * plus + f.e_minus * (alpha - beta * k.k1) + f.e1 * (beta * k.dk1) + e2 * (2.0 * beta * k.dk2);
    let m = wedge(&p, &state.x)?
        + wedge(&f.e_minus, &f.e1)? * (2.0 * beta)
        + wedge(&f.e_plus, &f.e1)? * (alpha + beta * k.k1)
        + wedge(&f.e_plus, &e2)? * (2.0 * beta * k.k2);
    let charges = ChargeSet::assemble(p, m)?;
    let e4 = (-charges.mass2 - 2.0 * alpha * k.gamma4(alpha, beta)) / (2.0 * beta);
    Ok((charges, e4))
}

/// Closed form of `|M^2| S^2` for the 3+1 `kappa1` model after eliminating
/// `k1''` with the first integral:
/// `4 beta^3 k2' (beta k2 k1' - beta k1 k2' - alpha k2')
///  - beta^2 k2^2 (alpha - beta k1)^2
///  - (alpha^2 + 2 beta gamma4 + 2 beta^2 k2^2)^2 / 4`.
pub fn spin_casimir_k1_4d(alpha: f64, beta: f64, gamma4: f64, k: &SpatialCurvatures) -> f64 {
    let (a, b) = (alpha, beta);
    4.0 * b.powi(3) * k.dk2 * (b * k.k2 * k.dk1 - b * k.k1 * k.dk2 - a * k.dk2)
        - b * b * k.k2 * k.k2 * (a - b * k.k1).powi(2)
        - 0.25 * (a * a + 2.0 * b * gamma4 + 2.0 * b * b * k.k2 * k.k2).powi(2)
}

/// Charges of `model` at `state`, reading curvature derivatives from
/// `profile`. The second-curvature action has no charge formulas here.
pub fn charges_for(model: &ModelSpec, state: &CurveState, profile: &dyn CurvatureProfile) -> Result<ChargeSet> {
    model.dimension.check(state.dim())?;
    match model.kind {
        ModelKind::PseudoArclength => charges_arclength(model.alpha, state, profile.kappa(state.sigma)?.0),
        ModelKind::LinearK1 => {
            let j = profile.jets(state.sigma, 3)?;
            let (k1, dk1, ddk1) = (j.k1.value()?, j.k1.derivative(1)?, j.k1.derivative(2)?);
            match model.dimension {
                Dim::Three => Ok(charges_k1_3d(model.alpha, model.beta, state, k1, dk1, ddk1)?.0),
                Dim::Four => {
                    let k = SpatialCurvatures { k1, dk1, ddk1, k2: j.k2.value()?, dk2: j.k2.derivative(1)? };
                    Ok(charges_k1_4d(model.alpha, model.beta, state, &k)?.0)
                }
            }
        }
        ModelKind::LinearK2 => Err(Error::InvalidParameter("no charge formulas for the kappa2 action".into())),
    }
}

/// Drift of one conserved component.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftEntry {
    pub name: String,
    pub initial: f64,
    pub max_abs_drift: f64,
    /// `max_abs_drift / max(1, |initial|)`.
    pub relative_drift: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftReport {
    pub threshold: f64,
    pub samples: usize,
    pub entries: Vec<DriftEntry>,
    pub any_flagged: bool,
}

/// Drift threshold relative to `max(1, |Q(0)|)`.
pub const DRIFT_THRESHOLD: f64 = 1e-6;

/// Charges at every state of `traj`.
pub fn charge_series(traj: &Trajectory, profile: &dyn CurvatureProfile, model: &ModelSpec) -> Result<Vec<ChargeSet>> {
    traj.states.iter().map(|s| charges_for(model, s, profile)).collect()
}

/// Max `|Q(sigma) - Q(start)|` per charge component over a series.
pub fn drift_of(series: &[ChargeSet]) -> DriftReport {
    let first = series[0].components();
    let mut worst = vec![0.0f64; first.len()];
    for c in &series[1..] {
        for (w, ((_, q), (_, q0))) in worst.iter_mut().zip(c.components().iter().zip(&first)) {
            *w = w.max((q - q0).abs());
        }
    }
    let entries: Vec<DriftEntry> = first
        .into_iter()
        .zip(worst)
        .map(|((name, initial), max_abs_drift)| {
            let relative_drift = max_abs_drift / initial.abs().max(1.0);
            DriftEntry { name, initial, max_abs_drift, relative_drift, flagged: relative_drift > DRIFT_THRESHOLD }
        })
        .collect();
    let any_flagged = entries.iter().any(|e| e.flagged);
    DriftReport { threshold: DRIFT_THRESHOLD, samples: series.len(), entries, any_flagged }
}

pub fn drift_report(traj: &Trajectory, profile: &dyn CurvatureProfile, model: &ModelSpec) -> Result<DriftReport> {
    if traj.states.is_empty() {
        return Err(Error::InvalidParameter("empty trajectory".into()));
    }
    Ok(drift_of(&charge_series(traj, profile, model)?))
}
