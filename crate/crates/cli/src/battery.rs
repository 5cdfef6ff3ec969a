//! The verification battery: finite-difference checks of the variation
//! formulas and stationarity of each model's solutions.

use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use nullfrenet_core::builtin::{FramedCurve, Helix, NullCubic};
use nullfrenet_core::field::{LinearCombination, ScalarField, WindowField, ZeroField};
use nullfrenet_core::minkowski::Dim;
use nullfrenet_core::models::{solve_k1_3d, solve_k1_4d, solve_k2, ModelSpec, PlanarConstants};
use nullfrenet_core::profile::{ConstantProfile, CurvatureProfile};
use nullfrenet_core::variation::{
    fd_check_with, first_variation_action_with, DeformationField, FdOptions, FdReport, NullVariation,
    VariationFormulas, LINEAR_RATIO, QUADRATIC_RATIO,
};
use nullfrenet_core::Result;

use crate::config::VerifySpec;

/// Step of the curvature solvers used for stationarity.
pub const SOLVER_STEP: f64 = 1e-3;
/// Domain of the stationarity cases.
pub const STATIONARITY_DOMAIN: (f64, f64) = (0.0, 10.0);
/// Finite-difference errors of the action below this are rounding noise.
pub const ACTION_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedFd {
    pub curve: String,
    pub report: FdReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryReport {
    pub dimension: Dim,
    pub checks: Vec<Check>,
    pub fd: Vec<NamedFd>,
    pub all_passed: bool,
}

impl BatteryReport {
    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

fn bump(a: f64, b: f64) -> Arc<dyn ScalarField> {
    Arc::new(WindowField::bump(a, b, 8).expect("window is nonempty"))
}

/// A framed test curve with a deformation supported inside its domain.
pub struct FdCase {
    pub name: &'static str,
    pub curve: Arc<dyn FramedCurve>,
    pub deformation: DeformationField,
    pub model: ModelSpec,
}

/// The null cubic and a helix; nonplanar in 3+1.
pub fn fd_cases(dim: Dim) -> Result<Vec<FdCase>> {
    let eps2 = |a, b| -> Arc<dyn ScalarField> {
        match dim {
            Dim::Four => bump(a, b),
            Dim::Three => Arc::new(ZeroField),
        }
    };
    let k2 = if dim == Dim::Four { 0.3 } else { 0.0 };
    Ok(vec![
        FdCase {
            name: "null_cubic",
            curve: Arc::new(NullCubic::new(dim, 2.0)?),
            deformation: DeformationField::new(dim, bump(0.2, 1.8), eps2(0.5, 1.6))?,
            model: ModelSpec::linear_k1(dim, 1.0, 0.5),
        },
        FdCase {
            name: "helix",
            curve: Arc::new(Helix::new(dim, -0.5, k2, 6.0)?),
            deformation: DeformationField::new(dim, bump(1.0, 5.0), eps2(1.5, 4.5))?,
            model: ModelSpec::linear_k1(dim, 1.0, 0.5),
        },
    ])
}

fn ratio_check(name: String, ratios: &[f64], (expected, tol): (f64, f64)) -> Check {
    let value = ratios.iter().fold(0.0f64, |m, r| m.max((r - expected).abs()));
    let passed = !ratios.is_empty() && ratios.iter().all(|r| (r - expected).abs() <= tol);
    Check { name, passed, value: if value.is_nan() { f64::INFINITY } else { value }, tolerance: tol }
}

fn fd_checks(curve: &str, r: &FdReport) -> Vec<Check> {
    let mut out: Vec<Check> =
        r.fixed_lambda.iter().map(|q| ratio_check(format!("fd/{curve}/{}", q.name), &q.ratios, LINEAR_RATIO)).collect();
    out.push(ratio_check(format!("fd/{curve}/null_violation"), &r.null_ratios, QUADRATIC_RATIO));
    if let Some(a) = &r.action {
        let worst = a.error.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if worst > ACTION_FLOOR {
            out.push(ratio_check(format!("fd/{curve}/action"), &a.ratios, QUADRATIC_RATIO));
        } else {
            // Stationary curve: the differences are rounding noise with no order.
            out.push(Check {
                name: format!("fd/{curve}/action_vanishes"),
                passed: true,
                value: worst,
                tolerance: ACTION_FLOOR,
            });
        }
    }
    out
}

/// A model together with a profile that solves it.
pub struct StationaryCase {
    pub name: &'static str,
    pub model: ModelSpec,
    pub profile: Box<dyn CurvatureProfile>,
}

pub fn stationary_cases(dim: Dim) -> Result<Vec<StationaryCase>> {
    let domain = STATIONARITY_DOMAIN;
    let mut cases = vec![StationaryCase {
        name: "pseudo_arclength",
        model: ModelSpec::pseudo_arclength(dim, 1.0),
        profile: Box::new(ConstantProfile::new(dim, -0.5, 0.0, domain.1)?),
    }];
    match dim {
        Dim::Three => {
            let constants = PlanarConstants { gamma3: -0.75, e3: 0.5 };
            let s = solve_k1_3d(1.5, 1.0, constants, 0.0, 1.0, domain, SOLVER_STEP)?;
            cases.push(StationaryCase {
                name: "linear_k1",
                model: ModelSpec::linear_k1(dim, 1.5, 1.0),
                profile: Box::new(s.profile),
            });
        }
        Dim::Four => {
            let s = solve_k1_4d(1.0, 1.0, -0.875, [-0.6, 0.2, 0.4, 0.1], domain, SOLVER_STEP)?;
            cases.push(StationaryCase {
                name: "linear_k1",
                model: ModelSpec::linear_k1(dim, 1.0, 1.0),
                profile: Box::new(s.profile),
            });
            let s = solve_k2(1.0, [0.5, 0.1, 0.0, -0.2, 0.0], domain, SOLVER_STEP)?;
            cases.push(StationaryCase {
                name: "linear_k2",
                model: ModelSpec::linear_k2(1.0),
                profile: Box::new(s.profile),
            });
        }
    }
    Ok(cases)
}

/// Sum of three random bumps inside `domain` for each free component.
pub fn random_deformation(rng: &mut StdRng, dim: Dim, domain: (f64, f64)) -> Result<DeformationField> {
    let component = |rng: &mut StdRng| -> Arc<dyn ScalarField> {
        let mut f = LinearCombination::new();
        for _ in 0..3 {
            let half = rng.gen_range(0.3..1.0);
            let centre = rng.gen_range(domain.0 + half + 0.1..domain.1 - half - 0.1);
            f = f.term(rng.gen_range(-1.0..1.0), bump(centre - half, centre + half));
        }
        Arc::new(f)
    };
    let em = component(rng);
    let e2: Arc<dyn ScalarField> = match dim {
        Dim::Four => component(rng),
        Dim::Three => Arc::new(ZeroField),
    };
    DeformationField::new(dim, em, e2)
}

/// Largest `|dS|` of `case` over `count` random compact deformations.
pub fn stationarity(formulas: &dyn VariationFormulas, case: &StationaryCase, count: usize, seed: u64) -> Result<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    let dim = case.model.dimension;
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let def = random_deformation(&mut rng, dim, STATIONARITY_DOMAIN)?;
        let ds = first_variation_action_with(formulas, &case.model, case.profile.as_ref(), &def, STATIONARITY_DOMAIN)?;
        worst = worst.max(ds.abs());
    }
    Ok(worst)
}

pub fn run_battery(dim: Dim, spec: &VerifySpec) -> Result<BatteryReport> {
    run_battery_with(&NullVariation, dim, spec)
}

/// The full battery with `formulas` standing in for the variation formulas.
pub fn run_battery_with(formulas: &dyn VariationFormulas, dim: Dim, spec: &VerifySpec) -> Result<BatteryReport> {
    let opts = FdOptions { grid: spec.grid, ..Default::default() };
    let mut checks = Vec::new();
    let mut fd = Vec::new();
    for case in fd_cases(dim)? {
        let report = fd_check_with(formulas, case.curve.clone(), &case.deformation, &case.model, &spec.t, &opts)?;
        checks.extend(fd_checks(case.name, &report));
        fd.push(NamedFd { curve: case.name.to_string(), report });
    }
    for case in stationary_cases(dim)? {
        let worst = stationarity(formulas, &case, spec.deformations, spec.seed)?;
        checks.push(Check {
            name: format!("stationarity/{}", case.name),
            passed: worst <= spec.stationarity_tol,
            value: worst,
            tolerance: spec.stationarity_tol,
        });
    }
    let all_passed = checks.iter().all(|c| c.passed);
    Ok(BatteryReport { dimension: dim, checks, fd, all_passed })
}
