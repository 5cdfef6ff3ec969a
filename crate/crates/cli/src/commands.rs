//! The five run modes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use nullfrenet_core::builtin::Helix;
use nullfrenet_core::curve::{frame_at, reparametrize, CurveFile, CurveKind, CurveSample, Tolerances};
use nullfrenet_core::jet::Jet;
use nullfrenet_core::minkowski::Dim;
use nullfrenet_core::models::{
    energy_k1_4d, eom_residual, first_integral_k1_3d, planar_initial_state, CurvatureSystem, ModelKind, ModelSpec,
    PlanarConstants, SolvedProfile,
};
use nullfrenet_core::noether::{arclength_mass2, charge_series, charges_for, drift_of, ChargeSet, DriftReport};
use nullfrenet_core::profile::{AnalyticProfile, ConstantProfile, CurvatureProfile, SampledProfile};
use nullfrenet_core::reconstruct::{integrate_partial, CurveState, Trajectory};
use nullfrenet_core::Error as CoreError;

use crate::battery::run_battery;
use crate::config::{Format, InitialData, LoadedConfig, Mode, ProfileSpec};
use crate::error::CliError;
use crate::output::{state_row, trajectory_columns, trajectory_row, CsvTable, OutputDir};

/// Stride of the samples written to `curve.json`.
pub const CURVE_STRIDE: usize = 5;

/// Runs the configured mode, writing into `out` or the configured directory.
pub fn run(cfg: &LoadedConfig, out: Option<&Path>) -> Result<Vec<PathBuf>, CliError> {
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_dir());
    let mut od = OutputDir::create(dir, &cfg.hash)?;
    let outcome = match cfg.mode {
        Mode::Extract => cmd_extract(cfg, &mut od),
        Mode::Reconstruct => cmd_reconstruct(cfg, &mut od),
        Mode::Simulate => cmd_simulate(cfg, &mut od),
        Mode::Verify => cmd_verify(cfg, &mut od),
        Mode::Helix => cmd_helix(cfg, &mut od),
    };
    outcome.map(|()| od.into_files())
}

struct Writer<'a> {
    cfg: &'a LoadedConfig,
    od: &'a mut OutputDir,
}

impl Writer<'_> {
    fn csv(&mut self, name: &str, t: &CsvTable) -> Result<(), CliError> {
        if self.cfg.wants(Format::Csv) {
            self.od.csv(name, t)?;
        }
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, body: &T) -> Result<(), CliError> {
        if self.cfg.wants(Format::Json) {
            self.od.json(name, body)?;
        }
        Ok(())
    }
}

/// Grid `start, start + h, ...` up to `end`, whole steps only.
fn grid(start: f64, end: f64, h: f64) -> Vec<f64> {
    let n = ((end - start) / h * (1.0 + 1e-12)).floor() as usize;
    (0..=n).map(|i| start + i as f64 * h).collect()
}

fn extraction_error(sigma: f64, e: CoreError) -> CliError {
    match e {
        CoreError::DegenerateCurve { .. }
        | CoreError::NotNull { .. }
        | CoreError::NegativeRadicand { .. }
        | CoreError::ExtractionFailure { .. } => CliError::Extraction { sigma, source: e },
        e => CliError::Core(e),
    }
}

#[derive(Serialize)]
struct GramSummary {
    dimension: Dim,
    samples: usize,
    sigma_total: f64,
    max_gram_residual: f64,
    mean_gram_residual: f64,
    tolerances: Tolerances,
}

pub fn cmd_extract(cfg: &LoadedConfig, od: &mut OutputDir) -> Result<(), CliError> {
    let c = &cfg.config;
    let path = cfg.resolve(c.io.input.as_deref().expect("validated"));
    let text = fs::read_to_string(&path).map_err(|source| CliError::Io { path: path.clone(), source })?;
    let bad = |message: String| CliError::Input { path: path.clone(), message };
    let mut doc: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    // curve files written by `reconstruct` carry their own stamp
    if let Some(obj) = doc.as_object_mut() {
        obj.remove("config_hash");
    }
    let file: CurveFile = serde_json::from_value(doc).map_err(|e| bad(e.to_string()))?;
    if file.dimension != c.dimension {
        return Err(bad(format!("curve is {} but the config asks for {}", file.dimension, c.dimension)));
    }
    let base = if file.is_sampled() { Tolerances::sampled() } else { Tolerances::default() };
    let tol = c.tolerances.apply(base);
    let src = file.into_source().map_err(|e| bad(e.to_string()))?;
    let map = reparametrize(src).map_err(|e| extraction_error(0.0, e))?;

    let mut profile = CsvTable::new(["sigma", "kappa1", "kappa2"]);
    let mut frames = CsvTable::new(trajectory_columns(c.dimension));
    let (mut worst, mut sum) = (0.0f64, 0.0);
    let sigmas = grid(0.0, map.total(), c.integrator.h);
    for &s in &sigmas {
        let (frame, k) = frame_at(&map, s, &tol).map_err(|e| extraction_error(s, e))?;
        let lambda = map.lambda_of(s)?;
        let x = map.source().jet(lambda, 1)?.value()?;
        let r = frame.gram_residual();
        worst = worst.max(r);
        sum += r;
        profile.push(vec![s, k.kappa1, k.kappa2]);
        frames.push(trajectory_row(s, &x, &frame, (k.kappa1, k.kappa2), r));
    }
    let summary = GramSummary {
        dimension: c.dimension,
        samples: sigmas.len(),
        sigma_total: map.total(),
        max_gram_residual: worst,
        mean_gram_residual: sum / sigmas.len() as f64,
        tolerances: tol,
    };
    let mut w = Writer { cfg, od };
    w.csv("profile.csv", &profile)?;
    w.csv("frames.csv", &frames)?;
    w.json("gram.json", &summary)
}

fn harmonic(c: [f64; 4], s: &Jet) -> Jet {
    (*s * c[2] + c[3]).sin() * c[1] + c[0]
}

/// The curvature profile described by `spec` on `[0, sigma_max]`.
pub fn build_profile(dim: Dim, spec: &ProfileSpec, sigma_max: f64) -> Result<Box<dyn CurvatureProfile>, CoreError> {
    Ok(match spec {
        ProfileSpec::Constant { kappa1, kappa2 } => Box::new(ConstantProfile::new(dim, *kappa1, *kappa2, sigma_max)?),
        ProfileSpec::Harmonic { kappa1, kappa2 } => {
            if dim == Dim::Three && kappa2.iter().any(|v| *v != 0.0) {
                return Err(CoreError::InvalidParameter("kappa2 must vanish in 2+1".into()));
            }
            let (a, b) = (*kappa1, *kappa2);
            Box::new(AnalyticProfile::new(dim, (0.0, sigma_max), move |s: &Jet| (harmonic(a, s), harmonic(b, s))))
        }
        ProfileSpec::Samples { sigma0, h, kappa1, kappa2 } => {
            let k2 = if kappa2.is_empty() { vec![0.0; kappa1.len()] } else { kappa2.clone() };
            Box::new(SampledProfile::new(dim, *sigma0, *h, kappa1.clone(), k2)?)
        }
    })
}

#[derive(Serialize)]
struct IntegrationSummary {
    dimension: Dim,
    h: f64,
    renorm_every: usize,
    steps: usize,
    sigma_end: f64,
    max_gram_residual: f64,
    completed: bool,
}

fn integration_summary(t: &Trajectory, completed: bool) -> IntegrationSummary {
    IntegrationSummary {
        dimension: t.dim(),
        h: t.h,
        renorm_every: t.renorm_every,
        steps: t.states.len() - 1,
        sigma_end: t.last().sigma,
        max_gram_residual: t.max_residual(),
        completed,
    }
}

fn trajectory_table(t: &Trajectory) -> CsvTable {
    let mut table = CsvTable::new(trajectory_columns(t.dim()));
    for (s, k) in t.states.iter().zip(&t.curvatures) {
        table.push(state_row(s, (k.kappa1, k.kappa2)));
    }
    table
}

/// Every `stride`-th state as a sampled curve with `[X', X'']` attached.
pub fn curve_file(t: &Trajectory, stride: usize) -> CurveFile {
    let samples = t
        .states
        .iter()
        .step_by(stride.max(1))
        .map(|s| CurveSample {
            lambda: s.sigma,
            x: s.x.components().to_vec(),
            derivatives: vec![s.frame.e_plus.components().to_vec(), s.frame.e1.components().to_vec()],
        })
        .collect();
    CurveFile { dimension: t.dim(), kind: CurveKind::Samples, samples, builtin: None }
}

fn blow_up(e: CoreError) -> CliError {
    match e {
        CoreError::BlowUp { last_sigma } => CliError::BlowUp { last_sigma },
        e => CliError::Core(e),
    }
}

fn start_state(profile: &dyn CurvatureProfile) -> CurveState {
    let mut init = CurveState::standard(profile.dim());
    init.sigma = profile.domain().0;
    init
}

pub fn cmd_reconstruct(cfg: &LoadedConfig, od: &mut OutputDir) -> Result<(), CliError> {
    let c = &cfg.config;
    let it = &c.integrator;
    let profile = build_profile(c.dimension, c.profile.as_ref().expect("validated"), it.sigma_max)?;
    let (traj, failure) = integrate_partial(profile.as_ref(), &start_state(profile.as_ref()), it.h, it.renorm_every)?;
    let mut w = Writer { cfg, od };
    w.csv("trajectory.csv", &trajectory_table(&traj))?;
    w.json("curve.json", &curve_file(&traj, CURVE_STRIDE))?;
    w.json("summary.json", &integration_summary(&traj, failure.is_none()))?;
    failure.map_or(Ok(()), |e| Err(blow_up(e)))
}

fn required<T: Copy>(v: Option<T>, name: &str) -> Result<T, CoreError> {
    v.ok_or_else(|| CoreError::InvalidParameter(format!("initial.{name} is required for this model")))
}

fn state_vector<const N: usize>(init: &InitialData) -> Result<[f64; N], CoreError> {
    let v = init.state.as_ref().ok_or_else(|| CoreError::InvalidParameter("initial.state is required".into()))?;
    v.as_slice()
        .try_into()
        .map_err(|_| CoreError::InvalidParameter(format!("initial.state needs {N} values, got {}", v.len())))
}

/// Curvature profile of `model` from initial data; on blow-up the profile
/// stops at the last finite state and the error is returned alongside.
pub fn solve_model(
    model: &ModelSpec,
    init: &InitialData,
    domain: (f64, f64),
    h: f64,
) -> Result<(Box<dyn CurvatureProfile>, Option<CoreError>), CoreError> {
    let (system, y0) = match (model.kind, model.dimension) {
        (ModelKind::PseudoArclength, dim) => {
            let p = ConstantProfile::new(dim, required(init.kappa1, "kappa1")?, init.kappa2.unwrap_or(0.0), domain.1)?;
            return Ok((Box::new(p), None));
        }
        (ModelKind::LinearK1, Dim::Three) => {
            let constants = PlanarConstants { gamma3: required(init.gamma3, "gamma3")?, e3: required(init.e3, "e3")? };
            let sign = init.sign.unwrap_or(1.0);
            planar_initial_state(model.alpha, model.beta, &constants, required(init.kappa0, "kappa0")?, sign)?
        }
        (ModelKind::LinearK1, Dim::Four) => {
            let s: [f64; 4] = state_vector(init)?;
            let gamma = required(init.gamma4, "gamma4")?;
            (CurvatureSystem::Spatial { alpha: model.alpha, beta: model.beta, gamma }, [s[0], s[1], s[2], s[3], 0.0])
        }
        (ModelKind::LinearK2, _) => (CurvatureSystem::SecondCurvature, state_vector::<5>(init)?),
    };
    let (p, failure) = SolvedProfile::march(system, y0, domain, h)?;
    Ok((Box::new(p), failure))
}

/// The conserved quantity of the curvature equations, minus its start value.
fn integral_residual(model: &ModelSpec, init: &InitialData, profile: &dyn CurvatureProfile, s: f64) -> Option<f64> {
    let (a, b) = (model.alpha, model.beta);
    match (model.kind, model.dimension) {
        (ModelKind::LinearK1, Dim::Three) => first_integral_k1_3d(profile, a, b, init.gamma3?, init.e3?, s).ok(),
        (ModelKind::LinearK1, Dim::Four) => {
            let g = init.gamma4?;
            let s0 = profile.domain().0;
            let e4 = energy_k1_4d(profile, a, b, g, 0.0, s0).ok()?;
            energy_k1_4d(profile, a, b, g, e4, s).ok()
        }
        _ => None,
    }
}

#[derive(Serialize)]
struct SimulationReport {
    model: ModelSpec,
    integration: IntegrationSummary,
    max_eom_residual: f64,
    max_integral_residual: Option<f64>,
    charges: Option<DriftReport>,
}

fn charge_table(series: &[ChargeSet], t: &Trajectory) -> CsvTable {
    let names: Vec<String> = series[0].components().into_iter().map(|(n, _)| n).collect();
    let mut table = CsvTable::new(std::iter::once("sigma".to_string()).chain(names));
    for (c, s) in series.iter().zip(&t.states) {
        let mut row = vec![s.sigma];
        row.extend(c.components().into_iter().map(|(_, v)| v));
        table.push(row);
    }
    table
}

pub fn cmd_simulate(cfg: &LoadedConfig, od: &mut OutputDir) -> Result<(), CliError> {
    let c = &cfg.config;
    let it = &c.integrator;
    let model = c.model.expect("validated");
    let init = c.initial.as_ref().expect("validated");
    let (profile, solver_failure) = solve_model(&model, init, (0.0, it.sigma_max), it.h)?;
    let profile = profile.as_ref();
    let (traj, lift_failure) = integrate_partial(profile, &start_state(profile), it.h, it.renorm_every)?;

    let n_eom = eom_residual(&model, profile, 0.0)?.len();
    let mut columns: Vec<String> = ["sigma", "kappa1", "kappa2"].map(String::from).to_vec();
    columns.extend((0..n_eom).map(|i| format!("eom{i}")));
    let has_integral = integral_residual(&model, init, profile, 0.0).is_some();
    if has_integral {
        columns.push("integral_residual".into());
    }
    let mut table = CsvTable::new(columns);
    let (mut worst_eom, mut worst_int) = (0.0f64, 0.0f64);
    for (s, k) in traj.states.iter().zip(&traj.curvatures) {
        let mut row = vec![s.sigma, k.kappa1, k.kappa2];
        for r in eom_residual(&model, profile, s.sigma)? {
            worst_eom = worst_eom.max(r.abs());
            row.push(r);
        }
        if has_integral {
            let r = integral_residual(&model, init, profile, s.sigma).unwrap_or(f64::NAN);
            worst_int = worst_int.max(r.abs());
            row.push(r);
        }
        table.push(row);
    }

    let mut w = Writer { cfg, od };
    w.csv("profile.csv", &table)?;
    w.csv("trajectory.csv", &trajectory_table(&traj))?;
    let charges = if model.kind == ModelKind::LinearK2 {
        None
    } else {
        let series = charge_series(&traj, profile, &model)?;
        w.csv("charges.csv", &charge_table(&series, &traj))?;
        Some(drift_of(&series))
    };
    let report = SimulationReport {
        model,
        integration: integration_summary(&traj, solver_failure.is_none() && lift_failure.is_none()),
        max_eom_residual: worst_eom,
        max_integral_residual: has_integral.then_some(worst_int),
        charges,
    };
    w.json("drift.json", &report)?;

    if let Some(e) = solver_failure.or(lift_failure) {
        return Err(blow_up(e));
    }
    if let Some(d) = report.charges.as_ref().filter(|d| d.any_flagged) {
        let names: Vec<&str> = d.entries.iter().filter(|e| e.flagged).map(|e| e.name.as_str()).collect();
        return Err(CliError::Drift { threshold: d.threshold, names: names.join(", ") });
    }
    Ok(())
}

pub fn cmd_verify(cfg: &LoadedConfig, od: &mut OutputDir) -> Result<(), CliError> {
    let report = run_battery(cfg.config.dimension, &cfg.config.verify)?;
    Writer { cfg, od }.json("verify.json", &report)?;
    if report.all_passed {
        Ok(())
    } else {
        Err(CliError::Verify(report.failures().join(", ")))
    }
}

#[derive(Serialize)]
struct HelixCasimirs {
    model: ModelSpec,
    kappa1: f64,
    kappa2: f64,
    mass2: f64,
    casimir2: f64,
    /// `-2 alpha^2 kappa1` for the pseudo-arclength model.
    mass2_analytic: Option<f64>,
    max_mass2_drift: f64,
    max_casimir2_drift: f64,
    max_gram_residual: f64,
}

pub fn cmd_helix(cfg: &LoadedConfig, od: &mut OutputDir) -> Result<(), CliError> {
    let c = &cfg.config;
    let spec = c.helix.expect("validated");
    let sigma_max = c.integrator.sigma_max;
    let helix = Helix::new(c.dimension, spec.kappa1, spec.kappa2, sigma_max)?;
    let model = c.model.unwrap_or_else(|| ModelSpec::pseudo_arclength(c.dimension, 1.0));
    let profile = ConstantProfile::new(c.dimension, spec.kappa1, spec.kappa2, sigma_max)?;

    let mut table = CsvTable::new(trajectory_columns(c.dimension));
    let mut series = Vec::new();
    let mut worst = 0.0f64;
    for s in grid(0.0, sigma_max, c.integrator.h) {
        let st = helix.state_at(s);
        let r = st.frame.gram_residual();
        worst = worst.max(r);
        table.push(state_row(&st, (spec.kappa1, spec.kappa2)));
        if model.kind != ModelKind::LinearK2 {
            series.push(charges_for(&model, &st, &profile)?);
        }
    }
    let mut w = Writer { cfg, od };
    w.csv("trajectory.csv", &table)?;
    if let Some(first) = series.first() {
        let drift = |f: fn(&ChargeSet) -> f64| series.iter().fold(0.0f64, |m, q| m.max((f(q) - f(first)).abs()));
        let body = HelixCasimirs {
            model,
            kappa1: spec.kappa1,
            kappa2: spec.kappa2,
            mass2: first.mass2,
            casimir2: first.casimir2,
            mass2_analytic: (model.kind == ModelKind::PseudoArclength)
                .then(|| arclength_mass2(model.alpha, spec.kappa1)),
            max_mass2_drift: drift(|q| q.mass2),
            max_casimir2_drift: drift(|q| q.casimir2),
            max_gram_residual: worst,
        };
        w.json("casimirs.json", &body)?;
    }
    Ok(())
}

type RunResult = Result<Vec<PathBuf>, CliError>;

/// Outcome of one config in a sweep.
#[derive(Debug)]
pub struct SweepItem {
    pub config: PathBuf,
    pub result: RunResult,
}

/// Runs every `*.json` config in `dir`, each into `<output_dir>/<stem>`,
/// spread over the available cores. Items come back sorted by path.
pub fn sweep(dir: &Path, mode: Option<Mode>) -> Result<Vec<SweepItem>, CliError> {
    let entries = fs::read_dir(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(paths.len().max(1));
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<Option<RunResult>>> = paths.iter().map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                let Some(path) = paths.get(i) else { break };
                let result = crate::config::load(path, mode).and_then(|cfg| {
                    let stem = path.file_stem().unwrap_or_default();
                    run(&cfg, Some(&cfg.output_dir().join(stem)))
                });
                *slots[i].lock().unwrap() = Some(result);
            });
        }
    });
    Ok(paths
        .into_iter()
        .zip(slots)
        .map(|(config, slot)| SweepItem { config, result: slot.into_inner().unwrap().expect("every item runs") })
        .collect())
}
