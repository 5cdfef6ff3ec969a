//! Run configuration: one JSON document per run.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use nullfrenet_core::curve::Tolerances;
use nullfrenet_core::minkowski::Dim;
use nullfrenet_core::models::ModelSpec;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Extract,
    Reconstruct,
    Simulate,
    Verify,
    Helix,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Integrator {
    pub h: f64,
    pub sigma_max: f64,
    /// Frame restoration period in steps; 0 disables.
    pub renorm_every: usize,
}

impl Default for Integrator {
    fn default() -> Self {
        Integrator { h: 1e-3, sigma_max: 10.0, renorm_every: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Io {
    /// Curve file for `extract`, relative to the config file.
    pub input: Option<PathBuf>,
    /// Output directory, relative to the config file.
    pub output_dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for Io {
    fn default() -> Self {
        Io { input: None, output_dir: PathBuf::from("out"), formats: vec![Format::Csv, Format::Json] }
    }
}

/// Overrides of individual extraction tolerances.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancePatch {
    pub tol_null: Option<f64>,
    pub tol_frame: Option<f64>,
    pub tol_k2: Option<f64>,
    pub tol_radicand: Option<f64>,
}

impl TolerancePatch {
    pub fn apply(&self, mut base: Tolerances) -> Tolerances {
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut base.tol_null, self.tol_null);
        set(&mut base.tol_frame, self.tol_frame);
        set(&mut base.tol_k2, self.tol_k2);
        set(&mut base.tol_radicand, self.tol_radicand);
        base
    }
}

/// Curvature input of `reconstruct`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Constant {
        kappa1: f64,
        #[serde(default)]
        kappa2: f64,
    },
    /// `kappa_i = c0 + c1 sin(w s + phase)`, each given as `[c0, c1, w, phase]`.
    Harmonic {
        kappa1: [f64; 4],
        #[serde(default)]
        kappa2: [f64; 4],
    },
    /// Values on the uniform grid `sigma0 + i h`.
    Samples {
        sigma0: f64,
        h: f64,
        kappa1: Vec<f64>,
        #[serde(default)]
        kappa2: Vec<f64>,
    },
}

/// Initial data of `simulate`; which fields are required depends on the
/// model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    /// Constant curvatures of the pseudo-arclength model.
    pub kappa1: Option<f64>,
    pub kappa2: Option<f64>,
    /// Planar first-integral constants and starting point.
    pub gamma3: Option<f64>,
    pub e3: Option<f64>,
    pub kappa0: Option<f64>,
    pub sign: Option<f64>,
    /// Spatial constant.
    pub gamma4: Option<f64>,
    /// `(k1, k1', k2, k2')` for the spatial model, `(k2, k2', k2'', k1, k1')`
    /// for the second-curvature model.
    pub state: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HelixSpec {
    pub kappa1: f64,
    #[serde(default)]
    pub kappa2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySpec {
    pub t: Vec<f64>,
    pub grid: usize,
    pub deformations: usize,
    pub seed: u64,
    pub stationarity_tol: f64,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec { t: vec![1e-3, 5e-4, 2.5e-4], grid: 41, deformations: 20, seed: 1, stationarity_tol: 1e-5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: Option<Mode>,
    pub dimension: Dim,
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default)]
    pub io: Io,
    #[serde(default)]
    pub tolerances: TolerancePatch,
    #[serde(default)]
    pub profile: Option<ProfileSpec>,
    #[serde(default)]
    pub initial: Option<InitialData>,
    #[serde(default)]
    pub helix: Option<HelixSpec>,
    #[serde(default)]
    pub verify: VerifySpec,
}

/// A parsed configuration with its location and identity.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub mode: Mode,
    /// Directory relative paths are resolved against.
    pub base: PathBuf,
    /// SHA-256 of the canonical serialization, hex.
    pub hash: String,
}

impl LoadedConfig {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.config.io.output_dir)
    }

    pub fn wants(&self, f: Format) -> bool {
        self.config.io.formats.contains(&f)
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    /// Checks that do not need any computation.
    pub fn validate(&self, mode: Mode) -> Result<(), String> {
        let it = &self.integrator;
        if !(it.h > 0.0 && it.h.is_finite()) {
            return Err(format!("integrator.h must be positive, got {}", it.h));
        }
        if !(it.sigma_max > it.h && it.sigma_max.is_finite()) {
            return Err(format!("integrator.sigma_max must exceed h, got {}", it.sigma_max));
        }
        if self.io.formats.is_empty() {
            return Err("io.formats is empty".into());
        }
        if let Some(m) = &self.model {
            if m.dimension != self.dimension {
                return Err("model.dimension differs from dimension".into());
            }
            m.validate().map_err(|e| e.to_string())?;
        }
        match mode {
            Mode::Extract if self.io.input.is_none() => Err("extract needs io.input".into()),
            Mode::Reconstruct if self.profile.is_none() => Err("reconstruct needs a profile".into()),
            Mode::Simulate if self.model.is_none() => Err("simulate needs a model".into()),
            Mode::Simulate if self.initial.is_none() => Err("simulate needs initial data".into()),
            Mode::Helix if self.helix.is_none() => Err("helix mode needs a helix section".into()),
            Mode::Verify if self.verify.t.len() < 2 => Err("verify.t needs at least two values".into()),
            _ => Ok(()),
        }
    }
}

/// Reads and validates `path`. `mode` overrides the mode in the file.
pub fn load(path: &Path, mode: Option<Mode>) -> Result<LoadedConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let malformed = |message: String| CliError::Config { path: path.to_path_buf(), message };
    let mut config = RunConfig::parse(&text).map_err(malformed)?;
    let mode = mode.or(config.mode).ok_or_else(|| malformed("no mode given".into()))?;
    config.mode = Some(mode);
    config.validate(mode).map_err(malformed)?;
    let canonical = serde_json::to_vec(&config).map_err(|e| malformed(e.to_string()))?;
    let hash = hex::encode(Sha256::digest(&canonical));
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedConfig { config, mode, base, hash })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"mode": "helix", "dimension": 4, "helix": {"kappa1": -0.5}}"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.integrator, Integrator::default());
        assert_eq!(c.io.formats, vec![Format::Csv, Format::Json]);
        assert!(c.validate(Mode::Helix).is_ok());
        assert!(c.validate(Mode::Simulate).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = r#"{"mode": "helix", "dimension": 4, "helix": {"kappa1": -0.5}, "colour": 1}"#;
        assert!(RunConfig::parse(bad).is_err());
        let nested = r#"{"dimension": 4, "integrator": {"h": 0.1, "steps": 3}}"#;
        assert!(RunConfig::parse(nested).is_err());
        assert!(RunConfig::parse(r#"{"dimension": 5}"#).is_err());
    }

    #[test]
    fn hash_ignores_formatting_but_not_content() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        let c = dir.path().join("c.json");
        fs::write(&a, MINIMAL).unwrap();
        fs::write(&b, MINIMAL.replace(", ", ",\n    ")).unwrap();
        fs::write(&c, MINIMAL.replace("-0.5", "-0.25")).unwrap();
        let ha = load(&a, None).unwrap().hash;
        assert_eq!(ha, load(&b, None).unwrap().hash);
        assert_ne!(ha, load(&c, None).unwrap().hash);
        assert_ne!(ha, load(&a, Some(Mode::Verify)).unwrap().hash);
    }

    #[test]
    fn tolerance_patch_overrides_selected_fields() {
        let p = TolerancePatch { tol_k2: Some(1e-4), ..Default::default() };
        let t = p.apply(Tolerances::default());
        assert_eq!(t.tol_k2, 1e-4);
        assert_eq!(t.tol_null, Tolerances::default().tol_null);
    }
}
