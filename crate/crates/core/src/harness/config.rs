//! Experiment configuration documents.
//!
//! The format is TOML: `key = value` lines grouped in `[section]`s.
//!
//! ```toml
//! [run]
//! dt = 1e-3              # required
//! horizon = 1.0          # required
//! cutoff = 16            # required, modes |kx|, |ky| <= cutoff
//! seed = 0
//! snapshot_stride = 1
//! lambda_weight = 8.0    # must exceed 4
//! n_penalty = 100.0      # defaults to the first penalty level
//!
//! [coefficients]
//! nu = 0.1               # required, > 0
//! gamma = 0.5            # required, > 0
//! f_lin = 0.0
//! sigma_lin = 0.0
//! noise_dim = 1          # defaults to the number of [[noise]] tables
//! convection = true
//!
//! [forcing]              # f_const; same layout for [initial] and [[noise]]
//! modes = [[1, 0, 1.0, 0.0]]          # kx, ky, re, im along (-ky, kx)/|k|
//! coeffs = [[0, 1, 0.0, 0.0, 0.0, 0.0]] # kx, ky, re_x, im_x, re_y, im_y
//! norm = 1.5             # optional rescale to this H norm
//!
//! [experiment]
//! penalty_levels = [100, 1000, 10000]  # required, strictly increasing
//! ensemble_size = 1
//! dt_policy = "fixed"    # or "scaled": dt = dt0 * n0 / n
//! outputs = "reflectx-out"
//! emit_fields = false
//! workers = 0            # 0 = one per core
//! ```
//!
//! Partner modes `-k` are filled in by Hermitian symmetry. Unknown keys are
//! rejected.

use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{norm_h, SpectralField, Wavevector};
use crate::integrator::PenaltyRunConfig;
use crate::operators::CoefficientSet;

/// Environment variable that overrides `[run] seed`.
pub const SEED_ENV_VAR: &str = "REFLECTX_SEED";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Validation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DtPolicy {
    /// Every penalty level uses the base step.
    #[default]
    Fixed,
    /// `dt = dt0 · n0 / n`, keeping `n · dt` constant across levels.
    Scaled,
}

/// A validated experiment: base run parameters plus the penalty sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub base: PenaltyRunConfig,
    pub penalty_levels: Vec<f64>,
    pub ensemble_size: usize,
    pub dt_policy: DtPolicy,
    pub outputs: PathBuf,
    pub emit_fields: bool,
    pub workers: usize,
}

fn default_stride() -> usize {
    1
}
fn default_lambda() -> f64 {
    8.0
}
fn default_true() -> bool {
    true
}
fn default_ensemble() -> usize {
    1
}
fn default_outputs() -> String {
    "reflectx-out".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    run: RawRun,
    coefficients: RawCoefficients,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    forcing: Option<RawField>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    initial: Option<RawField>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    noise: Vec<RawField>,
    experiment: RawExperiment,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    dt: f64,
    horizon: f64,
    cutoff: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_stride")]
    snapshot_stride: usize,
    #[serde(default = "default_lambda")]
    lambda_weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_penalty: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoefficients {
    nu: f64,
    gamma: f64,
    #[serde(default)]
    f_lin: f64,
    #[serde(default)]
    sigma_lin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise_dim: Option<usize>,
    #[serde(default = "default_true")]
    convection: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawField {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    modes: Vec<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    coeffs: Vec<[f64; 6]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    norm: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    penalty_levels: Vec<f64>,
    #[serde(default = "default_ensemble")]
    ensemble_size: usize,
    #[serde(default)]
    dt_policy: DtPolicy,
    #[serde(default = "default_outputs")]
    outputs: String,
    #[serde(default)]
    emit_fields: bool,
    #[serde(default)]
    workers: usize,
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Validation(msg.into()))
}

fn mode_index(x: f64, what: &str) -> Result<i32, ConfigError> {
    if x.fract() != 0.0 || x.abs() > i32::MAX as f64 {
        return invalid(format!("{what}: mode index {x} is not an integer"));
    }
    Ok(x as i32)
}

impl RawField {
    fn build(&self, cutoff: usize, what: &str) -> Result<SpectralField, ConfigError> {
        let mut field = SpectralField::zeros(cutoff);
        for row in &self.coeffs {
            let k = Wavevector::new(mode_index(row[0], what)?, mode_index(row[1], what)?);
            field
                .set_mode(k, [Complex64::new(row[2], row[3]), Complex64::new(row[4], row[5])])
                .map_err(|e| ConfigError::Validation(format!("{what}: {e}")))?;
        }
        for row in &self.modes {
            let k = Wavevector::new(mode_index(row[0], what)?, mode_index(row[1], what)?);
            field
                .set_solenoidal_mode(k, Complex64::new(row[2], row[3]))
                .map_err(|e| ConfigError::Validation(format!("{what}: {e}")))?;
        }
        if let Some(target) = self.norm {
            if !(target >= 0.0 && target.is_finite()) {
                return invalid(format!("{what}: norm must be non-negative, got {target}"));
            }
            let r = norm_h(&field);
            if r == 0.0 && target > 0.0 {
                return invalid(format!("{what}: cannot rescale a zero field to norm {target}"));
            }
            if r > 0.0 {
                field.scale_in_place(target / r);
            }
        }
        field
            .validate()
            .map_err(|e| ConfigError::Validation(format!("{what}: {e}")))?;
        Ok(field)
    }

    fn from_field(field: &SpectralField) -> RawField {
        let coeffs = field
            .modes()
            .filter(|(k, c)| {
                (k.is_zero() || k.is_canonical()) && (c[0].norm_sqr() + c[1].norm_sqr()) > 0.0
            })
            .map(|(k, c)| [k.kx as f64, k.ky as f64, c[0].re, c[0].im, c[1].re, c[1].im])
            .collect();
        RawField {
            modes: Vec::new(),
            coeffs,
            norm: None,
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentSpec, ConfigError> {
    let raw: RawDocument = toml::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.span().map_or(1, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    let cutoff = raw.run.cutoff;
    if cutoff == 0 {
        return invalid("cutoff must be at least 1");
    }

    let f_const = raw.forcing.clone().unwrap_or_default().build(cutoff, "forcing")?;
    let u0 = raw.initial.clone().unwrap_or_default().build(cutoff, "initial")?;
    let mut sigma_const = raw
        .noise
        .iter()
        .enumerate()
        .map(|(i, f)| f.build(cutoff, &format!("noise[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let noise_dim = raw.coefficients.noise_dim.unwrap_or(sigma_const.len().max(1));
    if noise_dim == 0 {
        return invalid("noise_dim must be at least 1");
    }
    if sigma_const.len() > noise_dim {
        return invalid(format!(
            "{} [[noise]] tables given but noise_dim = {noise_dim}",
            sigma_const.len()
        ));
    }
    sigma_const.resize(noise_dim, SpectralField::zeros(cutoff));

    let coefficients = CoefficientSet {
        nu: raw.coefficients.nu,
        gamma: raw.coefficients.gamma,
        f_const,
        f_lin: raw.coefficients.f_lin,
        sigma_const,
        sigma_lin: raw.coefficients.sigma_lin,
        convection: raw.coefficients.convection,
    };

    let levels = raw.experiment.penalty_levels.clone();
    if levels.is_empty() {
        return invalid("penalty_levels must not be empty");
    }
    if levels.iter().any(|n| !(*n > 0.0 && n.is_finite())) {
        return invalid("penalty levels must be positive");
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("penalty_levels must be strictly increasing");
    }
    if raw.experiment.ensemble_size == 0 {
        return invalid("ensemble_size must be at least 1");
    }

    let base = PenaltyRunConfig {
        n_penalty: raw.run.n_penalty.unwrap_or(levels[0]),
        dt: raw.run.dt,
        horizon: raw.run.horizon,
        cutoff,
        seed: raw.run.seed,
        snapshot_stride: raw.run.snapshot_stride,
        lambda_weight: raw.run.lambda_weight,
        coefficients,
        u0,
        brownian_substeps: 1,
    };
    base.validate().map_err(|e| ConfigError::Validation(e.to_string()))?;

    let spec = ExperimentSpec {
        base,
        penalty_levels: levels,
        ensemble_size: raw.experiment.ensemble_size,
        dt_policy: raw.experiment.dt_policy,
        outputs: PathBuf::from(raw.experiment.outputs),
        emit_fields: raw.experiment.emit_fields,
        workers: raw.experiment.workers,
    };
    spec.level_plans()?;
    Ok(spec)
}

/// Discretization used for one penalty level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelPlan {
    pub n_penalty: f64,
    pub dt: f64,
    pub brownian_substeps: usize,
    pub snapshot_stride: usize,
}

fn integral_ratio(x: f64, what: &str) -> Result<usize, ConfigError> {
    let r = x.round();
    if r < 1.0 || (x - r).abs() > 1e-9 * x.max(1.0) {
        return invalid(format!("{what} must be a whole number, got {x}"));
    }
    Ok(r as usize)
}

impl ExperimentSpec {
    /// Per-level step sizes. Under the scaled policy all levels share the
    /// finest Brownian increment and a common snapshot grid.
    pub fn level_plans(&self) -> Result<Vec<LevelPlan>, ConfigError> {
        let base = &self.base;
        match self.dt_policy {
            DtPolicy::Fixed => Ok(self
                .penalty_levels
                .iter()
                .map(|&n| LevelPlan {
                    n_penalty: n,
                    dt: base.dt,
                    brownian_substeps: base.brownian_substeps,
                    snapshot_stride: base.snapshot_stride,
                })
                .collect()),
            DtPolicy::Scaled => {
                let n0 = self.penalty_levels[0];
                let n_max = *self.penalty_levels.last().unwrap();
                self.penalty_levels
                    .iter()
                    .map(|&n| {
                        let substeps = integral_ratio(n_max / n, "scaled policy: largest level / level")?;
                        let refine = integral_ratio(n / n0, "scaled policy: level / first level")?;
                        Ok(LevelPlan {
                            n_penalty: n,
                            dt: base.dt * n0 / n,
                            brownian_substeps: substeps * base.brownian_substeps,
                            snapshot_stride: base.snapshot_stride * refine,
                        })
                    })
                    .collect()
            }
        }
    }

    /// Run configuration for one `(level, seed)` pair.
    pub fn level_config(&self, plan: &LevelPlan, seed: u64) -> PenaltyRunConfig {
        PenaltyRunConfig {
            n_penalty: plan.n_penalty,
            dt: plan.dt,
            seed,
            snapshot_stride: plan.snapshot_stride,
            brownian_substeps: plan.brownian_substeps,
            ..self.base.clone()
        }
    }

    /// Applies `REFLECTX_SEED` if it is set.
    pub fn with_env_overrides(mut self) -> Result<Self, ConfigError> {
        if let Ok(v) = std::env::var(SEED_ENV_VAR) {
            self.base.seed = v
                .trim()
                .parse()
                .map_err(|_| ConfigError::Validation(format!("{SEED_ENV_VAR}=`{v}` is not a u64")))?;
        }
        Ok(self)
    }

    /// Canonical document for this spec; parsing it yields an identical spec.
    pub fn to_config_string(&self) -> String {
        let b = &self.base;
        let c = &b.coefficients;
        let raw = RawDocument {
            run: RawRun {
                dt: b.dt,
                horizon: b.horizon,
                cutoff: b.cutoff,
                seed: b.seed,
                snapshot_stride: b.snapshot_stride,
                lambda_weight: b.lambda_weight,
                n_penalty: Some(b.n_penalty),
            },
            coefficients: RawCoefficients {
                nu: c.nu,
                gamma: c.gamma,
                f_lin: c.f_lin,
                sigma_lin: c.sigma_lin,
                noise_dim: Some(c.noise_dim()),
                convection: c.convection,
            },
            forcing: Some(RawField::from_field(&c.f_const)),
            initial: Some(RawField::from_field(&b.u0)),
            noise: c.sigma_const.iter().map(RawField::from_field).collect(),
            experiment: RawExperiment {
                penalty_levels: self.penalty_levels.clone(),
                ensemble_size: self.ensemble_size,
                dt_policy: self.dt_policy,
                outputs: self.outputs.to_string_lossy().into_owned(),
                emit_fields: self.emit_fields,
                workers: self.workers,
            },
        };
        toml::to_string(&raw).expect("configuration documents always serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[run]
dt = 0.01
horizon = 1.0
cutoff = 4

[coefficients]
nu = 0.1
gamma = 0.5

[experiment]
penalty_levels = [100]
"#;

    #[test]
    fn minimal_document_gets_defaults() {
        let spec = parse_config(MINIMAL).unwrap();
        assert_eq!(spec.base.lambda_weight, 8.0);
        assert_eq!(spec.dt_policy, DtPolicy::Fixed);
        assert_eq!(spec.ensemble_size, 1);
        assert_eq!(spec.base.n_penalty, 100.0);
        assert_eq!(spec.base.coefficients.noise_dim(), 1);
        assert!(spec.base.coefficients.convection);
    }

    #[test]
    fn initial_datum_outside_ball_is_rejected() {
        let doc = format!("{MINIMAL}\n[initial]\nmodes = [[1, 0, 1.0, 0.0]]\nnorm = 1.5\n");
        match parse_config(&doc) {
            Err(ConfigError::Validation(m)) => assert!(m.contains("closed unit ball"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected_with_line() {
        let doc = MINIMAL.replace("gamma = 0.5", "gamma = 0.5\nbogus = 1");
        match parse_config(&doc) {
            Err(ConfigError::Parse { line, message }) => {
                assert_eq!(line, 10, "{message}");
                assert!(message.contains("bogus"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn levels_must_increase() {
        let doc = MINIMAL.replace("[100]", "[100, 10]");
        assert!(matches!(parse_config(&doc), Err(ConfigError::Validation(_))));
    }

    #[test]
    fn scaled_plans_share_the_fine_brownian_step() {
        let doc = MINIMAL
            .replace("[100]", "[100, 1000, 10000]")
            .replace("penalty_levels", "dt_policy = \"scaled\"\npenalty_levels");
        let spec = parse_config(&doc).unwrap();
        let plans = spec.level_plans().unwrap();
        for p in &plans {
            let fine = p.dt / p.brownian_substeps as f64;
            assert!((fine - 1e-4).abs() < 1e-16, "{fine}");
            assert!((p.dt * p.snapshot_stride as f64 - 0.01).abs() < 1e-15);
        }
        let bad = doc.replace("[100, 1000, 10000]", "[100, 250]");
        assert!(parse_config(&bad).is_err());
    }

    #[test]
    fn canonical_document_round_trips() {
        let doc = format!(
            "{}\n[forcing]\nmodes = [[1, 0, 1.0, 0.0], [1, 1, 0.3, -0.2]]\nnorm = 1.3\n[initial]\nmodes = [[0, 1, 0.2, 0.1]]\nnorm = 0.9\n[[noise]]\nmodes = [[2, 1, 0.5, 0.0]]\n",
            MINIMAL.replace("[100]", "[100, 1000, 10000]")
        );
        let spec = parse_config(&doc).unwrap();
        let text = spec.to_config_string();
        let again = parse_config(&text).unwrap();
        assert_eq!(again, spec);
        assert_eq!(again.to_config_string(), text);
    }
}
