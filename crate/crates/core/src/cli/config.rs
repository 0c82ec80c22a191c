//! Strict JSON run configuration.
//!
//! ```json
//! {
//!   "domain": { "x_len": 1.0, "y_len": 1.0 },
//!   "mesh": { "nx": 50, "ny": 50 },
//!   "coefficients": { "diffusion": 1.0, "robin": 10.0, "c_true": { ... } },
//!   "source": { "amplitude": 100.0, "time_power": 1, "exponents": [-1.0, 0.0] },
//!   "time": { "horizon": 0.25, "tau": 1e-3 },
//!   "identification": { "init": "from_above", "max_iterations": 20 },
//!   "output": { "vtk": false }
//! }
//! ```
//!
//! Unknown keys are rejected at every level.

use std::path::{Path, PathBuf};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::fem::CoefficientSpec;
use crate::forward::TimeGrid;
use crate::identify::{IdentificationConfig, InitMode};
use crate::mesh::{build_rect_mesh, Mesh};
use crate::problem::{ProblemSpec, RegionCoefficient, SourceSpec};
use crate::sparse::DEFAULT_REL_TOL;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSection,
    pub mesh: MeshSection,
    pub coefficients: CoefficientsSection,
    pub source: SourceSpec,
    pub time: TimeSection,
    #[serde(default)]
    pub identification: IdentificationSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub x_len: f64,
    pub y_len: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub nx: usize,
    pub ny: usize,
}

/// A spatial coefficient given either as a number or as a region layout.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum FieldValue {
    Constant(f64),
    Regions(RegionCoefficient),
}

// Errors inside a region layout keep the offending key name.
impl<'de> Deserialize<'de> for FieldValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(deserializer)?;
        match value {
            serde_json::Value::Number(n) => n
                .as_f64()
                .map(FieldValue::Constant)
                .ok_or_else(|| D::Error::custom("coefficient is not a finite number")),
            v @ serde_json::Value::Object(_) => serde_json::from_value(v)
                .map(FieldValue::Regions)
                .map_err(D::Error::custom),
            _ => Err(D::Error::custom("expected a number or a region layout")),
        }
    }
}

impl FieldValue {
    pub fn eval(&self, p: [f64; 2]) -> f64 {
        match self {
            FieldValue::Constant(v) => *v,
            FieldValue::Regions(rc) => rc.eval(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientsSection {
    pub diffusion: FieldValue,
    pub robin: FieldValue,
    #[serde(default)]
    pub c_true: Option<RegionCoefficient>,
}

fn default_theta() -> f64 {
    1.0
}

fn default_data_theta() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub horizon: f64,
    pub tau: f64,
    /// Scheme for `forward` runs.
    #[serde(default = "default_theta")]
    pub theta: f64,
    /// Step for `generate-data`; defaults to `tau / 10`.
    #[serde(default)]
    pub data_tau: Option<f64>,
    #[serde(default = "default_data_theta")]
    pub data_theta: f64,
}

impl TimeSection {
    pub fn data_tau(&self) -> f64 {
        self.data_tau.unwrap_or(self.tau / 10.0)
    }
}

fn default_max_iterations() -> usize {
    20
}

fn default_linear_rel_tol() -> f64 {
    DEFAULT_REL_TOL
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentificationSection {
    #[serde(default = "default_init")]
    pub init: InitMode,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default)]
    pub stop_tol: f64,
    /// Absolute floor; by default a fraction of `max psi`.
    #[serde(default)]
    pub psi_floor: Option<f64>,
    #[serde(default)]
    pub clip_negative: bool,
    #[serde(default = "default_linear_rel_tol")]
    pub linear_rel_tol: f64,
}

fn default_init() -> InitMode {
    InitMode::FromAbove
}

impl Default for IdentificationSection {
    fn default() -> Self {
        Self {
            init: default_init(),
            max_iterations: default_max_iterations(),
            stop_tol: 0.0,
            psi_floor: None,
            clip_negative: false,
            linear_rel_tol: default_linear_rel_tol(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub vtk: bool,
    /// Write every n-th forward time level; 0 disables snapshots.
    #[serde(default)]
    pub trajectory_every: usize,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(text)
            .map_err(|e| Error::InvalidParameter(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidParameter(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_json(&text)
    }

    /// Checks every value against the invariants of the type it feeds.
    pub fn validate(&self) -> Result<()> {
        let mesh = self.build_mesh()?;
        self.problem().validate()?;
        let t = &self.time;
        for (key, v) in [
            ("time.horizon", t.horizon),
            ("time.tau", t.tau),
            ("time.data_tau", t.data_tau()),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{key} must be positive, got {v}"
                )));
            }
        }
        self.grid()?;
        if !(t.theta == 1.0 || t.theta == 0.5) {
            return Err(Error::InvalidParameter(format!(
                "time.theta must be 1 or 0.5, got {}",
                t.theta
            )));
        }
        if !(t.data_theta == 1.0 || t.data_theta == 0.5) {
            return Err(Error::InvalidParameter(format!(
                "time.data_theta must be 1 or 0.5, got {}",
                t.data_theta
            )));
        }
        TimeGrid::from_horizon(t.horizon, t.data_tau())?;
        self.identification_config().validate()?;
        self.problem().coeff.validate(&mesh)?;
        Ok(())
    }

    pub fn build_mesh(&self) -> Result<Mesh> {
        build_rect_mesh(
            self.domain.x_len,
            self.domain.y_len,
            self.mesh.nx,
            self.mesh.ny,
        )
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::from_horizon(self.time.horizon, self.time.tau)
    }

    pub fn data_grid(&self) -> Result<TimeGrid> {
        TimeGrid::from_horizon(self.time.horizon, self.time.data_tau())
    }

    pub fn problem(&self) -> ProblemSpec {
        let k = self.coefficients.diffusion.clone();
        let mu = self.coefficients.robin.clone();
        ProblemSpec {
            extent: [self.domain.x_len, self.domain.y_len],
            coeff: CoefficientSpec::new(move |p| k.eval(p), move |p| mu.eval(p)),
            source: self.source,
            horizon: self.time.horizon,
            c_true: self.coefficients.c_true.clone(),
        }
    }

    pub fn identification_config(&self) -> IdentificationConfig {
        let s = &self.identification;
        IdentificationConfig {
            init_mode: s.init,
            max_iterations: s.max_iterations,
            stop_tol: s.stop_tol,
            psi_floor: s.psi_floor,
            clip_negative: s.clip_negative,
            keep_iterates: true,
            linear_rel_tol: s.linear_rel_tol,
        }
    }
}
