//! Problem data: sources, piecewise-constant reaction coefficients, the
//! reference test problem, and synthetic final-time observations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{CoefficientSpec, NodeField};
use crate::forward::{solve_forward, Discretization, ForwardOptions, TimeGrid};
use crate::mesh::{Mesh, Point};

/// Source of the form `f(x, t) = amplitude * t^time_power * exp(b . x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub amplitude: f64,
    pub time_power: u32,
    pub exponents: [f64; 2],
}

impl SourceSpec {
    pub fn eval(&self, p: Point, t: f64) -> f64 {
        self.amplitude * self.time_factor(t) * self.spatial_factor(p)
    }

    pub fn time_factor(&self, t: f64) -> f64 {
        t.powi(self.time_power as i32)
    }

    pub fn spatial_factor(&self, p: Point) -> f64 {
        (self.exponents[0] * p[0] + self.exponents[1] * p[1]).exp()
    }

    /// `f(., 0) = 0` and `f` strictly increasing in time: the hypotheses under
    /// which the solution and its time derivative stay nonnegative.
    pub fn satisfies_growth_condition(&self) -> bool {
        self.time_power >= 1 && self.amplitude > 0.0
    }

    pub fn sample(&self, mesh: &Mesh, t: f64) -> NodeField {
        NodeField::from_fn(mesh, |p| self.eval(p, t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Circle {
        center: Point,
        radius: f64,
    },
    Rectangle {
        center: Point,
        side_x: f64,
        side_y: f64,
    },
}

impl Shape {
    /// Closed-set membership.
    pub fn contains(&self, p: Point) -> bool {
        match *self {
            Shape::Circle { center, radius } => {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                dx * dx + dy * dy <= radius * radius
            }
            Shape::Rectangle {
                center,
                side_x,
                side_y,
            } => {
                (p[0] - center[0]).abs() <= 0.5 * side_x && (p[1] - center[1]).abs() <= 0.5 * side_y
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub shape: Shape,
    pub value: f64,
}

/// Piecewise-constant field: a background value overridden inside regions,
/// later regions taking precedence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionCoefficient {
    pub background: f64,
    #[serde(default)]
    pub regions: Vec<Region>,
}

impl RegionCoefficient {
    pub fn constant(value: f64) -> Self {
        Self {
            background: value,
            regions: Vec::new(),
        }
    }

    pub fn eval(&self, p: Point) -> f64 {
        self.regions
            .iter()
            .rev()
            .find(|r| r.shape.contains(p))
            .map_or(self.background, |r| r.value)
    }

    pub fn sample(&self, mesh: &Mesh) -> NodeField {
        NodeField::from_fn(mesh, |p| self.eval(p))
    }

    pub fn max_value(&self) -> f64 {
        self.regions
            .iter()
            .map(|r| r.value)
            .fold(self.background, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub extent: [f64; 2],
    pub coeff: CoefficientSpec,
    pub source: SourceSpec,
    pub horizon: f64,
    pub c_true: Option<RegionCoefficient>,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "time horizon must be positive, got {}",
                self.horizon
            )));
        }
        if !(self.extent[0] > 0.0 && self.extent[1] > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "domain extents must be positive, got {:?}",
                self.extent
            )));
        }
        Ok(())
    }

    pub fn source_at_horizon(&self, mesh: &Mesh) -> NodeField {
        self.source.sample(mesh, self.horizon)
    }
}

/// The reference test problem on the unit square: `k = 1`, `mu = 10`,
/// `f = 100 t exp(-x1)`, `T = 0.25`, with `c = 5` in a disc and `c = 1` in a
/// small square.
pub fn reference_problem() -> ProblemSpec {
    ProblemSpec {
        extent: [1.0, 1.0],
        coeff: CoefficientSpec::constant(1.0, 10.0),
        source: SourceSpec {
            amplitude: 100.0,
            time_power: 1,
            exponents: [-1.0, 0.0],
        },
        horizon: 0.25,
        c_true: Some(reference_coefficient()),
    }
}

pub fn reference_coefficient() -> RegionCoefficient {
    RegionCoefficient {
        background: 0.0,
        regions: vec![
            Region {
                shape: Shape::Circle {
                    center: [0.6, 0.4],
                    radius: 0.3,
                },
                value: 5.0,
            },
            Region {
                shape: Shape::Rectangle {
                    center: [0.3, 0.8],
                    side_x: 0.2,
                    side_y: 0.2,
                },
                value: 1.0,
            },
        ],
    }
}

/// Final-time field of the direct problem with the true coefficient, used as
/// the observation `psi` for identification.
pub fn generate_synthetic_data(
    problem: &ProblemSpec,
    mesh: &Mesh,
    data_tau: f64,
    theta: f64,
) -> Result<NodeField> {
    let c_true = problem
        .c_true
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("synthetic data needs a true coefficient".into()))?;
    problem.validate()?;
    let grid = TimeGrid::from_horizon(problem.horizon, data_tau)?;
    let disc = Discretization::new(mesh.clone(), &problem.coeff)?;
    let c = c_true.sample(mesh);
    let opts = ForwardOptions {
        theta,
        ..ForwardOptions::default()
    };
    Ok(solve_forward(&disc, &c, &problem.source, &grid, &opts)?.final_field)
}
