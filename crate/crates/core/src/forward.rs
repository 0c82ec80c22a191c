//! Two-level time stepping for the direct problem
//! `u_t + A u + c u = f`, `u(., 0) = 0`, with lumped mass.
//!
//! `theta = 1` is the fully implicit scheme used inside identification;
//! `theta = 1/2` (Crank-Nicolson) is used only to produce more accurate
//! synthetic observations.

use log::warn;

use crate::error::{Error, Result};
use crate::fem::{
    assemble_lumped_mass, assemble_stiffness, ensure_len, weighted_lumped_mass, CoefficientSpec,
    NodeField,
};
use crate::mesh::Mesh;
use crate::problem::SourceSpec;
use crate::sparse::{CsrMatrix, SpdSolver, DEFAULT_REL_TOL};

/// Relative slack used when flagging maximum-principle violations.
pub const DMP_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    tau: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(tau: f64, steps: usize) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "time step must be positive, got {tau}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidParameter(
                "at least one time step is required".into(),
            ));
        }
        Ok(Self { tau, steps })
    }

    /// Uniform grid with step `tau` ending at `horizon`; `tau` must divide
    /// the horizon to within `1e-12` relative.
    pub fn from_horizon(horizon: f64, tau: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "time step must be positive, got {tau}"
            )));
        }
        let steps = (horizon / tau).round();
        if steps < 1.0 || (steps * tau - horizon).abs() > 1e-12 * horizon {
            return Err(Error::InvalidParameter(format!(
                "time step {tau} does not divide the horizon {horizon}"
            )));
        }
        Self::new(tau, steps as usize)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.tau
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.tau
    }
}

/// Mesh with its stiffness (diffusion plus Robin term) and lumped mass.
#[derive(Debug, Clone)]
pub struct Discretization {
    mesh: Mesh,
    stiffness: CsrMatrix,
    mass: Vec<f64>,
}

impl Discretization {
    pub fn new(mesh: Mesh, coeff: &CoefficientSpec) -> Result<Self> {
        let stiffness = assemble_stiffness(&mesh, coeff)?;
        let mass = assemble_lumped_mass(&mesh);
        Ok(Self {
            mesh,
            stiffness,
            mass,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn node_count(&self) -> usize {
        self.mesh.node_count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardOptions {
    pub theta: f64,
    pub keep_trajectory: bool,
    pub rel_tol: f64,
}

impl Default for ForwardOptions {
    fn default() -> Self {
        Self {
            theta: 1.0,
            keep_trajectory: false,
            rel_tol: DEFAULT_REL_TOL,
        }
    }
}

/// Range of `w_{n+1}` and smallest nodal increment `w_{n+1} - w_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub min: f64,
    pub max: f64,
    pub min_increment: f64,
}

#[derive(Debug, Clone)]
pub struct ForwardSolution {
    pub final_field: NodeField,
    pub penultimate: NodeField,
    pub tau: f64,
    pub trajectory: Option<Vec<NodeField>>,
    /// One entry per step, `n = 1..=N`.
    pub step_stats: Vec<StepStats>,
    /// Set when the source satisfies the growth condition, `c >= 0`, and yet
    /// some `w_n` or increment went negative beyond [`DMP_SLACK`].
    pub maximum_principle_violated: bool,
    pub linear_iterations: usize,
}

impl ForwardSolution {
    /// `(w_N - w_{N-1}) / tau`
    pub fn time_derivative_at_final(&self) -> NodeField {
        let inv_tau = 1.0 / self.tau;
        self.final_field
            .iter()
            .zip(self.penultimate.iter())
            .map(|(a, b)| (a - b) * inv_tau)
            .collect::<Vec<_>>()
            .into()
    }
}

/// One fully implicit step:
/// `(M / tau + K + diag(c m)) w_{n+1} = M w_n / tau + F_{n+1}`.
pub fn step_implicit(
    stiffness: &CsrMatrix,
    mass: &[f64],
    c: &NodeField,
    w_n: &NodeField,
    load_next: &[f64],
    tau: f64,
) -> Result<NodeField> {
    let n = stiffness.dim();
    ensure_len(n, mass.len())?;
    ensure_len(n, w_n.len())?;
    ensure_len(n, load_next.len())?;
    let reaction = weighted_lumped_mass(mass, c)?;
    let diag: Vec<f64> = mass
        .iter()
        .zip(&reaction)
        .map(|(m, r)| m / tau + r)
        .collect();
    let system = stiffness.scale_add_diagonal(1.0, &diag)?;
    let rhs: Vec<f64> = (0..n)
        .map(|i| mass[i] / tau * w_n[i] + load_next[i])
        .collect();
    let mut solver = SpdSolver::new(system, DEFAULT_REL_TOL, None)?;
    let mut x = w_n.to_vec();
    solver.solve_in_place(&rhs, &mut x)?;
    Ok(x.into())
}

/// Runs the theta-scheme from `w_0 = 0` to the grid horizon.
///
/// The system matrix `M / tau + theta (K + diag(c m))` is built once and
/// reused for every step; each solve is warm-started from `w_n`.
pub fn solve_forward(
    disc: &Discretization,
    c: &NodeField,
    source: &SourceSpec,
    grid: &TimeGrid,
    opts: &ForwardOptions,
) -> Result<ForwardSolution> {
    let theta = opts.theta;
    if !(theta == 1.0 || theta == 0.5) {
        return Err(Error::InvalidParameter(format!(
            "theta must be 1 or 1/2, got {theta}"
        )));
    }
    let n = disc.node_count();
    ensure_len(n, c.len())?;
    let mass = disc.mass();
    let tau = grid.tau();

    let reaction = weighted_lumped_mass(mass, c)?;
    let diag: Vec<f64> = (0..n)
        .map(|i| mass[i] / tau + theta * reaction[i])
        .collect();
    let system = disc.stiffness().scale_add_diagonal(theta, &diag)?;
    let mut solver = SpdSolver::new(system, opts.rel_tol, None)?;

    // F_n = amplitude * t_n^p * (m_i exp(b . x_i))
    let spatial_load: Vec<f64> = disc
        .mesh()
        .nodes()
        .iter()
        .zip(mass)
        .map(|(&p, m)| m * source.amplitude * source.spatial_factor(p))
        .collect();

    let check_dmp = source.satisfies_growth_condition() && c.iter().all(|&v| v >= 0.0);

    let mut prev = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut explicit_part = vec![0.0; n];
    let mut penultimate = vec![0.0; n];
    let mut trajectory = opts.keep_trajectory.then(|| vec![NodeField::zeros(n)]);
    let mut step_stats = Vec::with_capacity(grid.steps());
    let mut linear_iterations = 0;

    for step in 0..grid.steps() {
        let t_next = source.time_factor(grid.time(step + 1));
        if theta == 1.0 {
            for i in 0..n {
                rhs[i] = mass[i] / tau * prev[i] + t_next * spatial_load[i];
            }
        } else {
            let t_prev = source.time_factor(grid.time(step));
            // (K + diag(c m)) w_n
            disc.stiffness().matvec_into(&prev, &mut explicit_part)?;
            for i in 0..n {
                let a_w = explicit_part[i] + reaction[i] * prev[i];
                rhs[i] = mass[i] / tau * prev[i] - (1.0 - theta) * a_w
                    + (theta * t_next + (1.0 - theta) * t_prev) * spatial_load[i];
            }
        }
        next.copy_from_slice(&prev);
        linear_iterations += solver.solve_in_place(&rhs, &mut next)?.iterations;

        let mut stats = StepStats {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            min_increment: f64::INFINITY,
        };
        for i in 0..n {
            stats.min = stats.min.min(next[i]);
            stats.max = stats.max.max(next[i]);
            stats.min_increment = stats.min_increment.min(next[i] - prev[i]);
        }
        step_stats.push(stats);

        if let Some(traj) = trajectory.as_mut() {
            traj.push(NodeField::new(next.clone()));
        }
        std::mem::swap(&mut prev, &mut next);
        if step + 1 == grid.steps() {
            penultimate.copy_from_slice(&next);
        }
    }

    let scale = step_stats
        .iter()
        .fold(0.0_f64, |m, s| m.max(s.max.abs()).max(s.min.abs()));
    let maximum_principle_violated = check_dmp
        && step_stats
            .iter()
            .any(|s| s.min < -DMP_SLACK * scale || s.min_increment < -DMP_SLACK * scale);
    if maximum_principle_violated {
        warn!("discrete solution violates nonnegativity or time monotonicity");
    }

    Ok(ForwardSolution {
        final_field: prev.into(),
        penultimate: penultimate.into(),
        tau,
        trajectory,
        step_stats,
        maximum_principle_violated,
        linear_iterations,
    })
}

/// Smallest nodal value and smallest nodal increment over all steps,
/// with `scale = max |w_n|` for relative comparisons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityReport {
    pub min_value: f64,
    pub min_increment: f64,
    pub scale: f64,
}

impl MonotonicityReport {
    pub fn holds(&self, rel_slack: f64) -> bool {
        self.min_value >= -rel_slack * self.scale && self.min_increment >= -rel_slack * self.scale
    }
}

pub fn check_discrete_monotonicity(sol: &ForwardSolution) -> MonotonicityReport {
    if let Some(traj) = &sol.trajectory {
        let mut report = MonotonicityReport {
            min_value: 0.0,
            min_increment: f64::INFINITY,
            scale: 0.0,
        };
        for w in traj {
            report.min_value = report.min_value.min(w.min());
            report.scale = report.scale.max(w.max_abs());
        }
        for pair in traj.windows(2) {
            for (a, b) in pair[0].iter().zip(pair[1].iter()) {
                report.min_increment = report.min_increment.min(b - a);
            }
        }
        return report;
    }
    let mut report = MonotonicityReport {
        min_value: 0.0,
        min_increment: f64::INFINITY,
        scale: 0.0,
    };
    for s in &sol.step_stats {
        report.min_value = report.min_value.min(s.min);
        report.min_increment = report.min_increment.min(s.min_increment);
        report.scale = report.scale.max(s.max.abs()).max(s.min.abs());
    }
    report
}
