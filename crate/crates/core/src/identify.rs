//! Iterative identification of the reaction coefficient from final-time
//! observations.
//!
//! Given `psi = u(., T)`, each iteration solves the direct problem with the
//! current coefficient `c^k` (fully implicit scheme) and then evaluates the
//! equation at the final time for the next coefficient:
//!
//! ```text
//! c^{k+1} psi = -(w_N^k - w_{N-1}^k) / tau - A psi + f(., T)
//! ```
//!
//! With lumped mass, `A psi` is `(K psi)_i / m_i` and the update is a nodal
//! division. Starting from `c^0 psi = -A psi + f(., T)` the iterates decrease
//! monotonically towards the true coefficient; starting from zero they need
//! not be monotone.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{apply_elliptic, ensure_len, NodeField};
use crate::forward::{solve_forward, Discretization, ForwardOptions, ForwardSolution, TimeGrid};
use crate::mesh::Mesh;
use crate::problem::ProblemSpec;
use crate::sparse::{CsrMatrix, DEFAULT_REL_TOL};

/// Default relative floor on observations, `psi_floor = 1e-8 max psi`.
pub const DEFAULT_PSI_FLOOR_REL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// `c^0` from the final-time equation with the time derivative dropped.
    FromAbove,
    /// `c^0 = 0`.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentificationConfig {
    pub init_mode: InitMode,
    pub max_iterations: usize,
    /// Stop once `||c^{k+1} - c^k||_inf < stop_tol`; zero runs all iterations.
    pub stop_tol: f64,
    /// Absolute floor; `None` selects `DEFAULT_PSI_FLOOR_REL * max psi`.
    pub psi_floor: Option<f64>,
    pub clip_negative: bool,
    pub keep_iterates: bool,
    pub linear_rel_tol: f64,
}

impl Default for IdentificationConfig {
    fn default() -> Self {
        Self {
            init_mode: InitMode::FromAbove,
            max_iterations: 20,
            stop_tol: 0.0,
            psi_floor: None,
            clip_negative: false,
            keep_iterates: true,
            linear_rel_tol: DEFAULT_REL_TOL,
        }
    }
}

impl IdentificationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "max_iterations must be at least 1".into(),
            ));
        }
        if !(self.stop_tol >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "stop_tol must be nonnegative, got {}",
                self.stop_tol
            )));
        }
        if let Some(floor) = self.psi_floor {
            if !(floor > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "psi_floor must be positive, got {floor}"
                )));
            }
        }
        if !(self.linear_rel_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "linear_rel_tol must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Diagnostics for one coefficient iterate `c^k` and its forward solve `w^k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub eps_inf: Option<f64>,
    pub eps_2: Option<f64>,
    /// `||c^k - c^{k-1}||_inf`
    pub delta_c_inf: Option<f64>,
    pub min_c: f64,
    /// `max_i (c^k_i - c^{k-1}_i)`; nonpositive for a monotone descent.
    pub max_increase: Option<f64>,
    /// `min_i (w_N^k - w_N^{k-1})_i`
    pub min_final_increase: Option<f64>,
    /// `||w_N^k - psi||_inf`
    pub final_misfit: f64,
}

#[derive(Debug, Clone)]
pub struct IdentificationResult {
    /// `c^0, c^1, ...`; only the last one unless iterates are kept.
    pub iterates: Vec<NodeField>,
    /// `history[k]` describes `c^k`; `history[0]` is the initial guess.
    pub history: Vec<IterationRecord>,
    pub converged: bool,
    pub final_solution: ForwardSolution,
    pub psi_floor: f64,
    /// Minimum of `A(w_N^0 - psi)` for the zero start; nonnegative values
    /// are sufficient for monotone growth from below.
    pub from_below_margin: Option<f64>,
}

impl IdentificationResult {
    pub fn iterations(&self) -> usize {
        self.history.len() - 1
    }

    pub fn final_coefficient(&self) -> &NodeField {
        self.iterates.last().expect("at least one iterate")
    }
}

fn resolve_psi_floor(psi: &NodeField, floor: Option<f64>) -> f64 {
    floor.unwrap_or_else(|| {
        let rel = DEFAULT_PSI_FLOOR_REL * psi.max();
        if rel > 0.0 {
            rel
        } else {
            f64::MIN_POSITIVE
        }
    })
}

fn check_psi(psi: &NodeField, floor: f64) -> Result<()> {
    match psi.iter().position(|&v| !(v >= floor)) {
        Some(node) => Err(Error::PsiBelowFloor {
            node,
            value: psi[node],
            floor,
        }),
        None => Ok(()),
    }
}

/// `c_i = (rhs_i - (K psi)_i / m_i) / psi_i`
fn final_time_coefficient(
    stiffness: &CsrMatrix,
    mass: &[f64],
    psi: &NodeField,
    rhs: impl Iterator<Item = f64>,
    psi_floor: f64,
) -> Result<NodeField> {
    check_psi(psi, psi_floor)?;
    let a_psi = apply_elliptic(stiffness, mass, psi)?;
    let values: Vec<f64> = rhs
        .zip(a_psi.iter())
        .zip(psi.iter())
        .map(|((r, a), p)| (r - a) / p)
        .collect();
    ensure_len(psi.len(), values.len())?;
    Ok(values.into())
}

/// Initial approximation from above: `c^0 psi = -A psi + f(., T)`.
pub fn initial_coefficient_from_above(
    stiffness: &CsrMatrix,
    mass: &[f64],
    psi: &NodeField,
    f_final: &NodeField,
    psi_floor: f64,
) -> Result<NodeField> {
    ensure_len(psi.len(), f_final.len())?;
    final_time_coefficient(stiffness, mass, psi, f_final.iter().copied(), psi_floor)
}

/// Next coefficient: `c psi = -(w_N - w_{N-1}) / tau - A psi + f(., T)`.
pub fn update_coefficient(
    stiffness: &CsrMatrix,
    mass: &[f64],
    psi: &NodeField,
    f_final: &NodeField,
    sol: &ForwardSolution,
    psi_floor: f64,
) -> Result<NodeField> {
    ensure_len(psi.len(), f_final.len())?;
    ensure_len(psi.len(), sol.final_field.len())?;
    let dt = sol.time_derivative_at_final();
    final_time_coefficient(
        stiffness,
        mass,
        psi,
        f_final.iter().zip(dt.iter()).map(|(f, d)| f - d),
        psi_floor,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub eps_inf: f64,
    pub eps_2: f64,
}

/// Maximum nodal error and lumped L2 error `sqrt(sum m_i e_i^2)`.
pub fn error_norms(c_k: &NodeField, c_true: &NodeField, mass: &[f64]) -> Result<ErrorNorms> {
    ensure_len(c_true.len(), c_k.len())?;
    ensure_len(c_true.len(), mass.len())?;
    let mut eps_inf = 0.0_f64;
    let mut sq = 0.0;
    for ((a, b), m) in c_k.iter().zip(c_true.iter()).zip(mass) {
        let e = a - b;
        eps_inf = eps_inf.max(e.abs());
        sq += m * e * e;
    }
    Ok(ErrorNorms {
        eps_inf,
        eps_2: sq.sqrt(),
    })
}

/// Minimum over nodes of `A(w_N^0 - psi)`.
pub fn from_below_condition_margin(
    first_final: &NodeField,
    psi: &NodeField,
    stiffness: &CsrMatrix,
    mass: &[f64],
) -> Result<f64> {
    let diff = first_final.sub(psi)?;
    Ok(apply_elliptic(stiffness, mass, &diff)?.min())
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Runs the identification loop on `mesh` with observations `psi`.
pub fn identify(
    problem: &ProblemSpec,
    psi: &NodeField,
    mesh: &Mesh,
    grid: &TimeGrid,
    config: &IdentificationConfig,
) -> Result<IdentificationResult> {
    problem.validate()?;
    config.validate()?;
    ensure_len(mesh.node_count(), psi.len())?;
    if (grid.horizon() - problem.horizon).abs() > 1e-12 * problem.horizon {
        return Err(Error::InvalidParameter(format!(
            "time grid ends at {} but the problem horizon is {}",
            grid.horizon(),
            problem.horizon
        )));
    }
    if !problem.source.satisfies_growth_condition() {
        warn!("source does not vanish at t = 0 or is not increasing in time; monotonicity is not guaranteed");
    }

    let psi_floor = resolve_psi_floor(psi, config.psi_floor);
    check_psi(psi, psi_floor)?;

    let disc = Discretization::new(mesh.clone(), &problem.coeff)?;
    let (stiffness, mass) = (disc.stiffness(), disc.mass());
    let f_final = problem.source_at_horizon(mesh);
    let c_true = problem.c_true.as_ref().map(|rc| rc.sample(mesh));
    let opts = ForwardOptions {
        theta: 1.0,
        keep_trajectory: false,
        rel_tol: config.linear_rel_tol,
    };

    let errors = |c: &NodeField| -> Result<(Option<f64>, Option<f64>)> {
        match &c_true {
            Some(ct) => {
                let e = error_norms(c, ct, mass)?;
                Ok((Some(e.eps_inf), Some(e.eps_2)))
            }
            None => Ok((None, None)),
        }
    };
    let misfit = |sol: &ForwardSolution| -> Result<f64> { Ok(max_abs(&sol.final_field.sub(psi)?)) };

    let mut current = match config.init_mode {
        InitMode::FromAbove => {
            initial_coefficient_from_above(stiffness, mass, psi, &f_final, psi_floor)?
        }
        InitMode::Zero => NodeField::zeros(mesh.node_count()),
    };
    let mut sol = solve_forward(&disc, &current, &problem.source, grid, &opts)?;

    let from_below_margin = match config.init_mode {
        InitMode::Zero => Some(from_below_condition_margin(
            &sol.final_field,
            psi,
            stiffness,
            mass,
        )?),
        InitMode::FromAbove => None,
    };

    let (eps_inf, eps_2) = errors(&current)?;
    let mut history = vec![IterationRecord {
        k: 0,
        eps_inf,
        eps_2,
        delta_c_inf: None,
        min_c: current.min(),
        max_increase: None,
        min_final_increase: None,
        final_misfit: misfit(&sol)?,
    }];
    let mut iterates = vec![current.clone()];
    let mut converged = false;

    for k in 1..=config.max_iterations {
        let mut next = update_coefficient(stiffness, mass, psi, &f_final, &sol, psi_floor)?;
        if config.clip_negative {
            next.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        let delta = next.sub(&current)?;
        let next_sol = solve_forward(&disc, &next, &problem.source, grid, &opts)?;
        let w_delta = next_sol.final_field.sub(&sol.final_field)?;

        let (eps_inf, eps_2) = errors(&next)?;
        let delta_c_inf = delta.max_abs();
        history.push(IterationRecord {
            k,
            eps_inf,
            eps_2,
            delta_c_inf: Some(delta_c_inf),
            min_c: next.min(),
            max_increase: Some(delta.max()),
            min_final_increase: Some(w_delta.min()),
            final_misfit: misfit(&next_sol)?,
        });
        if config.keep_iterates {
            iterates.push(next.clone());
        } else {
            iterates[0] = next.clone();
        }
        current = next;
        sol = next_sol;

        if delta_c_inf < config.stop_tol {
            converged = true;
            break;
        }
    }

    Ok(IdentificationResult {
        iterates,
        history,
        converged,
        final_solution: sol,
        psi_floor,
        from_below_margin,
    })
}
