//! Identification of the space-dependent reaction coefficient `c(x)` of
//!
//! ```text
//! u_t - div(k grad u) + c u = f    in Omega x (0, T]
//! k du/dn + mu u = 0               on the boundary
//! u(x, 0) = 0
//! ```
//!
//! from the final-time observation `u(x, T) = psi(x)`, using P1 finite
//! elements with lumped mass and two-level time stepping.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod error;
pub mod fem;
pub mod forward;
pub mod identify;
pub mod mesh;
pub mod problem;
pub mod sparse;

pub use error::{Error, Result};
pub use fem::{CoefficientSpec, NodeField};
pub use forward::{solve_forward, Discretization, ForwardOptions, ForwardSolution, TimeGrid};
pub use identify::{identify, IdentificationConfig, IdentificationResult, InitMode};
pub use mesh::{build_rect_mesh, Mesh};
pub use problem::{reference_problem, ProblemSpec, RegionCoefficient, SourceSpec};
