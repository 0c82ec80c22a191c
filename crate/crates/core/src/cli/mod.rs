//! Command pipelines behind the `reaction-ident` binary.

pub mod config;
pub mod fields;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::Serialize;

use crate::fem::NodeField;
use crate::forward::{check_discrete_monotonicity, solve_forward, Discretization, ForwardOptions};
use crate::identify::{identify, IdentificationResult};
use crate::problem::generate_synthetic_data;

pub use config::RunConfig;
use fields::{fmt_f64, read_field_csv, write_field_csv, write_field_vtk};

pub const CONVERGENCE_HEADER: &str = "k,eps_inf,eps_2,delta_c_inf,min_c,max_increase";

/// Where and how to write results.
#[derive(Debug, Clone)]
pub struct OutputTarget {
    pub dir: PathBuf,
    pub vtk: bool,
}

impl OutputTarget {
    /// Command-line values take precedence over the config's output section.
    pub fn resolve(config: &RunConfig, out: Option<PathBuf>, vtk: bool) -> Result<Self> {
        let dir = out
            .or_else(|| config.output.dir.clone())
            .context("config: no output directory (pass --out or set output.dir)")?;
        Ok(Self {
            dir,
            vtk: vtk || config.output.vtk,
        })
    }

    fn prepare(&self) -> Result<()> {
        fs::create_dir_all(&self.dir)
            .with_context(|| format!("output: cannot create {}", self.dir.display()))
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("output: cannot write {}", path.display()))
}

fn warn_growth(config: &RunConfig) {
    if !config.source.satisfies_growth_condition() {
        eprintln!(
            "warning: source must vanish at t = 0 and increase in time (time_power >= 1, amplitude > 0); \
             nonnegativity and monotonicity are not guaranteed"
        );
    }
}

#[derive(Debug, Serialize)]
struct ForwardSummary {
    nodes: usize,
    steps: usize,
    tau: f64,
    theta: f64,
    min: f64,
    max: f64,
    min_over_time: f64,
    min_increment: f64,
    maximum_principle_violated: bool,
}

pub fn cmd_forward(config: &RunConfig, target: &OutputTarget) -> Result<()> {
    let mesh = config.build_mesh().context("mesh")?;
    let problem = config.problem();
    let grid = config.grid().context("config")?;
    let disc = Discretization::new(mesh.clone(), &problem.coeff).context("assembly")?;
    let c = match &problem.c_true {
        Some(rc) => rc.sample(&mesh),
        None => NodeField::zeros(mesh.node_count()),
    };
    let every = config.output.trajectory_every;
    let opts = ForwardOptions {
        theta: config.time.theta,
        keep_trajectory: every > 0,
        ..ForwardOptions::default()
    };
    warn_growth(config);
    let sol = solve_forward(&disc, &c, &problem.source, &grid, &opts).context("forward solve")?;
    if sol.maximum_principle_violated {
        eprintln!("warning: discrete solution violates nonnegativity or time monotonicity");
    }

    target.prepare()?;
    write_field_csv(&target.path("final.csv"), &mesh, &sol.final_field).context("output")?;
    if target.vtk {
        write_field_vtk(&target.path("final.vtk"), &mesh, "u", &sol.final_field)
            .context("output")?;
    }
    if let Some(traj) = &sol.trajectory {
        let dir = target.path("trajectory");
        fs::create_dir_all(&dir).context("output")?;
        for (n, w) in traj.iter().enumerate() {
            if n % every == 0 || n + 1 == traj.len() {
                write_field_csv(&dir.join(format!("w_{n:06}.csv")), &mesh, w).context("output")?;
            }
        }
    }

    let report = check_discrete_monotonicity(&sol);
    write_json(
        &target.path("summary.json"),
        &ForwardSummary {
            nodes: mesh.node_count(),
            steps: grid.steps(),
            tau: grid.tau(),
            theta: config.time.theta,
            min: sol.final_field.min(),
            max: sol.final_field.max(),
            min_over_time: report.min_value,
            min_increment: report.min_increment,
            maximum_principle_violated: sol.maximum_principle_violated,
        },
    )
}

#[derive(Debug, Serialize)]
struct DataSummary {
    nodes: usize,
    data_tau: f64,
    data_theta: f64,
    min: f64,
    max: f64,
}

pub fn cmd_generate_data(config: &RunConfig, target: &OutputTarget) -> Result<()> {
    let problem = config.problem();
    ensure!(
        problem.c_true.is_some(),
        "config: generate-data needs coefficients.c_true"
    );
    let mesh = config.build_mesh().context("mesh")?;
    warn_growth(config);
    let psi = generate_synthetic_data(
        &problem,
        &mesh,
        config.time.data_tau(),
        config.time.data_theta,
    )
    .context("forward solve")?;

    target.prepare()?;
    write_field_csv(&target.path("psi.csv"), &mesh, &psi).context("output")?;
    if target.vtk {
        write_field_vtk(&target.path("psi.vtk"), &mesh, "psi", &psi).context("output")?;
    }
    write_json(
        &target.path("summary.json"),
        &DataSummary {
            nodes: mesh.node_count(),
            data_tau: config.time.data_tau(),
            data_theta: config.time.data_theta,
            min: psi.min(),
            max: psi.max(),
        },
    )
}

/// Reads an observation file and checks it against the mesh of `config`.
pub fn load_psi(config: &RunConfig, path: &Path) -> Result<NodeField> {
    let mesh = config.build_mesh().context("mesh")?;
    let file =
        read_field_csv(path).with_context(|| format!("input: cannot read {}", path.display()))?;
    if file.values.len() != mesh.node_count() {
        bail!(
            "input: {} has {} nodes but the mesh has {}",
            path.display(),
            file.values.len(),
            mesh.node_count()
        );
    }
    let scale = config.domain.x_len.max(config.domain.y_len);
    for (i, (p, q)) in file.points.iter().zip(mesh.nodes()).enumerate() {
        if (p[0] - q[0]).abs() > 1e-9 * scale || (p[1] - q[1]).abs() > 1e-9 * scale {
            bail!(
                "input: node {i} of {} is at {p:?}, mesh node is at {q:?}",
                path.display()
            );
        }
    }
    Ok(NodeField::new(file.values))
}

#[derive(Debug, Serialize)]
struct IdentifySummary {
    nodes: usize,
    steps: usize,
    tau: f64,
    init: crate::identify::InitMode,
    iterations: usize,
    converged: bool,
    psi_floor: f64,
    final_eps_inf: Option<f64>,
    final_eps_2: Option<f64>,
    final_misfit: f64,
    from_below_margin: Option<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn convergence_csv(result: &IdentificationResult) -> String {
    let mut s = String::from(CONVERGENCE_HEADER);
    s.push('\n');
    for r in &result.history {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.k,
            opt(r.eps_inf),
            opt(r.eps_2),
            opt(r.delta_c_inf),
            fmt_f64(r.min_c),
            opt(r.max_increase)
        ));
    }
    s
}

pub fn cmd_identify(config: &RunConfig, psi_path: &Path, target: &OutputTarget) -> Result<()> {
    let mesh = config.build_mesh().context("mesh")?;
    let psi = load_psi(config, psi_path)?;
    let problem = config.problem();
    let grid = config.grid().context("config")?;
    warn_growth(config);
    let result = identify(
        &problem,
        &psi,
        &mesh,
        &grid,
        &config.identification_config(),
    )
    .context("identification")?;

    target.prepare()?;
    for (k, c) in result.iterates.iter().enumerate() {
        write_field_csv(&target.path(&format!("c_{k:03}.csv")), &mesh, c).context("output")?;
        if target.vtk {
            write_field_vtk(&target.path(&format!("c_{k:03}.vtk")), &mesh, "c", c)
                .context("output")?;
        }
    }
    let path = target.path("convergence.csv");
    let mut f = fs::File::create(&path)
        .with_context(|| format!("output: cannot write {}", path.display()))?;
    f.write_all(convergence_csv(&result).as_bytes())
        .context("output")?;

    let last = result.history.last().expect("history is never empty");
    write_json(
        &target.path("summary.json"),
        &IdentifySummary {
            nodes: mesh.node_count(),
            steps: grid.steps(),
            tau: grid.tau(),
            init: config.identification.init,
            iterations: result.iterations(),
            converged: result.converged,
            psi_floor: result.psi_floor,
            final_eps_inf: last.eps_inf,
            final_eps_2: last.eps_2,
            final_misfit: last.final_misfit,
            from_below_margin: result.from_below_margin,
        },
    )
}
