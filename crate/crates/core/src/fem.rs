//! Piecewise-linear finite element operators on triangular meshes.
//!
//! The elliptic part `a(u, v) = (k grad u, grad v) + <mu u, v>` on the
//! boundary is assembled exactly for piecewise-constant `k` and `mu`: `k` is
//! sampled at triangle centroids and `mu` at edge midpoints. Every zeroth
//! order term (time derivative, reaction, load) uses the lumped mass
//! `m_i = sum of area(t) / 3 over triangles t touching node i`, which keeps
//! the system an M-matrix on nonobtuse meshes and makes coefficient updates
//! pointwise.

use std::fmt;
use std::ops::{Deref, DerefMut};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use crate::sparse::CsrMatrix;

/// Nodal values of a P1 function.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeField(Vec<f64>);

impl NodeField {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self(vec![value; n])
    }

    /// Samples `f` at every node of `mesh`.
    pub fn from_fn(mesh: &Mesh, f: impl Fn(Point) -> f64) -> Self {
        Self(mesh.nodes().iter().map(|&p| f(p)).collect())
    }

    /// Wraps `values`, checking the length against the mesh.
    pub fn for_mesh(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        ensure_len(mesh.node_count(), values.len())?;
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Nodewise `self - other`.
    pub fn sub(&self, other: &NodeField) -> Result<NodeField> {
        ensure_len(self.len(), other.len())?;
        Ok(Self(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn scaled(&self, alpha: f64) -> NodeField {
        Self(self.0.iter().map(|v| alpha * v).collect())
    }
}

impl Deref for NodeField {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for NodeField {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for NodeField {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

pub(crate) fn ensure_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

pub type SpatialFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// Diffusion coefficient `k` on the domain and Robin coefficient `mu` on
/// its boundary.
#[derive(Clone)]
pub struct CoefficientSpec {
    diffusion: SpatialFn,
    robin: SpatialFn,
}

impl fmt::Debug for CoefficientSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientSpec").finish_non_exhaustive()
    }
}

impl CoefficientSpec {
    pub fn new(
        diffusion: impl Fn(Point) -> f64 + Send + Sync + 'static,
        robin: impl Fn(Point) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            diffusion: Arc::new(diffusion),
            robin: Arc::new(robin),
        }
    }

    pub fn constant(k: f64, mu: f64) -> Self {
        Self::new(move |_| k, move |_| mu)
    }

    pub fn diffusion_at(&self, p: Point) -> Result<f64> {
        let k = (self.diffusion)(p);
        if k > 0.0 && k.is_finite() {
            Ok(k)
        } else {
            Err(Error::Coefficient {
                location: p,
                reason: format!("diffusion must be positive and finite, got {k}"),
            })
        }
    }

    pub fn robin_at(&self, p: Point) -> Result<f64> {
        let mu = (self.robin)(p);
        if mu >= 0.0 && mu.is_finite() {
            Ok(mu)
        } else {
            Err(Error::Coefficient {
                location: p,
                reason: format!("boundary coefficient must be nonnegative and finite, got {mu}"),
            })
        }
    }

    /// Checks both coefficients at every quadrature point used on `mesh`.
    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        for t in 0..mesh.triangle_count() {
            self.diffusion_at(centroid(mesh.triangle_vertices(t)))?;
        }
        for &edge in mesh.boundary_edges() {
            self.robin_at(edge_midpoint(mesh, edge))?;
        }
        Ok(())
    }
}

fn centroid([a, b, c]: [Point; 3]) -> Point {
    [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
}

fn edge_midpoint(mesh: &Mesh, [a, b]: [usize; 2]) -> Point {
    let (p, q) = (mesh.nodes()[a], mesh.nodes()[b]);
    [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
}

/// P1 stiffness matrix of a single triangle for a constant diffusion `k`.
///
/// Entry `[i][j]` is `k * area * grad(phi_i) . grad(phi_j)` where `phi_i` is
/// the barycentric coordinate of vertex `i`.
pub fn element_stiffness(vertices: [Point; 3], k: f64) -> [[f64; 3]; 3] {
    let [p0, p1, p2] = vertices;
    let twice_area = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    let area = 0.5 * twice_area.abs();
    let mut grads = [[0.0; 2]; 3];
    for i in 0..3 {
        let a = vertices[(i + 1) % 3];
        let b = vertices[(i + 2) % 3];
        grads[i] = [(a[1] - b[1]) / twice_area, (b[0] - a[0]) / twice_area];
    }
    let mut ke = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            ke[i][j] = k * area * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
        }
    }
    ke
}

/// Exact P1 boundary mass of one edge of length `len` with constant `mu`.
pub fn edge_robin(len: f64, mu: f64) -> [[f64; 2]; 2] {
    let s = mu * len / 6.0;
    [[2.0 * s, s], [s, 2.0 * s]]
}

/// Matrix of the bilinear form `a(., .)`, diffusion plus Robin boundary term.
pub fn assemble_stiffness(mesh: &Mesh, coeff: &CoefficientSpec) -> Result<CsrMatrix> {
    let mut triplets =
        Vec::with_capacity(9 * mesh.triangle_count() + 4 * mesh.boundary_edges().len());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let verts = mesh.triangle_vertices(t);
        let k = coeff.diffusion_at(centroid(verts))?;
        let ke = element_stiffness(verts, k);
        for i in 0..3 {
            for j in 0..3 {
                triplets.push((tri[i], tri[j], ke[i][j]));
            }
        }
    }
    for &edge in mesh.boundary_edges() {
        let mu = coeff.robin_at(edge_midpoint(mesh, edge))?;
        if mu == 0.0 {
            continue;
        }
        let be = edge_robin(mesh.edge_length(edge), mu);
        for i in 0..2 {
            for j in 0..2 {
                triplets.push((edge[i], edge[j], be[i][j]));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.node_count(), &triplets)
}

/// Row-sum lumped mass: one third of each incident triangle's area.
pub fn assemble_lumped_mass(mesh: &Mesh) -> Vec<f64> {
    let mut m = vec![0.0; mesh.node_count()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let share = mesh.triangle_area(t) / 3.0;
        for &v in tri {
            m[v] += share;
        }
    }
    m
}

/// Lumped reaction term `D_i = c_i m_i`.
pub fn weighted_lumped_mass(mass: &[f64], c: &NodeField) -> Result<Vec<f64>> {
    ensure_len(mass.len(), c.len())?;
    Ok(mass.iter().zip(c.iter()).map(|(m, c)| m * c).collect())
}

/// Lumped load `F_i = m_i f_i` from nodal source samples.
pub fn lumped_load(mass: &[f64], f_values: &NodeField) -> Result<Vec<f64>> {
    weighted_lumped_mass(mass, f_values)
}

/// Nodal representative of the discrete elliptic operator: `(K v)_i / m_i`.
pub fn apply_elliptic(stiffness: &CsrMatrix, mass: &[f64], v: &NodeField) -> Result<NodeField> {
    ensure_len(stiffness.dim(), mass.len())?;
    let kv = stiffness.matvec(v)?;
    kv.into_iter()
        .zip(mass)
        .enumerate()
        .map(|(i, (kv, &m))| {
            if m > 0.0 {
                Ok(kv / m)
            } else {
                Err(Error::ZeroLumpedMass(i))
            }
        })
        .collect::<Result<Vec<_>>>()
        .map(NodeField)
}
