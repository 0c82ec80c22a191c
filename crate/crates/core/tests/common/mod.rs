//! Dense reference implementations used as independent oracles.
#![allow(
    dead_code,
    clippy::needless_range_loop,
    clippy::neg_cmp_op_on_partial_ord
)]

use reaction_ident::mesh::Mesh;
use reaction_ident::sparse::CsrMatrix;

pub type Dense = Vec<Vec<f64>>;

pub fn to_dense(a: &CsrMatrix) -> Dense {
    let n = a.dim();
    let mut d = vec![vec![0.0; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        for (j, v) in a.row(i) {
            row[j] = v;
        }
    }
    d
}

pub fn dense_matvec(a: &Dense, x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

/// LU factorization with partial pivoting, stored in place.
pub struct DenseLu {
    lu: Dense,
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn new(mut a: Dense) -> Self {
        let n = a.len();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap())
                .unwrap();
            assert!(a[p][k] != 0.0, "singular matrix");
            a.swap(k, p);
            perm.swap(k, p);
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                a[i][k] = f;
                for j in k + 1..n {
                    a[i][j] -= f * a[k][j];
                }
            }
        }
        Self { lu: a, perm }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                y[i] -= self.lu[i][j] * y[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                y[i] -= self.lu[i][j] * y[j];
            }
            y[i] /= self.lu[i][i];
        }
        y
    }
}

pub fn dense_solve(a: Dense, b: &[f64]) -> Vec<f64> {
    DenseLu::new(a).solve(b)
}

/// Cholesky factorization; returns the smallest pivot, or `None` when the
/// matrix is not positive definite.
pub fn cholesky_min_pivot(a: &Dense) -> Option<f64> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    let mut min_pivot = f64::INFINITY;
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if !(d > 0.0) {
            return None;
        }
        min_pivot = min_pivot.min(d);
        l[j][j] = d.sqrt();
        for i in j + 1..n {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / l[j][j];
        }
    }
    Some(min_pivot)
}

fn tri_area(p: [[f64; 2]; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
        .abs()
}

/// Stiffness via the cotangent formula, `K_ij = -k/2 cot(angle opposite ij)`,
/// plus a Robin term integrated with two-point Gauss quadrature.
pub fn dense_stiffness(
    mesh: &Mesh,
    k: impl Fn([f64; 2]) -> f64,
    mu: impl Fn([f64; 2]) -> f64,
) -> Dense {
    let n = mesh.node_count();
    let mut a = vec![vec![0.0; n]; n];
    for tri in mesh.triangles() {
        let p: Vec<[f64; 2]> = tri.iter().map(|&v| mesh.nodes()[v]).collect();
        let centroid = [
            (p[0][0] + p[1][0] + p[2][0]) / 3.0,
            (p[0][1] + p[1][1] + p[2][1]) / 3.0,
        ];
        let kt = k(centroid);
        for o in 0..3 {
            let (i, j) = ((o + 1) % 3, (o + 2) % 3);
            let u = [p[i][0] - p[o][0], p[i][1] - p[o][1]];
            let w = [p[j][0] - p[o][0], p[j][1] - p[o][1]];
            let cot = (u[0] * w[0] + u[1] * w[1]) / (u[0] * w[1] - u[1] * w[0]).abs();
            let e = 0.5 * kt * cot;
            let (gi, gj) = (tri[i], tri[j]);
            a[gi][gj] -= e;
            a[gj][gi] -= e;
            a[gi][gi] += e;
            a[gj][gj] += e;
        }
    }
    let g = 0.5 / 3f64.sqrt();
    for &[s, t] in mesh.boundary_edges() {
        let (p, q) = (mesh.nodes()[s], mesh.nodes()[t]);
        let len = (q[0] - p[0]).hypot(q[1] - p[1]);
        let mid = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
        let m = mu(mid);
        for xi in [0.5 - g, 0.5 + g] {
            let phi = [1.0 - xi, xi];
            let idx = [s, t];
            for a_ in 0..2 {
                for b_ in 0..2 {
                    a[idx[a_]][idx[b_]] += 0.5 * len * m * phi[a_] * phi[b_];
                }
            }
        }
    }
    a
}

/// Consistent P1 mass by the edge-midpoint rule (exact for quadratics).
pub fn dense_consistent_mass(mesh: &Mesh) -> Dense {
    let n = mesh.node_count();
    let mut m = vec![vec![0.0; n]; n];
    for tri in mesh.triangles() {
        let p = [
            mesh.nodes()[tri[0]],
            mesh.nodes()[tri[1]],
            mesh.nodes()[tri[2]],
        ];
        let area = tri_area(p);
        // barycentric coordinates of the three edge midpoints
        let qp = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];
        for lam in qp {
            for i in 0..3 {
                for j in 0..3 {
                    m[tri[i]][tri[j]] += area / 3.0 * lam[i] * lam[j];
                }
            }
        }
    }
    m
}

pub fn row_sums(a: &Dense) -> Vec<f64> {
    a.iter().map(|r| r.iter().sum()).collect()
}

/// Dense fully implicit solve of the lumped system from `w_0 = 0`; returns
/// `(w_{N-1}, w_N)`.
pub fn dense_forward(
    stiffness: &Dense,
    mass: &[f64],
    c: &[f64],
    load: impl Fn(f64) -> Vec<f64>,
    tau: f64,
    steps: usize,
) -> (Vec<f64>, Vec<f64>) {
    let n = mass.len();
    let mut a = stiffness.clone();
    for i in 0..n {
        a[i][i] += mass[i] / tau + c[i] * mass[i];
    }
    let lu = DenseLu::new(a);
    let mut prev = vec![0.0; n];
    let mut w = vec![0.0; n];
    for step in 1..=steps {
        let f = load(step as f64 * tau);
        let rhs: Vec<f64> = (0..n).map(|i| mass[i] / tau * w[i] + f[i]).collect();
        prev = std::mem::replace(&mut w, lu.solve(&rhs));
    }
    (prev, w)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}
