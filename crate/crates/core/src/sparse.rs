//! Compressed sparse row matrices and a preconditioned conjugate gradient
//! solver for symmetric positive definite systems.

use crate::error::{Error, Result};

pub const DEFAULT_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Assembles an `n x n` matrix from `(row, col, value)` triplets.
    ///
    /// Duplicate positions are summed. Positions whose sum is exactly zero
    /// are not stored.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        for &(row, col, _) in triplets {
            if row >= n || col >= n {
                return Err(Error::IndexOutOfRange { row, col, n });
            }
        }
        let mut sorted = triplets.to_vec();
        sorted.sort_by_key(|&(r, c, _)| (r, c));

        let mut row_offsets = vec![0usize; n + 1];
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        let mut rows = Vec::with_capacity(sorted.len());

        let mut iter = sorted.into_iter().peekable();
        while let Some((r, c, mut v)) = iter.next() {
            while let Some(&(r2, c2, v2)) = iter.peek() {
                if (r2, c2) != (r, c) {
                    break;
                }
                v += v2;
                iter.next();
            }
            if v != 0.0 {
                rows.push(r);
                col_indices.push(c);
                values.push(v);
            }
        }
        for &r in &rows {
            row_offsets[r + 1] += 1;
        }
        for i in 0..n {
            row_offsets[i + 1] += row_offsets[i];
        }

        Ok(Self {
            n,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Stored entries of row `i` as `(col, value)` pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.row_offsets[i]..self.row_offsets[i + 1];
        match self.col_indices[span.clone()].binary_search(&j) {
            Ok(pos) => self.values[span.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `y = A x`
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y)?;
        Ok(y)
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        check_len(self.n, x.len())?;
        check_len(self.n, y.len())?;
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            *yi = acc;
        }
        Ok(())
    }

    /// `alpha * A + diag(d)`.
    pub fn scale_add_diagonal(&self, alpha: f64, d: &[f64]) -> Result<Self> {
        check_len(self.n, d.len())?;
        let mut triplets = Vec::with_capacity(self.nnz() + self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                triplets.push((i, j, alpha * v));
            }
            triplets.push((i, i, d[i]));
        }
        Self::from_triplets(self.n, &triplets)
    }

    /// Largest `|A[i][j] - A[j][i]|` over stored entries.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Outcome of a successful solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients bound to one matrix.
///
/// Holds the inverse diagonal and work vectors so repeated solves with the
/// same operator (one per time step) do not reallocate.
#[derive(Debug, Clone)]
pub struct SpdSolver {
    matrix: CsrMatrix,
    inv_diag: Vec<f64>,
    rel_tol: f64,
    max_iter: usize,
    r: Vec<f64>,
    z: Vec<f64>,
    p: Vec<f64>,
    ap: Vec<f64>,
}

impl SpdSolver {
    /// `max_iter = None` selects `10 n`.
    pub fn new(matrix: CsrMatrix, rel_tol: f64, max_iter: Option<usize>) -> Result<Self> {
        if !(rel_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rel_tol must be positive, got {rel_tol}"
            )));
        }
        let n = matrix.dim();
        let mut inv_diag = Vec::with_capacity(n);
        for (i, d) in matrix.diagonal().into_iter().enumerate() {
            if !(d > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "matrix is not positive definite: diagonal entry {i} is {d}"
                )));
            }
            inv_diag.push(1.0 / d);
        }
        Ok(Self {
            matrix,
            inv_diag,
            rel_tol,
            max_iter: max_iter.unwrap_or(10 * n.max(1)),
            r: vec![0.0; n],
            z: vec![0.0; n],
            p: vec![0.0; n],
            ap: vec![0.0; n],
        })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Solves `A x = b`, using the incoming contents of `x` as the initial
    /// guess. On success `||A x - b|| <= rel_tol ||b||` holds for the true
    /// residual.
    pub fn solve_in_place(&mut self, b: &[f64], x: &mut [f64]) -> Result<SolveStats> {
        let n = self.matrix.dim();
        check_len(n, b.len())?;
        check_len(n, x.len())?;

        let b_norm = norm2(b);
        if b_norm == 0.0 {
            x.iter_mut().for_each(|v| *v = 0.0);
            return Ok(SolveStats {
                iterations: 0,
                relative_residual: 0.0,
            });
        }
        let target = self.rel_tol * b_norm;

        let mut iterations = 0;
        // The recurrence residual can drift from the true one; restart from
        // the current iterate until the true residual meets the target.
        loop {
            self.matrix.matvec_into(x, &mut self.r)?;
            for (ri, bi) in self.r.iter_mut().zip(b) {
                *ri = bi - *ri;
            }
            let true_res = norm2(&self.r);
            if true_res <= target {
                return Ok(SolveStats {
                    iterations,
                    relative_residual: true_res / b_norm,
                });
            }
            if iterations >= self.max_iter {
                return Err(Error::NotConverged {
                    iterations,
                    residual: true_res / b_norm,
                });
            }

            for i in 0..n {
                self.z[i] = self.inv_diag[i] * self.r[i];
            }
            self.p.copy_from_slice(&self.z);
            let mut rz = dot(&self.r, &self.z);

            while iterations < self.max_iter {
                iterations += 1;
                self.matrix.matvec_into(&self.p, &mut self.ap)?;
                let pap = dot(&self.p, &self.ap);
                if !(pap > 0.0) {
                    return Err(Error::NotConverged {
                        iterations,
                        residual: norm2(&self.r) / b_norm,
                    });
                }
                let alpha = rz / pap;
                for i in 0..n {
                    x[i] += alpha * self.p[i];
                    self.r[i] -= alpha * self.ap[i];
                }
                if norm2(&self.r) <= 0.5 * target {
                    break;
                }
                for i in 0..n {
                    self.z[i] = self.inv_diag[i] * self.r[i];
                }
                let rz_next = dot(&self.r, &self.z);
                let beta = rz_next / rz;
                rz = rz_next;
                for i in 0..n {
                    self.p[i] = self.z[i] + beta * self.p[i];
                }
            }
        }
    }
}

/// Solves `A x = b` for symmetric positive definite `A` from a zero guess.
pub fn solve_spd(a: &CsrMatrix, b: &[f64], rel_tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let mut solver = SpdSolver::new(a.clone(), rel_tol, Some(max_iter))?;
    let mut x = vec![0.0; a.dim()];
    solver.solve_in_place(b, &mut x)?;
    Ok(x)
}
