//! Conforming triangulations of planar domains.
//!
//! The structured generator covers axis-aligned rectangles with a uniform
//! grid in which every cell is cut along its lower-left to upper-right
//! diagonal. All downstream code accepts any conforming, counterclockwise
//! triangulation built through [`Mesh::new`].

use std::collections::HashMap;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<[usize; 2]>,
}

impl Mesh {
    /// Builds a mesh from raw nodes and counterclockwise triangles.
    ///
    /// Boundary edges are recovered as the edges owned by exactly one
    /// triangle; they inherit the triangle's orientation, so they run
    /// counterclockwise along the outer boundary.
    pub fn new(nodes: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if nodes.is_empty() || triangles.is_empty() {
            return Err(Error::InvalidMesh(
                "mesh needs at least one triangle".into(),
            ));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nodes.len()) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} references a missing node"
                )));
            }
            let area = signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
            if !(area > 0.0) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} is not counterclockwise (signed area {area:e})"
                )));
            }
        }

        let mut edge_owners: HashMap<(usize, usize), Vec<[usize; 2]>> = HashMap::new();
        for tri in &triangles {
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                edge_owners
                    .entry((a.min(b), a.max(b)))
                    .or_default()
                    .push([a, b]);
            }
        }
        let mut boundary_edges = Vec::new();
        for (key, owners) in &edge_owners {
            match owners.len() {
                1 => boundary_edges.push(owners[0]),
                2 if owners[0] != owners[1] => {}
                _ => {
                    return Err(Error::InvalidMesh(format!(
                        "edge ({}, {}) is not conforming",
                        key.0, key.1
                    )))
                }
            }
        }
        boundary_edges.sort_unstable();

        Ok(Self {
            nodes,
            triangles,
            boundary_edges,
        })
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[[usize; 2]] {
        &self.boundary_edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_vertices(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    /// Area of triangle `t`.
    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_vertices(t);
        signed_area(a, b, c).abs()
    }

    pub fn edge_length(&self, edge: [usize; 2]) -> f64 {
        let [a, b] = edge;
        let (p, q) = (self.nodes[a], self.nodes[b]);
        (q[0] - p[0]).hypot(q[1] - p[1])
    }

    /// Largest interior angle of triangle `t`, in radians.
    pub fn max_angle(&self, t: usize) -> f64 {
        let v = self.triangle_vertices(t);
        (0..3)
            .map(|i| {
                let p = v[i];
                let q = v[(i + 1) % 3];
                let r = v[(i + 2) % 3];
                let u = [q[0] - p[0], q[1] - p[1]];
                let w = [r[0] - p[0], r[1] - p[1]];
                let cross = u[0] * w[1] - u[1] * w[0];
                let dot = u[0] * w[0] + u[1] * w[1];
                cross.abs().atan2(dot)
            })
            .fold(0.0, f64::max)
    }

    /// Bounding box `(min, max)` of the node set.
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.nodes {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (lo, hi)
    }
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Uniform triangulation of `[0, x_len] x [0, y_len]` with `nx` by `ny` cells.
///
/// Nodes are numbered row by row (`j * (nx + 1) + i`), and each cell is
/// split into two right triangles along the diagonal from its lower-left to
/// its upper-right corner.
pub fn build_rect_mesh(x_len: f64, y_len: f64, nx: usize, ny: usize) -> Result<Mesh> {
    if !(x_len > 0.0 && x_len.is_finite() && y_len > 0.0 && y_len.is_finite()) {
        return Err(Error::InvalidMesh(format!(
            "rectangle extents must be positive, got {x_len} x {y_len}"
        )));
    }
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidMesh(format!(
            "interval counts must be at least 1, got {nx} x {ny}"
        )));
    }

    let hx = x_len / nx as f64;
    let hy = y_len / ny as f64;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        // pin the last row/column to the exact extent
        let y = if j == ny { y_len } else { j as f64 * hy };
        for i in 0..=nx {
            let x = if i == nx { x_len } else { i as f64 * hx };
            nodes.push([x, y]);
        }
    }

    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let ll = id(i, j);
            let lr = id(i + 1, j);
            let ur = id(i + 1, j + 1);
            let ul = id(i, j + 1);
            triangles.push([ll, lr, ur]);
            triangles.push([ll, ur, ul]);
        }
    }

    // walk the boundary counterclockwise from the origin
    let mut boundary_edges = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        boundary_edges.push([id(i, 0), id(i + 1, 0)]);
    }
    for j in 0..ny {
        boundary_edges.push([id(nx, j), id(nx, j + 1)]);
    }
    for i in (1..=nx).rev() {
        boundary_edges.push([id(i, ny), id(i - 1, ny)]);
    }
    for j in (1..=ny).rev() {
        boundary_edges.push([id(0, j), id(0, j - 1)]);
    }

    Ok(Mesh {
        nodes,
        triangles,
        boundary_edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn counts_on_small_grids() {
        let m = build_rect_mesh(1.0, 1.0, 1, 1).unwrap();
        assert_eq!(
            (m.node_count(), m.triangle_count(), m.boundary_edges().len()),
            (4, 2, 4)
        );

        let m = build_rect_mesh(1.0, 1.0, 2, 1).unwrap();
        assert_eq!(
            (m.node_count(), m.triangle_count(), m.boundary_edges().len()),
            (6, 4, 6)
        );

        let m = build_rect_mesh(1.0, 1.0, 50, 50).unwrap();
        assert_eq!((m.node_count(), m.triangle_count()), (2601, 5000));
        assert_eq!(m.boundary_edges().len(), 200);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(build_rect_mesh(0.0, 1.0, 1, 1).is_err());
        assert!(build_rect_mesh(1.0, -2.0, 1, 1).is_err());
        assert!(build_rect_mesh(1.0, 1.0, 0, 3).is_err());
        assert!(build_rect_mesh(f64::NAN, 1.0, 1, 1).is_err());
    }

    #[test]
    fn triangle_areas() {
        let m = build_rect_mesh(1.0, 1.0, 1, 1).unwrap();
        assert_eq!(m.triangle_area(0), 0.5);
        assert_eq!(m.triangle_area(1), 0.5);

        let m = build_rect_mesh(1.0, 1.0, 50, 50).unwrap();
        for t in 0..m.triangle_count() {
            assert!((m.triangle_area(t) - 2e-4).abs() < 1e-16);
        }
    }

    #[test]
    fn area_partition_and_angles() {
        for &(lx, ly, nx, ny) in &[(1.0, 1.0, 7, 3), (2.5, 0.3, 200, 11), (0.7, 1.9, 13, 200)] {
            let m = build_rect_mesh(lx, ly, nx, ny).unwrap();
            let total: f64 = (0..m.triangle_count()).map(|t| m.triangle_area(t)).sum();
            assert!(((total - lx * ly) / (lx * ly)).abs() < 1e-12);
            for t in 0..m.triangle_count() {
                assert!(m.max_angle(t) <= std::f64::consts::FRAC_PI_2 + 1e-12);
            }
        }
    }

    #[test]
    fn edge_sharing() {
        let m = build_rect_mesh(1.0, 2.0, 5, 4).unwrap();
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in m.triangles() {
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let boundary: HashSet<(usize, usize)> = m
            .boundary_edges()
            .iter()
            .map(|&[a, b]| (a.min(b), a.max(b)))
            .collect();
        assert_eq!(boundary.len(), m.boundary_edges().len());
        for (edge, n) in count {
            if boundary.contains(&edge) {
                assert_eq!(n, 1);
            } else {
                assert_eq!(n, 2);
            }
        }
    }

    #[test]
    fn boundary_is_closed_cycle() {
        let m = build_rect_mesh(1.0, 1.0, 4, 3).unwrap();
        let edges = m.boundary_edges();
        for w in edges.windows(2) {
            assert_eq!(w[0][1], w[1][0]);
        }
        assert_eq!(edges.last().unwrap()[1], edges[0][0]);
        let perimeter: f64 = edges.iter().map(|&e| m.edge_length(e)).sum();
        assert!((perimeter - 4.0).abs() < 1e-14);
    }

    #[test]
    fn general_constructor_matches_generator() {
        let r = build_rect_mesh(1.0, 1.0, 3, 2).unwrap();
        let g = Mesh::new(r.nodes().to_vec(), r.triangles().to_vec()).unwrap();
        let mut a = r.boundary_edges().to_vec();
        a.sort_unstable();
        assert_eq!(a, g.boundary_edges());
    }

    #[test]
    fn general_constructor_rejects_clockwise() {
        let nodes = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(Mesh::new(nodes.clone(), vec![[0, 1, 2]]).is_ok());
        assert!(Mesh::new(nodes.clone(), vec![[0, 2, 1]]).is_err());
        assert!(Mesh::new(nodes, vec![[0, 1, 5]]).is_err());
    }
}
