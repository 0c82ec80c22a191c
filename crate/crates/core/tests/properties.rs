use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;

use proptest::collection::vec;
use proptest::prelude::*;
use reaction_ident::fem::{assemble_lumped_mass, assemble_stiffness, CoefficientSpec};
use reaction_ident::mesh::build_rect_mesh;
use reaction_ident::sparse::CsrMatrix;

proptest! {
    #[test]
    fn rect_mesh_invariants(nx in 1usize..30, ny in 1usize..30, lx in 0.1f64..5.0, ly in 0.1f64..5.0) {
        let mesh = build_rect_mesh(lx, ly, nx, ny).unwrap();
        prop_assert_eq!(mesh.node_count(), (nx + 1) * (ny + 1));
        prop_assert_eq!(mesh.triangle_count(), 2 * nx * ny);
        prop_assert_eq!(mesh.boundary_edges().len(), 2 * (nx + ny));

        let area: f64 = (0..mesh.triangle_count()).map(|t| mesh.triangle_area(t)).sum();
        prop_assert!((area - lx * ly).abs() <= 1e-12 * lx * ly);
        for t in 0..mesh.triangle_count() {
            prop_assert!(mesh.triangle_area(t) > 0.0);
            prop_assert!(mesh.max_angle(t) <= FRAC_PI_2 + 1e-12);
        }

        let perimeter: f64 = mesh.boundary_edges().iter().map(|&e| mesh.edge_length(e)).sum();
        prop_assert!((perimeter - 2.0 * (lx + ly)).abs() <= 1e-12 * (lx + ly));
        let masses = assemble_lumped_mass(&mesh);
        prop_assert!((masses.iter().sum::<f64>() - lx * ly).abs() <= 1e-12 * lx * ly);
    }

    #[test]
    fn triplets_sum_duplicates(
        n in 1usize..12,
        raw in vec((0usize..12, 0usize..12, -5.0f64..5.0), 0..80),
    ) {
        let triplets: Vec<_> = raw.into_iter().map(|(i, j, v)| (i % n, j % n, v)).collect();
        let a = CsrMatrix::from_triplets(n, &triplets).unwrap();
        let mut sums: HashMap<(usize, usize), f64> = HashMap::new();
        for &(i, j, v) in &triplets {
            *sums.entry((i, j)).or_default() += v;
        }
        for i in 0..n {
            let cols: Vec<usize> = a.row(i).map(|(j, _)| j).collect();
            prop_assert!(cols.windows(2).all(|w| w[0] < w[1]));
            for j in 0..n {
                let expected = sums.get(&(i, j)).copied().unwrap_or(0.0);
                prop_assert!((a.get(i, j) - expected).abs() <= 1e-12);
            }
        }
        prop_assert!(a.values().iter().all(|&v| v != 0.0));
    }

    #[test]
    fn stiffness_kernel_and_symmetry(nx in 1usize..12, ny in 1usize..12, k in 0.1f64..10.0, mu in 0.0f64..20.0) {
        let mesh = build_rect_mesh(1.0, 1.0, nx, ny).unwrap();
        let stiff = assemble_stiffness(&mesh, &CoefficientSpec::constant(k, mu)).unwrap();
        prop_assert!(stiff.symmetry_defect() <= 1e-13 * stiff.max_abs());
        // 1' K 1 is the Robin boundary integral of mu
        let ones = vec![1.0; mesh.node_count()];
        let total: f64 = stiff.matvec(&ones).unwrap().iter().sum();
        prop_assert!((total - 4.0 * mu).abs() <= 1e-10 * (1.0 + mu));
        let boundary: std::collections::HashSet<[usize; 2]> =
            mesh.boundary_edges().iter().flat_map(|&[a, b]| [[a, b], [b, a]]).collect();
        for i in 0..mesh.node_count() {
            prop_assert!(stiff.get(i, i) > 0.0);
            prop_assert!(stiff.row(i).all(|(j, v)| j == i || boundary.contains(&[i, j]) || v <= 0.0));
        }
    }
}
