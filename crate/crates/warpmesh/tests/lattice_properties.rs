//! Structural invariants of the triangular lattice, checked across a sweep
//! of square sizes.

use proptest::prelude::*;
use warpmesh::lattice::{build_square_lattice, opposite_port, port_direction, PORT_COUNT};

proptest! {
    /// Every stored link is mutual: if `j` sees `k` through port `d`, then
    /// `k` sees `j` through the opposite port.
    #[test]
    fn adjacency_is_reciprocal(side in 2usize..=16) {
        let lat = build_square_lattice(side).unwrap();
        for j in lat.all_junctions() {
            for d in 0..PORT_COUNT {
                if let Some(k) = lat.neighbor(j, d) {
                    prop_assert_eq!(lat.neighbor(k, opposite_port(d)), Some(j));
                }
            }
        }
    }

    /// Interior junctions have all six ports connected; rim junctions are
    /// exactly the ones missing at least one neighbor.
    #[test]
    fn rim_is_the_incomplete_boundary(side in 2usize..=16) {
        let lat = build_square_lattice(side).unwrap();
        for j in lat.all_junctions() {
            if lat.is_rim(j) {
                prop_assert!(lat.degree(j) < PORT_COUNT);
            } else {
                prop_assert_eq!(lat.degree(j), PORT_COUNT);
            }
        }
    }

    /// Interior and rim partition the junction set, and the interior list
    /// holds exactly the non-rim ids in ascending order.
    #[test]
    fn interior_and_rim_partition_the_mesh(side in 2usize..=16) {
        let lat = build_square_lattice(side).unwrap();
        prop_assert_eq!(lat.num_interior() + lat.num_rim(), lat.num_junctions());
        let expected: Vec<_> = lat.all_junctions().filter(|&j| !lat.is_rim(j)).collect();
        prop_assert_eq!(lat.interior(), expected.as_slice());
        prop_assert!(lat.num_interior() >= 1);
    }

    /// Neighbors sit at unit distance along the nominal port direction.
    #[test]
    fn links_have_unit_spacing(side in 2usize..=16) {
        let lat = build_square_lattice(side).unwrap();
        for j in lat.all_junctions() {
            let [xj, yj] = lat.position(j);
            for d in 0..PORT_COUNT {
                if let Some(k) = lat.neighbor(j, d) {
                    let [xk, yk] = lat.position(k);
                    let [ux, uy] = port_direction(d);
                    prop_assert!((xk - xj - ux).abs() < 1e-12);
                    prop_assert!((yk - yj - uy).abs() < 1e-12);
                }
            }
        }
    }

    /// The designated center is interior and no interior junction lies
    /// strictly closer to the bounding-box midpoint.
    #[test]
    fn center_minimizes_distance_to_the_midpoint(side in 2usize..=16) {
        let lat = build_square_lattice(side).unwrap();
        let c = lat.center();
        prop_assert!(!lat.is_rim(c));
        let ([x0, y0], [x1, y1]) = lat.bounds();
        let mid = [(x0 + x1) / 2.0, (y0 + y1) / 2.0];
        let dist2 = |p: [f64; 2]| (p[0] - mid[0]).powi(2) + (p[1] - mid[1]).powi(2);
        let best = dist2(lat.position(c));
        for &j in lat.interior() {
            prop_assert!(dist2(lat.position(j)) >= best - 1e-12);
        }
    }

    /// Every position lies inside the reported bounds.
    #[test]
    fn bounds_cover_all_junctions(side in 2usize..=16) {
        let lat = build_square_lattice(side).unwrap();
        let ([x0, y0], [x1, y1]) = lat.bounds();
        for j in lat.all_junctions() {
            let [x, y] = lat.position(j);
            prop_assert!(x0 <= x && x <= x1);
            prop_assert!(y0 <= y && y <= y1);
        }
    }
}

#[test]
fn sides_below_two_are_rejected() {
    assert!(build_square_lattice(0).is_err());
    assert!(build_square_lattice(1).is_err());
    assert!(build_square_lattice(2).is_ok());
}
