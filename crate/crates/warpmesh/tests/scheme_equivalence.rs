//! Cross-scheme and linearity guarantees of the mesh simulator.
//!
//! The scattering and difference formulations are algebraically the same
//! update, so their probe signals must agree to rounding error for any
//! lattice, probe placement, and (for the warped pair) any stable allpass
//! coefficient — not just the handful of configurations pinned in the unit
//! tests.

use proptest::prelude::*;
use warpmesh::lattice::{build_square_lattice, TriangularLattice};
use warpmesh::sim::{excite_impulse, run_impulse_response, step, MeshState, Scheme};
use warpmesh::warp::AllpassSpec;

const STEPS: usize = 64;

/// Picks an interior junction by reducing an arbitrary seed index.
fn interior(lat: &TriangularLattice, seed: usize) -> warpmesh::lattice::JunctionId {
    lat.interior()[seed % lat.num_interior()]
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

proptest! {
    /// The plain scattering and difference forms produce the same signal at
    /// every probe for every input placement.
    #[test]
    fn scattering_and_difference_forms_agree(
        side in 2usize..=6,
        input_seed in 0usize..1000,
        output_seed in 0usize..1000,
    ) {
        let lat = build_square_lattice(side).unwrap();
        let input = interior(&lat, input_seed);
        let output = interior(&lat, output_seed);
        let twm =
            run_impulse_response(&lat, Scheme::Twm, None, STEPS, input, output).unwrap();
        let fds =
            run_impulse_response(&lat, Scheme::Fds, None, STEPS, input, output).unwrap();
        prop_assert!(max_abs_diff(&twm.samples, &fds.samples) < 1e-9);
    }

    /// The warped pair agrees for any stable coefficient, including zero.
    #[test]
    fn warped_forms_agree_for_any_coefficient(
        side in 2usize..=6,
        alpha in -0.9f64..=0.0,
        input_seed in 0usize..1000,
    ) {
        let lat = build_square_lattice(side).unwrap();
        let input = interior(&lat, input_seed);
        let output = lat.center();
        let wtwm =
            run_impulse_response(&lat, Scheme::Wtwm, Some(alpha), STEPS, input, output)
                .unwrap();
        let wfds =
            run_impulse_response(&lat, Scheme::Wfds, Some(alpha), STEPS, input, output)
                .unwrap();
        prop_assert!(max_abs_diff(&wtwm.samples, &wfds.samples) < 1e-9);
    }

    /// Doubling the impulse amplitude doubles every probe sample exactly:
    /// scaling by a power of two commutes with every floating-point
    /// operation the steppers perform.
    #[test]
    fn response_is_exactly_homogeneous_under_doubling(
        scheme in prop::sample::select(vec![
            Scheme::Twm,
            Scheme::Fds,
            Scheme::Wtwm,
            Scheme::Wfds,
        ]),
        side in 2usize..=5,
        input_seed in 0usize..1000,
    ) {
        let lat = build_square_lattice(side).unwrap();
        let input = interior(&lat, input_seed);
        let output = lat.center();
        let spec = scheme
            .is_warped()
            .then(|| AllpassSpec::new(-0.45).unwrap());

        let run = |amplitude: f64| -> Vec<f64> {
            let mut state = MeshState::new(&lat, scheme, spec).unwrap();
            excite_impulse(&lat, &mut state, input, amplitude).unwrap();
            let mut out = Vec::with_capacity(STEPS);
            for _ in 0..STEPS {
                step(&lat, &mut state).unwrap();
                out.push(state.junction_signal(output));
            }
            out
        };

        let unit = run(1.0);
        let doubled = run(2.0);
        for (u, d) in unit.iter().zip(&doubled) {
            prop_assert_eq!((u * 2.0).to_bits(), d.to_bits());
        }
    }

    /// Two impulses injected together produce the sum of their individual
    /// responses, to rounding error.
    #[test]
    fn responses_superpose(
        scheme in prop::sample::select(vec![Scheme::Twm, Scheme::Wfds]),
        side in 3usize..=6,
        seed_a in 0usize..1000,
        seed_b in 0usize..1000,
    ) {
        let lat = build_square_lattice(side).unwrap();
        let a = interior(&lat, seed_a);
        let b = interior(&lat, seed_b);
        prop_assume!(a != b);
        let output = lat.center();
        let spec = scheme
            .is_warped()
            .then(|| AllpassSpec::new(-0.45).unwrap());

        let run = |sites: &[warpmesh::lattice::JunctionId]| -> Vec<f64> {
            let mut state = MeshState::new(&lat, scheme, spec).unwrap();
            for &s in sites {
                excite_impulse(&lat, &mut state, s, 1.0).unwrap();
            }
            let mut out = Vec::with_capacity(STEPS);
            for _ in 0..STEPS {
                step(&lat, &mut state).unwrap();
                out.push(state.junction_signal(output));
            }
            out
        };

        let combined = run(&[a, b]);
        let alone_a = run(&[a]);
        let alone_b = run(&[b]);
        for ((c, x), y) in combined.iter().zip(&alone_a).zip(&alone_b) {
            prop_assert!((c - (x + y)).abs() < 1e-9);
        }
    }

    /// An unexcited mesh stays identically at rest.
    #[test]
    fn rest_state_is_a_fixed_point(
        scheme in prop::sample::select(vec![
            Scheme::Twm,
            Scheme::Fds,
            Scheme::Wtwm,
            Scheme::Wfds,
        ]),
        side in 2usize..=5,
    ) {
        let lat = build_square_lattice(side).unwrap();
        let spec = scheme
            .is_warped()
            .then(|| AllpassSpec::new(-0.45).unwrap());
        let mut state = MeshState::new(&lat, scheme, spec).unwrap();
        for _ in 0..16 {
            step(&lat, &mut state).unwrap();
            for j in lat.all_junctions() {
                prop_assert_eq!(state.junction_signal(j), 0.0);
            }
        }
    }
}

/// Excitation is only defined away from the clamped rim, where the pressure
/// is pinned to zero.
#[test]
fn rim_junctions_cannot_be_excited() {
    let lat = build_square_lattice(4).unwrap();
    let rim = lat
        .all_junctions()
        .find(|&j| lat.is_rim(j))
        .expect("every square lattice has a rim");
    let mut state = MeshState::new(&lat, Scheme::Fds, None).unwrap();
    assert!(excite_impulse(&lat, &mut state, rim, 1.0).is_err());
}
