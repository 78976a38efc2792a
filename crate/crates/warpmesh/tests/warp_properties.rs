//! Behavioral invariants of the allpass warping map and filter.

use proptest::prelude::*;
use std::f64::consts::PI;
use warpmesh::warp::{
    phase_delay, warp_frequency, warp_frequency_inverse, AllpassSpec, AllpassState,
};

fn alphas() -> impl Strategy<Value = f64> {
    -0.95f64..=0.0
}

proptest! {
    /// The warping map is order preserving over its whole domain.
    #[test]
    fn warping_preserves_frequency_order(
        alpha in alphas(),
        a in 1e-6f64..PI,
        b in 1e-6f64..PI,
    ) {
        prop_assume!((a - b).abs() > 1e-9);
        let spec = AllpassSpec::new(alpha).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let wl = warp_frequency(lo, spec).unwrap();
        let wh = warp_frequency(hi, spec).unwrap();
        prop_assert!(wl < wh);
    }

    /// Forward and inverse warping compose to the identity.
    #[test]
    fn warping_round_trips(alpha in alphas(), omega in 1e-6f64..PI) {
        let spec = AllpassSpec::new(alpha).unwrap();
        let warped = warp_frequency(omega, spec).unwrap();
        let back = warp_frequency_inverse(warped, spec).unwrap();
        prop_assert!((back - omega).abs() < 1e-9);
    }

    /// Warped frequencies stay in the doubled band, pinned at both ends.
    #[test]
    fn warping_maps_the_band_onto_the_doubled_band(
        alpha in alphas(),
        omega in 1e-6f64..PI,
    ) {
        let spec = AllpassSpec::new(alpha).unwrap();
        let warped = warp_frequency(omega, spec).unwrap();
        prop_assert!(warped > 0.0 && warped < 2.0 * PI);
        prop_assert!((warp_frequency(0.0, spec).unwrap()).abs() < 1e-12);
        prop_assert!((warp_frequency(PI, spec).unwrap() - 2.0 * PI).abs() < 1e-9);
    }

    /// The phase delay of the warped delay element interpolates between its
    /// dc value `(1 - alpha) / (1 + alpha) + 1` and two samples at the band
    /// edge, never leaving that range for nonpositive coefficients.
    #[test]
    fn warped_delay_lag_stays_between_its_extremes(
        alpha in alphas(),
        omega in 1e-6f64..PI,
    ) {
        let spec = AllpassSpec::new(alpha).unwrap();
        let lag = 1.0 + phase_delay(omega, spec);
        let at_dc = 1.0 + (1.0 - alpha) / (1.0 + alpha);
        prop_assert!(lag <= at_dc + 1e-12);
        prop_assert!(lag >= 2.0 - 1e-12);
    }

    /// A first-order allpass driven by a bounded signal cannot blow up: with
    /// `|x| <= 1` the output stays within the worst-case envelope
    /// `(1 + |alpha|) / (1 - |alpha|)`.
    #[test]
    fn allpass_output_is_bounded(
        alpha in -0.9f64..=0.0,
        xs in prop::collection::vec(-1.0f64..=1.0, 1..200),
    ) {
        let spec = AllpassSpec::new(alpha).unwrap();
        let bound = (1.0 + alpha.abs()) / (1.0 - alpha.abs()) + 1e-9;
        let mut state = AllpassState::default();
        for x in xs {
            let y = state.step(spec, x);
            prop_assert!(y.abs() <= bound);
        }
    }
}

#[test]
fn coefficients_outside_the_stable_interval_are_rejected() {
    assert!(AllpassSpec::new(-1.0).is_err());
    assert!(AllpassSpec::new(0.5).is_err());
    assert!(AllpassSpec::new(f64::NAN).is_err());
    assert!(AllpassSpec::new(0.0).is_ok());
    assert!(AllpassSpec::new(-0.999).is_ok());
}
