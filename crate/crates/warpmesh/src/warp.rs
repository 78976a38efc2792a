//! First-order allpass element and the frequency warp it induces.
//!
//! # The element
//!
//! The building block is the one-coefficient allpass
//!
//! ```text
//!          a + z^-1
//! A(z) = ------------ ,   -1 < a <= 0,
//!         1 + a z^-1
//! ```
//!
//! realized in a canonical one-state form ([`allpass_step`]). Cascading a
//! unit delay with `A(z)` yields the *warped delay* `z^-1 A(z)`
//! ([`warped_delay_step`]): a two-sample-latency element whose phase delay
//! varies smoothly from `(1 - a)/(1 + a)` samples at dc down to one sample
//! at the Nyquist limit. Substituting it for every unit delay of a
//! simulation leaves magnitudes untouched (the element is lossless) but
//! stretches the frequency axis.
//!
//! # The map
//!
//! A signal feature at angular frequency `w` in the original system appears
//! at `warp_frequency(w)` in the warped system; the map is strictly
//! increasing from `[0, pi]` onto `[0, 2 pi]` and reduces to `w -> 2 w` for
//! `a = 0`. [`warp_frequency_inverse`] recovers `w` by bisection, since the
//! map has no elementary closed-form inverse.

use std::f64::consts::PI;

use crate::kernel;
use crate::{Error, Result};

/// Validated allpass configuration.
///
/// The coefficient is restricted to `(-1, 0]`: the open bound keeps the
/// filter stable, and non-positive values make the warp stretch low
/// frequencies upward, the direction that counteracts the mesh's
/// high-frequency slowdown.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AllpassSpec {
    alpha: f64,
}

impl AllpassSpec {
    /// Validates a coefficient in `(-1, 0]`.
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > -1.0 && alpha <= 0.0 {
            Ok(AllpassSpec { alpha })
        } else {
            Err(Error::InvalidAlpha(alpha))
        }
    }

    /// The coefficient.
    #[inline]
    pub fn alpha(self) -> f64 {
        self.alpha
    }
}

/// Single delay-element state of the canonical allpass form. The zero value
/// is the rest state.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AllpassState {
    s: f64,
}

impl AllpassState {
    /// Advances the allpass by one sample in place and returns the output.
    #[inline]
    pub fn step(&mut self, spec: AllpassSpec, x: f64) -> f64 {
        kernel::allpass(spec.alpha, &mut self.s, x)
    }
}

/// Pure-functional allpass update: returns `(y, next_state)` for input `x`.
///
/// The recurrence is `y = a*x + s` with state update `s' = x - a*y`, which
/// realizes `A(z) = (a + z^-1) / (1 + a z^-1)` with a single multiplier per
/// coefficient use and one word of state.
#[inline]
pub fn allpass_step(spec: AllpassSpec, state: AllpassState, x: f64) -> (f64, AllpassState) {
    let mut s = state.s;
    let y = kernel::allpass(spec.alpha, &mut s, x);
    (y, AllpassState { s })
}

/// State of a warped delay `z^-1 A(z)`: a plain delay register in front of
/// an allpass state. Zero is rest.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WarpedDelayState {
    reg: f64,
    ap: AllpassState,
}

/// Advances a warped delay by one sample: emits the previous allpass output
/// and absorbs `x`. For `a = 0` this degenerates to two unit delays.
#[inline]
pub fn warped_delay_step(
    spec: AllpassSpec,
    state: WarpedDelayState,
    x: f64,
) -> (f64, WarpedDelayState) {
    let (filtered, ap) = allpass_step(spec, state.ap, x);
    (state.reg, WarpedDelayState { reg: filtered, ap })
}

/// Raw warp-map evaluation without domain checks; `omega` in `[0, pi]`.
///
/// The warped frequency is the total phase lag of `z^-1 A(z)` at `omega`.
/// The principal-value arctangent covers `(-pi, pi]` while the lag spans
/// `[0, 2 pi]`, so negative branches are lifted by one turn; the lag is
/// continuous and strictly increasing, so the single unwrap suffices.
fn warp_eval(omega: f64, alpha: f64) -> f64 {
    let (sin, cos) = omega.sin_cos();
    let num = 2.0 * sin * (alpha + cos);
    let den = 1.0 + alpha * alpha + 2.0 * alpha * cos - 2.0 * sin * sin;
    let p = num.atan2(den);
    if p < 0.0 {
        p + 2.0 * PI
    } else {
        p
    }
}

/// Maps a frequency of the unwarped system to its image under the warp.
///
/// Strictly increasing on `[0, pi]` with `warp_frequency(0) = 0` and
/// `warp_frequency(pi) = 2 pi`; equals `2 omega` when the coefficient is
/// zero. Errors if `omega` is outside `[0, pi]` beyond a `1e-9` guard.
pub fn warp_frequency(omega: f64, spec: AllpassSpec) -> Result<f64> {
    const GUARD: f64 = 1e-9;
    if !omega.is_finite() || !(-GUARD..=PI + GUARD).contains(&omega) {
        return Err(Error::NumericalDomain(format!(
            "warp input frequency {omega} outside [0, pi]"
        )));
    }
    Ok(warp_eval(omega.clamp(0.0, PI), spec.alpha))
}

/// Inverts the warp map by bisection.
///
/// Accepts `omega_tilde` in `[0, 2 pi]` (the image of `[0, pi]`) and
/// returns the preimage with round-trip error below `1e-10`. The fixed
/// 100-step bisection is deterministic and exhausts `f64` resolution.
pub fn warp_frequency_inverse(omega_tilde: f64, spec: AllpassSpec) -> Result<f64> {
    const GUARD: f64 = 1e-9;
    if !omega_tilde.is_finite() || !(-GUARD..=2.0 * PI + GUARD).contains(&omega_tilde) {
        return Err(Error::NumericalDomain(format!(
            "warped frequency {omega_tilde} outside [0, 2 pi]"
        )));
    }
    let target = omega_tilde.clamp(0.0, 2.0 * PI);
    let (mut lo, mut hi) = (0.0f64, PI);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if warp_eval(mid, spec.alpha) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Phase delay of `A(z)` in samples at frequency `omega` in `[0, pi]`.
///
/// Decreases monotonically from `(1 - a)/(1 + a)` at dc (returned for
/// `omega <= 0` as the continuous extension) to exactly 1 at `pi`.
pub fn phase_delay(omega: f64, spec: AllpassSpec) -> f64 {
    let a = spec.alpha;
    if omega <= 0.0 {
        return (1.0 - a) / (1.0 + a);
    }
    let (sin, cos) = omega.sin_cos();
    let arg_num = (-sin).atan2(a + cos);
    let arg_den = (-a * sin).atan2(1.0 + a * cos);
    -(arg_num - arg_den) / omega
}
