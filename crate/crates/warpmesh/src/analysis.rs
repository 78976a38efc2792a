//! Dispersion curves, modal prediction, spectra, and mode matching.
//!
//! # Dispersion
//!
//! On the triangular mesh a plane wave with spatial frequency `k` propagates
//! at the temporal frequency given by [`twm_dispersion_omega`]; the ideal
//! medium the mesh approximates has `omega = |k| / sqrt(2)`. The ratio of
//! actual to ideal phase speed ([`dispersion_curve`]) starts at 1 for long
//! waves and sags as `|k|` grows toward the band edge, direction-dependent
//! only in the third digit. Frequency warping rescales the temporal axis:
//! [`warped_dispersion_curve`] maps each mesh frequency back through the
//! warp inverse and realigns dc with the factor [`dc_realignment`], which
//! trades the sag for a slight bulge and keeps the speed ratio near 1 much
//! deeper into the band.
//!
//! # Modes
//!
//! For a clamped square of `L` sections, center excitation and center
//! probing select the odd-odd modes `(m, n)`; [`theoretical_modes`] lists
//! them with ideal frequencies and [`predicted_modes`] maps each through
//! the scheme's dispersion (and warp) to the frequency the simulation
//! should actually exhibit. [`spectrum`] and [`find_peaks`] extract
//! measured peaks from a probe signal, and [`match_modes`] pairs them with
//! predictions.

use std::f64::consts::PI;
use std::io;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::sim::{ProbeRecord, Scheme};
use crate::warp::{warp_frequency_inverse, AllpassSpec};
use crate::{Error, Result};

/// A two-dimensional spatial frequency (radians per unit length).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpatialFrequency {
    pub kx: f64,
    pub ky: f64,
}

impl SpatialFrequency {
    /// Component constructor.
    pub fn new(kx: f64, ky: f64) -> Self {
        SpatialFrequency { kx, ky }
    }

    /// Magnitude/direction constructor; the angle is in radians from +x.
    pub fn from_polar(magnitude: f64, angle: f64) -> Self {
        SpatialFrequency {
            kx: magnitude * angle.cos(),
            ky: magnitude * angle.sin(),
        }
    }

    /// Euclidean magnitude `|k|`.
    pub fn magnitude(self) -> f64 {
        self.kx.hypot(self.ky)
    }
}

/// Largest spatial frequency magnitude with a uniquely invertible temporal
/// image on the triangular mesh: `2 pi / sqrt(3)`.
pub fn spatial_band_edge() -> f64 {
    2.0 * PI / 3f64.sqrt()
}

/// Ideal temporal frequency of the band edge: `spatial_band_edge() / sqrt(2)`.
pub fn nominal_band_edge() -> f64 {
    spatial_band_edge() / 2f64.sqrt()
}

/// Temporal frequency the ideal medium assigns to `k`: `|k| / sqrt(2)`,
/// the mesh's long-wave propagation speed being `1 / sqrt(2)` of the
/// inter-junction spacing per step.
pub fn nominal_frequency(k: SpatialFrequency) -> f64 {
    k.magnitude() / 2f64.sqrt()
}

/// Temporal frequency at which the unwarped mesh propagates a plane wave of
/// spatial frequency `k`.
///
/// The implicit relation is `cos(omega) = (cos(k.d1) + cos(k.d2) +
/// cos(k.d3)) / 3` over the three lattice axes; the arccos argument cannot
/// leave `[-1, 1]` for real `k`, so the domain error is only reachable
/// through non-finite input.
pub fn twm_dispersion_omega(k: SpatialFrequency) -> Result<f64> {
    let half_sqrt3 = 3f64.sqrt() / 2.0;
    let arg = ((k.kx).cos()
        + (0.5 * k.kx + half_sqrt3 * k.ky).cos()
        + (-0.5 * k.kx + half_sqrt3 * k.ky).cos())
        / 3.0;
    if !(-1.0 - 1e-12..=1.0 + 1e-12).contains(&arg) {
        return Err(Error::NumericalDomain(format!(
            "dispersion arccos argument {arg} outside [-1, 1]"
        )));
    }
    Ok(arg.clamp(-1.0, 1.0).acos())
}

/// Dc realignment factor of the warp: `2 / (1 + alpha)`.
///
/// A warped delay is worth `1 + phase_delay(0)` samples at dc, so warped
/// frequencies near dc are smaller by exactly this factor; multiplying them
/// back recovers the unwarped scale. Equals 2 for a zero coefficient (the
/// pure half-rate case).
pub fn dc_realignment(spec: AllpassSpec) -> f64 {
    2.0 / (1.0 + spec.alpha())
}

/// Phase-speed accuracy of one scheme along one direction.
#[derive(Clone, Debug)]
pub struct DispersionCurve {
    /// Scheme the curve describes.
    pub scheme: Scheme,
    /// Allpass coefficient for warped schemes.
    pub alpha: Option<f64>,
    /// Propagation direction in radians from +x.
    pub direction: f64,
    /// `(omega_nominal, speed_ratio)` pairs, sampled uniformly in `|k|`
    /// over `(0, spatial_band_edge()]`, ascending.
    pub points: Vec<(f64, f64)>,
}

impl DispersionCurve {
    /// Writes the curve as CSV with header `omega_nominal,speed_ratio`.
    pub fn write_csv<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "omega_nominal,speed_ratio")?;
        for &(omega, ratio) in &self.points {
            writeln!(w, "{omega:.8e},{ratio:.8e}")?;
        }
        Ok(())
    }
}

fn curve_samples(direction: f64, n_points: usize) -> Result<Vec<SpatialFrequency>> {
    if n_points < 2 {
        return Err(Error::InvalidArgument(format!(
            "dispersion curve needs at least 2 points, got {n_points}"
        )));
    }
    let edge = spatial_band_edge();
    Ok((1..=n_points)
        .map(|i| SpatialFrequency::from_polar(edge * i as f64 / n_points as f64, direction))
        .collect())
}

/// Phase-speed ratio curve of an unwarped scheme (`twm` or `fds`; both
/// propagate identically).
pub fn dispersion_curve(scheme: Scheme, direction: f64, n_points: usize) -> Result<DispersionCurve> {
    if scheme.is_warped() {
        return Err(Error::InvalidArgument(format!(
            "dispersion_curve covers unwarped schemes; use warped_dispersion_curve for {scheme}"
        )));
    }
    let points = curve_samples(direction, n_points)?
        .into_iter()
        .map(|k| {
            let omega = twm_dispersion_omega(k)?;
            let nominal = nominal_frequency(k);
            Ok((nominal, omega / nominal))
        })
        .collect::<Result<_>>()?;
    Ok(DispersionCurve {
        scheme,
        alpha: None,
        direction,
        points,
    })
}

/// Phase-speed ratio curve of the warped schemes after dc realignment.
///
/// Each mesh frequency is pulled back through the warp inverse and rescaled
/// by [`dc_realignment`], so the ratio reads 1 wherever warping restores the
/// ideal speed. With a zero coefficient this reproduces the unwarped curve.
pub fn warped_dispersion_curve(
    spec: AllpassSpec,
    direction: f64,
    n_points: usize,
) -> Result<DispersionCurve> {
    let rho = dc_realignment(spec);
    let points = curve_samples(direction, n_points)?
        .into_iter()
        .map(|k| {
            let omega = twm_dispersion_omega(k)?;
            let nu = warp_frequency_inverse(omega, spec)?;
            let nominal = nominal_frequency(k);
            Ok((nominal, rho * nu / nominal))
        })
        .collect::<Result<_>>()?;
    Ok(DispersionCurve {
        scheme: Scheme::Wtwm,
        alpha: Some(spec.alpha()),
        direction,
        points,
    })
}

/// One ideal mode of the clamped square.
#[derive(Clone, Copy, Debug)]
pub struct ModeEntry {
    /// Odd modal indices with `m <= n`; the `(n, m)` twin is folded into
    /// `multiplicity`.
    pub m: u32,
    pub n: u32,
    /// 2 for `m != n` (the mirrored twin is degenerate), 1 otherwise.
    pub multiplicity: u32,
    /// Ideal temporal frequency `pi * sqrt(m^2 + n^2) / (sqrt(2) * L)`.
    pub omega_ideal: f64,
    /// Spatial frequency `(pi m / L, pi n / L)`.
    pub k: SpatialFrequency,
}

/// Lists the ideal modes a center-excited, center-probed square of
/// `side_sections` sections exhibits, up to `max_omega`, sorted by
/// frequency.
///
/// Only odd-odd `(m, n)` modes appear: even indices put a node at the
/// center, where they can be neither driven nor observed.
pub fn theoretical_modes(side_sections: usize, max_omega: f64) -> Result<Vec<ModeEntry>> {
    if side_sections < 2 {
        return Err(Error::SideTooSmall(side_sections));
    }
    if !max_omega.is_finite() || max_omega <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "mode frequency limit must be positive, got {max_omega}"
        )));
    }
    let l = side_sections as f64;
    let omega_of = |m: u32, n: u32| {
        PI * ((m * m + n * n) as f64).sqrt() / (2f64.sqrt() * l)
    };
    let mut modes = Vec::new();
    let mut m = 1;
    while omega_of(m, m) <= max_omega {
        let mut n = m;
        while omega_of(m, n) <= max_omega {
            modes.push(ModeEntry {
                m,
                n,
                multiplicity: if m == n { 1 } else { 2 },
                omega_ideal: omega_of(m, n),
                k: SpatialFrequency::new(PI * m as f64 / l, PI * n as f64 / l),
            });
            n += 2;
        }
        m += 2;
    }
    modes.sort_by(|a, b| {
        a.omega_ideal
            .total_cmp(&b.omega_ideal)
            .then(a.m.cmp(&b.m))
    });
    Ok(modes)
}

/// A mode's frequency as a given scheme should exhibit it.
#[derive(Clone, Copy, Debug)]
pub struct ModePrediction {
    pub m: u32,
    pub n: u32,
    pub multiplicity: u32,
    /// Ideal frequency of the mode.
    pub omega_ideal: f64,
    /// Frequency in the scheme's own sample domain: the mesh dispersion
    /// image of the mode's `k`, pulled through the warp inverse for warped
    /// schemes (warped simulations exhibit pre-realignment frequencies).
    pub omega_predicted: f64,
}

/// Maps ideal modes to the frequencies `scheme` should exhibit.
pub fn predicted_modes(
    modes: &[ModeEntry],
    scheme: Scheme,
    alpha: Option<f64>,
) -> Result<Vec<ModePrediction>> {
    let spec = match (scheme.is_warped(), alpha) {
        (true, Some(a)) => Some(AllpassSpec::new(a)?),
        (false, None) => None,
        _ => {
            return Err(Error::AlphaMismatch {
                scheme,
                expectation: if scheme.is_warped() {
                    "requires"
                } else {
                    "does not take"
                },
            })
        }
    };
    modes
        .iter()
        .map(|mode| {
            let omega_mesh = twm_dispersion_omega(mode.k)?;
            let omega_predicted = match spec {
                Some(spec) => warp_frequency_inverse(omega_mesh, spec)?,
                None => omega_mesh,
            };
            Ok(ModePrediction {
                m: mode.m,
                n: mode.n,
                multiplicity: mode.multiplicity,
                omega_ideal: mode.omega_ideal,
                omega_predicted,
            })
        })
        .collect()
}

/// Magnitude spectrum of a probe signal over `[0, pi]`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    magnitudes: Vec<f64>,
    fft_size: usize,
    signal_len: usize,
}

impl Spectrum {
    /// Magnitudes for bins `0..=fft_size / 2`.
    pub fn bins(&self) -> &[f64] {
        &self.magnitudes
    }

    /// Transform size the spectrum was computed with.
    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    /// Length of the analyzed signal before zero padding.
    pub fn signal_len(&self) -> usize {
        self.signal_len
    }

    /// Angular frequency of a (fractional) bin index.
    pub fn omega_at(&self, bin: f64) -> f64 {
        2.0 * PI * bin / self.fft_size as f64
    }

    #[cfg(test)]
    fn from_parts(magnitudes: Vec<f64>, fft_size: usize, signal_len: usize) -> Spectrum {
        Spectrum {
            magnitudes,
            fft_size,
            signal_len,
        }
    }

    /// Writes the spectrum as CSV with header `omega,magnitude`.
    pub fn write_csv<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "omega,magnitude")?;
        for (i, &m) in self.magnitudes.iter().enumerate() {
            writeln!(w, "{:.8e},{m:.8e}", self.omega_at(i as f64))?;
        }
        Ok(())
    }
}

/// Rectangular-window, zero-padded magnitude spectrum of a probe.
///
/// `fft_size` must be a power of two no smaller than the probe length.
/// Magnitudes are unnormalized (plain forward-transform moduli); peak
/// *positions*, which is what the modal analysis consumes, are unaffected.
pub fn spectrum(probe: &ProbeRecord, fft_size: usize) -> Result<Spectrum> {
    let len = probe.samples.len();
    if !fft_size.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "fft size must be a power of two, got {fft_size}"
        )));
    }
    if fft_size < len {
        return Err(Error::InvalidArgument(format!(
            "fft size {fft_size} is smaller than the signal length {len}"
        )));
    }
    let mut buf: Vec<Complex<f64>> = probe
        .samples
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(fft_size)
        .collect();
    FftPlanner::new().plan_fft_forward(fft_size).process(&mut buf);
    let magnitudes = buf[..=fft_size / 2].iter().map(|c| c.norm()).collect();
    Ok(Spectrum {
        magnitudes,
        fft_size,
        signal_len: len,
    })
}

/// One spectral peak.
#[derive(Clone, Copy, Debug)]
pub struct Peak {
    /// Angular frequency after parabolic refinement.
    pub omega: f64,
    /// Interpolated peak level in dB (relative to the unnormalized
    /// spectrum).
    pub magnitude_db: f64,
    /// Set when another reported peak lies within two pre-padding bins:
    /// near-degenerate pairs are reported separately but flagged, since
    /// their refined positions pull toward each other.
    pub twin: bool,
}

/// Picks local spectral maxima by prominence, refining each position with a
/// log-magnitude parabolic fit. Returns at most `max_count` peaks (the
/// strongest are kept), sorted by frequency.
///
/// A bin qualifies if it is within `min_prominence_db` of the spectrum's
/// global maximum and is the maximum of a neighborhood of 1.5x the
/// zero-padding factor, which suppresses the padding sidelobes.
pub fn find_peaks(spectrum: &Spectrum, min_prominence_db: f64, max_count: usize) -> Vec<Peak> {
    let bins = spectrum.bins();
    if bins.len() < 3 || max_count == 0 {
        return Vec::new();
    }
    let db: Vec<f64> = bins
        .iter()
        .map(|&m| 20.0 * m.max(1e-300).log10())
        .collect();
    let global = db.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let threshold = global - min_prominence_db;
    let oversample = spectrum.fft_size() as f64 / spectrum.signal_len() as f64;
    let half = ((1.5 * oversample).ceil() as usize).max(1);

    let mut peaks = Vec::new();
    for i in 1..db.len() - 1 {
        if db[i] < threshold || db[i] < db[i - 1] || db[i] <= db[i + 1] {
            continue;
        }
        let lo = i.saturating_sub(half);
        let hi = (i + half).min(db.len() - 1);
        if db[lo..=hi].iter().any(|&v| v > db[i]) {
            continue;
        }
        let (ym, y0, yp) = (db[i - 1], db[i], db[i + 1]);
        let denom = ym - 2.0 * y0 + yp;
        let delta = if denom < 0.0 {
            (0.5 * (ym - yp) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        peaks.push(Peak {
            omega: spectrum.omega_at(i as f64 + delta),
            magnitude_db: y0 - 0.25 * (ym - yp) * delta,
            twin: false,
        });
    }

    if peaks.len() > max_count {
        peaks.sort_by(|a, b| b.magnitude_db.total_cmp(&a.magnitude_db));
        peaks.truncate(max_count);
        peaks.sort_by(|a, b| a.omega.total_cmp(&b.omega));
    }

    let twin_radius = 2.0 * 2.0 * PI / spectrum.signal_len() as f64;
    for i in 1..peaks.len() {
        if peaks[i].omega - peaks[i - 1].omega < twin_radius {
            peaks[i].twin = true;
            peaks[i - 1].twin = true;
        }
    }
    peaks
}

/// A predicted mode paired with the measured peak assigned to it.
#[derive(Clone, Copy, Debug)]
pub struct ModeMatch {
    pub m: u32,
    pub n: u32,
    pub multiplicity: u32,
    pub omega_ideal: f64,
    pub omega_predicted: f64,
    /// Absent when no measured peak fell inside the mode's window.
    pub omega_measured: Option<f64>,
    /// `(measured - predicted) / predicted`, when matched.
    pub relative_deviation: Option<f64>,
}

/// Peak-assignment policy for [`match_modes`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatchPolicy {
    /// Assign the candidate closest in frequency.
    Nearest,
    /// Assign the strongest candidate. More robust when weak spurious
    /// responses (e.g. symmetry leakage of a slightly off-center probe)
    /// sit near a true mode.
    StrongestInWindow,
}

/// Assigns measured peaks to predicted modes.
///
/// Each prediction accepts peaks within half the distance to its nearest
/// *distinct* neighbor, where predictions sharing the same `m^2 + n^2` ring
/// (degenerate or near-degenerate ideal frequency) do not count as
/// distinct; such groups may legitimately share one merged measured peak.
/// Unmatched predictions are reported with absent measurements.
pub fn match_modes(
    predicted: &[ModePrediction],
    peaks: &[Peak],
    policy: MatchPolicy,
) -> Vec<ModeMatch> {
    let ring = |p: &ModePrediction| p.m as u64 * p.m as u64 + p.n as u64 * p.n as u64;
    predicted
        .iter()
        .map(|pred| {
            let mut window = f64::INFINITY;
            for other in predicted {
                if ring(other) != ring(pred) {
                    let gap = (other.omega_predicted - pred.omega_predicted).abs();
                    window = window.min(0.5 * gap);
                }
            }
            let candidates = peaks
                .iter()
                .filter(|p| (p.omega - pred.omega_predicted).abs() <= window);
            let best = match policy {
                MatchPolicy::Nearest => candidates.min_by(|a, b| {
                    (a.omega - pred.omega_predicted)
                        .abs()
                        .total_cmp(&(b.omega - pred.omega_predicted).abs())
                }),
                MatchPolicy::StrongestInWindow => {
                    candidates.max_by(|a, b| a.magnitude_db.total_cmp(&b.magnitude_db))
                }
            };
            ModeMatch {
                m: pred.m,
                n: pred.n,
                multiplicity: pred.multiplicity,
                omega_ideal: pred.omega_ideal,
                omega_predicted: pred.omega_predicted,
                omega_measured: best.map(|p| p.omega),
                relative_deviation: best
                    .map(|p| (p.omega - pred.omega_predicted) / pred.omega_predicted),
            }
        })
        .collect()
}

/// Writes a mode table as CSV with header
/// `m,n,omega_ideal,omega_predicted,omega_measured,relative_deviation`;
/// unmatched rows leave the last two fields empty.
pub fn write_mode_table_csv<W: io::Write>(matches: &[ModeMatch], mut w: W) -> io::Result<()> {
    writeln!(
        w,
        "m,n,omega_ideal,omega_predicted,omega_measured,relative_deviation"
    )?;
    for mm in matches {
        write!(
            w,
            "{},{},{:.8e},{:.8e}",
            mm.m, mm.n, mm.omega_ideal, mm.omega_predicted
        )?;
        match (mm.omega_measured, mm.relative_deviation) {
            (Some(measured), Some(dev)) => writeln!(w, ",{measured:.8e},{dev:.8e}")?,
            _ => writeln!(w, ",,")?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_square_lattice;
    use crate::sim::run_impulse_response;

    fn spec(alpha: f64) -> AllpassSpec {
        AllpassSpec::new(alpha).unwrap()
    }

    #[test]
    fn band_edge_constants() {
        assert!((spatial_band_edge() - 3.6275987284684357).abs() < 1e-15);
        let edge = SpatialFrequency::new(spatial_band_edge(), 0.0);
        let omega = twm_dispersion_omega(edge).unwrap();
        assert!((omega - 2.043334183058418).abs() < 1e-12);
        let ratio = omega / nominal_frequency(edge);
        assert!((ratio - 0.7965905631910376).abs() < 1e-12);
    }

    #[test]
    fn long_waves_propagate_at_nominal_speed() {
        for angle in [0.0, 0.3, PI / 6.0] {
            let k = SpatialFrequency::from_polar(1e-3, angle);
            let ratio = twm_dispersion_omega(k).unwrap() / nominal_frequency(k);
            assert!((ratio - 1.0).abs() < 1e-7);
        }
    }

    #[test]
    fn non_finite_spatial_frequency_is_rejected() {
        assert!(twm_dispersion_omega(SpatialFrequency::new(f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn unwarped_curve_sags_monotonically_along_the_axis() {
        let curve = dispersion_curve(Scheme::Twm, 0.0, 512).unwrap();
        assert_eq!(curve.points.len(), 512);
        assert!((curve.points[0].1 - 1.0).abs() < 1e-6);
        for w in curve.points.windows(2) {
            assert!(w[1].1 < w[0].1);
        }
        let last = curve.points.last().unwrap();
        assert!((last.0 - nominal_band_edge()).abs() < 1e-12);
        assert!((last.1 - 0.7965905631910376).abs() < 1e-12);
    }

    #[test]
    fn warped_curve_with_zero_coefficient_matches_unwarped() {
        let plain = dispersion_curve(Scheme::Fds, 0.1, 128).unwrap();
        let warped = warped_dispersion_curve(spec(0.0), 0.1, 128).unwrap();
        for (a, b) in plain.points.iter().zip(&warped.points) {
            assert!((a.0 - b.0).abs() < 1e-12);
            assert!((a.1 - b.1).abs() < 1e-12);
        }
    }

    #[test]
    fn warped_curve_frozen_shape() {
        let curve = warped_dispersion_curve(spec(-0.45), 0.0, 512).unwrap();
        // Three-quarters into the band the realigned ratio has sagged to
        // about 0.9785 (a 2.15% deviation).
        let (omega, ratio) = curve.points[383];
        assert!((omega - 0.75 * nominal_band_edge()).abs() < 1e-12);
        assert!((ratio - 0.978512348).abs() < 1e-6);
        // The curve bulges slightly above 1 in the mid band before sagging
        // (grid maximum at this sampling; the continuum peak is a hair
        // higher).
        let max = curve.points.iter().fold(0.0f64, |m, p| m.max(p.1));
        assert!((max - 1.0035183955483788).abs() < 1e-9);
        // Band-edge value.
        assert!((curve.points.last().unwrap().1 - 0.8898683).abs() < 1e-6);
    }

    #[test]
    fn warped_two_percent_corridor_ends_near_74_percent() {
        let curve = warped_dispersion_curve(spec(-0.45), 0.0, 4096).unwrap();
        let edge = nominal_band_edge();
        let first_bad = curve
            .points
            .iter()
            .find(|(_, ratio)| (ratio - 1.0).abs() >= 0.02)
            .expect("the corridor is finite");
        let fraction = first_bad.0 / edge;
        assert!((fraction - 0.7422302390962274).abs() < 1e-3, "{fraction}");
        // Factual shape: every point below 70% of the band is inside 2%,
        // and the point at 75% is outside.
        for &(omega, ratio) in &curve.points {
            if omega <= 0.70 * edge {
                assert!((ratio - 1.0).abs() < 0.02);
            }
        }
        let at_75 = curve.points[3071];
        assert!((at_75.0 - 0.75 * edge).abs() < 1e-12);
        assert!((at_75.1 - 1.0).abs() > 0.02);
    }

    #[test]
    fn stronger_warping_overshoots_more() {
        let curve = warped_dispersion_curve(spec(-0.9), 0.0, 512).unwrap();
        let max = curve.points.iter().fold(0.0f64, |m, p| m.max(p.1));
        assert!((max - 1.1692909293334233).abs() < 1e-9);
    }

    #[test]
    fn dc_realignment_values() {
        assert!((dc_realignment(spec(0.0)) - 2.0).abs() < 1e-15);
        assert!((dc_realignment(spec(-0.45)) - 3.6363636363636362).abs() < 1e-15);
    }

    #[test]
    fn curve_argument_validation() {
        assert!(dispersion_curve(Scheme::Wtwm, 0.0, 16).is_err());
        assert!(dispersion_curve(Scheme::Twm, 0.0, 1).is_err());
    }

    #[test]
    fn theoretical_modes_enumerate_odd_pairs() {
        let modes = theoretical_modes(24, nominal_band_edge()).unwrap();
        assert!((modes[0].omega_ideal - PI / 24.0).abs() < 1e-15);
        assert_eq!((modes[0].m, modes[0].n, modes[0].multiplicity), (1, 1, 1));
        assert_eq!((modes[1].m, modes[1].n, modes[1].multiplicity), (1, 3, 2));
        for mode in &modes {
            assert_eq!(mode.m % 2, 1);
            assert_eq!(mode.n % 2, 1);
            assert!(mode.m <= mode.n);
            assert!(mode.omega_ideal <= nominal_band_edge());
        }
        for w in modes.windows(2) {
            assert!(w[0].omega_ideal <= w[1].omega_ideal);
        }
        // The (1,7)/(5,5) ring shares one ideal frequency but stays listed
        // as two distinct mode shapes.
        assert!(modes.iter().any(|m| (m.m, m.n) == (1, 7)));
        assert!(modes.iter().any(|m| (m.m, m.n) == (5, 5)));
        assert!(theoretical_modes(1, 1.0).is_err());
        assert!(theoretical_modes(24, -1.0).is_err());
    }

    #[test]
    fn predictions_follow_the_dispersion_curve() {
        let modes = theoretical_modes(24, 1.0).unwrap();
        let preds = predicted_modes(&modes, Scheme::Twm, None).unwrap();
        for (mode, pred) in modes.iter().zip(&preds) {
            let expected = twm_dispersion_omega(mode.k).unwrap();
            assert!((pred.omega_predicted - expected).abs() < 1e-15);
            // predicted / ideal equals the speed ratio at this k.
            let ratio = pred.omega_predicted / pred.omega_ideal;
            let curve_ratio = expected / nominal_frequency(mode.k);
            assert!((ratio - curve_ratio).abs() < 1e-12);
        }
        let warped = predicted_modes(&modes, Scheme::Wtwm, Some(-0.45)).unwrap();
        let rho = dc_realignment(spec(-0.45));
        for (mode, pred) in modes.iter().zip(&warped) {
            // Realigned prediction stays within a few percent of ideal deep
            // into the band.
            let aligned = rho * pred.omega_predicted / mode.omega_ideal;
            assert!((aligned - 1.0).abs() < 0.03, "({},{})", mode.m, mode.n);
        }
        assert!(predicted_modes(&modes, Scheme::Twm, Some(-0.45)).is_err());
        assert!(predicted_modes(&modes, Scheme::Wfds, None).is_err());
    }

    #[test]
    fn warped_fundamental_prediction_is_frozen() {
        let modes = theoretical_modes(24, 0.2).unwrap();
        let preds = predicted_modes(&modes, Scheme::Wtwm, Some(-0.45)).unwrap();
        assert!((preds[0].omega_predicted - 0.03600130308938128).abs() < 1e-9);
    }

    #[test]
    fn spectrum_satisfies_parseval() {
        let lat = build_square_lattice(6).unwrap();
        let probe =
            run_impulse_response(&lat, Scheme::Fds, None, 256, lat.center(), lat.center()).unwrap();
        let spec = spectrum(&probe, 1024).unwrap();
        let time_energy: f64 = probe.samples.iter().map(|v| v * v).sum();
        let n = spec.fft_size() as f64;
        let bins = spec.bins();
        let mut freq_energy = bins[0] * bins[0] + bins[512] * bins[512];
        for &m in &bins[1..512] {
            freq_energy += 2.0 * m * m;
        }
        freq_energy /= n;
        assert!((freq_energy / time_energy - 1.0).abs() < 1e-9);
    }

    #[test]
    fn spectrum_argument_validation() {
        let lat = build_square_lattice(6).unwrap();
        let probe =
            run_impulse_response(&lat, Scheme::Fds, None, 100, lat.center(), lat.center()).unwrap();
        assert!(spectrum(&probe, 100).is_err());
        assert!(spectrum(&probe, 64).is_err());
        assert!(spectrum(&probe, 128).is_ok());
    }

    #[test]
    fn peaks_of_a_two_tone_signal() {
        let (w1, w2, len) = (0.5, 0.9, 4096);
        let samples: Vec<f64> = (0..len)
            .map(|n| {
                let t = n as f64;
                (w1 * t).sin() + 0.5 * (w2 * t).sin()
            })
            .collect();
        let probe = ProbeRecord {
            junction: build_square_lattice(2).unwrap().center(),
            scheme: Scheme::Fds,
            alpha: None,
            samples,
        };
        let spec = spectrum(&probe, 16384).unwrap();
        let peaks = find_peaks(&spec, 20.0, 16);
        assert_eq!(peaks.len(), 2);
        assert!((peaks[0].omega - w1).abs() < 1e-3);
        assert!((peaks[1].omega - w2).abs() < 1e-3);
        assert!(peaks[0].magnitude_db > peaks[1].magnitude_db);
        assert!(!peaks[0].twin && !peaks[1].twin);
        // A tight floor keeps only the stronger tone.
        let strict = find_peaks(&spec, 4.0, 16);
        assert_eq!(strict.len(), 1);
        // max_count keeps the strongest peaks.
        let only_one = find_peaks(&spec, 20.0, 1);
        assert_eq!(only_one.len(), 1);
        assert!((only_one[0].omega - w1).abs() < 1e-3);
    }

    #[test]
    fn nearly_coincident_peaks_are_flagged_as_twins() {
        // Synthetic spectrum: two equal bumps 1.5 pre-padding bins apart
        // (6 padded bins at 4x oversampling).
        let mut mags = vec![1.0; 513];
        for (center, height) in [(100usize, 1000.0), (106, 1000.0)] {
            mags[center - 1] = height / 2.0;
            mags[center] = height;
            mags[center + 1] = height / 2.0;
        }
        let spec = Spectrum::from_parts(mags, 1024, 256);
        let peaks = find_peaks(&spec, 30.0, 8);
        assert_eq!(peaks.len(), 2);
        assert!(peaks[0].twin && peaks[1].twin);
    }

    fn pred(m: u32, n: u32, omega: f64) -> ModePrediction {
        ModePrediction {
            m,
            n,
            multiplicity: if m == n { 1 } else { 2 },
            omega_ideal: omega,
            omega_predicted: omega,
        }
    }

    fn peak(omega: f64, db: f64) -> Peak {
        Peak {
            omega,
            magnitude_db: db,
            twin: false,
        }
    }

    #[test]
    fn nearest_matching_respects_windows() {
        let preds = [pred(1, 1, 1.0), pred(1, 3, 1.5)];
        let peaks = [peak(0.98, -3.0), peak(1.52, -10.0), peak(5.0, 0.0)];
        let matches = match_modes(&preds, &peaks, MatchPolicy::Nearest);
        assert!((matches[0].omega_measured.unwrap() - 0.98).abs() < 1e-15);
        assert!((matches[1].omega_measured.unwrap() - 1.52).abs() < 1e-15);
        assert!((matches[0].relative_deviation.unwrap() + 0.02).abs() < 1e-12);

        // A peak outside every window stays unassigned, and a prediction
        // with no candidate reports absence.
        let lonely = [pred(1, 1, 1.0), pred(1, 3, 3.0)];
        let matches = match_modes(&lonely, &[peak(5.0, 0.0)], MatchPolicy::Nearest);
        assert!(matches[0].omega_measured.is_none());
        assert!(matches[1].omega_measured.is_none());
    }

    #[test]
    fn strongest_policy_prefers_louder_candidates() {
        let preds = [pred(1, 1, 1.0), pred(1, 3, 2.0)];
        let peaks = [peak(0.99, -10.0), peak(1.01, -3.0)];
        let nearest = match_modes(&preds, &peaks, MatchPolicy::Nearest);
        assert!((nearest[0].omega_measured.unwrap() - 0.99).abs() < 1e-15);
        let strongest = match_modes(&preds, &peaks, MatchPolicy::StrongestInWindow);
        assert!((strongest[0].omega_measured.unwrap() - 1.01).abs() < 1e-15);
    }

    #[test]
    fn degenerate_rings_share_a_merged_peak() {
        // (1,7) and (5,5) share m^2 + n^2 = 50: same ideal frequency,
        // near-identical predictions. Their mutual gap must not shrink the
        // windows, and both may claim the single merged peak.
        let preds = [pred(1, 7, 1.0), pred(5, 5, 1.0002), pred(3, 7, 1.4)];
        let peaks = [peak(1.01, -3.0), peak(1.41, -5.0)];
        let matches = match_modes(&preds, &peaks, MatchPolicy::StrongestInWindow);
        assert!((matches[0].omega_measured.unwrap() - 1.01).abs() < 1e-15);
        assert!((matches[1].omega_measured.unwrap() - 1.01).abs() < 1e-15);
        assert!((matches[2].omega_measured.unwrap() - 1.41).abs() < 1e-15);
    }

    #[test]
    fn mode_table_csv_format() {
        let matches = [
            ModeMatch {
                m: 1,
                n: 1,
                multiplicity: 1,
                omega_ideal: 0.5,
                omega_predicted: 0.25,
                omega_measured: Some(0.26),
                relative_deviation: Some(0.04),
            },
            ModeMatch {
                m: 1,
                n: 3,
                multiplicity: 2,
                omega_ideal: 0.75,
                omega_predicted: 0.7,
                omega_measured: None,
                relative_deviation: None,
            },
        ];
        let mut buf = Vec::new();
        write_mode_table_csv(&matches, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "m,n,omega_ideal,omega_predicted,omega_measured,relative_deviation\n\
             1,1,5.00000000e-1,2.50000000e-1,2.60000000e-1,4.00000000e-2\n\
             1,3,7.50000000e-1,7.00000000e-1,,\n"
        );
    }
}
