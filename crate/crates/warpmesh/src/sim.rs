//! Time steppers for the triangular mesh in its four update schemes.
//!
//! # Schemes
//!
//! Two formulations of the same lossless wave propagation, each in an
//! unwarped and a warped variant:
//!
//! - [`Scheme::Twm`]: six-port wave scattering. Each junction holds the six
//!   incoming wave components; its pressure is one third of their sum, and
//!   the wave reflected back through each port is the pressure minus the
//!   incoming component. Rim junctions reflect with sign inversion
//!   (clamped boundary).
//! - [`Scheme::Fds`]: the equivalent finite-difference form on junction
//!   pressures, `p_next = (sum of neighbors) / 3 - p_prev`, rim pinned to
//!   zero. One third the state and roughly half the arithmetic of
//!   scattering, with identical dynamics.
//! - [`Scheme::Wtwm`] / [`Scheme::Wfds`]: the same two update rules with
//!   every unit delay replaced by a warped delay (a first-order allpass
//!   cascaded with a unit delay, see [`crate::warp`]). Warping stretches
//!   the frequency axis online and doubles the latency per hop, so warped
//!   runs are typically clocked at a higher sample rate.
//!
//! # Stepping and determinism
//!
//! Updates are pull-based and two-phase: a gather phase computes per-
//! junction values from the previous state, a propagation phase writes each
//! junction's next state reading only gather results. Every output slot is
//! owned by exactly one junction, so with the `parallel` feature the phases
//! distribute over rayon without changing a single bit of the result; the
//! `*_sequential` entry points run the identical kernels on one thread.
//!
//! # Probe conventions
//!
//! [`run_impulse_response`] applies a unit impulse at time 0 and records
//! the output junction's signal at times `0..steps`. Sample 0 equals the
//! excitation amplitude at the excited junction for every scheme.

use std::fmt;
use std::io;
use std::str::FromStr;

use crate::kernel;
use crate::lattice::{opposite_port, JunctionId, TriangularLattice, PORT_COUNT};
use crate::warp::AllpassSpec;
use crate::{Error, Result};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// The four mesh update schemes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Unwarped wave scattering.
    Twm,
    /// Warped wave scattering.
    Wtwm,
    /// Unwarped finite-difference form.
    Fds,
    /// Warped finite-difference form.
    Wfds,
}

impl Scheme {
    /// Whether the scheme substitutes warped delays for unit delays.
    pub fn is_warped(self) -> bool {
        matches!(self, Scheme::Wtwm | Scheme::Wfds)
    }

    /// Whether the scheme propagates scattered wave components (as opposed
    /// to junction pressures).
    pub fn is_scattering(self) -> bool {
        matches!(self, Scheme::Twm | Scheme::Wtwm)
    }

    /// All schemes, scattering forms first.
    pub const ALL: [Scheme; 4] = [Scheme::Twm, Scheme::Wtwm, Scheme::Fds, Scheme::Wfds];
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Scheme::Twm => "twm",
            Scheme::Wtwm => "wtwm",
            Scheme::Fds => "fds",
            Scheme::Wfds => "wfds",
        };
        f.write_str(name)
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        for scheme in Scheme::ALL {
            if s.eq_ignore_ascii_case(&scheme.to_string()) {
                return Ok(scheme);
            }
        }
        Err(Error::InvalidArgument(format!(
            "unknown scheme '{s}' (expected twm, wtwm, fds, or wfds)"
        )))
    }
}

/// Wave-scattering state: per-junction incoming wave components, plus one
/// allpass state word per receiving port when warped.
struct ScatteringMesh {
    incoming: Vec<[f64; PORT_COUNT]>,
    incoming_next: Vec<[f64; PORT_COUNT]>,
    pressure: Vec<f64>,
    port_filters: Option<Vec<[f64; PORT_COUNT]>>,
}

/// Finite-difference state: current and previous pressure plus a scratch
/// buffer for the next values.
struct DifferenceMesh {
    now: Vec<f64>,
    prev: Vec<f64>,
    next: Vec<f64>,
}

/// Warped finite-difference state: pressure, its warped-delayed copy, and
/// the two allpass state words per junction, plus gather/scratch buffers.
struct WarpedDifferenceMesh {
    pressure: Vec<f64>,
    delayed: Vec<f64>,
    s_pressure: Vec<f64>,
    s_delayed: Vec<f64>,
    ap_pressure: Vec<f64>,
    ap_delayed: Vec<f64>,
    next: Vec<f64>,
}

enum StateKind {
    Scattering(ScatteringMesh),
    Difference(DifferenceMesh),
    WarpedDifference(WarpedDifferenceMesh),
}

/// Full dynamic state of a mesh simulation.
pub struct MeshState {
    scheme: Scheme,
    spec: Option<AllpassSpec>,
    step_count: u64,
    kind: StateKind,
}

impl MeshState {
    /// Allocates the rest state for `scheme` on `lattice`.
    ///
    /// Warped schemes require an allpass spec; unwarped schemes reject one.
    pub fn new(
        lattice: &TriangularLattice,
        scheme: Scheme,
        spec: Option<AllpassSpec>,
    ) -> Result<MeshState> {
        match (scheme.is_warped(), spec.is_some()) {
            (true, false) => {
                return Err(Error::AlphaMismatch {
                    scheme,
                    expectation: "requires",
                })
            }
            (false, true) => {
                return Err(Error::AlphaMismatch {
                    scheme,
                    expectation: "does not take",
                })
            }
            _ => {}
        }
        let n = lattice.num_junctions();
        let kind = match scheme {
            Scheme::Twm | Scheme::Wtwm => StateKind::Scattering(ScatteringMesh {
                incoming: vec![[0.0; PORT_COUNT]; n],
                incoming_next: vec![[0.0; PORT_COUNT]; n],
                pressure: vec![0.0; n],
                port_filters: scheme.is_warped().then(|| vec![[0.0; PORT_COUNT]; n]),
            }),
            Scheme::Fds => StateKind::Difference(DifferenceMesh {
                now: vec![0.0; n],
                prev: vec![0.0; n],
                next: vec![0.0; n],
            }),
            Scheme::Wfds => StateKind::WarpedDifference(WarpedDifferenceMesh {
                pressure: vec![0.0; n],
                delayed: vec![0.0; n],
                s_pressure: vec![0.0; n],
                s_delayed: vec![0.0; n],
                ap_pressure: vec![0.0; n],
                ap_delayed: vec![0.0; n],
                next: vec![0.0; n],
            }),
        };
        Ok(MeshState {
            scheme,
            spec,
            step_count: 0,
            kind,
        })
    }

    /// Scheme this state was built for.
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Allpass coefficient, for warped schemes.
    pub fn alpha(&self) -> Option<f64> {
        self.spec.map(AllpassSpec::alpha)
    }

    /// Number of completed steps.
    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Number of junctions the state covers.
    pub fn num_junctions(&self) -> usize {
        match &self.kind {
            StateKind::Scattering(m) => m.pressure.len(),
            StateKind::Difference(m) => m.now.len(),
            StateKind::WarpedDifference(m) => m.pressure.len(),
        }
    }

    /// Current junction signal: the pressure for difference forms, or the
    /// pressure computed during the most recent step for scattering forms
    /// (zero before the first step).
    ///
    /// Panics if `j` is out of range for the underlying lattice.
    pub fn junction_signal(&self, j: JunctionId) -> f64 {
        match &self.kind {
            StateKind::Scattering(m) => m.pressure[j.index()],
            StateKind::Difference(m) => m.now[j.index()],
            StateKind::WarpedDifference(m) => m.pressure[j.index()],
        }
    }

    fn check_lattice(&self, lattice: &TriangularLattice) -> Result<()> {
        if lattice.num_junctions() == self.num_junctions() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "state holds {} junctions but the lattice has {}",
                self.num_junctions(),
                lattice.num_junctions()
            )))
        }
    }
}

/// Adds an impulse of the given amplitude at an interior junction.
///
/// For scattering schemes the amplitude is split equally over the six
/// incoming components, so the junction pressure of the next step equals
/// the full amplitude. For difference forms the pressure is set directly
/// and the interior neighbors' history terms receive `amplitude / 6`, which
/// reproduces the scattering excitation exactly: the equal-split wave
/// pattern is not a pure pressure state, and without the history correction
/// the two formulations diverge from the very first step.
pub fn excite_impulse(
    lattice: &TriangularLattice,
    state: &mut MeshState,
    j: JunctionId,
    amplitude: f64,
) -> Result<()> {
    state.check_lattice(lattice)?;
    lattice.junction(j.index())?;
    if lattice.is_rim(j) {
        return Err(Error::RimJunction(j.index()));
    }
    let share = amplitude / 6.0;
    match &mut state.kind {
        StateKind::Scattering(m) => {
            for d in 0..PORT_COUNT {
                m.incoming[j.index()][d] += amplitude / 2.0;
            }
        }
        StateKind::Difference(m) => {
            m.now[j.index()] += amplitude;
            for d in 0..PORT_COUNT {
                if let Some(i) = lattice.neighbor(j, d) {
                    if !lattice.is_rim(i) {
                        m.prev[i.index()] += share;
                    }
                }
            }
        }
        StateKind::WarpedDifference(m) => {
            m.pressure[j.index()] += amplitude;
            for d in 0..PORT_COUNT {
                if let Some(i) = lattice.neighbor(j, d) {
                    if !lattice.is_rim(i) {
                        m.delayed[i.index()] += share;
                    }
                }
            }
        }
    }
    Ok(())
}

/// Runs one elementwise pass over `items`, parallel when requested and the
/// `parallel` feature is enabled, sequential otherwise. Each closure call
/// owns exactly one output slot, so both paths produce identical bits.
fn for_each_slot<T, F>(parallel: bool, items: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        items
            .par_iter_mut()
            .with_min_len(64)
            .enumerate()
            .for_each(|(j, t)| f(j, t));
        return;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = parallel;
    for (j, t) in items.iter_mut().enumerate() {
        f(j, t);
    }
}

/// Like [`for_each_slot`] over two equal-length slices.
fn for_each_slot2<A, B, F>(parallel: bool, a: &mut [A], b: &mut [B], f: F)
where
    A: Send,
    B: Send,
    F: Fn(usize, &mut A, &mut B) + Sync + Send,
{
    debug_assert_eq!(a.len(), b.len());
    #[cfg(feature = "parallel")]
    if parallel {
        a.par_iter_mut()
            .zip(b.par_iter_mut())
            .with_min_len(64)
            .enumerate()
            .for_each(|(j, (a, b))| f(j, a, b));
        return;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = parallel;
    for (j, (a, b)) in a.iter_mut().zip(b.iter_mut()).enumerate() {
        f(j, a, b);
    }
}

/// Like [`for_each_slot`] over four equal-length slices.
#[allow(clippy::type_complexity)]
fn for_each_slot4<F>(
    parallel: bool,
    a: &mut [f64],
    b: &mut [f64],
    c: &mut [f64],
    d: &mut [f64],
    f: F,
) where
    F: Fn(usize, &mut f64, &mut f64, &mut f64, &mut f64) + Sync + Send,
{
    debug_assert!(a.len() == b.len() && b.len() == c.len() && c.len() == d.len());
    #[cfg(feature = "parallel")]
    if parallel {
        a.par_iter_mut()
            .zip(b.par_iter_mut())
            .zip(c.par_iter_mut())
            .zip(d.par_iter_mut())
            .with_min_len(64)
            .enumerate()
            .for_each(|(j, (((a, b), c), d))| f(j, a, b, c, d));
        return;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = parallel;
    for (j, (((a, b), c), d)) in a
        .iter_mut()
        .zip(b.iter_mut())
        .zip(c.iter_mut())
        .zip(d.iter_mut())
        .enumerate()
    {
        f(j, a, b, c, d);
    }
}

/// Advances a scattering-form state (`twm` or `wtwm`) by one step.
pub fn scatter_step(lattice: &TriangularLattice, state: &mut MeshState) -> Result<()> {
    scatter_impl(lattice, state, true)
}

/// Sequential variant of [`scatter_step`]; bit-identical results.
pub fn scatter_step_sequential(lattice: &TriangularLattice, state: &mut MeshState) -> Result<()> {
    scatter_impl(lattice, state, false)
}

fn scatter_impl(lattice: &TriangularLattice, state: &mut MeshState, parallel: bool) -> Result<()> {
    state.check_lattice(lattice)?;
    let scheme = state.scheme;
    let alpha = state.spec.map(AllpassSpec::alpha);
    let StateKind::Scattering(mesh) = &mut state.kind else {
        return Err(Error::SchemeMismatch {
            actual: scheme,
            required: "a scattering form (twm or wtwm)",
        });
    };

    let rim = lattice.rim_flags();
    let ports = lattice.ports();

    // Gather: junction pressure from the six incoming components. Rim
    // junctions are clamped at zero pressure, which makes the propagation
    // phase below uniform: a pull from a rim neighbor reduces to the pure
    // sign-inverting reflection.
    {
        let incoming = &mesh.incoming;
        for_each_slot(parallel, &mut mesh.pressure, |j, v| {
            *v = if rim[j] {
                0.0
            } else {
                kernel::junction_pressure(&incoming[j])
            };
        });
    }

    // Propagate: each junction pulls, through every populated port, the
    // wave its neighbor scatters back: the neighbor's pressure minus the
    // component previously sent to it. Warped forms pass the pulled wave
    // through the receiving port's allpass; together with the one-step
    // transport delay this realizes the warped delay on every edge,
    // including the rim-reflection edges.
    {
        let incoming = &mesh.incoming;
        let pressure = &mesh.pressure;
        let pull = |j: usize, d: usize| -> f64 {
            match ports[j][d] {
                Some(i) => pressure[i.index()] - incoming[i.index()][opposite_port(d)],
                None => 0.0,
            }
        };
        match (&mut mesh.port_filters, alpha) {
            (None, _) => {
                for_each_slot(parallel, &mut mesh.incoming_next, |j, next| {
                    for (d, slot) in next.iter_mut().enumerate() {
                        *slot = pull(j, d);
                    }
                });
            }
            (Some(filters), Some(alpha)) => {
                for_each_slot2(
                    parallel,
                    &mut mesh.incoming_next,
                    filters,
                    |j, next, states| {
                        for d in 0..PORT_COUNT {
                            next[d] = if ports[j][d].is_some() {
                                kernel::allpass(alpha, &mut states[d], pull(j, d))
                            } else {
                                0.0
                            };
                        }
                    },
                );
            }
            (Some(_), None) => unreachable!("warped state without a spec"),
        }
    }

    std::mem::swap(&mut mesh.incoming, &mut mesh.incoming_next);
    state.step_count += 1;
    Ok(())
}

/// Advances a finite-difference-form state (`fds` or `wfds`) by one step.
pub fn fds_step(lattice: &TriangularLattice, state: &mut MeshState) -> Result<()> {
    fds_impl(lattice, state, true)
}

/// Sequential variant of [`fds_step`]; bit-identical results.
pub fn fds_step_sequential(lattice: &TriangularLattice, state: &mut MeshState) -> Result<()> {
    fds_impl(lattice, state, false)
}

fn fds_impl(lattice: &TriangularLattice, state: &mut MeshState, parallel: bool) -> Result<()> {
    state.check_lattice(lattice)?;
    let scheme = state.scheme;
    let alpha = state.spec.map(AllpassSpec::alpha);
    let rim = lattice.rim_flags();
    let ports = lattice.ports();

    match &mut state.kind {
        StateKind::Difference(mesh) => {
            let now = &mesh.now;
            let prev = &mesh.prev;
            for_each_slot(parallel, &mut mesh.next, |j, out| {
                *out = if rim[j] {
                    0.0
                } else {
                    let nbrs =
                        std::array::from_fn(|d| ports[j][d].map_or(0.0, |i| now[i.index()]));
                    kernel::step_pressure(&nbrs, prev[j])
                };
            });
            std::mem::swap(&mut mesh.prev, &mut mesh.now);
            std::mem::swap(&mut mesh.now, &mut mesh.next);
        }
        StateKind::WarpedDifference(mesh) => {
            let alpha = alpha.expect("warped state always carries a spec");
            // Filter: run each junction's pressure and delayed-pressure
            // words through their allpasses. These outputs, one step later,
            // are the warped-delayed signals entering the update rule.
            {
                let pressure = &mesh.pressure;
                let delayed = &mesh.delayed;
                for_each_slot4(
                    parallel,
                    &mut mesh.ap_pressure,
                    &mut mesh.ap_delayed,
                    &mut mesh.s_pressure,
                    &mut mesh.s_delayed,
                    |j, ap_p, ap_d, s_p, s_d| {
                        if rim[j] {
                            *ap_p = 0.0;
                            *ap_d = 0.0;
                        } else {
                            *ap_p = kernel::allpass(alpha, s_p, pressure[j]);
                            *ap_d = kernel::allpass(alpha, s_d, delayed[j]);
                        }
                    },
                );
            }
            // Combine: same junction rule as the unwarped form, with the
            // neighbors' filtered pressures for the neighbor sum and the
            // filtered delayed pressure (a full warped delay squared, once
            // transport is included) for the history term.
            {
                let ap_pressure = &mesh.ap_pressure;
                let ap_delayed = &mesh.ap_delayed;
                for_each_slot(parallel, &mut mesh.next, |j, out| {
                    *out = if rim[j] {
                        0.0
                    } else {
                        let nbrs = std::array::from_fn(|d| {
                            ports[j][d].map_or(0.0, |i| ap_pressure[i.index()])
                        });
                        kernel::step_pressure(&nbrs, ap_delayed[j])
                    };
                });
            }
            std::mem::swap(&mut mesh.delayed, &mut mesh.ap_pressure);
            std::mem::swap(&mut mesh.pressure, &mut mesh.next);
        }
        StateKind::Scattering(_) => {
            return Err(Error::SchemeMismatch {
                actual: scheme,
                required: "a finite-difference form (fds or wfds)",
            });
        }
    }
    state.step_count += 1;
    Ok(())
}

/// Advances any state by one step, dispatching on its scheme family.
pub fn step(lattice: &TriangularLattice, state: &mut MeshState) -> Result<()> {
    if state.scheme.is_scattering() {
        scatter_step(lattice, state)
    } else {
        fds_step(lattice, state)
    }
}

/// Sequential variant of [`step`]; bit-identical results.
pub fn step_sequential(lattice: &TriangularLattice, state: &mut MeshState) -> Result<()> {
    if state.scheme.is_scattering() {
        scatter_step_sequential(lattice, state)
    } else {
        fds_step_sequential(lattice, state)
    }
}

/// Captured junction signal of one simulation run.
#[derive(Clone, Debug)]
pub struct ProbeRecord {
    /// Junction the samples were read from.
    pub junction: JunctionId,
    /// Scheme that produced the samples.
    pub scheme: Scheme,
    /// Allpass coefficient for warped schemes.
    pub alpha: Option<f64>,
    /// Junction signal at times `0..steps`.
    pub samples: Vec<f64>,
}

impl ProbeRecord {
    /// Writes the probe as CSV with header `step,value`.
    pub fn write_csv<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "step,value")?;
        for (n, v) in self.samples.iter().enumerate() {
            writeln!(w, "{n},{v:.8e}")?;
        }
        Ok(())
    }
}

/// Excites a unit impulse at `input` and records `output`'s junction signal
/// for `steps` steps.
///
/// `alpha` must be given exactly for the warped schemes. Sample `n` is the
/// signal at time `n`: difference forms read the pressure before each step,
/// scattering forms read the pressure materialized during the step, which
/// lines both timelines up with sample 0 equal to the impulse amplitude at
/// the excited junction.
pub fn run_impulse_response(
    lattice: &TriangularLattice,
    scheme: Scheme,
    alpha: Option<f64>,
    steps: usize,
    input: JunctionId,
    output: JunctionId,
) -> Result<ProbeRecord> {
    if steps == 0 {
        return Err(Error::InvalidArgument(
            "impulse response needs at least 1 step".into(),
        ));
    }
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
    lattice.junction(output.index())?;
    let mut state = MeshState::new(lattice, scheme, spec)?;
    excite_impulse(lattice, &mut state, input, 1.0)?;

    let mut samples = Vec::with_capacity(steps);
    if scheme.is_scattering() {
        for _ in 0..steps {
            step(lattice, &mut state)?;
            samples.push(state.junction_signal(output));
        }
    } else {
        for _ in 0..steps {
            samples.push(state.junction_signal(output));
            step(lattice, &mut state)?;
        }
    }
    Ok(ProbeRecord {
        junction: output,
        scheme,
        alpha,
        samples,
    })
}
