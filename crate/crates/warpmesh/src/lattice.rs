//! Triangular lattice construction for a square membrane with a clamped rim.
//!
//! # Geometry
//!
//! Junctions sit on a regular triangular grid with unit spacing: rows are
//! `sqrt(3)/2` apart vertically and alternate between two horizontal
//! registrations half a unit apart. A side of `L` sections spans `L` units,
//! so a row holds `L + 1` aligned sites; the number of rows is the closest
//! integer approximation `round(2L / sqrt(3)) + 1` to the same physical
//! height.
//!
//! Offset rows overhang the nominal square by half a unit on both sides
//! (`L + 2` sites). This keeps the staircase of boundary junctions centered
//! on the nominal outline instead of biased inward, so the effective cavity
//! seen by the field stays nearly square; without the overhang the modal
//! frequencies of the two axes drift visibly apart.
//!
//! # Handles and ports
//!
//! Junctions are addressed by dense [`JunctionId`] handles, row-major from
//! the bottom row upward, left to right. Every junction has six directed
//! ports at 60-degree steps, indexed counterclockwise from +x; port `d` and
//! port `(d + 3) % 6` are opposite, so a wave leaving `j` through `d`
//! arrives at the neighbor's port `opposite_port(d)`. Junctions with fewer
//! than six neighbors form the rim and are treated as clamped (zero
//! pressure) by the simulators.

use std::collections::HashMap;
use std::fmt;
use std::io;

use crate::{Error, Result};

/// Number of directed ports per junction.
pub const PORT_COUNT: usize = 6;

/// Neighbor offsets per port in doubled-x / row coordinates, counterclockwise
/// from +x. Doubling x makes both row registrations integral.
const PORT_OFFSETS: [(i64, i64); PORT_COUNT] =
    [(2, 0), (1, 1), (-1, 1), (-2, 0), (-1, -1), (1, -1)];

/// Dense handle for a lattice junction.
///
/// Ids are only meaningful for the lattice that issued them; use
/// [`TriangularLattice::junction`] to validate a raw index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JunctionId(u32);

impl JunctionId {
    /// Position of this junction in the lattice's dense arrays.
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for JunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Port index opposite to `d`: the receiving port for a wave sent through `d`.
#[inline]
pub fn opposite_port(d: usize) -> usize {
    debug_assert!(d < PORT_COUNT);
    (d + 3) % PORT_COUNT
}

/// Unit vector of port `d` (60-degree steps counterclockwise from +x).
pub fn port_direction(d: usize) -> [f64; 2] {
    let angle = std::f64::consts::FRAC_PI_3 * d as f64;
    [angle.cos(), angle.sin()]
}

/// A triangular mesh covering a unit-spaced square of `side_sections`
/// sections per side, with ordered six-port adjacency and a clamped rim.
#[derive(Clone, Debug)]
pub struct TriangularLattice {
    positions: Vec<[f64; 2]>,
    neighbors: Vec<[Option<JunctionId>; PORT_COUNT]>,
    rim: Vec<bool>,
    interior: Vec<JunctionId>,
    side_sections: usize,
    rows: usize,
    center: JunctionId,
}

/// Builds the lattice for a square of `side_sections` sections per side.
///
/// Fails with [`Error::SideTooSmall`] for sides below 2, which would leave
/// no interior junction to simulate.
pub fn build_square_lattice(side_sections: usize) -> Result<TriangularLattice> {
    if side_sections < 2 {
        return Err(Error::SideTooSmall(side_sections));
    }
    let l = side_sections as i64;
    let sqrt3 = 3f64.sqrt();
    let rows = (2.0 * side_sections as f64 / sqrt3).round() as usize + 1;

    // Enumerate sites row-major in doubled-x coordinates. Aligned rows (odd
    // index) run 0..=2L; offset rows (even index, including the bottom row)
    // overhang by one half-unit on each side.
    let mut positions = Vec::new();
    let mut keys = Vec::new();
    let mut key_to_id: HashMap<(i64, i64), JunctionId> = HashMap::new();
    for row in 0..rows as i64 {
        let x2_range = if row % 2 == 1 {
            (0..=2 * l).step_by(2)
        } else {
            (-1..=2 * l + 1).step_by(2)
        };
        for x2 in x2_range {
            let id = JunctionId(positions.len() as u32);
            positions.push([x2 as f64 / 2.0, row as f64 * sqrt3 / 2.0]);
            keys.push((x2, row));
            key_to_id.insert((x2, row), id);
        }
    }

    let neighbors: Vec<[Option<JunctionId>; PORT_COUNT]> = keys
        .iter()
        .map(|&(x2, row)| {
            let mut ports = [None; PORT_COUNT];
            for (d, &(dx2, drow)) in PORT_OFFSETS.iter().enumerate() {
                ports[d] = key_to_id.get(&(x2 + dx2, row + drow)).copied();
            }
            ports
        })
        .collect();

    let rim: Vec<bool> = neighbors
        .iter()
        .map(|ports| ports.iter().any(|p| p.is_none()))
        .collect();
    let interior: Vec<JunctionId> = (0..positions.len() as u32)
        .map(JunctionId)
        .filter(|j| !rim[j.index()])
        .collect();
    if interior.is_empty() {
        return Err(Error::SideTooSmall(side_sections));
    }

    // Center probe: the interior junction closest to the bounding-box
    // centroid. Strict comparison keeps the lowest id on exact ties.
    let (min, max) = bounding_box(&positions);
    let cx = (min[0] + max[0]) / 2.0;
    let cy = (min[1] + max[1]) / 2.0;
    let mut center = interior[0];
    let mut best = f64::INFINITY;
    for &j in &interior {
        let [x, y] = positions[j.index()];
        let d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        if d2 < best {
            best = d2;
            center = j;
        }
    }

    Ok(TriangularLattice {
        positions,
        neighbors,
        rim,
        interior,
        side_sections,
        rows,
        center,
    })
}

fn bounding_box(positions: &[[f64; 2]]) -> ([f64; 2], [f64; 2]) {
    let mut min = [f64::INFINITY; 2];
    let mut max = [f64::NEG_INFINITY; 2];
    for p in positions {
        for axis in 0..2 {
            min[axis] = min[axis].min(p[axis]);
            max[axis] = max[axis].max(p[axis]);
        }
    }
    (min, max)
}

impl TriangularLattice {
    /// Total number of junctions, rim included.
    pub fn num_junctions(&self) -> usize {
        self.positions.len()
    }

    /// Number of interior (non-rim) junctions.
    pub fn num_interior(&self) -> usize {
        self.interior.len()
    }

    /// Number of clamped rim junctions.
    pub fn num_rim(&self) -> usize {
        self.num_junctions() - self.num_interior()
    }

    /// Sections per side this lattice was built for.
    pub fn side_sections(&self) -> usize {
        self.side_sections
    }

    /// Number of junction rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Validates a raw index into a junction handle.
    pub fn junction(&self, index: usize) -> Result<JunctionId> {
        if index < self.num_junctions() {
            Ok(JunctionId(index as u32))
        } else {
            Err(Error::UnknownJunction(index, self.num_junctions()))
        }
    }

    /// Cartesian position of a junction (unit spacing).
    #[inline]
    pub fn position(&self, j: JunctionId) -> [f64; 2] {
        self.positions[j.index()]
    }

    /// Whether the junction lies on the clamped rim.
    #[inline]
    pub fn is_rim(&self, j: JunctionId) -> bool {
        self.rim[j.index()]
    }

    /// Number of populated ports.
    pub fn degree(&self, j: JunctionId) -> usize {
        self.neighbors[j.index()].iter().flatten().count()
    }

    /// Neighbor reached through port `d`, if any.
    #[inline]
    pub fn neighbor(&self, j: JunctionId, d: usize) -> Option<JunctionId> {
        self.neighbors[j.index()][d]
    }

    /// Ordered port table of a junction: entry `d` is the neighbor through
    /// port `d`. Errors on ids from a different (larger) lattice.
    pub fn neighbors(&self, j: JunctionId) -> Result<&[Option<JunctionId>; PORT_COUNT]> {
        self.neighbors
            .get(j.index())
            .ok_or(Error::UnknownJunction(j.index(), self.num_junctions()))
    }

    /// Interior junction ids in ascending order.
    pub fn interior(&self) -> &[JunctionId] {
        &self.interior
    }

    /// All junction ids in ascending order.
    pub fn all_junctions(&self) -> impl Iterator<Item = JunctionId> + '_ {
        (0..self.num_junctions() as u32).map(JunctionId)
    }

    /// Interior junction nearest the lattice centroid; the default probe and
    /// excitation site.
    pub fn center(&self) -> JunctionId {
        self.center
    }

    /// Axis-aligned bounding box as `(min, max)` corners.
    pub fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        bounding_box(&self.positions)
    }

    /// Rim flags indexed by junction, for the stepping hot loops.
    #[inline]
    pub(crate) fn rim_flags(&self) -> &[bool] {
        &self.rim
    }

    /// Port tables indexed by junction, for the stepping hot loops.
    #[inline]
    pub(crate) fn ports(&self) -> &[[Option<JunctionId>; PORT_COUNT]] {
        &self.neighbors
    }

    /// Writes the lattice as CSV: `id,x,y,is_rim,n0..n5`, one row per
    /// junction, `-1` for absent neighbors, `is_rim` as 0/1.
    pub fn write_csv<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "id,x,y,is_rim,n0,n1,n2,n3,n4,n5")?;
        for j in self.all_junctions() {
            let [x, y] = self.position(j);
            write!(w, "{},{:.8e},{:.8e},{}", j, x, y, self.is_rim(j) as u8)?;
            for d in 0..PORT_COUNT {
                match self.neighbor(j, d) {
                    Some(n) => write!(w, ",{n}")?,
                    None => write!(w, ",-1")?,
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }
}
