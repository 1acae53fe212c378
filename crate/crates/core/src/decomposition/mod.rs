//! Maximal function, dyadic stopping-time and Whitney decompositions.
//!
//! All cube geometry is done in integer cell units on one dyadic lattice
//! anchored at the origin (or at the grid's lower corner when the origin is
//! not a cell boundary), so set relations are exact.

mod cz;
mod maximal;
mod ntv;
mod whitney;

pub use cz::{cz_decompose, cz_decompose_with_root, CzDecomposition};
pub use maximal::{maximal_function, maximal_weak_type_checks};
pub use ntv::{ntv_decompose, NtvDecomposition};
pub use whitney::{whitney_decompose, WhitneyDecomposition};

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Cube, DyadicCube, DyadicFrame, Grid, GridFunction, MAX_DIM};

/// Relative slack for inequalities between floating-point sums.
pub const PROPERTY_RTOL: f64 = 1e-12;

/// One measured inequality `lhs <= rhs + tol`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyCheck {
    /// Property label such as `(3)`.
    pub property: String,
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub tol: f64,
    pub pass: bool,
}

impl PropertyCheck {
    pub fn new(property: &str, name: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self {
            property: property.into(),
            name: name.into(),
            lhs,
            rhs,
            tol,
            pass: lhs.is_finite() && lhs <= rhs + tol,
        }
    }

    /// `lhs <= rhs` up to `PROPERTY_RTOL` relative to `scale`.
    pub fn relative(property: &str, name: &str, lhs: f64, rhs: f64, scale: f64) -> Self {
        Self::new(property, name, lhs, rhs, PROPERTY_RTOL * scale.abs().max(rhs.abs()))
    }

    /// Exact comparison of integer-valued quantities.
    pub fn exact(property: &str, name: &str, lhs: f64, rhs: f64) -> Self {
        Self::new(property, name, lhs, rhs, 0.0)
    }
}

pub fn all_pass(checks: &[PropertyCheck]) -> bool {
    checks.iter().all(|c| c.pass)
}

/// Groups checks by property; each group reports its tightest member.
pub fn properties_json(checks: &[PropertyCheck]) -> serde_json::Value {
    let mut groups: BTreeMap<&str, Vec<&PropertyCheck>> = BTreeMap::new();
    for c in checks {
        groups.entry(c.property.as_str()).or_default().push(c);
    }
    let mut out = serde_json::Map::new();
    for (key, members) in groups {
        let worst = members
            .iter()
            .copied()
            .max_by(|a, b| slack(a).total_cmp(&slack(b)))
            .expect("groups are nonempty");
        out.insert(
            key.to_string(),
            serde_json::json!({
                "lhs": worst.lhs,
                "rhs": worst.rhs,
                "pass": members.iter().all(|c| c.pass),
                "parts": members,
            }),
        );
    }
    serde_json::Value::Object(out)
}

fn slack(c: &PropertyCheck) -> f64 {
    if !c.pass {
        return f64::INFINITY;
    }
    if c.rhs > 0.0 {
        c.lhs / c.rhs
    } else {
        c.lhs - c.rhs
    }
}

/// One bad piece `b_j` living on the cells of `Q_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct BadPiece {
    pub cube: DyadicCube,
    pub values: GridFunction,
    /// Integral of the input over `Q_j`.
    pub mass: f64,
    /// Single cell that no admissible Whitney cube covers.
    pub residue: bool,
}

pub(crate) fn cubes_json(pieces: &[BadPiece]) -> serde_json::Value {
    serde_json::Value::Array(
        pieces
            .iter()
            .map(|p| {
                let c = p.cube.to_cube();
                serde_json::json!({
                    "center": c.center(),
                    "side": c.side(),
                    "generation": p.cube.generation(),
                    "mass": p.mass,
                    "residue": p.residue,
                })
            })
            .collect(),
    )
}

/// Integer cell coordinates shared by the dyadic algorithms.
///
/// Global cell `g` along an axis covers `[origin + g h, origin + (g+1) h]`;
/// a level-`j` cube with coordinate `c` covers cells `c 2^j .. (c+1) 2^j`.
#[derive(Clone, Debug)]
pub(crate) struct CellLattice {
    pub origin: Vec<f64>,
    pub h: f64,
    /// Global index of the grid's first cell on each axis.
    pub off: [i64; MAX_DIM],
    pub shape: [usize; MAX_DIM],
    pub n: usize,
}

impl CellLattice {
    pub fn for_grid(grid: &Grid) -> Self {
        let n = grid.dim();
        let h = grid.spacing();
        let on_lattice = grid.lower().iter().all(|lo| {
            let r = lo / h;
            (r - r.round()).abs() < 1e-6
        });
        let origin = if on_lattice {
            vec![0.0; n]
        } else {
            grid.lower().to_vec()
        };
        Self::with_origin(grid, origin)
    }

    /// Lattice anchored at the grid's lower corner.
    pub fn at_lower_corner(grid: &Grid) -> Self {
        Self::with_origin(grid, grid.lower().to_vec())
    }

    fn with_origin(grid: &Grid, origin: Vec<f64>) -> Self {
        let n = grid.dim();
        let h = grid.spacing();
        let mut off = [0i64; MAX_DIM];
        for a in 0..n {
            off[a] = ((grid.lower()[a] - origin[a]) / h).round() as i64;
        }
        Self {
            origin,
            h,
            off,
            shape: grid.shape3(),
            n,
        }
    }

    pub fn frame(&self, top: u32) -> DyadicFrame {
        DyadicFrame::new(self.origin.clone(), self.h * f64::from(1u32 << top))
            .expect("positive spacing")
    }

    pub fn dyadic(&self, top: u32, level: u32, coords: &[i64]) -> DyadicCube {
        DyadicCube::new(self.frame(top), top as i32 - level as i32, coords.to_vec())
            .expect("coordinates match the frame")
    }

    /// `(level, coords)` of a dyadic cube on this lattice.
    pub fn locate(&self, q: &DyadicCube) -> Result<(u32, Vec<i64>)> {
        let bad = || Error::NotRepresentable("cube is not aligned with the grid lattice".into());
        if q.dim() != self.n {
            return Err(bad());
        }
        for a in 0..self.n {
            if (q.frame().origin[a] - self.origin[a]).abs() > 1e-9 * self.h.max(1.0) {
                return Err(bad());
            }
        }
        let ratio = q.side() / self.h;
        let level = ratio.log2().round();
        if level < 0.0 || (ratio - 2f64.powf(level)).abs() > 1e-9 * ratio {
            return Err(bad());
        }
        Ok((level as u32, q.coords().to_vec()))
    }

    /// Global cell range `[lo, hi)` of a level-`j` cube on `axis`.
    pub fn cells(level: u32, c: i64) -> (i64, i64) {
        let s = 1i64 << level;
        (c * s, (c + 1) * s)
    }

    /// Iterates the local flat indices of the grid cells inside the global
    /// range `lo..hi` (clipped to the grid).
    pub fn for_cells_in(&self, lo: &[i64; MAX_DIM], hi: &[i64; MAX_DIM], mut visit: impl FnMut(usize)) {
        let mut a0 = [0usize; MAX_DIM];
        let mut a1 = [1usize; MAX_DIM];
        for a in 0..self.n {
            let l = (lo[a] - self.off[a]).clamp(0, self.shape[a] as i64);
            let u = (hi[a] - self.off[a]).clamp(0, self.shape[a] as i64);
            if l >= u {
                return;
            }
            a0[a] = l as usize;
            a1[a] = u as usize;
        }
        let [_, s1, s2] = self.shape;
        for i in a0[0]..a1[0] {
            for j in a0[1]..a1[1] {
                let row = (i * s1 + j) * s2;
                for k in a0[2]..a1[2] {
                    visit(row + k);
                }
            }
        }
    }

    /// Global coordinates of a local flat index.
    pub fn global(&self, flat: usize) -> [i64; MAX_DIM] {
        let [_, s1, s2] = self.shape;
        let m = [flat / (s1 * s2), (flat / s2) % s1, flat % s2];
        let mut g = [0i64; MAX_DIM];
        for a in 0..self.n {
            g[a] = m[a] as i64 + self.off[a];
        }
        g
    }

    pub fn cube_range(&self, level: u32, c: &[i64]) -> ([i64; MAX_DIM], [i64; MAX_DIM]) {
        let mut lo = [0i64; MAX_DIM];
        let mut hi = [1i64; MAX_DIM];
        for a in 0..self.n {
            let (l, u) = Self::cells(level, c[a]);
            lo[a] = l;
            hi[a] = u;
        }
        (lo, hi)
    }

    /// True when the cube lies inside the grid box.
    pub fn inside(&self, lo: &[i64; MAX_DIM], hi: &[i64; MAX_DIM]) -> bool {
        (0..self.n).all(|a| lo[a] >= self.off[a] && hi[a] <= self.off[a] + self.shape[a] as i64)
    }
}

/// Summed-area table over a grid padded to three axes.
pub(crate) struct PrefixSum {
    table: Vec<f64>,
    dims: [usize; MAX_DIM],
}

impl PrefixSum {
    pub fn new(shape: [usize; MAX_DIM], values: &[f64]) -> Self {
        let dims = [shape[0] + 1, shape[1] + 1, shape[2] + 1];
        let mut table = vec![0.0; dims[0] * dims[1] * dims[2]];
        let at = |i: usize, j: usize, k: usize| (i * dims[1] + j) * dims[2] + k;
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    let v = values[(i * shape[1] + j) * shape[2] + k];
                    table[at(i + 1, j + 1, k + 1)] = v + table[at(i, j + 1, k + 1)]
                        + table[at(i + 1, j, k + 1)]
                        + table[at(i + 1, j + 1, k)]
                        - table[at(i, j, k + 1)]
                        - table[at(i, j + 1, k)]
                        - table[at(i + 1, j, k)]
                        + table[at(i, j, k)];
                }
            }
        }
        Self { table, dims }
    }

    /// Sum over local cells `lo..hi` (exclusive) on each axis.
    pub fn sum(&self, lo: [usize; MAX_DIM], hi: [usize; MAX_DIM]) -> f64 {
        let d = self.dims;
        let at = |i: usize, j: usize, k: usize| self.table[(i * d[1] + j) * d[2] + k];
        at(hi[0], hi[1], hi[2]) - at(lo[0], hi[1], hi[2]) - at(hi[0], lo[1], hi[2])
            - at(hi[0], hi[1], lo[2])
            + at(lo[0], lo[1], hi[2])
            + at(lo[0], hi[1], lo[2])
            + at(hi[0], lo[1], lo[2])
            - at(lo[0], lo[1], lo[2])
    }
}

/// Lattice offset of `grid` relative to `lattice` (global index of its
/// first cell).
pub(crate) fn grid_offset(lattice: &CellLattice, grid: &Grid) -> [i64; MAX_DIM] {
    let mut off = [0i64; MAX_DIM];
    for a in 0..lattice.n {
        off[a] = ((grid.lower()[a] - lattice.origin[a]) / lattice.h).round() as i64;
    }
    off
}

/// Builds the grid covering global cells `lo..hi` on the lattice.
pub(crate) fn lattice_grid(lattice: &CellLattice, base: &Grid, lo: &[i64; MAX_DIM], hi: &[i64; MAX_DIM]) -> Result<Grid> {
    let n = lattice.n;
    let offset: Vec<i64> = (0..n).map(|a| lo[a] - lattice.off[a]).collect();
    let shape: Vec<usize> = (0..n).map(|a| (hi[a] - lo[a]) as usize).collect();
    base.shifted(&offset, &shape)
}

/// Concentric cube `Q(c, side)` allowing a degenerate side of zero.
pub(crate) fn concentric(q: &DyadicCube, side: f64) -> Cube {
    let c = q.to_cube();
    Cube::with_side(c.center().to_vec(), side)
}
