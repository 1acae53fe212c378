use super::{CellLattice, PrefixSum, PropertyCheck};
use crate::error::{Error, Result};
use crate::grid::{DyadicCube, GridFunction, MAX_DIM};

/// Maximal dyadic cubes `Q` inside `Omega` with `2 diam(Q) <= d(Q, Omega^c)`.
#[derive(Clone, Debug)]
pub struct WhitneyDecomposition {
    pub cubes: Vec<DyadicCube>,
    /// Squared distance to the complement and side, both in cell units,
    /// per cube.
    pub geometry: Vec<(i64, i64)>,
    /// Cells of `Omega` too close to the complement for any cube.
    pub residue: Vec<DyadicCube>,
    pub residue_measure: f64,
    /// `h^n` times the number of cells of `Omega` within `2 sqrt(n)` cells of
    /// the complement.
    pub boundary_bound: f64,
    pub dim: usize,
    /// Global cell ranges of the cubes, parallel to `cubes`.
    pub(crate) ranges: Vec<([i64; MAX_DIM], [i64; MAX_DIM])>,
    pub(crate) residue_cells: Vec<[i64; MAX_DIM]>,
}

struct Complement {
    n: usize,
    /// Grid box in global cell units.
    box_lo: [i64; MAX_DIM],
    box_hi: [i64; MAX_DIM],
    /// Complement cells touching `Omega`.
    cells: Vec<[i64; MAX_DIM]>,
}

impl Complement {
    /// Squared distance from the closed cell box `lo..hi` to the complement.
    fn dist2(&self, lo: &[i64; MAX_DIM], hi: &[i64; MAX_DIM]) -> i64 {
        let mut best = i64::MAX;
        for a in 0..self.n {
            let d = (lo[a] - self.box_lo[a]).min(self.box_hi[a] - hi[a]).max(0);
            best = best.min(d * d);
        }
        for c in &self.cells {
            let mut s = 0;
            for a in 0..self.n {
                let gap = (c[a] - hi[a]).max(lo[a] - (c[a] + 1)).max(0);
                s += gap * gap;
                if s >= best {
                    break;
                }
            }
            best = best.min(s);
        }
        best
    }
}

/// Whitney cubes of the open set given by a `0/1` indicator.
///
/// Everything outside the grid box counts as complement. Cells of `Omega`
/// that fail the selection rule even as single cells are returned as
/// residue.
pub fn whitney_decompose(omega: &GridFunction) -> Result<WhitneyDecomposition> {
    if let Some(i) = omega.values().iter().position(|v| *v != 0.0 && *v != 1.0) {
        return Err(Error::NotRepresentable(format!(
            "indicator value {} at sample {i}; expected 0 or 1",
            omega.values()[i]
        )));
    }
    let grid = omega.grid();
    let lat = CellLattice::for_grid(grid);
    let n = lat.n;
    let inside: Vec<bool> = omega.values().iter().map(|v| *v == 1.0).collect();
    let prefix = PrefixSum::new(lat.shape, omega.values());

    let mut box_lo = [0i64; MAX_DIM];
    let mut box_hi = [1i64; MAX_DIM];
    for a in 0..n {
        box_lo[a] = lat.off[a];
        box_hi[a] = lat.off[a] + lat.shape[a] as i64;
    }
    let complement = Complement {
        n,
        box_lo,
        box_hi,
        cells: touching_complement(&lat, &inside),
    };

    let count = |lo: &[i64; MAX_DIM], hi: &[i64; MAX_DIM]| -> f64 {
        let mut l = [0usize; MAX_DIM];
        let mut u = [1usize; MAX_DIM];
        for a in 0..n {
            l[a] = (lo[a] - lat.off[a]).clamp(0, lat.shape[a] as i64) as usize;
            u[a] = (hi[a] - lat.off[a]).clamp(0, lat.shape[a] as i64) as usize;
            if l[a] >= u[a] {
                return 0.0;
            }
        }
        prefix.sum(l, u)
    };

    // top level: one cube side spans the widest axis
    let widest = lat.shape[..n].iter().copied().max().unwrap_or(1) as u64;
    let mut top = 0u32;
    while (1u64 << top) < widest {
        top += 1;
    }
    let mut stack: Vec<(u32, Vec<i64>)> = Vec::new();
    {
        let s = 1i64 << top;
        let lo: Vec<i64> = (0..n).map(|a| box_lo[a].div_euclid(s)).collect();
        let span: Vec<usize> = (0..n)
            .map(|a| ((box_hi[a] - 1).div_euclid(s) - lo[a] + 1) as usize)
            .collect();
        let total: usize = span.iter().product();
        for k in (0..total).rev() {
            let mut rem = k;
            let mut c = vec![0i64; n];
            for a in (0..n).rev() {
                c[a] = lo[a] + (rem % span[a]) as i64;
                rem /= span[a];
            }
            stack.push((top, c));
        }
    }

    let nn = n as i64;
    let mut out = WhitneyDecomposition {
        cubes: Vec::new(),
        geometry: Vec::new(),
        residue: Vec::new(),
        residue_measure: 0.0,
        boundary_bound: 0.0,
        dim: n,
        ranges: Vec::new(),
        residue_cells: Vec::new(),
    };
    while let Some((level, c)) = stack.pop() {
        let (lo, hi) = lat.cube_range(level, &c);
        let cells = count(&lo, &hi);
        if cells == 0.0 {
            continue;
        }
        let full = lat.inside(&lo, &hi) && cells == 2f64.powi((level as usize * n) as i32);
        if full {
            let side = 1i64 << level;
            let d2 = complement.dist2(&lo, &hi);
            // 2 diam <= dist  <=>  4 n s^2 <= d^2
            if 4 * nn * side * side <= d2 {
                out.cubes.push(lat.dyadic(top, level, &c));
                out.geometry.push((d2, side));
                out.ranges.push((lo, hi));
                continue;
            }
            if level == 0 {
                out.residue.push(lat.dyadic(top, 0, &c));
                out.residue_cells.push(lo);
                continue;
            }
        }
        for bits in (0..1usize << n).rev() {
            let cc: Vec<i64> = (0..n)
                .map(|a| 2 * c[a] + ((bits >> (n - 1 - a)) & 1) as i64)
                .collect();
            stack.push((level - 1, cc));
        }
    }

    let cell = grid.cell_volume();
    out.residue_measure = out.residue.len() as f64 * cell;
    let near = inside
        .iter()
        .enumerate()
        .filter(|(_, &inn)| inn)
        .filter(|(i, _)| {
            let g = lat.global(*i);
            let mut hi = g;
            for v in hi.iter_mut().take(n) {
                *v += 1;
            }
            complement.dist2(&g, &hi) < 4 * nn
        })
        .count();
    out.boundary_bound = near as f64 * cell;
    Ok(out)
}

/// Complement cells of the grid sharing at least a corner with `Omega`.
fn touching_complement(lat: &CellLattice, inside: &[bool]) -> Vec<[i64; MAX_DIM]> {
    let n = lat.n;
    let shape = lat.shape;
    let mut marked = vec![false; inside.len()];
    let neighbours = 3usize.pow(n as u32);
    for (i, &inn) in inside.iter().enumerate() {
        if !inn {
            continue;
        }
        let g = lat.global(i);
        for k in 0..neighbours {
            let mut rem = k;
            let mut m = [0usize; MAX_DIM];
            let mut ok = true;
            for a in 0..n {
                let d = (rem % 3) as i64 - 1;
                rem /= 3;
                let local = g[a] - lat.off[a] + d;
                if local < 0 || local >= shape[a] as i64 {
                    ok = false;
                    break;
                }
                m[a] = local as usize;
            }
            if ok {
                let j = (m[0] * shape[1] + m[1]) * shape[2] + m[2];
                if !inside[j] {
                    marked[j] = true;
                }
            }
        }
    }
    marked
        .iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(j, _)| lat.global(j))
        .collect()
}

impl WhitneyDecomposition {
    /// Exact bracket `2 diam <= dist <= 8 diam` per cube, the tighter
    /// `dist <= 6 diam` of the maximal-cube rule, and the residue bound.
    pub fn check(&self) -> Vec<PropertyCheck> {
        let n = self.dim as i64;
        let mut lower_fail = 0;
        let mut upper_fail = 0;
        let mut six_fail = 0;
        let mut worst_lo = f64::INFINITY;
        let mut worst_hi: f64 = 0.0;
        for &(d2, s) in &self.geometry {
            let diam2 = n * s * s;
            lower_fail += (4 * diam2 > d2) as usize;
            upper_fail += (d2 > 64 * diam2) as usize;
            six_fail += (d2 > 36 * diam2) as usize;
            let ratio = (d2 as f64 / diam2 as f64).sqrt();
            worst_lo = worst_lo.min(ratio);
            worst_hi = worst_hi.max(ratio);
        }
        let overlaps = self.overlaps();
        vec![
            PropertyCheck::exact("bracket", "cubes with dist < 2 diam", lower_fail as f64, 0.0),
            PropertyCheck::exact("bracket", "cubes with dist > 8 diam", upper_fail as f64, 0.0),
            PropertyCheck::exact("bracket", "cubes with dist > 6 diam", six_fail as f64, 0.0),
            PropertyCheck::exact("disjoint", "overlapping cube pairs", overlaps as f64, 0.0),
            PropertyCheck::relative("residue", "residue measure <= boundary bound", self.residue_measure, self.boundary_bound, self.boundary_bound),
            PropertyCheck::exact("ratio", "min dist/diam >= 2", -if self.cubes.is_empty() { 2.0 } else { worst_lo }, -2.0),
            PropertyCheck::exact("ratio", "max dist/diam <= 8", worst_hi, 8.0),
        ]
    }

    fn overlaps(&self) -> usize {
        let mut sorted: Vec<_> = self.ranges.iter().collect();
        sorted.sort_by_key(|r| r.0[0]);
        let n = self.dim;
        let mut count = 0;
        for (i, a) in sorted.iter().enumerate() {
            for b in &sorted[i + 1..] {
                if b.0[0] >= a.1[0] {
                    break;
                }
                if (0..n).all(|k| a.0[k] < b.1[k] && b.0[k] < a.1[k]) {
                    count += 1;
                }
            }
        }
        count
    }

    /// Cell ranges for every piece, Whitney cubes first, then residue.
    pub(crate) fn all_ranges(&self) -> Vec<(DyadicCube, [i64; MAX_DIM], [i64; MAX_DIM], bool)> {
        let mut out: Vec<_> = self
            .cubes
            .iter()
            .zip(&self.ranges)
            .map(|(c, r)| (c.clone(), r.0, r.1, false))
            .collect();
        for (c, lo) in self.residue.iter().zip(&self.residue_cells) {
            let mut hi = *lo;
            for v in hi.iter_mut().take(self.dim) {
                *v += 1;
            }
            out.push((c.clone(), *lo, hi, true));
        }
        out
    }

    pub fn covered_measure(&self) -> f64 {
        self.cubes.iter().map(|c| c.volume()).sum()
    }
}
