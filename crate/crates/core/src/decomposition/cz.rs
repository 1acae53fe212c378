use serde_json::json;

use super::{
    cubes_json, grid_offset, lattice_grid, properties_json, BadPiece, CellLattice, PropertyCheck,
};
use crate::error::{Error, Result};
use crate::grid::{pow_abs, DyadicCube, GridFunction, MAX_DIM};

/// `f = g + sum b_j` from a dyadic stopping time at `height` on the
/// `q`-averages of `|f|`.
#[derive(Clone, Debug)]
pub struct CzDecomposition {
    /// The input, zero-padded to a grid covering every selected cube.
    pub f: GridFunction,
    pub good: GridFunction,
    pub pieces: Vec<BadPiece>,
    pub root: DyadicCube,
    pub height: f64,
    pub q: f64,
    /// Side ratio of the dilates `Q_j*`.
    pub dilate: f64,
}

fn check_q(q: f64) -> Result<()> {
    if !(q.is_finite() && q >= 1.0) {
        return Err(Error::Exponent {
            value: q,
            reason: "q must be finite and at least 1",
        });
    }
    Ok(())
}

fn check_height(height: f64) -> Result<()> {
    if !(height.is_finite() && height > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "height must be positive, got {height}"
        )));
    }
    Ok(())
}

/// Sum of `|f|^q` and of `f` over the grid cells of a cube.
fn cube_sums(lat: &CellLattice, f: &GridFunction, q: f64, level: u32, c: &[i64]) -> (f64, f64) {
    let (lo, hi) = lat.cube_range(level, c);
    let (mut p, mut s) = (0.0, 0.0);
    let v = f.values();
    lat.for_cells_in(&lo, &hi, |i| {
        p += pow_abs(v[i], q);
        s += v[i];
    });
    (p, s)
}

/// Smallest grid-cell range containing every nonzero sample.
fn support(lat: &CellLattice, f: &GridFunction) -> Option<([i64; MAX_DIM], [i64; MAX_DIM])> {
    let mut lo = [i64::MAX; MAX_DIM];
    let mut hi = [i64::MIN; MAX_DIM];
    let mut any = false;
    for (i, v) in f.values().iter().enumerate() {
        if *v != 0.0 {
            any = true;
            let g = lat.global(i);
            for a in 0..lat.n {
                lo[a] = lo[a].min(g[a]);
                hi[a] = hi[a].max(g[a] + 1);
            }
        }
    }
    any.then_some((lo, hi))
}

/// Decomposes `f` starting from the smallest dyadic cube that contains its
/// support and whose `|f|^q`-average does not exceed `height^q`.
pub fn cz_decompose(f: &GridFunction, q: f64, height: f64) -> Result<CzDecomposition> {
    check_q(q)?;
    check_height(height)?;
    let mut lat = CellLattice::for_grid(f.grid());
    let n = lat.n;
    let threshold = pow_abs(height, q);
    if let Some((lo, hi)) = support(&lat, f) {
        // no dyadic cube anchored at the origin contains a set straddling it
        if (0..n).any(|a| lo[a] < 0 && hi[a] > 0) {
            lat = CellLattice::at_lower_corner(f.grid());
        }
    }
    let Some((lo, hi)) = support(&lat, f) else {
        let root = lat.dyadic(0, 0, &lat.off[..n]);
        return decompose_from(f, q, height, &lat, 0, lat.off[..n].to_vec(), root);
    };
    // smallest level whose cube holds the whole support
    let mut level = 0u32;
    while (0..n).any(|a| lo[a].div_euclid(1 << level) != (hi[a] - 1).div_euclid(1 << level)) {
        level += 1;
        if level > 60 {
            return Err(Error::Inconsistent("no dyadic cube holds the support".into()));
        }
    }
    let total: f64 = f.values().iter().map(|v| pow_abs(*v, q)).sum();
    while total / 2f64.powi((level as usize * n) as i32) > threshold {
        level += 1;
    }
    let coords: Vec<i64> = (0..n).map(|a| lo[a].div_euclid(1 << level)).collect();
    let root = lat.dyadic(level, level, &coords);
    decompose_from(f, q, height, &lat, level, coords, root)
}

/// Decomposes from a caller-chosen root cube, which must contain the
/// support of `f` and have `|f|^q`-average at most `height^q`.
pub fn cz_decompose_with_root(
    f: &GridFunction,
    q: f64,
    height: f64,
    root: &DyadicCube,
) -> Result<CzDecomposition> {
    check_q(q)?;
    check_height(height)?;
    let lat = CellLattice::for_grid(f.grid());
    let (level, coords) = lat.locate(root)?;
    if let Some((lo, hi)) = support(&lat, f) {
        let (rlo, rhi) = lat.cube_range(level, &coords);
        if (0..lat.n).any(|a| lo[a] < rlo[a] || hi[a] > rhi[a]) {
            return Err(Error::InvalidParameter(
                "the root cube does not contain the support of f".into(),
            ));
        }
    }
    let (p, _) = cube_sums(&lat, f, q, level, &coords);
    let average = p / 2f64.powi((level as usize * lat.n) as i32);
    let threshold = pow_abs(height, q);
    if average > threshold {
        return Err(Error::RootTooSmall { average, threshold });
    }
    decompose_from(f, q, height, &lat, level, coords, root.clone())
}

fn decompose_from(
    f: &GridFunction,
    q: f64,
    height: f64,
    lat: &CellLattice,
    top: u32,
    root_coords: Vec<i64>,
    root: DyadicCube,
) -> Result<CzDecomposition> {
    let n = lat.n;
    let threshold = pow_abs(height, q);
    // frame of the reported cubes: generation 0 is the root
    let frame_top = lat.locate(&root)?.0;

    // (level, coords, sum of f)
    let mut selected: Vec<(u32, Vec<i64>, f64)> = Vec::new();
    let mut stack = vec![(top, root_coords)];
    while let Some((level, c)) = stack.pop() {
        if level == 0 {
            continue;
        }
        let child_level = level - 1;
        // reverse so that pops come out in lexicographic order
        for bits in (0..1usize << n).rev() {
            let cc: Vec<i64> = (0..n)
                .map(|a| 2 * c[a] + ((bits >> (n - 1 - a)) & 1) as i64)
                .collect();
            let (p, s) = cube_sums(lat, f, q, child_level, &cc);
            if p == 0.0 {
                continue;
            }
            let cells = 2f64.powi((child_level as usize * n) as i32);
            if p / cells > threshold {
                selected.push((child_level, cc, s));
            } else {
                stack.push((child_level, cc));
            }
        }
    }

    // working grid: f's grid plus every selected cube
    let mut lo = [0i64; MAX_DIM];
    let mut hi = [1i64; MAX_DIM];
    for a in 0..n {
        lo[a] = lat.off[a];
        hi[a] = lat.off[a] + lat.shape[a] as i64;
    }
    for (level, c, _) in &selected {
        let (clo, chi) = lat.cube_range(*level, c);
        for a in 0..n {
            lo[a] = lo[a].min(clo[a]);
            hi[a] = hi[a].max(chi[a]);
        }
    }
    let work = lattice_grid(lat, f.grid(), &lo, &hi)?;
    let fw = f.embed(&work)?;
    let wlat = CellLattice {
        off: grid_offset(lat, &work),
        shape: work.shape3(),
        ..lat.clone()
    };

    let mut good = fw.values().to_vec();
    let mut pieces = Vec::with_capacity(selected.len());
    for (level, c, sum) in selected {
        let cells = 2f64.powi((level as usize * n) as i32);
        let avg = sum / cells;
        let (clo, chi) = wlat.cube_range(level, &c);
        let sub = lattice_grid(&wlat, &work, &clo, &chi)?;
        let mut b = Vec::with_capacity(cells as usize);
        wlat.for_cells_in(&clo, &chi, |i| {
            b.push(fw.values()[i] - avg);
            good[i] = avg;
        });
        pieces.push(BadPiece {
            cube: lat.dyadic(frame_top, level, &c),
            values: GridFunction::new(sub, b)?,
            mass: sum * work.cell_volume(),
            residue: false,
        });
    }
    Ok(CzDecomposition {
        good: GridFunction::new(work, good)?,
        f: fw,
        pieces,
        root,
        height,
        q,
        dilate: 2.0 * (n as f64).sqrt(),
    })
}

impl CzDecomposition {
    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    /// `b = sum b_j` on the working grid.
    pub fn bad(&self) -> Result<GridFunction> {
        let mut total = GridFunction::zeros(self.f.grid().clone());
        for p in &self.pieces {
            total = total.add(&p.values.embed(self.f.grid())?)?;
        }
        Ok(total)
    }

    pub fn cubes(&self) -> impl Iterator<Item = &DyadicCube> {
        self.pieces.iter().map(|p| &p.cube)
    }

    /// Properties (1)–(5) of the decomposition, plus exact reconstruction
    /// and disjointness.
    pub fn check_properties(&self) -> Result<Vec<PropertyCheck>> {
        let n = self.dim() as f64;
        let q = self.q;
        let t = self.height;
        let f = &self.f;
        let fq = f.norm(q)?;
        let fqq = fq.powf(q);
        let fmax = f.max_abs();
        let b = self.bad()?;
        let mut out = Vec::new();

        let recon = f.sub(&self.good)?.sub(&b)?.max_abs();
        out.push(PropertyCheck::relative("f=g+b", "max |f - g - b|", recon, 0.0, fmax));

        let g_inf = self.good.max_abs();
        let g_bound = 2f64.powf(n / q) * t;
        out.push(PropertyCheck::relative("(1)", "||g||_inf <= 2^(n/q) height", g_inf, g_bound, g_bound));
        out.push(PropertyCheck::relative("(1)", "||g||_q <= ||f||_q", self.good.norm(q)?, fq, fq));

        let overlaps = overlap_count(&self.pieces, f)?;
        out.push(PropertyCheck::exact("(2)", "overlapping cells between cubes", overlaps as f64, 0.0));
        let vol: f64 = self.pieces.iter().map(|p| p.cube.volume()).sum();
        let rhs = t.powf(-q) * fqq;
        out.push(PropertyCheck::relative("(2)", "sum |Q_j| <= height^-q ||f||_q^q", vol, rhs, rhs));

        let mut worst3 = (0.0, 1.0);
        let mut worst4: f64 = 0.0;
        for p in &self.pieces {
            let bq = p.values.norm(q)?.powf(q);
            let bound = 2f64.powf(n + q) * t.powf(q) * p.cube.volume();
            if bq / bound > worst3.0 / worst3.1 {
                worst3 = (bq, bound);
            }
            let scale = p.cube.volume() * fmax;
            worst4 = worst4.max(p.values.integral().abs() / scale);
        }
        out.push(PropertyCheck::relative("(3)", "max_j ||b_j||_q^q / (2^(n+q) height^q |Q_j|)", worst3.0 / worst3.1, 1.0, 1.0));
        out.push(PropertyCheck::exact("(4)", "max_j |int b_j| / (|Q_j| ||f||_inf)", worst4, super::PROPERTY_RTOL));

        let bq = b.norm(q)?;
        let rhs = 2f64.powf((n + q) / q) * fq;
        out.push(PropertyCheck::relative("(5)", "||b||_q <= 2^((n+q)/q) ||f||_q", bq, rhs, rhs));
        let rhs = 2.0 * t.powf(1.0 - q) * fqq;
        out.push(PropertyCheck::relative("(5)", "||b||_1 <= 2 height^(1-q) ||f||_q^q", b.norm(1.0)?, rhs, rhs));
        Ok(out)
    }

    pub fn report(&self) -> Result<serde_json::Value> {
        Ok(json!({
            "method": "cz",
            "height": self.height,
            "q": self.q,
            "dilate": self.dilate,
            "root": {"center": self.root.to_cube().center(), "side": self.root.side()},
            "cubes": cubes_json(&self.pieces),
            "properties": properties_json(&self.check_properties()?),
        }))
    }
}

/// Number of grid cells claimed by more than one piece.
pub(crate) fn overlap_count(pieces: &[BadPiece], f: &GridFunction) -> Result<usize> {
    let lat = CellLattice::for_grid(f.grid());
    let mut owner = vec![0u32; f.grid().len()];
    let mut overlaps = 0;
    for p in pieces {
        let sub = CellLattice {
            off: grid_offset(&lat, p.values.grid()),
            shape: p.values.grid().shape3(),
            ..lat.clone()
        };
        let (mut lo, mut hi) = ([0i64; MAX_DIM], [1i64; MAX_DIM]);
        for a in 0..lat.n {
            lo[a] = sub.off[a];
            hi[a] = sub.off[a] + sub.shape[a] as i64;
        }
        if !lat.inside(&lo, &hi) {
            return Err(Error::Inconsistent("bad piece outside the working grid".into()));
        }
        lat.for_cells_in(&lo, &hi, |i| {
            owner[i] += 1;
            if owner[i] > 1 {
                overlaps += 1;
            }
        });
    }
    Ok(overlaps)
}
