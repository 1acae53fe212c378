use serde_json::json;

use super::{
    concentric, cubes_json, lattice_grid, maximal_function, properties_json, whitney_decompose,
    BadPiece, CellLattice, PropertyCheck, WhitneyDecomposition,
};
use crate::error::{Error, Result};
use crate::grid::{pow_abs, Cube, GridFunction, MAX_DIM};

/// Decomposition over the superlevel set of the maximal function, with
/// compensating cubes `E_j` that carry the mass of each `b_j`.
#[derive(Clone, Debug)]
pub struct NtvDecomposition {
    pub f: GridFunction,
    /// `M(f^q)`.
    pub maximal: GridFunction,
    /// Indicator of `Omega = {M(f^q) > height^q}`.
    pub omega: GridFunction,
    pub whitney: WhitneyDecomposition,
    pub good: GridFunction,
    /// Whitney cubes first, then residue cells.
    pub pieces: Vec<BadPiece>,
    /// `E_j`, parallel to `pieces`; side zero when `b_j` has no mass.
    pub compensators: Vec<Cube>,
    pub height: f64,
    pub q: f64,
    /// `17 sqrt(n)`.
    pub dilate: f64,
}

pub fn ntv_decompose(f: &GridFunction, q: f64, height: f64) -> Result<NtvDecomposition> {
    if !(q.is_finite() && q >= 1.0) {
        return Err(Error::Exponent {
            value: q,
            reason: "q must be finite and at least 1",
        });
    }
    if !(height.is_finite() && height > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "height must be positive, got {height}"
        )));
    }
    if let Some((index, &value)) = f.values().iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::NegativeValue { index, value });
    }
    let grid = f.grid();
    let n = grid.dim();
    let fq = f.map(|v| pow_abs(v, q));
    let maximal = maximal_function(&fq)?;
    let threshold = pow_abs(height, q);
    let omega = maximal.map(|m| if m > threshold { 1.0 } else { 0.0 });

    let lat = CellLattice::for_grid(grid);
    for (i, &w) in omega.values().iter().enumerate() {
        if w == 1.0 {
            let m = grid.multi_index(i);
            if (0..n).any(|a| m[a] == 0 || m[a] + 1 == grid.shape()[a]) {
                return Err(Error::InvalidParameter(
                    "the superlevel set reaches the edge of the grid box; enlarge the box".into(),
                ));
            }
        }
    }
    let whitney = whitney_decompose(&omega)?;

    let dilate = 17.0 * (n as f64).sqrt();
    let scale = dilate.powf(n as f64 / q) * height;
    let mut pieces = Vec::new();
    let mut compensators = Vec::new();
    for (cube, lo, hi, residue) in whitney.all_ranges() {
        let sub = lattice_grid(&lat, grid, &lo, &hi)?;
        let values = sub_values(f, &lat, &lo, &hi, &sub)?;
        let mass = values.integral();
        let volume = cube.volume();
        let e_volume = mass / scale;
        if e_volume > volume * (1.0 + 1e-12) {
            return Err(Error::Inconsistent(format!(
                "compensating cube of volume {e_volume} exceeds its Whitney cube of volume {volume}"
            )));
        }
        let side = e_volume.min(volume).powf(1.0 / n as f64);
        compensators.push(concentric(&cube, side));
        pieces.push(BadPiece {
            cube,
            values,
            mass,
            residue,
        });
    }
    let good = f.mul(&omega.map(|w| 1.0 - w))?;
    Ok(NtvDecomposition {
        f: f.clone(),
        maximal,
        omega,
        whitney,
        good,
        pieces,
        compensators,
        height,
        q,
        dilate,
    })
}

/// Restriction of `f` to a sub-grid of its own cells.
fn sub_values(
    f: &GridFunction,
    lat: &CellLattice,
    lo: &[i64; MAX_DIM],
    hi: &[i64; MAX_DIM],
    sub: &crate::grid::Grid,
) -> Result<GridFunction> {
    let mut values = Vec::with_capacity(sub.len());
    lat.for_cells_in(lo, hi, |i| values.push(f.values()[i]));
    GridFunction::new(sub.clone(), values)
}

impl NtvDecomposition {
    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    /// `(17 sqrt(n))^(n/q) height`, the level of the compensating masses.
    pub fn compensator_level(&self) -> f64 {
        self.dilate.powf(self.dim() as f64 / self.q) * self.height
    }

    pub fn bad(&self) -> Result<GridFunction> {
        self.f.mul(&self.omega)
    }

    /// `1_{E_j}` on `grid` as exact cell-overlap fractions.
    pub fn compensator_indicator(&self, j: usize, grid: &crate::grid::Grid) -> Result<GridFunction> {
        let e = &self.compensators[j];
        let n = self.dim();
        let h = grid.spacing();
        GridFunction::from_fn(grid.clone(), |p| {
            let mut frac = 1.0;
            for a in 0..n {
                let lo = (p[a] - 0.5 * h).max(e.lower(a));
                let hi = (p[a] + 0.5 * h).min(e.upper(a));
                frac *= ((hi - lo) / h).max(0.0);
            }
            frac
        })
    }

    /// `1_E` on the input grid.
    pub fn e_indicator(&self) -> Result<GridFunction> {
        let mut total = GridFunction::zeros(self.f.grid().clone());
        for (j, p) in self.pieces.iter().enumerate() {
            let local = self.compensator_indicator(j, p.values.grid())?;
            total = total.add(&local.embed(self.f.grid())?)?;
        }
        Ok(total)
    }

    /// `b_j - level 1_{E_j}` on the cells of `Q_j`.
    pub fn compensated_piece(&self, j: usize) -> Result<GridFunction> {
        let p = &self.pieces[j];
        let e = self.compensator_indicator(j, p.values.grid())?;
        p.values.sub(&e.scaled(self.compensator_level()))
    }

    pub fn omega_measure(&self) -> f64 {
        self.omega.integral()
    }

    pub fn check_properties(&self) -> Result<Vec<PropertyCheck>> {
        let n = self.dim() as f64;
        let q = self.q;
        let t = self.height;
        let f = &self.f;
        let fq = f.norm(q)?;
        let fqq = fq.powf(q);
        let three_n = 3f64.powf(n);
        let dn = self.dilate.powf(n);
        let level = self.compensator_level();
        let mut out = Vec::new();

        let b = self.bad()?;
        let recon = f.sub(&self.good)?.sub(&b)?.max_abs();
        out.push(PropertyCheck::relative("f=g+b", "max |f - g - b|", recon, 0.0, f.max_abs()));
        let covered: f64 = self.pieces.iter().map(|p| p.cube.volume()).sum();
        let omega = self.omega_measure();
        out.push(PropertyCheck::relative("cover", "|union Q_j| = |Omega|", (covered - omega).abs(), 0.0, omega));

        out.push(PropertyCheck::relative("(1)", "||g||_inf <= height", self.good.max_abs(), t, t));
        out.push(PropertyCheck::relative("(1)", "||g||_q <= ||f||_q", self.good.norm(q)?, fq, fq));

        let overlaps = super::cz::overlap_count(&self.pieces, f)?;
        out.push(PropertyCheck::exact("(2)", "overlapping cells between cubes", overlaps as f64, 0.0));
        let rhs = three_n * t.powf(-q) * fqq;
        out.push(PropertyCheck::relative("(2)", "sum |Q_j| <= 3^n height^-q ||f||_q^q", covered, rhs, rhs));

        let mut worst3: f64 = 0.0;
        let mut e_inside_fail = 0usize;
        let mut formula: f64 = 0.0;
        let mut mean_zero: f64 = 0.0;
        for (j, p) in self.pieces.iter().enumerate() {
            let bq = p.values.norm(q)?.powf(q);
            worst3 = worst3.max(bq / (dn * t.powf(q) * p.cube.volume()));
            let e = &self.compensators[j];
            let qc = p.cube.to_cube();
            let inside = (0..self.dim()).all(|a| e.lower(a) >= qc.lower(a) && e.upper(a) <= qc.upper(a));
            e_inside_fail += (!inside) as usize;
            let expected = p.mass / level;
            if p.mass > 0.0 {
                formula = formula.max((e.volume() - expected).abs() / expected);
                let residual = self.compensated_piece(j)?.integral();
                mean_zero = mean_zero.max(residual.abs() / p.mass);
            }
        }
        out.push(PropertyCheck::relative("(3)", "max_j ||b_j||_q^q / ((17 sqrt n)^n height^q |Q_j|)", worst3, 1.0, 1.0));

        let rhs = fq;
        out.push(PropertyCheck::relative("(4)", "||b||_q <= ||f||_q", b.norm(q)?, rhs, rhs));
        let rhs = self.dilate.powf(n / q) * three_n * t.powf(1.0 - q) * fqq;
        out.push(PropertyCheck::relative("(4)", "||b||_1 <= (17 sqrt n)^(n/q) 3^n height^(1-q) ||f||_q^q", b.norm(1.0)?, rhs, rhs));

        out.push(PropertyCheck::exact("E", "E_j not contained in Q_j", e_inside_fail as f64, 0.0));
        out.push(PropertyCheck::exact("E", "overlapping E_j pairs", self.compensator_overlaps() as f64, 0.0));
        out.push(PropertyCheck::exact("E", "max relative error of |E_j| against its formula", formula, 1e-10));
        out.push(PropertyCheck::exact("E", "max |int (b_j - level 1_{E_j})| / int b_j", mean_zero, 1e-10));
        Ok(out)
    }

    fn compensator_overlaps(&self) -> usize {
        let es: Vec<&Cube> = self.compensators.iter().filter(|e| e.side() > 0.0).collect();
        let mut count = 0;
        for (i, a) in es.iter().enumerate() {
            for b in &es[i + 1..] {
                if !a.interiors_disjoint(b) {
                    count += 1;
                }
            }
        }
        count
    }

    pub fn report(&self) -> Result<serde_json::Value> {
        let e: Vec<_> = self
            .compensators
            .iter()
            .map(|c| json!({"center": c.center(), "side": c.side()}))
            .collect();
        Ok(json!({
            "method": "ntv",
            "height": self.height,
            "q": self.q,
            "dilate": self.dilate,
            "omega_measure": self.omega_measure(),
            "residue_measure": self.whitney.residue_measure,
            "cubes": cubes_json(&self.pieces),
            "compensators": e,
            "properties": properties_json(&self.check_properties()?),
        }))
    }
}
