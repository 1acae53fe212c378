//! Uniform midpoint grids, sampled functions, cubes and dyadic cube
//! arithmetic, and the Riemann-sum quadrature every other module builds on.
//!
//! A [`Grid`] is a box in `R^n` (`n <= 3`) cut into congruent cells of side
//! `h`; samples sit at cell midpoints `lower + (k + 1/2) h`. A
//! [`GridFunction`] is read as piecewise constant on those cells, which makes
//! the midpoint rule `h^n * sum(values)` the integral of the function it
//! represents.

mod cube;
pub mod io;

pub use cube::{union_volume, Cube, DyadicCube, DyadicFrame};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 3;

/// A point with unused trailing coordinates set to zero.
pub type Point = [f64; MAX_DIM];

const COMMENSURATE_TOL: f64 = 1e-9;

/// Axis-aligned box `[lower, upper]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl GridBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::InvalidBox(format!(
                "corner lengths differ ({} vs {})",
                lower.len(),
                upper.len()
            )));
        }
        check_dim(lower.len())?;
        for (axis, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidBox(format!(
                    "axis {axis}: need finite lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The cube `[lo, hi]^n`.
    pub fn cube(n: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; n], vec![hi; n])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn edge(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }
}

pub(crate) fn check_dim(n: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&n) {
        Ok(())
    } else {
        Err(Error::Dimension(n))
    }
}

/// Uniform grid of cubic cells with one spacing on every axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    bbox: GridBox,
    spacing: f64,
    shape: Vec<usize>,
}

/// Builds the midpoint grid on `bbox` with spacing `h`.
///
/// Every box edge must be an integer multiple of `h` to within one part in
/// 10^9; otherwise the offending axis is reported.
pub fn make_uniform_grid(bbox: GridBox, h: f64) -> Result<Grid> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "grid spacing must be positive, got {h}"
        )));
    }
    let mut shape = Vec::with_capacity(bbox.dim());
    for axis in 0..bbox.dim() {
        let length = bbox.edge(axis);
        let ratio = length / h;
        let cells = ratio.round();
        if cells < 1.0 || (ratio - cells).abs() > COMMENSURATE_TOL * ratio.max(1.0) {
            return Err(Error::NonCommensurate {
                axis,
                length,
                spacing: h,
            });
        }
        shape.push(cells as usize);
    }
    Ok(Grid {
        bbox,
        spacing: h,
        shape,
    })
}

impl Grid {
    pub fn new(bbox: GridBox, h: f64) -> Result<Self> {
        make_uniform_grid(bbox, h)
    }

    /// Grid on `[lo, hi]^n`.
    pub fn cube(n: usize, lo: f64, hi: f64, h: f64) -> Result<Self> {
        make_uniform_grid(GridBox::cube(n, lo, hi)?, h)
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn bbox(&self) -> &GridBox {
        &self.bbox
    }

    pub fn lower(&self) -> &[f64] {
        self.bbox.lower()
    }

    pub fn upper(&self) -> &[f64] {
        self.bbox.upper()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `h^n`, the weight of every sample.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim() as i32)
    }

    /// Shape padded with ones to `MAX_DIM` axes.
    pub(crate) fn shape3(&self) -> [usize; MAX_DIM] {
        let mut s = [1; MAX_DIM];
        s[..self.dim()].copy_from_slice(&self.shape);
        s
    }

    /// Row-major flat index (axis 0 slowest).
    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &s)| acc * s + i)
    }

    pub fn multi_index(&self, mut flat: usize) -> [usize; MAX_DIM] {
        let mut out = [0; MAX_DIM];
        for axis in (0..self.dim()).rev() {
            out[axis] = flat % self.shape[axis];
            flat /= self.shape[axis];
        }
        out
    }

    /// Midpoint coordinate of cell `k` along `axis`.
    pub fn coordinate(&self, axis: usize, k: usize) -> f64 {
        self.bbox.lower[axis] + (k as f64 + 0.5) * self.spacing
    }

    pub fn point(&self, flat: usize) -> Point {
        let multi = self.multi_index(flat);
        let mut p = [0.0; MAX_DIM];
        for axis in 0..self.dim() {
            p[axis] = self.coordinate(axis, multi[axis]);
        }
        p
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    /// Offset in cells of `other`'s lower corner relative to this grid's,
    /// when both grids share spacing and cell lattice.
    pub fn lattice_offset(&self, other: &Grid) -> Option<[i64; MAX_DIM]> {
        if self.dim() != other.dim() {
            return None;
        }
        if (self.spacing - other.spacing).abs() > COMMENSURATE_TOL * self.spacing {
            return None;
        }
        let mut off = [0i64; MAX_DIM];
        for axis in 0..self.dim() {
            let ratio = (other.lower()[axis] - self.lower()[axis]) / self.spacing;
            let k = ratio.round();
            if (ratio - k).abs() > 1e-6 {
                return None;
            }
            off[axis] = k as i64;
        }
        Some(off)
    }

    /// Grid on the same lattice whose lower corner is shifted by `offset`
    /// cells and which has the given shape.
    pub fn shifted(&self, offset: &[i64], shape: &[usize]) -> Result<Grid> {
        let h = self.spacing;
        let lower: Vec<f64> = (0..self.dim())
            .map(|a| self.lower()[a] + offset[a] as f64 * h)
            .collect();
        let upper: Vec<f64> = (0..self.dim())
            .map(|a| lower[a] + shape[a] as f64 * h)
            .collect();
        let mut grid = make_uniform_grid(GridBox::new(lower, upper)?, h)?;
        grid.shape = shape[..self.dim()].to_vec();
        Ok(grid)
    }

    /// Same box, spacing halved.
    pub fn refined(&self) -> Grid {
        Grid {
            bbox: self.bbox.clone(),
            spacing: self.spacing / 2.0,
            shape: self.shape.iter().map(|s| 2 * s).collect(),
        }
    }
}

/// A real function sampled at the midpoints of a [`Grid`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite value {} at sample {i}",
                values[i]
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let n = grid.dim();
        let values = grid.points().map(|p| f(&p[..n])).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self {
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid.lattice_offset(&other.grid) != Some([0; MAX_DIM])
            || self.grid.shape != other.grid.shape
        {
            return Err(Error::GridMismatch("operands live on different grids".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self {
            grid: self.grid.clone(),
            values,
        })
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn integral(&self) -> f64 {
        integrate(self)
    }

    pub fn norm(&self, q: f64) -> Result<f64> {
        lq_norm(self, q)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Splits every cell into `2^n` children carrying the parent's value.
    pub fn refine(&self) -> Self {
        let fine = self.grid.refined();
        let n = self.dim();
        let values = (0..fine.len())
            .map(|i| {
                let m = fine.multi_index(i);
                let coarse: Vec<usize> = (0..n).map(|a| m[a] / 2).collect();
                self.values[self.grid.flat_index(&coarse)]
            })
            .collect();
        Self { grid: fine, values }
    }

    /// Re-samples onto `target`, which must share this grid's lattice.
    /// Samples outside `self` are zero; nonzero samples falling outside
    /// `target` are an error.
    pub fn embed(&self, target: &Grid) -> Result<Self> {
        let off = target
            .lattice_offset(&self.grid)
            .ok_or_else(|| Error::GridMismatch("grids do not share a lattice".into()))?;
        let n = self.dim();
        let tshape = target.shape3();
        let mut values = vec![0.0; target.len()];
        for (i, &v) in self.values.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let m = self.grid.multi_index(i);
            let mut t = [0usize; MAX_DIM];
            for a in 0..n {
                let k = m[a] as i64 + off[a];
                if k < 0 || k >= tshape[a] as i64 {
                    return Err(Error::GridMismatch(
                        "target grid does not cover the support".into(),
                    ));
                }
                t[a] = k as usize;
            }
            values[target.flat_index(&t[..n])] = v;
        }
        Ok(Self {
            grid: target.clone(),
            values,
        })
    }
}

/// Midpoint Riemann sum `h^n * sum(values)`.
pub fn integrate(u: &GridFunction) -> f64 {
    u.grid.cell_volume() * u.values.iter().sum::<f64>()
}

/// `(integral of |u|^q)^(1/q)`, or `max |u|` for `q = inf`.
pub fn lq_norm(u: &GridFunction, q: f64) -> Result<f64> {
    if q.is_nan() || q < 1.0 {
        return Err(Error::Exponent {
            value: q,
            reason: "q must be at least 1",
        });
    }
    if q.is_infinite() {
        return Ok(u.max_abs());
    }
    let w = u.grid.cell_volume();
    let s: f64 = if q == 1.0 {
        u.values.iter().map(|v| v.abs()).sum()
    } else if q == 2.0 {
        u.values.iter().map(|v| v * v).sum()
    } else {
        u.values.iter().map(|v| v.abs().powf(q)).sum()
    };
    Ok((w * s).powf(1.0 / q))
}

/// `integral of |u|^q` without the outer root; `q` finite.
pub(crate) fn lq_power(u: &GridFunction, q: f64) -> f64 {
    let w = u.grid.cell_volume();
    w * u.values.iter().map(|v| pow_abs(*v, q)).sum::<f64>()
}

pub(crate) fn pow_abs(v: f64, q: f64) -> f64 {
    let a = v.abs();
    if q == 1.0 {
        a
    } else if q == 2.0 {
        a * a
    } else {
        a.powf(q)
    }
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Dimension(0));
    }
    // v_0 = 1, v_1 = 2, v_n = (2 pi / n) v_{n-2}
    let mut even = 1.0;
    let mut odd = 2.0;
    for k in 2..=n {
        let next = 2.0 * std::f64::consts::PI / k as f64;
        if k % 2 == 0 {
            even *= next;
        } else {
            odd *= next;
        }
    }
    Ok(if n % 2 == 0 { even } else { odd })
}
