//! The convolution operator `Tf(x) = int K(x - y) f(y) dy` on grids.
//!
//! Near the diagonal the integral is a principal value: samples closer
//! than `exclusion * h` to the target are dropped. Targets are required to
//! sit on the half-lattice of the input grid whenever anything is dropped,
//! so the retained samples pair up symmetrically about the target and the
//! odd part of the kernel cancels.

mod range;
mod weak;

pub use range::{interpolation_range, PRange};
pub use weak::{
    default_alpha_grid, distribution_function, log_alpha_grid, weak_type_quasi_norm,
    WeakTypeReport,
};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{lq_norm, Grid, GridFunction, MAX_DIM};
use crate::kernels::Kernel;

/// `T` together with its strong-type data.
#[derive(Clone, Debug)]
pub struct OperatorSpec {
    pub kernel: Kernel,
    /// Strong exponent, possibly infinite.
    pub s: f64,
    /// Bound of `T` on `L^s`.
    pub bound: f64,
    /// Principal-value exclusion radius in grid cells.
    pub exclusion: f64,
}

impl OperatorSpec {
    pub fn new(kernel: Kernel, s: f64, bound: f64) -> Result<Self> {
        if s.is_nan() || s <= 1.0 {
            return Err(Error::Exponent {
                value: s,
                reason: "the strong exponent must exceed 1",
            });
        }
        if !(bound.is_finite() && bound > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "the strong bound B must be positive, got {bound}"
            )));
        }
        Ok(Self {
            kernel,
            s,
            bound,
            exclusion: 1.0,
        })
    }

    pub fn with_exclusion(mut self, exclusion: f64) -> Result<Self> {
        if !(exclusion.is_finite() && exclusion > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "the exclusion factor must be positive, got {exclusion}"
            )));
        }
        self.exclusion = exclusion;
        Ok(self)
    }

    /// `Tf` on `f`'s own grid.
    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        Ok(apply_operator(self, f, f.grid())?.tf)
    }
}

/// `Tf` on a target grid with a flag per target telling whether any
/// sample was dropped by the exclusion.
#[derive(Clone, Debug)]
pub struct Application {
    pub tf: GridFunction,
    pub excluded: Vec<bool>,
}

/// Direct summation of `h^n sum_y K(x - y) f(y)` over nonzero samples.
pub fn apply_operator(spec: &OperatorSpec, f: &GridFunction, targets: &Grid) -> Result<Application> {
    let n = f.dim();
    if spec.kernel.dim() != n || targets.dim() != n {
        return Err(Error::GridMismatch(format!(
            "kernel on R^{}, input on R^{n}, targets on R^{}",
            spec.kernel.dim(),
            targets.dim()
        )));
    }
    let h = f.grid().spacing();
    if targets.spacing() > h * (1.0 + 1e-9) {
        return Err(Error::CoarserTargets {
            target: targets.spacing(),
            input: h,
        });
    }
    if spec.kernel.is_zero() {
        return Ok(Application {
            tf: GridFunction::zeros(targets.clone()),
            excluded: vec![false; targets.len()],
        });
    }

    let samples: Vec<([f64; MAX_DIM], f64)> = f
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (f.grid().point(i), *v))
        .collect();
    let radius2 = (spec.exclusion * h).powi(2);
    let base = f.grid().point(0);
    let kernel = &spec.kernel;

    let out: Vec<Result<(f64, bool)>> = (0..targets.len())
        .into_par_iter()
        .map(|t| {
            let x = targets.point(t);
            let mut d = [0.0; MAX_DIM];
            let mut sum = 0.0;
            let mut excluded = false;
            for (y, v) in &samples {
                let mut r2 = 0.0;
                for a in 0..n {
                    d[a] = x[a] - y[a];
                    r2 += d[a] * d[a];
                }
                if r2 < radius2 {
                    excluded = true;
                    continue;
                }
                sum += kernel.eval(&d[..n]) * v;
            }
            if excluded && !on_half_lattice(&x[..n], &base[..n], h) {
                return Err(Error::AsymmetricTarget {
                    point: x[..n].to_vec(),
                });
            }
            Ok((sum, excluded))
        })
        .collect();

    let w = f.grid().cell_volume();
    let mut values = Vec::with_capacity(out.len());
    let mut excluded = Vec::with_capacity(out.len());
    for r in out {
        let (v, e) = r?;
        values.push(v * w);
        excluded.push(e);
    }
    Ok(Application {
        tf: GridFunction::new(targets.clone(), values)?,
        excluded,
    })
}

/// Whether `x` is a sample point or a cell-boundary point of the lattice
/// through `base` with spacing `h`.
fn on_half_lattice(x: &[f64], base: &[f64], h: f64) -> bool {
    x.iter().zip(base).all(|(x, b)| {
        let r = 2.0 * (x - b) / h;
        (r - r.round()).abs() < 1e-6
    })
}

/// `max ||Tf||_s / ||f||_s` over the probes, with `Tf` evaluated on each
/// probe's own grid.
///
/// Always a lower bound for the operator norm: the probes are a finite
/// family and the part of `Tf` outside the probe box is discarded.
pub fn operator_norm_lower_bound(spec: &OperatorSpec, s: f64, probes: &[GridFunction]) -> Result<f64> {
    if s.is_nan() || s <= 1.0 {
        return Err(Error::Exponent {
            value: s,
            reason: "s must exceed 1",
        });
    }
    let mut best: Option<f64> = None;
    for (i, f) in probes.iter().enumerate() {
        let norm = lq_norm(f, s)?;
        if norm == 0.0 {
            log::warn!("probe {i} has zero L^{s} norm and is skipped");
            continue;
        }
        let tf = spec.apply(f)?;
        let ratio = lq_norm(&tf, s)? / norm;
        best = Some(best.map_or(ratio, |b: f64| b.max(ratio)));
    }
    best.ok_or(Error::NoProbes)
}
