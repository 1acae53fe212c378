use rayon::prelude::*;

use super::{PrefixSum, PropertyCheck};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, MAX_DIM};

/// Centered Hardy–Littlewood maximal function over cubes.
///
/// At each midpoint the average of `u` is taken over the centered cubes of
/// `2k + 1` cells, `u` extended by zero outside the box. The single-cell
/// average is `u` itself, so `M u >= u` holds exactly.
pub fn maximal_function(u: &GridFunction) -> Result<GridFunction> {
    if let Some((index, &value)) = u.values().iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::NegativeValue { index, value });
    }
    let grid = u.grid();
    let n = grid.dim();
    let shape = grid.shape3();
    let prefix = PrefixSum::new(shape, u.values());
    let total: f64 = u.values().iter().sum();
    let widest = shape[..n].iter().copied().max().unwrap_or(1);

    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|flat| {
            let m = grid.multi_index(flat);
            let mut best = u.values()[flat];
            for k in 1..widest {
                let cells = ((2 * k + 1) as f64).powi(n as i32);
                // no larger cube can beat the current maximum
                if total / cells <= best {
                    break;
                }
                let mut lo = [0usize; MAX_DIM];
                let mut hi = [1usize; MAX_DIM];
                let mut covers = true;
                for a in 0..n {
                    lo[a] = m[a].saturating_sub(k);
                    hi[a] = (m[a] + k + 1).min(shape[a]);
                    covers &= lo[a] == 0 && hi[a] == shape[a];
                }
                best = best.max(prefix.sum(lo, hi) / cells);
                if covers {
                    break;
                }
            }
            best
        })
        .collect();
    GridFunction::new(grid.clone(), values)
}

/// `lambda |{M u > lambda}| <= 3^n ||u||_1` at each level.
pub fn maximal_weak_type_checks(
    u: &GridFunction,
    mu: &GridFunction,
    lambdas: &[f64],
) -> Vec<PropertyCheck> {
    let n = u.dim();
    let w = u.grid().cell_volume();
    let l1 = u.norm(1.0).unwrap_or(f64::NAN);
    let rhs = 3f64.powi(n as i32) * l1;
    lambdas
        .iter()
        .map(|&lambda| {
            let count = mu.values().iter().filter(|v| **v > lambda).count();
            let lhs = lambda * w * count as f64;
            PropertyCheck::relative("weak(1,1)", &format!("lambda={lambda:.6e}"), lhs, rhs, rhs)
        })
        .collect()
}
