use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// `h^n * #{samples with |u| > alpha}`.
pub fn distribution_function(u: &GridFunction, alpha: f64) -> f64 {
    let count = u.values().iter().filter(|v| v.abs() > alpha).count();
    count as f64 * u.grid().cell_volume()
}

/// The curve `alpha -> |{|u| > alpha}|` and the maximum of
/// `alpha |{|u| > alpha}|^(1/q)` along it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeakTypeReport {
    pub q: f64,
    pub alphas: Vec<f64>,
    pub distribution: Vec<f64>,
    pub quasi_norm: f64,
    pub argmax_alpha: f64,
}

pub fn weak_type_quasi_norm(u: &GridFunction, q: f64, alphas: &[f64]) -> Result<WeakTypeReport> {
    if !(q.is_finite() && q >= 1.0) {
        return Err(Error::Exponent {
            value: q,
            reason: "q must be finite and at least 1",
        });
    }
    if alphas.is_empty() {
        return Err(Error::EmptyAlphas);
    }
    if let Some(a) = alphas.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {a}")));
    }
    // one sort, then a binary search per level
    let mut mags: Vec<f64> = u.values().iter().map(|v| v.abs()).collect();
    mags.sort_by(f64::total_cmp);
    let w = u.grid().cell_volume();
    let distribution: Vec<f64> = alphas
        .iter()
        .map(|&a| (mags.len() - mags.partition_point(|m| *m <= a)) as f64 * w)
        .collect();

    let mut quasi_norm = 0.0;
    let mut argmax_alpha = alphas[0];
    for (&a, &d) in alphas.iter().zip(&distribution) {
        let v = a * d.powf(1.0 / q);
        if v > quasi_norm {
            quasi_norm = v;
            argmax_alpha = a;
        }
    }
    Ok(WeakTypeReport {
        q,
        alphas: alphas.to_vec(),
        distribution,
        quasi_norm,
        argmax_alpha,
    })
}

/// `per_decade` log-spaced levels from `10^lo` to `10^hi` inclusive.
pub fn log_alpha_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let steps = ((hi - lo) * per_decade as f64).round().max(0.0) as usize;
    (0..=steps)
        .map(|k| 10f64.powf(lo + k as f64 / per_decade as f64))
        .collect()
}

/// `10^-3 .. 10^2` at 50 levels per decade.
pub fn default_alpha_grid() -> Vec<f64> {
    log_alpha_grid(-3.0, 2.0, 50)
}
