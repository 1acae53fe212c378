use serde::Serialize;

use super::testset::TestFunction;
use crate::error::{Error, Result};
use crate::ext;
use crate::operator::{interpolation_range, OperatorSpec, PRange};

/// Relative change allowed between spacing `h` and `h / 2`.
const DRIFT_LIMIT: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LpSample {
    pub p: f64,
    /// `max ||Tf||_p / ||f||_p` over the test set at the input spacing.
    pub ratio: f64,
    /// Same with every function refined once.
    pub ratio_refined: f64,
    pub drift: f64,
    pub stable: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LpRangeReport {
    pub kernel: String,
    pub q: f64,
    #[serde(serialize_with = "ext::serialize")]
    pub s: f64,
    pub range: PRange,
    pub samples: Vec<LpSample>,
    pub stable: bool,
}

fn max_ratios(spec: &OperatorSpec, testset: &[TestFunction], ps: &[f64], refine: bool) -> Result<Vec<f64>> {
    let mut best = vec![0.0f64; ps.len()];
    for t in testset {
        let f = if refine { t.f.refine() } else { t.f.clone() };
        let tf = spec.apply(&f)?;
        for (b, &p) in best.iter_mut().zip(ps) {
            let norm = f.norm(p)?;
            if norm > 0.0 {
                *b = b.max(tf.norm(p)? / norm);
            }
        }
    }
    Ok(best)
}

/// Empirical `L^p` ratios inside the interpolation interval, with a
/// refinement check on every sample.
pub fn verify_lp_range(spec: &OperatorSpec, q: f64, testset: &[TestFunction], ps: &[f64]) -> Result<LpRangeReport> {
    let range = interpolation_range(q, spec.s)?;
    if let Some(&p) = ps.iter().find(|p| !range.contains(**p)) {
        return Err(Error::OutsideRange {
            p,
            lower: range.lower,
            upper: range.upper,
        });
    }
    let coarse = max_ratios(spec, testset, ps, false)?;
    let fine = max_ratios(spec, testset, ps, true)?;
    let samples: Vec<LpSample> = ps
        .iter()
        .zip(coarse.iter().zip(&fine))
        .map(|(&p, (&a, &b))| {
            let drift = if a == b { 0.0 } else { (b - a).abs() / a.abs().max(b.abs()) };
            LpSample {
                p,
                ratio: a,
                ratio_refined: b,
                drift,
                stable: a.is_finite() && b.is_finite() && drift < DRIFT_LIMIT,
            }
        })
        .collect();
    Ok(LpRangeReport {
        kernel: spec.kernel.label().to_string(),
        q,
        s: spec.s,
        range,
        stable: samples.iter().all(|s| s.stable),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, GridFunction};
    use crate::kernels::Kernel;

    fn set() -> Vec<TestFunction> {
        let g = Grid::cube(1, -4.0, 5.0, 1.0 / 32.0).unwrap();
        let f = GridFunction::from_fn(g, |p| if (0.0..1.0).contains(&p[0]) { 1.0 } else { 0.0 }).unwrap();
        vec![TestFunction::new("1[0,1)", f)]
    }

    #[test]
    fn endpoint_is_rejected() {
        let spec = OperatorSpec::new(Kernel::hilbert(), 2.0, std::f64::consts::PI).unwrap();
        let err = verify_lp_range(&spec, 1.0, &set(), &[1.0]).unwrap_err();
        assert!(matches!(err, Error::OutsideRange { lower, .. } if lower == 1.0));
    }

    #[test]
    fn zero_kernel_ratios_vanish() {
        let spec = OperatorSpec::new(Kernel::zero(1).unwrap(), 2.0, 1.0).unwrap();
        let r = verify_lp_range(&spec, 1.0, &set(), &[1.5, 3.0]).unwrap();
        assert!(r.samples.iter().all(|s| s.ratio == 0.0 && s.stable));
    }

    #[test]
    fn hilbert_is_stable_at_three_halves() {
        let spec = OperatorSpec::new(Kernel::hilbert(), 2.0, std::f64::consts::PI).unwrap();
        let r = verify_lp_range(&spec, 1.0, &set(), &[1.5]).unwrap();
        assert!(r.stable, "{:?}", r.samples);
    }
}
