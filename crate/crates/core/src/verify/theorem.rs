use serde::Serialize;

use super::constants::theorem_constant;
use super::testset::TestFunction;
use super::Method;
use crate::error::{Error, Result};
use crate::ext::{self, conjugate};
use crate::kernels::{hr_seminorm, SeminormEstimate, SeminormParams};
use crate::operator::{weak_type_quasi_norm, OperatorSpec};

/// Truncation error, as a fraction of the seminorm, above which the
/// verdict is withheld.
pub const INCONCLUSIVE_FRACTION: f64 = 0.1;

/// `alpha |{|Tf| > alpha}|^(1/q) / ((B + [K]) ||f||_q)` at one level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioEntry {
    pub label: String,
    pub alpha: f64,
    pub measure: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremReport {
    pub kernel: String,
    pub method: Method,
    pub q: f64,
    #[serde(serialize_with = "ext::serialize")]
    pub s: f64,
    pub bound: f64,
    pub seminorm: SeminormEstimate,
    pub labels: Vec<String>,
    /// Per function, the entry at its maximizing level.
    pub per_function: Vec<RatioEntry>,
    pub max_ratio: f64,
    pub constant: f64,
    /// `C^(1/q)`, the bound on the ratio.
    pub threshold: f64,
    #[serde(serialize_with = "ext::serialize")]
    pub margin: f64,
    pub inconclusive: bool,
    pub pass: bool,
}

impl TheoremReport {
    pub fn verdict(&self) -> &'static str {
        if self.inconclusive {
            "inconclusive"
        } else if self.pass {
            "pass"
        } else {
            "fail"
        }
    }
}

/// Checks the weak-type bound on every test function with default
/// seminorm parameters.
pub fn verify_theorem1(
    spec: &OperatorSpec,
    q: f64,
    testset: &[TestFunction],
    alphas: &[f64],
    method: Method,
) -> Result<TheoremReport> {
    let n = spec.kernel.dim();
    verify_theorem1_with(spec, q, testset, alphas, method, &SeminormParams::for_dim(n))
}

pub fn verify_theorem1_with(
    spec: &OperatorSpec,
    q: f64,
    testset: &[TestFunction],
    alphas: &[f64],
    method: Method,
    params: &SeminormParams,
) -> Result<TheoremReport> {
    let n = spec.kernel.dim();
    let constant = theorem_constant(n, q, spec.s, method)?;
    if alphas.is_empty() {
        return Err(Error::EmptyAlphas);
    }
    let seminorm = hr_seminorm(&spec.kernel, conjugate(q), params)?;
    let denom = spec.bound + seminorm.value;

    let mut per_function = Vec::with_capacity(testset.len());
    for t in testset {
        let norm = t.f.norm(q)?;
        if norm == 0.0 {
            log::warn!("test function {} has zero norm and is skipped", t.label);
            continue;
        }
        let tf = spec.apply(&t.f)?;
        let weak = weak_type_quasi_norm(&tf, q, alphas)?;
        let at = weak.alphas.iter().position(|a| *a == weak.argmax_alpha).unwrap_or(0);
        per_function.push(RatioEntry {
            label: t.label.clone(),
            alpha: weak.argmax_alpha,
            measure: weak.distribution[at],
            ratio: weak.quasi_norm / (denom * norm),
        });
    }
    let max_ratio = per_function.iter().fold(0.0, |m: f64, e| m.max(e.ratio));
    let threshold = constant.powf(1.0 / q);
    let inconclusive = seminorm.is_inconclusive(INCONCLUSIVE_FRACTION);
    Ok(TheoremReport {
        kernel: spec.kernel.label().to_string(),
        method,
        q,
        s: spec.s,
        bound: spec.bound,
        labels: testset.iter().map(|t| t.label.clone()).collect(),
        per_function,
        max_ratio,
        constant,
        threshold,
        margin: if max_ratio > 0.0 { threshold / max_ratio } else { f64::INFINITY },
        inconclusive,
        pass: !inconclusive && max_ratio <= threshold,
        seminorm,
    })
}
