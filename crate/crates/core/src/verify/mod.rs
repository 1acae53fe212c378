//! Constants of both weak-type proofs, end-to-end checks of the weak-type
//! bound, step-by-step traces of each proof, and empirical `L^p` ranges.

mod constants;
mod lp_range;
mod testset;
mod theorem;
mod trace;

pub use constants::{constant_terms, gamma, theorem_constant};
pub use lp_range::{verify_lp_range, LpRangeReport, LpSample};
pub use testset::{builtin_testset, random_dyadic_step, testset_grid, TestFunction};
pub use theorem::{verify_theorem1, verify_theorem1_with, RatioEntry, TheoremReport, INCONCLUSIVE_FRACTION};
pub use trace::{
    trace_cz_proof, trace_cz_proof_with, trace_ntv_proof, trace_ntv_proof_with, ProofStep,
    ProofTrace, TRACE_SLACK,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which proof supplies the constant and the trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Dyadic stopping time on `|f|^q`.
    Cz,
    /// Whitney cubes of the maximal-function superlevel set.
    Ntv,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cz" => Ok(Method::Cz),
            "ntv" => Ok(Method::Ntv),
            other => Err(Error::InvalidParameter(format!(
                "unknown method {other:?}; expected cz or ntv"
            ))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Cz => "cz",
            Method::Ntv => "ntv",
        })
    }
}
