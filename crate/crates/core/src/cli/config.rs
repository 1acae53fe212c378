use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::{self, opt_inf};
use crate::kernels::SeminormParams;
use crate::operator::log_alpha_grid;
use crate::verify::Method;

/// Every knob of a run. Loaded from an optional JSON file, then
/// overridden field by field by command-line flags.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<String>,
    /// Size constant `A` for tabulated kernels.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size_constant: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(
        default,
        deserialize_with = "opt_inf::deserialize",
        serialize_with = "ser_opt",
        skip_serializing_if = "Option::is_none"
    )]
    pub q: Option<f64>,
    #[serde(
        default,
        deserialize_with = "opt_inf::deserialize",
        serialize_with = "ser_opt",
        skip_serializing_if = "Option::is_none"
    )]
    pub s: Option<f64>,
    #[serde(rename = "B", skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(
        default,
        deserialize_with = "opt_inf::deserialize",
        serialize_with = "ser_opt",
        skip_serializing_if = "Option::is_none"
    )]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub watson: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub height: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<PathBuf>,
    /// Index into the built-in test set, used by `trace` without `input`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub function: Option<usize>,
    /// `builtin` or CSV paths.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub testset: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_spacing: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outer_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outer_spacing: Option<f64>,
    /// Decimal exponents bounding the alpha grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_decade: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exclusion: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

fn ser_opt<S: serde::Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) => ext::serialize(x, s),
        None => s.serialize_none(),
    }
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),* $(,)?) => {
        RunConfig { $($field: $top.$field.or($base.$field)),* }
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Fields set in `top` win.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        let base = self;
        overlay!(base, top;
            command, kernel, size_constant, n, q, s, bound, r, watson, method, height, alpha,
            input, omega, function, testset, radii, y_spacing, outer_factor, outer_spacing,
            alpha_min, alpha_max, per_decade, exclusion, out, seed, workers)
    }

    /// Checks that do not depend on the subcommand.
    pub fn validate(&self) -> Result<()> {
        if let Some(q) = self.q {
            if !(q.is_finite() && q >= 1.0) {
                return Err(Error::Exponent {
                    value: q,
                    reason: "q must be finite and at least 1",
                });
            }
            if let Some(s) = self.s {
                if s <= q {
                    return Err(Error::Exponent {
                        value: s,
                        reason: "s must exceed q",
                    });
                }
            }
        }
        for path in [&self.input, &self.omega].into_iter().flatten() {
            if !path.exists() {
                return Err(Error::InvalidParameter(format!(
                    "input file {} does not exist",
                    path.display()
                )));
            }
        }
        for entry in self.testset.iter().flatten() {
            if entry != "builtin" && !Path::new(entry).exists() {
                return Err(Error::InvalidParameter(format!(
                    "test function file {entry} does not exist"
                )));
            }
        }
        if let Some(label) = &self.kernel {
            if let Some(path) = label.strip_prefix("custom:") {
                if !Path::new(path).exists() {
                    return Err(Error::InvalidParameter(format!(
                        "kernel table {path} does not exist"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn need<T: Clone>(&self, v: &Option<T>, flag: &str) -> Result<T> {
        v.clone()
            .ok_or_else(|| Error::InvalidParameter(format!("missing required setting --{flag}")))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .unwrap_or_else(|| PathBuf::from("czkit_out"))
    }

    pub fn alphas(&self) -> Vec<f64> {
        log_alpha_grid(
            self.alpha_min.unwrap_or(-3.0),
            self.alpha_max.unwrap_or(2.0),
            self.per_decade.unwrap_or(50),
        )
    }

    pub fn seminorm_params(&self, n: usize) -> SeminormParams {
        let mut p = SeminormParams::for_dim(n);
        if let Some(r) = &self.radii {
            p.radii = r.clone();
        }
        if let Some(v) = self.y_spacing {
            p.y_spacing = v;
        }
        if let Some(v) = self.outer_factor {
            p.outer_factor = v;
        }
        if let Some(v) = self.outer_spacing {
            p.outer_spacing = v;
        }
        p
    }
}
