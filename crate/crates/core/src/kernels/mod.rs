//! Convolution kernels on `R^n \ {0}` and their smoothness seminorms.

mod seminorm;

pub use seminorm::{
    hr_seminorm, hr_seminorm_multi, watson_seminorm, watson_term, SeminormEstimate,
    SeminormParams,
};

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{check_dim, MAX_DIM};

type KernelFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum KernelKind {
    Zero,
    Hilbert,
    /// `x_i / |x|^(n+1)`, axis stored zero-based.
    Riesz(usize),
    Bump,
    Table(Arc<LinearTable>),
    Func(KernelFn),
    Reflected(Box<KernelKind>),
}

impl KernelKind {
    #[inline]
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            KernelKind::Zero => 0.0,
            KernelKind::Hilbert => 1.0 / x[0],
            KernelKind::Riesz(i) => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let r = r2.sqrt();
                x[*i] / (r2.powi((x.len() as i32 + 1) / 2) * if x.len() % 2 == 0 { r } else { 1.0 })
            }
            KernelKind::Bump => bump(x[0]),
            KernelKind::Table(t) => t.eval(x[0]),
            KernelKind::Func(f) => f(x),
            KernelKind::Reflected(inner) => {
                let mut y = [0.0; MAX_DIM];
                for (a, v) in x.iter().enumerate() {
                    y[a] = -v;
                }
                inner.eval(&y[..x.len()])
            }
        }
    }
}

/// Odd smooth bump supported in `1 < |x| < 2`, peak value 1 at `|x| = 3/2`.
fn bump(x: f64) -> f64 {
    let a = x.abs();
    if a <= 1.0 || a >= 2.0 {
        return 0.0;
    }
    let u = 2.0 * a - 3.0;
    let v = (1.0 - 1.0 / (1.0 - u * u)).exp();
    v.copysign(x)
}

/// Piecewise-linear interpolant of `(x, K(x))` samples, zero outside the
/// table's range.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearTable {
    xs: Vec<f64>,
    ks: Vec<f64>,
}

impl LinearTable {
    pub fn new(mut rows: Vec<(f64, f64)>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InvalidParameter(
                "a kernel table needs at least two rows".into(),
            ));
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        if rows.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParameter("duplicate abscissa in kernel table".into()));
        }
        if rows.iter().any(|r| !(r.0.is_finite() && r.1.is_finite())) {
            return Err(Error::InvalidParameter("non-finite kernel table entry".into()));
        }
        let (xs, ks) = rows.into_iter().unzip();
        Ok(Self { xs, ks })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_path(path)?;
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            if rec.len() < 2 {
                return Err(Error::Parse("kernel table rows need two columns".into()));
            }
            // tolerate a header row
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(x), Ok(k)) => rows.push((x, k)),
                _ if rows.is_empty() => continue,
                _ => return Err(Error::Parse(format!("bad kernel table row {rec:?}"))),
            }
        }
        Self::new(rows)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let xs = &self.xs;
        if x < xs[0] || x > xs[xs.len() - 1] {
            return 0.0;
        }
        let j = xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1);
        let (x0, x1) = (xs[j - 1], xs[j]);
        let t = (x - x0) / (x1 - x0);
        self.ks[j - 1] * (1.0 - t) + self.ks[j] * t
    }
}

/// An evaluable convolution kernel with its size constant `A`.
#[derive(Clone)]
pub struct Kernel {
    dim: usize,
    size_constant: f64,
    homogeneous: Option<bool>,
    label: String,
    kind: KernelKind,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("size_constant", &self.size_constant)
            .field("homogeneous", &self.homogeneous)
            .finish()
    }
}

const VALIDATION_POINTS: usize = 512;
const VALIDATION_SEED: u64 = 0x5eed_4b65_726e_656c;

impl Kernel {
    fn build(
        dim: usize,
        size_constant: f64,
        homogeneous: Option<bool>,
        label: String,
        kind: KernelKind,
    ) -> Result<Self> {
        check_dim(dim)?;
        if !(size_constant.is_finite() && size_constant > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "size constant must be positive, got {size_constant}"
            )));
        }
        let k = Self {
            dim,
            size_constant,
            homogeneous,
            label,
            kind,
        };
        k.validate_size_bound()?;
        Ok(k)
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::build(n, 1.0, Some(true), "zero".into(), KernelKind::Zero)
    }

    /// `K(x) = 1/x` on the line.
    pub fn hilbert() -> Self {
        Self::build(1, 1.0, Some(true), "hilbert".into(), KernelKind::Hilbert)
            .expect("the Hilbert kernel satisfies its size bound")
    }

    /// `K(x) = x_i / |x|^(n+1)` with `component` in `1..=n`.
    pub fn riesz(component: usize, n: usize) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&n) {
            return Err(Error::InvalidParameter(format!(
                "Riesz kernels are provided for n = 2, 3 (got n = {n})"
            )));
        }
        if component == 0 || component > n {
            return Err(Error::InvalidParameter(format!(
                "Riesz component {component} is not in 1..={n}"
            )));
        }
        Self::build(
            n,
            1.0,
            Some(true),
            format!("riesz:{component}"),
            KernelKind::Riesz(component - 1),
        )
    }

    /// Odd smooth kernel supported in `1 < |x| < 2`; `K(x-y) - K(x)` has
    /// compact support for every `y`.
    pub fn bump() -> Self {
        Self::build(1, 2.0, Some(false), "bump".into(), KernelKind::Bump)
            .expect("the bump kernel satisfies its size bound")
    }

    /// One-dimensional tabulated kernel.
    pub fn table(table: LinearTable, size_constant: f64, label: impl Into<String>) -> Result<Self> {
        Self::build(
            1,
            size_constant,
            None,
            label.into(),
            KernelKind::Table(Arc::new(table)),
        )
    }

    pub fn from_fn(
        n: usize,
        size_constant: f64,
        homogeneous: Option<bool>,
        label: impl Into<String>,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::build(
            n,
            size_constant,
            homogeneous,
            label.into(),
            KernelKind::Func(Arc::new(f)),
        )
    }

    /// Parses `zero`, `hilbert`, `riesz:i`, `bump` or `custom:<path>`.
    /// `size_constant` is required for `custom`.
    pub fn from_label(label: &str, n: usize, size_constant: Option<f64>) -> Result<Self> {
        match label {
            "zero" => Self::zero(n),
            "hilbert" | "bump" if n != 1 => Err(Error::InvalidParameter(format!(
                "kernel {label} is one-dimensional (got n = {n})"
            ))),
            "hilbert" => Ok(Self::hilbert()),
            "bump" => Ok(Self::bump()),
            _ => {
                if let Some(i) = label.strip_prefix("riesz:") {
                    let i = i
                        .parse()
                        .map_err(|_| Error::UnknownKernel(label.to_string()))?;
                    Self::riesz(i, n)
                } else if let Some(path) = label.strip_prefix("custom:") {
                    if n != 1 {
                        return Err(Error::InvalidParameter(
                            "tabulated kernels are one-dimensional".into(),
                        ));
                    }
                    let a = size_constant.ok_or_else(|| {
                        Error::InvalidParameter("custom kernels need a size constant A".into())
                    })?;
                    Self::table(LinearTable::load(path)?, a, label)
                } else {
                    Err(Error::UnknownKernel(label.to_string()))
                }
            }
        }
    }

    /// `K(-x)`.
    pub fn reflected(&self) -> Self {
        Self {
            dim: self.dim,
            size_constant: self.size_constant,
            homogeneous: self.homogeneous,
            label: format!("reflect({})", self.label),
            kind: KernelKind::Reflected(Box::new(self.kind.clone())),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size_constant(&self) -> f64 {
        self.size_constant
    }

    pub fn homogeneous(&self) -> Option<bool> {
        self.homogeneous
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, KernelKind::Zero)
    }

    /// Unchecked evaluation; `x` must be nonzero and of length `dim`.
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.kind.eval(x)
    }

    fn size_bound(&self, x: &[f64]) -> (f64, f64) {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let bound = self.size_constant / r2.sqrt().powi(self.dim as i32);
        (self.kind.eval(x), bound)
    }

    fn validate_size_bound(&self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(VALIDATION_SEED);
        let n = self.dim;
        let mut x = [0.0; MAX_DIM];
        for _ in 0..VALIDATION_POINTS {
            let radius = 10f64.powf(rng.gen_range(-3.0..3.0));
            let norm = loop {
                for v in x.iter_mut().take(n) {
                    *v = rng.gen_range(-1.0..1.0);
                }
                let r2: f64 = x[..n].iter().map(|v| v * v).sum();
                if r2 > 1e-6 {
                    break r2.sqrt();
                }
            };
            for v in x.iter_mut().take(n) {
                *v *= radius / norm;
            }
            let (value, bound) = self.size_bound(&x[..n]);
            if !value.is_finite() || value.abs() > bound * (1.0 + 1e-12) {
                return Err(Error::SizeBound {
                    point: x[..n].to_vec(),
                    value: value.abs(),
                    bound,
                });
            }
        }
        Ok(())
    }
}

/// Checked evaluation: rejects the origin and any violation of
/// `|K(x)| <= A/|x|^n`.
pub fn evaluate_kernel(k: &Kernel, x: &[f64]) -> Result<f64> {
    if x.len() != k.dim {
        return Err(Error::InvalidParameter(format!(
            "point of dimension {} for a kernel on R^{}",
            x.len(),
            k.dim
        )));
    }
    if x.iter().all(|v| *v == 0.0) {
        return Err(Error::KernelAtOrigin);
    }
    let (value, bound) = k.size_bound(x);
    if !value.is_finite() || value.abs() > bound * (1.0 + 1e-12) {
        return Err(Error::SizeBound {
            point: x.to_vec(),
            value: value.abs(),
            bound,
        });
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hilbert_values() {
        let k = Kernel::hilbert();
        assert_eq!(evaluate_kernel(&k, &[2.0]).unwrap(), 0.5);
        assert_eq!(evaluate_kernel(&k, &[-0.5]).unwrap(), -2.0);
        assert!(matches!(
            evaluate_kernel(&k, &[0.0]),
            Err(Error::KernelAtOrigin)
        ));
    }

    #[test]
    fn zero_kernel_values() {
        let k = Kernel::zero(2).unwrap();
        assert_eq!(evaluate_kernel(&k, &[0.3, -1.0]).unwrap(), 0.0);
    }

    #[test]
    fn riesz_matches_formula() {
        for n in [2, 3] {
            for i in 1..=n {
                let k = Kernel::riesz(i, n).unwrap();
                let x = [0.3, -1.2, 0.7];
                let r: f64 = x[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
                let expected = x[i - 1] / r.powi(n as i32 + 1);
                assert!((k.eval(&x[..n]) - expected).abs() < 1e-14);
            }
        }
        assert!(Kernel::riesz(3, 2).is_err());
        assert!(Kernel::riesz(1, 1).is_err());
    }

    #[test]
    fn size_bound_violation_is_rejected() {
        let err = Kernel::from_fn(1, 1.0, None, "steep", |x| 2.0 / x[0]).unwrap_err();
        assert!(matches!(err, Error::SizeBound { .. }));
        let k = Kernel::from_fn(1, 1.0, None, "ok-but-bad-at-3", |x| {
            if (x[0] - 3.0).abs() < 1e-9 {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        assert!(matches!(
            evaluate_kernel(&k, &[3.0]),
            Err(Error::SizeBound { .. })
        ));
    }

    #[test]
    fn labels() {
        assert_eq!(Kernel::from_label("riesz:2", 3, None).unwrap().label(), "riesz:2");
        assert!(Kernel::from_label("hilbert", 2, None).is_err());
        assert!(matches!(
            Kernel::from_label("nope", 1, None),
            Err(Error::UnknownKernel(_))
        ));
        assert!(Kernel::from_label("custom:/nonexistent.csv", 1, None).is_err());
    }

    #[test]
    fn bump_is_odd_and_bounded() {
        let k = Kernel::bump();
        for x in [1.1, 1.5, 1.9] {
            assert_eq!(k.eval(&[x]), -k.eval(&[-x]));
        }
        assert_eq!(k.eval(&[1.5]), 1.0);
        assert_eq!(k.eval(&[0.5]), 0.0);
        assert_eq!(k.eval(&[2.5]), 0.0);
    }

    #[test]
    fn table_interpolates_linearly() {
        let t = LinearTable::new(vec![(1.0, 1.0), (-1.0, -1.0), (3.0, 0.0)]).unwrap();
        assert_eq!(t.eval(0.0), 0.0);
        assert_eq!(t.eval(2.0), 0.5);
        assert_eq!(t.eval(3.0), 0.0);
        assert_eq!(t.eval(5.0), 0.0);
        let k = Kernel::table(t, 4.0, "custom:mem").unwrap();
        assert_eq!(k.eval(&[0.5]), 0.5);
    }

    #[test]
    fn reflection() {
        let k = Kernel::from_fn(1, 1.0, Some(true), "asym", |x| {
            if x[0] > 0.0 {
                1.0 / x[0]
            } else {
                0.5 / x[0]
            }
        })
        .unwrap();
        let r = k.reflected();
        assert_eq!(r.eval(&[2.0]), -0.25);
        assert_eq!(r.eval(&[-2.0]), 0.5);
    }
}
