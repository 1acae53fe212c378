use thiserror::Error;

/// Errors produced by the library. Every variant carries enough context to
/// be reported as a machine-readable failure by the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("box edge along axis {axis} (length {length}) is not an integer multiple of the spacing {spacing}")]
    NonCommensurate {
        axis: usize,
        length: f64,
        spacing: f64,
    },

    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("dimension {0} is outside the supported range 1..=3")]
    Dimension(usize),

    #[error("exponent {value} is out of range: {reason}")]
    Exponent { value: f64, reason: &'static str },

    #[error("kernel evaluated at the origin")]
    KernelAtOrigin,

    #[error("size bound |K(x)| <= A/|x|^n violated at x = {point:?}: |K(x)| = {value}, A/|x|^n = {bound}")]
    SizeBound {
        point: Vec<f64>,
        value: f64,
        bound: f64,
    },

    #[error("unknown kernel label {0:?}")]
    UnknownKernel(String),

    #[error("the radius set is empty")]
    EmptyRadii,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("negative value {value} at sample {index}; a nonnegative function is required")]
    NegativeValue { index: usize, value: f64 },

    #[error("root dyadic cube average {average} exceeds the threshold {threshold}; choose a larger root")]
    RootTooSmall { average: f64, threshold: f64 },

    #[error("set is not representable on the dyadic tree: {0}")]
    NotRepresentable(String),

    #[error("internal inconsistency: {0}")]
    Inconsistent(String),

    #[error("target grid spacing {target} is coarser than the input spacing {input}")]
    CoarserTargets { target: f64, input: f64 },

    #[error("target point {point:?} does not sit on the symmetric lattice of the input grid; principal-value exclusion would be asymmetric")]
    AsymmetricTarget { point: Vec<f64> },

    #[error("the alpha grid is empty")]
    EmptyAlphas,

    #[error("no probe function has positive norm")]
    NoProbes,

    #[error("p = {p} lies outside the open interval ({lower}, {upper})")]
    OutsideRange { p: f64, lower: f64, upper: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
